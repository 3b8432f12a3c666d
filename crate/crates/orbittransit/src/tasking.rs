//! Task generation: seeded, reproducible streams of observation-data
//! delivery tasks with configurable intensity, deadline mix, and spatial
//! origin bias.

use crate::constants::MEGABITS_PER_TB;
use crate::constellation::{Constellation, Propagator, SatId};
use crate::topology::GroundStation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TaskId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Urgency {
    /// Near-real-time follow-up tasking; minutes-scale deadline.
    Urgent,
    /// Delay-tolerant bulk delivery.
    Routine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    /// Creation tick, minutes.
    pub created_at: u32,
    /// Satellite that senses (and initially stores) the data.
    pub origin: SatId,
    pub volume_mb: f64,
    /// Deadline in minutes after creation.
    pub deadline_min: u32,
    pub urgency: Urgency,
}

impl Task {
    /// Absolute deadline tick.
    pub fn deadline_abs(&self) -> u32 {
        self.created_at + self.deadline_min
    }
}

/// Where task origins concentrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OriginDistribution {
    /// Any satellite, uniformly.
    Uniform,
    /// Satellites whose sub-point is near any cataloged station — a proxy
    /// for populated land masses.
    LandBiased,
    /// Satellites whose sub-point is near one configured point: a hotspot.
    SingleRegion { lat_deg: f64, lon_deg: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskGenConfig {
    /// Mean task arrivals per tick; fractional rates accumulate.
    pub tasks_per_tick: f64,
    /// Traffic intensity level 1..=5; maps to per-task volume.
    pub intensity: u8,
    pub urgent_fraction: f64,
    pub urgent_deadline_min: u32,
    pub routine_deadline_min: u32,
    pub routine_deadline_max: u32,
    pub origin: OriginDistribution,
    /// Radius defining "near" for the biased distributions, km.
    pub hotspot_radius_km: f64,
}

impl Default for TaskGenConfig {
    fn default() -> Self {
        Self {
            tasks_per_tick: 1.0,
            intensity: 3,
            urgent_fraction: 0.05,
            urgent_deadline_min: 20,
            routine_deadline_min: 60,
            routine_deadline_max: 180,
            origin: OriginDistribution::LandBiased,
            hotspot_radius_km: 2_500.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TaskConfigError {
    #[error("intensity level {0} outside 1..=5")]
    BadIntensity(u8),
    #[error("routine deadline range [{0}, {1}] is empty")]
    EmptyDeadlineRange(u32, u32),
    #[error("negative task rate {0}")]
    NegativeRate(f64),
    #[error("urgent fraction {0} outside [0, 1]")]
    BadUrgentFraction(f64),
}

impl TaskGenConfig {
    pub fn validate(&self) -> Result<(), TaskConfigError> {
        if !(1..=5).contains(&self.intensity) {
            return Err(TaskConfigError::BadIntensity(self.intensity));
        }
        if self.routine_deadline_min > self.routine_deadline_max {
            return Err(TaskConfigError::EmptyDeadlineRange(
                self.routine_deadline_min,
                self.routine_deadline_max,
            ));
        }
        if self.tasks_per_tick < 0.0 {
            return Err(TaskConfigError::NegativeRate(self.tasks_per_tick));
        }
        if !(0.0..=1.0).contains(&self.urgent_fraction) {
            return Err(TaskConfigError::BadUrgentFraction(self.urgent_fraction));
        }
        Ok(())
    }
}

/// Per-task delivery volume for an intensity level: 2, 4, 6, 8, 10 decimal
/// terabytes for levels 1..=5, in megabits.
pub fn volume_for_intensity(level: u8) -> Result<f64, TaskConfigError> {
    if !(1..=5).contains(&level) {
        return Err(TaskConfigError::BadIntensity(level));
    }
    Ok(2.0 * level as f64 * MEGABITS_PER_TB)
}

/// Deterministic task source. Two generators with equal config and seed
/// produce byte-identical streams.
pub struct TaskGenerator {
    cfg: TaskGenConfig,
    volume_mb: f64,
    rng: ChaCha8Rng,
    next_id: TaskId,
    carry: f64,
}

impl TaskGenerator {
    pub fn new(cfg: TaskGenConfig, seed: u64) -> Result<Self, TaskConfigError> {
        cfg.validate()?;
        let volume_mb = volume_for_intensity(cfg.intensity)?;
        Ok(Self {
            cfg,
            volume_mb,
            // Distinct stream from other seeded components.
            rng: ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(1)),
            next_id: 0,
            carry: 0.0,
        })
    }

    /// Satellites eligible as origins at `tick` under the configured
    /// distribution; falls back to all satellites when the bias selects none.
    fn eligible_origins(
        &self,
        tick: u32,
        c: &Constellation,
        prop: &Propagator,
        stations: &[GroundStation],
    ) -> Vec<SatId> {
        let centers: Vec<(f64, f64)> = match self.cfg.origin {
            OriginDistribution::Uniform => return (0..c.satellites.len()).collect(),
            OriginDistribution::LandBiased => stations
                .iter()
                .map(|g| (g.latitude_deg, g.longitude_deg))
                .collect(),
            OriginDistribution::SingleRegion { lat_deg, lon_deg } => vec![(lat_deg, lon_deg)],
        };
        // Angular threshold trick: sub-point within R km of a center iff the
        // unit-vector dot product clears cos(R / earth_radius).
        let cos_limit = (self.cfg.hotspot_radius_km / crate::constants::EARTH_RADIUS_KM).cos();
        let units: Vec<[f64; 3]> = centers
            .iter()
            .map(|&(la, lo)| {
                let (la, lo) = (la.to_radians(), lo.to_radians());
                [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
            })
            .collect();
        let eligible: Vec<SatId> = (0..c.satellites.len())
            .filter(|&s| {
                let p = prop.position(c, s, tick as f64).unit();
                units
                    .iter()
                    .any(|u| p.x * u[0] + p.y * u[1] + p.z * u[2] >= cos_limit)
            })
            .collect();
        if eligible.is_empty() {
            (0..c.satellites.len()).collect()
        } else {
            eligible
        }
    }

    /// Tasks arriving at `tick`.
    pub fn tasks_at(
        &mut self,
        tick: u32,
        c: &Constellation,
        prop: &Propagator,
        stations: &[GroundStation],
    ) -> Vec<Task> {
        self.carry += self.cfg.tasks_per_tick;
        let count = self.carry.floor() as usize;
        self.carry -= count as f64;
        if count == 0 {
            return Vec::new();
        }
        let origins = self.eligible_origins(tick, c, prop, stations);
        (0..count)
            .map(|_| {
                let origin = origins[self.rng.gen_range(0..origins.len())];
                let urgent = self.cfg.urgent_fraction > 0.0
                    && self.rng.gen_bool(self.cfg.urgent_fraction.min(1.0));
                let (urgency, deadline_min) = if urgent {
                    (Urgency::Urgent, self.cfg.urgent_deadline_min)
                } else {
                    (
                        Urgency::Routine,
                        self.rng
                            .gen_range(self.cfg.routine_deadline_min..=self.cfg.routine_deadline_max),
                    )
                };
                let id = self.next_id;
                self.next_id += 1;
                Task {
                    id,
                    created_at: tick,
                    origin,
                    volume_mb: self.volume_mb,
                    deadline_min,
                    urgency,
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// CSV import/export for replayable task streams
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum TaskCsvError {
    #[error("line {line}: expected 6 comma-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: unparsable {field}: {text:?}")]
    BadField {
        line: usize,
        field: &'static str,
        text: String,
    },
    #[error("line {line}: unknown urgency {text:?} (expected urgent|routine)")]
    BadUrgency { line: usize, text: String },
}

pub fn export_csv(tasks: &[Task]) -> String {
    let mut out = String::from("id,created_at,origin,volume_mb,deadline_min,urgency\n");
    for t in tasks {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.id,
            t.created_at,
            t.origin,
            t.volume_mb,
            t.deadline_min,
            match t.urgency {
                Urgency::Urgent => "urgent",
                Urgency::Routine => "routine",
            }
        ));
    }
    out
}

pub fn import_csv(text: &str) -> Result<Vec<Task>, TaskCsvError> {
    let mut tasks = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() || body.starts_with("id,") {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(TaskCsvError::FieldCount {
                line,
                found: fields.len(),
            });
        }
        macro_rules! parse {
            ($i:expr, $field:literal, $ty:ty) => {
                fields[$i]
                    .parse::<$ty>()
                    .map_err(|_| TaskCsvError::BadField {
                        line,
                        field: $field,
                        text: fields[$i].to_string(),
                    })?
            };
        }
        let urgency = match fields[5] {
            "urgent" => Urgency::Urgent,
            "routine" => Urgency::Routine,
            other => {
                return Err(TaskCsvError::BadUrgency {
                    line,
                    text: other.to_string(),
                })
            }
        };
        tasks.push(Task {
            id: parse!(0, "id", TaskId),
            created_at: parse!(1, "created_at", u32),
            origin: parse!(2, "origin", SatId),
            volume_mb: parse!(3, "volume_mb", f64),
            deadline_min: parse!(4, "deadline_min", u32),
            urgency,
        });
    }
    Ok(tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{generate_walker, WalkerConfig};
    use crate::topology::builtin_catalog;

    fn world() -> (Constellation, Propagator, Vec<GroundStation>) {
        let c = generate_walker(&WalkerConfig {
            num_orbits: 6,
            sats_per_orbit: 6,
            ..WalkerConfig::default()
        });
        (c, Propagator::default(), builtin_catalog())
    }

    #[test]
    fn intensity_volume_mapping() {
        assert_eq!(volume_for_intensity(1).unwrap(), 1.6e7);
        assert_eq!(volume_for_intensity(3).unwrap(), 4.8e7);
        assert_eq!(volume_for_intensity(5).unwrap(), 8.0e7);
        assert_eq!(
            volume_for_intensity(0).unwrap_err(),
            TaskConfigError::BadIntensity(0)
        );
        assert_eq!(
            volume_for_intensity(6).unwrap_err(),
            TaskConfigError::BadIntensity(6)
        );
    }

    #[test]
    fn same_seed_streams_are_identical() {
        let (c, prop, cat) = world();
        let cfg = TaskGenConfig::default();
        let mut a = TaskGenerator::new(cfg.clone(), 42).unwrap();
        let mut b = TaskGenerator::new(cfg, 42).unwrap();
        for tick in 0..50 {
            let ta = a.tasks_at(tick, &c, &prop, &cat);
            let tb = b.tasks_at(tick, &c, &prop, &cat);
            assert_eq!(export_csv(&ta), export_csv(&tb));
        }
    }

    #[test]
    fn fractional_rate_accumulates() {
        let (c, prop, cat) = world();
        let cfg = TaskGenConfig {
            tasks_per_tick: 0.5,
            ..TaskGenConfig::default()
        };
        let mut gen = TaskGenerator::new(cfg, 1).unwrap();
        let total: usize = (0..100)
            .map(|t| gen.tasks_at(t, &c, &prop, &cat).len())
            .sum();
        assert_eq!(total, 50);
        // Zero rate yields nothing.
        let mut none = TaskGenerator::new(
            TaskGenConfig {
                tasks_per_tick: 0.0,
                ..TaskGenConfig::default()
            },
            1,
        )
        .unwrap();
        assert!(none.tasks_at(0, &c, &prop, &cat).is_empty());
    }

    #[test]
    fn deadline_classes_respect_bounds() {
        let (c, prop, cat) = world();
        let mut gen = TaskGenerator::new(
            TaskGenConfig {
                tasks_per_tick: 5.0,
                urgent_fraction: 0.3,
                ..TaskGenConfig::default()
            },
            9,
        )
        .unwrap();
        let mut urgent_seen = 0;
        for tick in 0..60 {
            for t in gen.tasks_at(tick, &c, &prop, &cat) {
                match t.urgency {
                    Urgency::Urgent => {
                        urgent_seen += 1;
                        assert_eq!(t.deadline_min, 20);
                    }
                    Urgency::Routine => assert!((60..=180).contains(&t.deadline_min)),
                }
                assert_eq!(t.volume_mb, 4.8e7);
            }
        }
        assert!(urgent_seen > 30, "urgent fraction materializes");
        // All-urgent and no-urgent extremes.
        let mut all = TaskGenerator::new(
            TaskGenConfig {
                urgent_fraction: 1.0,
                ..TaskGenConfig::default()
            },
            3,
        )
        .unwrap();
        assert!(all
            .tasks_at(0, &c, &prop, &cat)
            .iter()
            .all(|t| t.urgency == Urgency::Urgent));
    }

    #[test]
    fn single_region_bias_clusters_origins() {
        let (c, prop, cat) = world();
        let cfg = TaskGenConfig {
            tasks_per_tick: 20.0,
            origin: OriginDistribution::SingleRegion {
                lat_deg: 40.0,
                lon_deg: -100.0,
            },
            hotspot_radius_km: 3_000.0,
            ..TaskGenConfig::default()
        };
        let mut gen = TaskGenerator::new(cfg, 5).unwrap();
        let tasks = gen.tasks_at(0, &c, &prop, &cat);
        assert!(!tasks.is_empty());
        for t in &tasks {
            let pos = prop.position(&c, t.origin, 0.0).unit();
            let (la, lo) = (40f64.to_radians(), (-100f64).to_radians());
            let dot =
                pos.x * la.cos() * lo.cos() + pos.y * la.cos() * lo.sin() + pos.z * la.sin();
            assert!(
                dot >= (3_000.0 / crate::constants::EARTH_RADIUS_KM).cos() - 1e-12,
                "origin {} outside hotspot",
                t.origin
            );
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let (c, prop, cat) = world();
        let mut gen = TaskGenerator::new(TaskGenConfig::default(), 11).unwrap();
        let mut tasks = Vec::new();
        for tick in 0..20 {
            tasks.extend(gen.tasks_at(tick, &c, &prop, &cat));
        }
        let csv = export_csv(&tasks);
        let back = import_csv(&csv).unwrap();
        assert_eq!(export_csv(&back), csv);

        assert_eq!(
            import_csv("1,2,3\n").unwrap_err(),
            TaskCsvError::FieldCount { line: 1, found: 3 }
        );
        assert!(matches!(
            import_csv("x,0,0,10,60,routine\n").unwrap_err(),
            TaskCsvError::BadField { line: 1, field: "id", .. }
        ));
        assert!(matches!(
            import_csv("0,0,0,10,60,whenever\n").unwrap_err(),
            TaskCsvError::BadUrgency { line: 1, .. }
        ));
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let bad = TaskGenConfig {
            intensity: 0,
            ..TaskGenConfig::default()
        };
        assert!(TaskGenerator::new(bad, 0).is_err());
        let bad = TaskGenConfig {
            routine_deadline_min: 200,
            routine_deadline_max: 100,
            ..TaskGenConfig::default()
        };
        assert_eq!(
            bad.validate().unwrap_err(),
            TaskConfigError::EmptyDeadlineRange(200, 100)
        );
    }
}
