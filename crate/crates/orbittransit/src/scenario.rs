//! Scenario configuration: a sectioned `key = value` format describing one
//! simulation run end to end — constellation, station catalog, task stream,
//! energy model, engine horizon, strategy pairing, telemetry staleness,
//! fault windows, and runtime urgency boosts.
//!
//! The reference configuration (and every named preset) raises the onboard
//! recorder to 12 TB and the inter-satellite link budget to 1.4e6 Mbps so a
//! maximum-size task fits in one recorder and crosses one link in a single
//! one-minute tick. Station sink capacity stays as cataloged and is enforced
//! per admission bucket, which makes ground capacity — not link serialization
//! — the binding constraint at high traffic intensity.

use crate::constellation::{
    generate_walker, ingest_tle, Constellation, Propagator, ResourceProfile, TleError,
    WalkerConfig,
};
use crate::energy::EnergyParams;
use crate::tasking::{OriginDistribution, TaskGenConfig, TaskId};
use crate::topology::{builtin_catalog, parse_catalog, CatalogError, GroundStation, GsId};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Raised resource envelope used by the reference configuration and presets.
pub fn reference_resources() -> ResourceProfile {
    ResourceProfile {
        battery_max_wmin: 5_000.0,
        storage_capacity_mb: 9.6e7,
        link_capacity_mbps: 1.4e6,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstellationSource {
    Walker(WalkerConfig),
    TleFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConfig {
    pub source: ConstellationSource,
    /// Disable to freeze the ground frame (useful for geometry tests).
    pub earth_rotation: bool,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        Self {
            source: ConstellationSource::Walker(WalkerConfig {
                resources: reference_resources(),
                ..WalkerConfig::default()
            }),
            earth_rotation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CatalogSource {
    Builtin,
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationConfig {
    pub catalog: CatalogSource,
    pub elevation_threshold_deg: f64,
    /// Length of one ground-station admission bucket, minutes. A station
    /// admits at most `capacity_mbps * 60 * bucket_minutes` megabits per
    /// bucket.
    pub bucket_minutes: u32,
}

impl Default for StationConfig {
    fn default() -> Self {
        Self {
            catalog: CatalogSource::Builtin,
            elevation_threshold_deg: 25.0,
            bucket_minutes: 180,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Task generation horizon, minutes. One tick is one minute.
    pub horizon_min: u32,
    /// Extra execution time past the generation horizon so tasks created
    /// late can still meet their deadlines.
    pub drain_grace_min: u32,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            horizon_min: 360,
            drain_grace_min: 240,
            seed: 0,
        }
    }
}

/// How a ground station is chosen for each task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Orbit-level diffusion across candidate stations.
    Oan,
    /// Always the station nearest the task origin's ground track.
    Nearest,
    /// Nearest station whose current admission bucket still has room.
    NearestAvailable,
}

/// How data travels from origin to the chosen station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingPolicy {
    /// Carry by default; cross planes over ISLs only when it pays.
    Hybrid,
    /// Always relay over the shortest ISL path to a covering satellite.
    IslShortest,
    /// Never use ISLs: withhold data onboard until the origin itself passes
    /// over the chosen station.
    PcoWithhold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub selection: SelectionPolicy,
    pub routing: RoutingPolicy,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            selection: SelectionPolicy::Oan,
            routing: RoutingPolicy::Hybrid,
        }
    }
}

impl StrategyConfig {
    pub fn label(&self) -> String {
        format!("{}+{}", selection_name(self.selection), routing_name(self.routing))
    }
}

pub fn selection_name(s: SelectionPolicy) -> &'static str {
    match s {
        SelectionPolicy::Oan => "oan",
        SelectionPolicy::Nearest => "nearest",
        SelectionPolicy::NearestAvailable => "nearest_available",
    }
}

pub fn routing_name(r: RoutingPolicy) -> &'static str {
    match r {
        RoutingPolicy::Hybrid => "hybrid",
        RoutingPolicy::IslShortest => "isl_shortest",
        RoutingPolicy::PcoWithhold => "pco_withhold",
    }
}

/// Telemetry staleness model: a fraction of satellites report battery state
/// with a fixed delay, so the scheduler sees old levels for them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryConfig {
    pub delay_min: u32,
    /// Fraction of satellites whose telemetry is delayed, in [0, 1].
    pub stale_fraction: f64,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self {
            delay_min: 0,
            stale_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultTarget {
    Satellite(usize),
    Station(GsId),
}

/// One outage: the target is unusable for ticks in `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultWindow {
    pub target: FaultTarget,
    pub start: u32,
    pub end: u32,
}

/// Runtime deadline tightening: at `at_tick`, the task becomes urgent and
/// its absolute deadline shrinks to `at_tick + new_deadline_min` (never
/// extended).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrgencyBoost {
    pub task_id: TaskId,
    pub at_tick: u32,
    pub new_deadline_min: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub constellation: ConstellationConfig,
    pub stations: StationConfig,
    pub tasks: TaskGenConfig,
    /// Optional pre-generated task stream; replaces seeded generation.
    pub task_file: Option<PathBuf>,
    pub energy: EnergyParams,
    pub engine: EngineConfig,
    pub strategy: StrategyConfig,
    pub telemetry: TelemetryConfig,
    pub faults: Vec<FaultWindow>,
    pub urgency_boosts: Vec<UrgencyBoost>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            constellation: ConstellationConfig::default(),
            stations: StationConfig::default(),
            tasks: TaskGenConfig::default(),
            task_file: None,
            energy: EnergyParams::default(),
            engine: EngineConfig::default(),
            strategy: StrategyConfig::default(),
            telemetry: TelemetryConfig::default(),
            faults: Vec::new(),
            urgency_boosts: Vec::new(),
        }
    }
}

pub const PRESET_NAMES: [&str; 4] = ["starlink-s1", "oneweb", "telesat", "toy-4x4"];

/// A complete named reference scenario. `starlink-s1` is the default
/// configuration; the others swap the constellation shell.
pub fn preset_config(name: &str) -> Option<ScenarioConfig> {
    let walker = |num_orbits, sats_per_orbit, altitude_km, inclination_deg| WalkerConfig {
        num_orbits,
        sats_per_orbit,
        altitude_km,
        inclination_deg,
        phase_offset_deg: 0.0,
        resources: reference_resources(),
    };
    let mut cfg = ScenarioConfig::default();
    match name {
        "starlink-s1" => {}
        "oneweb" => {
            cfg.constellation.source = ConstellationSource::Walker(walker(36, 20, 1_200.0, 87.9));
        }
        "telesat" => {
            cfg.constellation.source = ConstellationSource::Walker(walker(28, 28, 1_015.0, 98.98));
        }
        "toy-4x4" => {
            cfg.constellation.source = ConstellationSource::Walker(walker(4, 4, 550.0, 53.0));
            cfg.engine.horizon_min = 240;
        }
        _ => return None,
    }
    Some(cfg)
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key {key:?} in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: {key} = {text:?} is not a valid {expected}")]
    BadValue {
        line: usize,
        key: String,
        text: String,
        expected: &'static str,
    },
    #[error("line {line}: expected `key = value` or `[section]`")]
    BadLine { line: usize },
    #[error("line {line}: key before any [section] header")]
    OutsideSection { line: usize },
    #[error("line {line}: unknown preset {name:?} (expected one of {:?})", PRESET_NAMES)]
    UnknownPreset { line: usize, name: String },
    #[error("line {line}: preset must appear before any other assignment")]
    PresetAfterOverride { line: usize },
    #[error("line {line}: walker geometry conflicts with an earlier tle_file")]
    WalkerAfterTle { line: usize },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("failed to read {path}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_num<T: std::str::FromStr>(
    line: usize,
    key: &str,
    text: &str,
    expected: &'static str,
) -> Result<T, ScenarioError> {
    text.parse::<T>().map_err(|_| ScenarioError::BadValue {
        line,
        key: key.to_string(),
        text: text.to_string(),
        expected,
    })
}

fn parse_bool(line: usize, key: &str, text: &str) -> Result<bool, ScenarioError> {
    match text {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ScenarioError::BadValue {
            line,
            key: key.to_string(),
            text: text.to_string(),
            expected: "boolean (true|false)",
        }),
    }
}

/// Parse `ID,START,END` triples used by fault windows and urgency boosts.
fn parse_triple(
    line: usize,
    key: &str,
    text: &str,
    expected: &'static str,
) -> Result<(usize, u32, u32), ScenarioError> {
    let bad = || ScenarioError::BadValue {
        line,
        key: key.to_string(),
        text: text.to_string(),
        expected,
    };
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok((
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
    ))
}

/// Mutable view of the walker geometry, creating it from the reference shape
/// when the current source is a TLE file (used only before any tle_file key).
fn walker_mut(cfg: &mut ScenarioConfig, line: usize) -> Result<&mut WalkerConfig, ScenarioError> {
    match &mut cfg.constellation.source {
        ConstellationSource::Walker(w) => Ok(w),
        ConstellationSource::TleFile(_) => Err(ScenarioError::WalkerAfterTle { line }),
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = ScenarioConfig::default();
    let mut section: Option<String> = None;
    let mut assignments_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(ScenarioError::BadLine { line });
            };
            let name = name.trim();
            const SECTIONS: [&str; 9] = [
                "scenario",
                "constellation",
                "stations",
                "tasks",
                "energy",
                "engine",
                "strategy",
                "telemetry",
                "faults",
            ];
            // `urgency` is also valid; kept separate so SECTIONS stays the
            // emission order.
            if !SECTIONS.contains(&name) && name != "urgency" {
                return Err(ScenarioError::UnknownSection {
                    line,
                    name: name.to_string(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ScenarioError::BadLine { line });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.as_deref() else {
            return Err(ScenarioError::OutsideSection { line });
        };
        let unknown_key = || ScenarioError::UnknownKey {
            line,
            section: sec.to_string(),
            key: key.to_string(),
        };
        let bad_value = |expected: &'static str| ScenarioError::BadValue {
            line,
            key: key.to_string(),
            text: value.to_string(),
            expected,
        };
        match sec {
            "scenario" => match key {
                "preset" => {
                    if assignments_seen {
                        return Err(ScenarioError::PresetAfterOverride { line });
                    }
                    cfg = preset_config(value).ok_or(ScenarioError::UnknownPreset {
                        line,
                        name: value.to_string(),
                    })?;
                }
                _ => return Err(unknown_key()),
            },
            "constellation" => match key {
                "num_orbits" => {
                    walker_mut(&mut cfg, line)?.num_orbits =
                        parse_num(line, key, value, "positive integer")?
                }
                "sats_per_orbit" => {
                    walker_mut(&mut cfg, line)?.sats_per_orbit =
                        parse_num(line, key, value, "positive integer")?
                }
                "altitude_km" => {
                    walker_mut(&mut cfg, line)?.altitude_km =
                        parse_num(line, key, value, "number")?
                }
                "inclination_deg" => {
                    walker_mut(&mut cfg, line)?.inclination_deg =
                        parse_num(line, key, value, "number")?
                }
                "phase_offset_deg" => {
                    walker_mut(&mut cfg, line)?.phase_offset_deg =
                        parse_num(line, key, value, "number")?
                }
                "battery_max_wmin" => {
                    walker_mut(&mut cfg, line)?.resources.battery_max_wmin =
                        parse_num(line, key, value, "number")?
                }
                "storage_capacity_mb" => {
                    walker_mut(&mut cfg, line)?.resources.storage_capacity_mb =
                        parse_num(line, key, value, "number")?
                }
                "link_capacity_mbps" => {
                    walker_mut(&mut cfg, line)?.resources.link_capacity_mbps =
                        parse_num(line, key, value, "number")?
                }
                "tle_file" => {
                    cfg.constellation.source = ConstellationSource::TleFile(PathBuf::from(value))
                }
                "earth_rotation" => {
                    cfg.constellation.earth_rotation = parse_bool(line, key, value)?
                }
                _ => return Err(unknown_key()),
            },
            "stations" => match key {
                "catalog" => {
                    cfg.stations.catalog = if value == "builtin" {
                        CatalogSource::Builtin
                    } else {
                        CatalogSource::Path(PathBuf::from(value))
                    }
                }
                "elevation_threshold_deg" => {
                    cfg.stations.elevation_threshold_deg = parse_num(line, key, value, "number")?
                }
                "bucket_minutes" => {
                    cfg.stations.bucket_minutes = parse_num(line, key, value, "positive integer")?
                }
                _ => return Err(unknown_key()),
            },
            "tasks" => match key {
                "tasks_per_tick" => {
                    cfg.tasks.tasks_per_tick = parse_num(line, key, value, "number")?
                }
                "intensity" => {
                    let level: u8 = parse_num(line, key, value, "integer in 1..=5")?;
                    if !(1..=5).contains(&level) {
                        return Err(bad_value("integer in 1..=5"));
                    }
                    cfg.tasks.intensity = level;
                }
                "urgent_fraction" => {
                    cfg.tasks.urgent_fraction = parse_num(line, key, value, "number in [0,1]")?
                }
                "urgent_deadline_min" => {
                    cfg.tasks.urgent_deadline_min = parse_num(line, key, value, "integer")?
                }
                "routine_deadline_min" => {
                    cfg.tasks.routine_deadline_min = parse_num(line, key, value, "integer")?
                }
                "routine_deadline_max" => {
                    cfg.tasks.routine_deadline_max = parse_num(line, key, value, "integer")?
                }
                "hotspot_radius_km" => {
                    cfg.tasks.hotspot_radius_km = parse_num(line, key, value, "number")?
                }
                "origin" => {
                    cfg.tasks.origin = match value {
                        "uniform" => OriginDistribution::Uniform,
                        "land" => OriginDistribution::LandBiased,
                        other => {
                            let Some(coords) = other.strip_prefix("region:") else {
                                return Err(bad_value("uniform | land | region:LAT,LON"));
                            };
                            let parts: Vec<&str> = coords.split(',').map(str::trim).collect();
                            if parts.len() != 2 {
                                return Err(bad_value("uniform | land | region:LAT,LON"));
                            }
                            let lat = parts[0]
                                .parse()
                                .map_err(|_| bad_value("uniform | land | region:LAT,LON"))?;
                            let lon = parts[1]
                                .parse()
                                .map_err(|_| bad_value("uniform | land | region:LAT,LON"))?;
                            OriginDistribution::SingleRegion {
                                lat_deg: lat,
                                lon_deg: lon,
                            }
                        }
                    }
                }
                "task_file" => cfg.task_file = Some(PathBuf::from(value)),
                _ => return Err(unknown_key()),
            },
            "energy" => match key {
                "battery_max_wmin" => {
                    cfg.energy.battery_max_wmin = parse_num(line, key, value, "number")?
                }
                "solar_power_w" => {
                    cfg.energy.solar_power_w = parse_num(line, key, value, "number")?
                }
                "kappa_wmin_per_mb" => {
                    cfg.energy.kappa_wmin_per_mb = parse_num(line, key, value, "number")?
                }
                "zeta_wmin_per_mb" => {
                    cfg.energy.zeta_wmin_per_mb = parse_num(line, key, value, "number")?
                }
                "min_level_fraction" => {
                    cfg.energy.min_level_fraction = parse_num(line, key, value, "number in [0,1]")?
                }
                "initial_level_wmin" => {
                    cfg.energy.initial_level_wmin = parse_num(line, key, value, "number")?
                }
                _ => return Err(unknown_key()),
            },
            "engine" => match key {
                "horizon_min" => {
                    cfg.engine.horizon_min = parse_num(line, key, value, "positive integer")?
                }
                "drain_grace_min" => {
                    cfg.engine.drain_grace_min = parse_num(line, key, value, "integer")?
                }
                "seed" => cfg.engine.seed = parse_num(line, key, value, "integer")?,
                _ => return Err(unknown_key()),
            },
            "strategy" => match key {
                "selection" => {
                    cfg.strategy.selection = match value {
                        "oan" => SelectionPolicy::Oan,
                        "nearest" => SelectionPolicy::Nearest,
                        "nearest_available" => SelectionPolicy::NearestAvailable,
                        _ => return Err(bad_value("oan | nearest | nearest_available")),
                    }
                }
                "routing" => {
                    cfg.strategy.routing = match value {
                        "hybrid" => RoutingPolicy::Hybrid,
                        "isl_shortest" => RoutingPolicy::IslShortest,
                        "pco_withhold" => RoutingPolicy::PcoWithhold,
                        _ => return Err(bad_value("hybrid | isl_shortest | pco_withhold")),
                    }
                }
                _ => return Err(unknown_key()),
            },
            "telemetry" => match key {
                "delay_min" => cfg.telemetry.delay_min = parse_num(line, key, value, "integer")?,
                "stale_fraction" => {
                    cfg.telemetry.stale_fraction = parse_num(line, key, value, "number in [0,1]")?
                }
                _ => return Err(unknown_key()),
            },
            "faults" => match key {
                "satellite" | "station" => {
                    let (id, start, end) =
                        parse_triple(line, key, value, "ID,START,END with START < END")?;
                    if start >= end {
                        return Err(bad_value("ID,START,END with START < END"));
                    }
                    let target = if key == "satellite" {
                        FaultTarget::Satellite(id)
                    } else {
                        FaultTarget::Station(id as GsId)
                    };
                    cfg.faults.push(FaultWindow { target, start, end });
                }
                _ => return Err(unknown_key()),
            },
            "urgency" => match key {
                "boost" => {
                    let (task_id, at_tick, new_deadline_min) =
                        parse_triple(line, key, value, "TASK_ID,TICK,NEW_DEADLINE_MIN")?;
                    cfg.urgency_boosts.push(UrgencyBoost {
                        task_id,
                        at_tick,
                        new_deadline_min: new_deadline_min as u32,
                    });
                }
                _ => return Err(unknown_key()),
            },
            _ => unreachable!("section validated above"),
        }
        if !(sec == "scenario" && key == "preset") {
            assignments_seen = true;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_scenario(&text)?;
    // Resolve referenced files relative to the scenario's own directory.
    if let Some(base) = path.parent() {
        if let ConstellationSource::TleFile(p) = &cfg.constellation.source {
            if p.is_relative() {
                cfg.constellation.source = ConstellationSource::TleFile(base.join(p));
            }
        }
        if let CatalogSource::Path(p) = &cfg.stations.catalog {
            if p.is_relative() {
                cfg.stations.catalog = CatalogSource::Path(base.join(p));
            }
        }
        if let Some(p) = &cfg.task_file {
            if p.is_relative() {
                cfg.task_file = Some(base.join(p));
            }
        }
    }
    Ok(cfg)
}

impl ScenarioConfig {
    /// Cross-field checks that individual key parses cannot see.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.tasks
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if self.engine.horizon_min == 0 {
            return Err(ScenarioError::Invalid("horizon_min must be positive".into()));
        }
        if self.stations.bucket_minutes == 0 {
            return Err(ScenarioError::Invalid(
                "bucket_minutes must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.telemetry.stale_fraction) {
            return Err(ScenarioError::Invalid(format!(
                "stale_fraction {} outside [0, 1]",
                self.telemetry.stale_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.energy.min_level_fraction) {
            return Err(ScenarioError::Invalid(format!(
                "min_level_fraction {} outside [0, 1]",
                self.energy.min_level_fraction
            )));
        }
        if let ConstellationSource::Walker(w) = &self.constellation.source {
            if w.num_orbits == 0 || w.sats_per_orbit == 0 {
                return Err(ScenarioError::Invalid(
                    "walker constellation must have at least one plane and member".into(),
                ));
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_scenario` on the output reproduces the
    /// config exactly.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        s.push_str("[constellation]\n");
        match &self.constellation.source {
            ConstellationSource::Walker(w) => {
                let _ = writeln!(s, "num_orbits = {}", w.num_orbits);
                let _ = writeln!(s, "sats_per_orbit = {}", w.sats_per_orbit);
                let _ = writeln!(s, "altitude_km = {}", w.altitude_km);
                let _ = writeln!(s, "inclination_deg = {}", w.inclination_deg);
                let _ = writeln!(s, "phase_offset_deg = {}", w.phase_offset_deg);
                let _ = writeln!(s, "battery_max_wmin = {}", w.resources.battery_max_wmin);
                let _ = writeln!(s, "storage_capacity_mb = {}", w.resources.storage_capacity_mb);
                let _ = writeln!(s, "link_capacity_mbps = {}", w.resources.link_capacity_mbps);
            }
            ConstellationSource::TleFile(p) => {
                let _ = writeln!(s, "tle_file = {}", p.display());
            }
        }
        let _ = writeln!(s, "earth_rotation = {}", self.constellation.earth_rotation);

        s.push_str("\n[stations]\n");
        match &self.stations.catalog {
            CatalogSource::Builtin => s.push_str("catalog = builtin\n"),
            CatalogSource::Path(p) => {
                let _ = writeln!(s, "catalog = {}", p.display());
            }
        }
        let _ = writeln!(
            s,
            "elevation_threshold_deg = {}",
            self.stations.elevation_threshold_deg
        );
        let _ = writeln!(s, "bucket_minutes = {}", self.stations.bucket_minutes);

        s.push_str("\n[tasks]\n");
        let t = &self.tasks;
        let _ = writeln!(s, "tasks_per_tick = {}", t.tasks_per_tick);
        let _ = writeln!(s, "intensity = {}", t.intensity);
        let _ = writeln!(s, "urgent_fraction = {}", t.urgent_fraction);
        let _ = writeln!(s, "urgent_deadline_min = {}", t.urgent_deadline_min);
        let _ = writeln!(s, "routine_deadline_min = {}", t.routine_deadline_min);
        let _ = writeln!(s, "routine_deadline_max = {}", t.routine_deadline_max);
        match t.origin {
            OriginDistribution::Uniform => s.push_str("origin = uniform\n"),
            OriginDistribution::LandBiased => s.push_str("origin = land\n"),
            OriginDistribution::SingleRegion { lat_deg, lon_deg } => {
                let _ = writeln!(s, "origin = region:{},{}", lat_deg, lon_deg);
            }
        }
        let _ = writeln!(s, "hotspot_radius_km = {}", t.hotspot_radius_km);
        if let Some(p) = &self.task_file {
            let _ = writeln!(s, "task_file = {}", p.display());
        }

        s.push_str("\n[energy]\n");
        let e = &self.energy;
        let _ = writeln!(s, "battery_max_wmin = {}", e.battery_max_wmin);
        let _ = writeln!(s, "solar_power_w = {}", e.solar_power_w);
        let _ = writeln!(s, "kappa_wmin_per_mb = {}", e.kappa_wmin_per_mb);
        let _ = writeln!(s, "zeta_wmin_per_mb = {}", e.zeta_wmin_per_mb);
        let _ = writeln!(s, "min_level_fraction = {}", e.min_level_fraction);
        let _ = writeln!(s, "initial_level_wmin = {}", e.initial_level_wmin);

        s.push_str("\n[engine]\n");
        let _ = writeln!(s, "horizon_min = {}", self.engine.horizon_min);
        let _ = writeln!(s, "drain_grace_min = {}", self.engine.drain_grace_min);
        let _ = writeln!(s, "seed = {}", self.engine.seed);

        s.push_str("\n[strategy]\n");
        let _ = writeln!(s, "selection = {}", selection_name(self.strategy.selection));
        let _ = writeln!(s, "routing = {}", routing_name(self.strategy.routing));

        s.push_str("\n[telemetry]\n");
        let _ = writeln!(s, "delay_min = {}", self.telemetry.delay_min);
        let _ = writeln!(s, "stale_fraction = {}", self.telemetry.stale_fraction);

        if !self.faults.is_empty() {
            s.push_str("\n[faults]\n");
            for f in &self.faults {
                match f.target {
                    FaultTarget::Satellite(id) => {
                        let _ = writeln!(s, "satellite = {},{},{}", id, f.start, f.end);
                    }
                    FaultTarget::Station(id) => {
                        let _ = writeln!(s, "station = {},{},{}", id, f.start, f.end);
                    }
                }
            }
        }
        if !self.urgency_boosts.is_empty() {
            s.push_str("\n[urgency]\n");
            for b in &self.urgency_boosts {
                let _ = writeln!(
                    s,
                    "boost = {},{},{}",
                    b.task_id, b.at_tick, b.new_deadline_min
                );
            }
        }
        s
    }

    /// Total ticks the engine executes: generation horizon plus drain grace.
    pub fn run_ticks(&self) -> u32 {
        self.engine.horizon_min + self.engine.drain_grace_min
    }
}

// ---------------------------------------------------------------------------
// World construction
// ---------------------------------------------------------------------------

/// Everything physical a run needs, built once from a scenario.
#[derive(Debug, Clone)]
pub struct World {
    pub constellation: Constellation,
    pub stations: Vec<GroundStation>,
    pub propagator: Propagator,
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("failed to read {path}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("TLE ingestion failed: {0}")]
    Tle(#[from] TleError),
    #[error("station catalog failed: {0}")]
    Catalog(#[from] CatalogError),
}

impl ScenarioConfig {
    pub fn build_world(&self) -> Result<World, WorldError> {
        let constellation = match &self.constellation.source {
            ConstellationSource::Walker(w) => generate_walker(w),
            ConstellationSource::TleFile(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| WorldError::Read {
                    path: path.clone(),
                    source,
                })?;
                ingest_tle(&text, &reference_resources())?
            }
        };
        let stations = match &self.stations.catalog {
            CatalogSource::Builtin => builtin_catalog(),
            CatalogSource::Path(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| WorldError::Read {
                    path: path.clone(),
                    source,
                })?;
                parse_catalog(&text)?
            }
        };
        let propagator = Propagator {
            earth_rotation: self.constellation.earth_rotation,
        };
        Ok(World {
            constellation,
            stations,
            propagator,
        })
    }
}
