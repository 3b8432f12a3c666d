//! Exact small-instance reference.
//!
//! Three independent pieces back the scheduler's quality claims at desk
//! scale:
//!
//! - mathematical components used by MIP formulations of the scheduling
//!   problem: the three-constraint linearization of a binary product and a
//!   λ-weighted piecewise-linear approximation of `exp` on [0, 1];
//! - a plan-set evaluator that replays delivery plans tick by tick against
//!   the same capacity, admission, visibility, and battery rules the
//!   simulation enforces, and prices them with the run objective
//!   (total delivery minutes plus total battery life consumed);
//! - an exhaustive enumerator over a declared plan family for *tiny
//!   instances* (few tasks, few stations, few crossing slots), giving the
//!   true optimum that the library scheduler is measured against.
//!
//! Enumeration replaces an external MIP solver on purpose: at these bounds
//! it is exact, dependency-free, and fast, while the linearization and
//! interpolation constructions are still implemented and property-tested as
//! standalone components.

use crate::constellation::{generate_walker, Constellation, ResourceProfile, SatId, WalkerConfig};
use crate::energy::{BatteryState, EnergyParams};
use crate::oan::{OanGraph, Window};
use crate::scenario::{RoutingPolicy, SelectionPolicy, StrategyConfig};
use crate::scheduler::{
    DeliveryPlan, EpochView, FailureReason, PlanMode, PlanRequest, SchedCtx, Scheduler,
};
use crate::tasking::TaskId;
use crate::topology::{GridTopology, GroundStation, GsId};
use crate::Propagator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

// ---------------------------------------------------------------------------
// Binary-product linearization
// ---------------------------------------------------------------------------

/// A binary product `x·z` rewritten as a linear system over binaries: the
/// auxiliary `alpha` is pinned by `alpha ≤ x`, `alpha ≤ z`, and
/// `alpha ≥ x + z − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinearizedProduct {
    pub x: u8,
    pub z: u8,
    pub alpha: u8,
}

impl LinearizedProduct {
    /// Build the linearization for binary `x` and `z`; `alpha` is the unique
    /// feasible auxiliary.
    pub fn new(x: u8, z: u8) -> Self {
        Self {
            x,
            z,
            alpha: linearize_product(x, z),
        }
    }

    /// The three linear constraints, checked literally.
    pub fn satisfies_constraints(&self) -> bool {
        self.alpha <= self.x && self.alpha <= self.z && self.alpha + 1 >= self.x + self.z
    }
}

/// Every `alpha ∈ {0,1}` satisfying the three constraints for the given
/// binaries. The linearization is sound exactly because this set is a
/// singleton equal to `{x·z}`.
pub fn feasible_alphas(x: u8, z: u8) -> Vec<u8> {
    assert!(x <= 1 && z <= 1, "inputs must be binary");
    (0u8..=1)
        .filter(|&a| a <= x && a <= z && a + 1 >= x + z)
        .collect()
}

/// The unique auxiliary value for a linearized binary product.
pub fn linearize_product(x: u8, z: u8) -> u8 {
    assert!(x <= 1 && z <= 1, "inputs must be binary");
    x * z
}

// ---------------------------------------------------------------------------
// Piecewise-linear exponential
// ---------------------------------------------------------------------------

/// Interpolation grid for `exp` on [0, 1]: `m` uniformly spaced nodes with
/// their exact exponentials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakpoints {
    /// Strictly increasing nodes; first 0, last 1.
    pub nodes: Vec<f64>,
    /// `exp` at each node.
    pub values: Vec<f64>,
}

impl Breakpoints {
    /// `m ≥ 2` uniformly spaced breakpoints over [0, 1].
    pub fn uniform(m: usize) -> Self {
        assert!(m >= 2, "need at least the two endpoints");
        let nodes: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let values = nodes.iter().map(|&a| a.exp()).collect();
        Self { nodes, values }
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("exp interpolation input {x} outside [0, 1]")]
pub struct ExpDomainError {
    pub x: f64,
}

/// λ-weighted interpolation of `exp(x)` between the two bracketing
/// breakpoints: the adjacent weights sum to 1 and reproduce `x`.
pub fn piecewise_exp(x: f64, bp: &Breakpoints) -> Result<f64, ExpDomainError> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(ExpDomainError { x });
    }
    let n = bp.nodes.len();
    // Index of the right bracket; x == 1.0 uses the last segment.
    let hi = bp.nodes.partition_point(|&a| a < x).clamp(1, n - 1);
    let (a0, a1) = (bp.nodes[hi - 1], bp.nodes[hi]);
    let lambda = (x - a0) / (a1 - a0);
    Ok((1.0 - lambda) * bp.values[hi - 1] + lambda * bp.values[hi])
}

/// Approximation quality over seeded uniform samples in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxError {
    /// Mean of |approx − exact| / exact.
    pub mean_rae: f64,
    /// Mean of (approx − exact)².
    pub mse: f64,
    pub max_abs: f64,
    pub samples: usize,
}

/// Sample the interpolation error with a seeded uniform stream.
pub fn approximation_error(bp: &Breakpoints, samples: usize, seed: u64) -> ApproxError {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rae_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut max_abs = 0.0f64;
    for _ in 0..samples {
        let x: f64 = rng.gen();
        let approx = piecewise_exp(x, bp).expect("sample in domain");
        let exact = x.exp();
        let abs = (approx - exact).abs();
        rae_sum += abs / exact;
        sq_sum += abs * abs;
        max_abs = max_abs.max(abs);
    }
    ApproxError {
        mean_rae: rae_sum / samples as f64,
        mse: sq_sum / samples as f64,
        max_abs,
        samples,
    }
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

/// The run objective split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveValue {
    /// Total battery life consumed across the fleet.
    pub life_term: f64,
    /// Total delivery minutes across tasks.
    pub delay_term: f64,
    pub total: f64,
}

impl ObjectiveValue {
    pub fn new(life_term: f64, delay_term: f64) -> Self {
        Self {
            life_term,
            delay_term,
            total: life_term + delay_term,
        }
    }
}

/// Literal per-carrier delivery-time summation: the length of every recorder
/// occupancy interval of the plan, summed. The plan construction keeps the
/// intervals disjoint, so this equals `deliver_at − planned_at`.
pub fn carry_time_sum(plan: &DeliveryPlan) -> u32 {
    plan.holdings().iter().map(|&(_, a, b)| b - a).sum()
}

// ---------------------------------------------------------------------------
// Tiny instances
// ---------------------------------------------------------------------------

/// A desk-scale scheduling problem: a small Walker shell with hand-authored
/// visibility windows, a handful of tasks, and a declared plan family
/// (crossing slots, plane offsets) over which the optimum is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyInstance {
    pub planes: usize,
    pub sats_per_plane: usize,
    pub link_mbps: f64,
    pub storage_mb: f64,
    pub battery_wmin: f64,
    pub stations: Vec<TinyStation>,
    /// Visibility windows; a window covers every member of its plane.
    pub windows: Vec<TinyWindow>,
    pub tasks: Vec<TinyTask>,
    /// Pre-existing recorder occupancy (payload data outside this problem).
    #[serde(default)]
    pub occupancy: Vec<TinyOccupancy>,
    /// Candidate first-hop ticks for plans that use links.
    pub crossing_slots: Vec<u32>,
    /// Largest plane offset a plan may cross (1 ⇒ stay, clockwise, or
    /// counter-clockwise: three choices).
    pub max_offset: i64,
    pub horizon: u32,
    pub bucket_minutes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TinyStation {
    pub id: GsId,
    pub capacity_mbps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TinyWindow {
    pub plane: usize,
    pub gs: GsId,
    pub start: u32,
    pub end: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TinyTask {
    pub id: TaskId,
    pub plane: usize,
    pub index: usize,
    pub created_at: u32,
    pub deadline_min: u32,
    pub volume_mb: f64,
}

impl TinyTask {
    pub fn deadline_abs(&self) -> u32 {
        self.created_at + self.deadline_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TinyOccupancy {
    pub plane: usize,
    pub index: usize,
    pub start: u32,
    pub end: u32,
    pub volume_mb: f64,
}

/// Everything needed to plan and evaluate one tiny instance.
pub struct OracleWorld {
    pub constellation: Constellation,
    pub stations: Vec<GroundStation>,
    pub oan: OanGraph,
    pub grid: GridTopology,
    pub propagator: Propagator,
    pub energy: EnergyParams,
    pub bucket_minutes: u32,
}

impl OracleWorld {
    fn ctx(&self) -> SchedCtx<'_> {
        SchedCtx {
            constellation: &self.constellation,
            stations: &self.stations,
            oan: &self.oan,
            grid: &self.grid,
            propagator: &self.propagator,
            energy: &self.energy,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance outside oracle bounds: {0}")]
    Bounds(String),
    #[error("instance JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Exhaustive-enumeration outcome.
#[derive(Debug, Clone)]
pub enum OracleReport {
    Optimal {
        objective: ObjectiveValue,
        plans: BTreeMap<TaskId, DeliveryPlan>,
    },
    /// No joint assignment in the plan family satisfies every constraint.
    Infeasible,
}

/// Largest inputs the enumerator accepts; beyond these the joint space is a
/// combinatorial blow-up, not a reference.
const MAX_TASKS: usize = 5;
const MAX_STATIONS: usize = 8;
const MAX_SLOTS: usize = 6;
const MAX_OFFSET_BOUND: i64 = 1;
const MAX_PATH_HOPS: usize = 3;
const MAX_CANDIDATES_PER_TASK: usize = 512;
const EPS: f64 = 1e-6;

impl TinyInstance {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reject anything outside the enumerator's exactness envelope.
    pub fn check_bounds(&self) -> Result<(), OracleError> {
        let fail = |msg: String| Err(OracleError::Bounds(msg));
        if !(3..=6).contains(&self.planes) || !(3..=6).contains(&self.sats_per_plane) {
            return fail(format!(
                "constellation {}x{} outside 3..=6 per axis",
                self.planes, self.sats_per_plane
            ));
        }
        if self.tasks.is_empty() || self.tasks.len() > MAX_TASKS {
            return fail(format!("{} tasks (1..={MAX_TASKS})", self.tasks.len()));
        }
        if self.stations.is_empty() || self.stations.len() > MAX_STATIONS {
            return fail(format!("{} stations (1..={MAX_STATIONS})", self.stations.len()));
        }
        if self.crossing_slots.is_empty() || self.crossing_slots.len() > MAX_SLOTS {
            return fail(format!(
                "{} crossing slots (1..={MAX_SLOTS})",
                self.crossing_slots.len()
            ));
        }
        if self.max_offset < 0 || self.max_offset > MAX_OFFSET_BOUND {
            return fail(format!("max_offset {} (0..={MAX_OFFSET_BOUND})", self.max_offset));
        }
        if self.horizon == 0 || self.horizon > 512 {
            return fail(format!("horizon {} (1..=512)", self.horizon));
        }
        if self.bucket_minutes == 0 {
            return fail("bucket_minutes must be positive".into());
        }
        if !(self.link_mbps > 0.0) || !(self.storage_mb > 0.0) || !(self.battery_wmin > 0.0) {
            return fail("link, storage, and battery must be positive".into());
        }
        for (pos, g) in self.stations.iter().enumerate() {
            if g.id != pos {
                return fail(format!("station ids must be dense 0..n-1 (id {} at {pos})", g.id));
            }
            if !(g.capacity_mbps > 0.0) {
                return fail(format!("station {} capacity must be positive", g.id));
            }
        }
        let mut ids = BTreeSet::new();
        for t in &self.tasks {
            if !ids.insert(t.id) {
                return fail(format!("duplicate task id {}", t.id));
            }
            if t.plane >= self.planes || t.index >= self.sats_per_plane {
                return fail(format!("task {} holder off the grid", t.id));
            }
            if !(t.volume_mb > 0.0) {
                return fail(format!("task {} volume must be positive", t.id));
            }
            if as_milli(t.volume_mb).is_none() {
                return fail(format!(
                    "task {} volume {} is not an exact multiple of 0.001 Mb",
                    t.id, t.volume_mb
                ));
            }
            if t.deadline_abs() > self.horizon {
                return fail(format!("task {} deadline beyond the horizon", t.id));
            }
        }
        for w in &self.windows {
            if w.plane >= self.planes || w.gs >= self.stations.len() || w.start >= w.end {
                return fail(format!("malformed window {w:?}"));
            }
        }
        for o in &self.occupancy {
            if o.plane >= self.planes
                || o.index >= self.sats_per_plane
                || o.start >= o.end
                || o.end > self.horizon
            {
                return fail(format!("malformed occupancy {o:?}"));
            }
            if as_milli(o.volume_mb).is_none() {
                return fail(format!("occupancy volume {} not a 0.001 Mb multiple", o.volume_mb));
            }
        }
        Ok(())
    }

    /// Materialize the physical world this instance describes.
    pub fn build_world(&self) -> OracleWorld {
        let cfg = WalkerConfig {
            num_orbits: self.planes,
            sats_per_orbit: self.sats_per_plane,
            altitude_km: 550.0,
            inclination_deg: 53.0,
            phase_offset_deg: 0.0,
            resources: ResourceProfile {
                battery_max_wmin: self.battery_wmin,
                storage_capacity_mb: self.storage_mb,
                link_capacity_mbps: self.link_mbps,
            },
        };
        let c = generate_walker(&cfg);
        let stations: Vec<GroundStation> = self
            .stations
            .iter()
            .map(|s| GroundStation {
                id: s.id,
                latitude_deg: 0.0,
                longitude_deg: 0.0,
                capacity_mbps: s.capacity_mbps,
                antenna_count: 1,
            })
            .collect();
        let gs_ids: Vec<GsId> = stations.iter().map(|g| g.id).collect();
        let windows = self.windows.clone();
        let planes_of: Vec<usize> = c.satellites.iter().map(|s| s.orbit_index).collect();
        let oan = OanGraph::from_windows(&c, self.horizon, &gs_ids, move |sat, gs| {
            let plane = planes_of[sat];
            windows
                .iter()
                .filter(|w| w.plane == plane && w.gs == gs)
                .map(|w| Window {
                    start: w.start,
                    end: w.end,
                })
                .collect()
        });
        let grid = GridTopology::build(&c);
        OracleWorld {
            constellation: c,
            stations,
            oan,
            grid,
            propagator: Propagator {
                earth_rotation: true,
            },
            energy: EnergyParams::default(),
            bucket_minutes: self.bucket_minutes,
        }
    }

    fn occupancy_seeds(&self, c: &Constellation) -> Vec<(SatId, u32, u32, f64)> {
        self.occupancy
            .iter()
            .map(|o| (c.member_at(o.plane, o.index), o.start, o.end, o.volume_mb))
            .collect()
    }

    fn task_specs(&self, c: &Constellation) -> Vec<TaskSpec> {
        self.tasks
            .iter()
            .map(|t| TaskSpec {
                id: t.id,
                holder: c.member_at(t.plane, t.index),
                created_at: t.created_at,
                deadline_abs: t.deadline_abs(),
                volume_mb: t.volume_mb,
            })
            .collect()
    }

    /// Seeded random instance. The generator models tasks sensed shortly
    /// before their own plane's pass: the holder plane always gets a usable
    /// window first and neighbor planes trail it, so plan quality is decided
    /// by contention (shared recorders, transmit budgets, admission), not by
    /// lucky plane choice. All tasks share one holder plane to maximize that
    /// contention.
    pub fn random(seed: u64) -> TinyInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(3));
        let planes = 4;
        let spp = 4;
        let n_tasks = rng.gen_range(2..=4usize);
        let n_stations = rng.gen_range(2..=3usize);
        let holder_plane = rng.gen_range(0..planes);
        let shared_volume = rng.gen_range(8..=16) as f64 * 500.0;
        let equal_volumes = rng.gen_bool(0.6);

        // Holders: distinct members of the plane, except that one pair may
        // share a satellite (two materializations always fit the recorder;
        // three need not, and that failure mode is the engine's, not a plan
        // quality question).
        use rand::seq::SliceRandom;
        let mut pool: Vec<usize> = (0..spp).collect();
        pool.shuffle(&mut rng);
        let shared_holder = rng.gen_bool(0.5);

        let tasks: Vec<TinyTask> = (0..n_tasks)
            .map(|i| {
                let volume_mb = if equal_volumes {
                    shared_volume
                } else {
                    rng.gen_range(8..=16) as f64 * 500.0
                };
                TinyTask {
                    id: i + 1,
                    plane: holder_plane,
                    index: if shared_holder && i == 1 { pool[0] } else { pool[i] },
                    created_at: rng.gen_range(0..=2),
                    deadline_min: rng.gen_range(34..=48),
                    volume_mb,
                }
            })
            .collect();
        let max_volume = tasks.iter().map(|t| t.volume_mb).fold(0.0, f64::max);
        let latest_created = tasks.iter().map(|t| t.created_at).max().unwrap_or(0);

        let stations: Vec<TinyStation> = (0..n_stations)
            .map(|id| TinyStation {
                id,
                capacity_mbps: 150.0,
            })
            .collect();

        // Own-plane pass first, neighbors trailing by a few minutes.
        let own_start = rng.gen_range(latest_created + 6..=latest_created + 14);
        let mut windows = vec![TinyWindow {
            plane: holder_plane,
            gs: 0,
            start: own_start,
            end: own_start + rng.gen_range(2..=3),
        }];
        for delta in [-1i64, 1] {
            let plane = (holder_plane as i64 + delta).rem_euclid(planes as i64) as usize;
            for gs in 0..n_stations {
                if rng.gen_bool(0.7) {
                    let start = own_start + rng.gen_range(0..=10);
                    windows.push(TinyWindow {
                        plane,
                        gs,
                        start,
                        end: start + rng.gen_range(2..=4),
                    });
                }
            }
        }
        // Sometimes a second, later own-plane pass at another station.
        if n_stations > 1 && rng.gen_bool(0.5) {
            let start = own_start + rng.gen_range(6..=12);
            windows.push(TinyWindow {
                plane: holder_plane,
                gs: 1,
                start,
                end: start + rng.gen_range(2..=3),
            });
        }

        // Pre-existing payload data crowds a neighbor-plane recorder early
        // on, forcing deferred crossings.
        let storage_mb = (2.6 * max_volume / 500.0).ceil() * 500.0;
        let mut occupancy = Vec::new();
        if rng.gen_bool(0.5) {
            let delta = if rng.gen_bool(0.5) { 1i64 } else { -1 };
            let plane = (holder_plane as i64 + delta).rem_euclid(planes as i64) as usize;
            let busy_until = own_start.saturating_sub(rng.gen_range(0..=2)).max(2);
            occupancy.push(TinyOccupancy {
                plane,
                index: rng.gen_range(0..spp),
                start: 1,
                end: busy_until,
                volume_mb: storage_mb - 1.2 * max_volume,
            });
        }

        TinyInstance {
            planes,
            sats_per_plane: spp,
            link_mbps: 1_000.0,
            storage_mb,
            battery_wmin: 5_000.0,
            stations,
            windows,
            tasks,
            occupancy,
            crossing_slots: vec![0, 2, 4, 6, 8, 10],
            max_offset: 1,
            horizon: 72,
            bucket_minutes: 60,
        }
    }
}

fn c_plane_of(c: &Constellation, sat: SatId) -> usize {
    c.satellites[sat].orbit_index
}

fn as_milli(v: f64) -> Option<u64> {
    let scaled = v * 1000.0;
    let rounded = scaled.round();
    if (scaled - rounded).abs() < 1e-6 && rounded >= 0.0 {
        Some(rounded as u64)
    } else {
        None
    }
}

/// The deferred-crossing contention example: one task on a neighbor plane of
/// the only covered plane, whose receiving recorder is crowded by payload
/// data until shortly before the pass. The only way to make the [12, 14)
/// window is to delay the plane crossing until tick 10, so the data lands
/// exactly when the recorder frees.
pub fn worked_contention_instance() -> TinyInstance {
    TinyInstance {
        planes: 4,
        sats_per_plane: 4,
        link_mbps: 1_000.0,
        storage_mb: 100_000.0,
        battery_wmin: 5_000.0,
        stations: vec![TinyStation {
            id: 0,
            capacity_mbps: 100.0,
        }],
        windows: vec![TinyWindow {
            plane: 2,
            gs: 0,
            start: 12,
            end: 14,
        }],
        tasks: vec![TinyTask {
            id: 1,
            plane: 1,
            index: 0,
            created_at: 0,
            deadline_min: 40,
            volume_mb: 6_000.0,
        }],
        occupancy: vec![TinyOccupancy {
            plane: 2,
            index: 0,
            start: 1,
            end: 11,
            volume_mb: 95_000.0,
        }],
        crossing_slots: vec![0, 2, 4, 6, 8, 10],
        max_offset: 1,
        horizon: 48,
        bucket_minutes: 60,
    }
}

// ---------------------------------------------------------------------------
// Plan-set evaluation
// ---------------------------------------------------------------------------

/// One task as the evaluator sees it.
#[derive(Debug, Clone, Copy)]
pub struct TaskSpec {
    pub id: TaskId,
    pub holder: SatId,
    pub created_at: u32,
    pub deadline_abs: u32,
    pub volume_mb: f64,
}

/// Objective plus every rule the plan set broke (empty ⇒ feasible).
#[derive(Debug, Clone)]
pub struct PlanSetEvaluation {
    pub objective: ObjectiveValue,
    pub violations: Vec<String>,
}

/// Replay a plan set tick by tick and price it with the run objective.
///
/// The replay mirrors the simulation engine's execution rules exactly:
/// transmissions respect per-tick link budgets, recorder occupancy stays
/// within capacity, station admission stays within its bucket, offloads
/// happen inside a visibility window and before the deadline, every link hop
/// requires the transmitter's battery above the operational floor at that
/// tick, and energy follows the same charge/discharge stepping (recorder
/// writes at materialization and hop receives, transmit costs per megabit).
#[allow(clippy::too_many_arguments)]
pub fn evaluate_plan_set(
    world: &OracleWorld,
    tasks: &[TaskSpec],
    plans: &BTreeMap<TaskId, DeliveryPlan>,
    occupancy: &[(SatId, u32, u32, f64)],
    visible: &dyn Fn(SatId, GsId, u32) -> bool,
) -> PlanSetEvaluation {
    let c = &world.constellation;
    let n = c.satellites.len();
    let mut violations = Vec::new();

    // Structural checks and the horizon.
    let mut last_tick = 0;
    for (tid, plan) in plans {
        let Some(task) = tasks.iter().find(|t| t.id == *tid) else {
            violations.push(format!("plan for unknown task {tid}"));
            continue;
        };
        if plan.source != task.holder {
            violations.push(format!("task {tid}: plan starts off the holder"));
        }
        if plan.deliver_at > task.deadline_abs {
            violations.push(format!("task {tid}: delivery after the deadline"));
        }
        if plan.arrival_tick() > plan.deliver_at {
            violations.push(format!("task {tid}: arrives after its offload"));
        }
        if let Some(s) = plan.crossing_tick {
            if s < task.created_at {
                violations.push(format!("task {tid}: transmits before the data exists"));
            }
        }
        for pair in plan.path.windows(2) {
            if !world.grid.neighbors[pair[0]].contains(&pair[1]) {
                violations.push(format!("task {tid}: hop {}->{} is not a link", pair[0], pair[1]));
            }
        }
        if !visible(plan.tail, plan.gs, plan.deliver_at) {
            violations.push(format!(
                "task {tid}: offload at tick {} outside any visibility window",
                plan.deliver_at
            ));
        }
        last_tick = last_tick.max(plan.deliver_at);
    }
    for &(_, _, end, _) in occupancy {
        last_tick = last_tick.max(end);
    }

    // Per-tick tallies.
    let mut tx: BTreeMap<(SatId, u32), f64> = BTreeMap::new();
    let mut io: BTreeMap<(SatId, u32), f64> = BTreeMap::new();
    let mut store: BTreeMap<(SatId, u32), f64> = BTreeMap::new();
    let mut bucket: BTreeMap<(GsId, u32), f64> = BTreeMap::new();
    // Link hops that must pass the battery gate: (tick, transmitter).
    let mut gated: BTreeSet<(u32, SatId)> = BTreeSet::new();

    for &(sat, a, b, mb) in occupancy {
        for u in a..b {
            *store.entry((sat, u)).or_insert(0.0) += mb;
        }
    }
    for (tid, plan) in plans {
        let Some(task) = tasks.iter().find(|t| t.id == *tid) else {
            continue;
        };
        *io.entry((task.holder, task.created_at)).or_insert(0.0) += task.volume_mb;
        for (sat, tick, mb) in plan.transmissions() {
            *tx.entry((sat, tick)).or_insert(0.0) += mb;
            let offload = sat == plan.tail && tick == plan.deliver_at;
            if offload {
                *bucket
                    .entry((plan.gs, tick / world.bucket_minutes))
                    .or_insert(0.0) += mb;
            } else {
                gated.insert((tick, sat));
                if let Some(pos) = plan.path.iter().position(|&p| p == sat) {
                    *io.entry((plan.path[pos + 1], tick)).or_insert(0.0) += mb;
                }
            }
        }
        for (sat, a, b) in plan.holdings() {
            for u in a..b {
                *store.entry((sat, u)).or_insert(0.0) += plan.volume_mb;
            }
        }
    }

    for (&(sat, tick), &mb) in &tx {
        let cap = c.satellites[sat].link_capacity_mbps * 60.0;
        if mb > cap + EPS {
            violations.push(format!("satellite {sat} transmits {mb} > budget {cap} at tick {tick}"));
        }
    }
    for (&(sat, tick), &mb) in &store {
        let cap = c.satellites[sat].storage_capacity_mb;
        if mb > cap + EPS {
            violations.push(format!("satellite {sat} holds {mb} > recorder {cap} at tick {tick}"));
        }
    }
    for (&(gs, b), &mb) in &bucket {
        let cap = world.stations[gs].capacity_mbps * 60.0 * world.bucket_minutes as f64;
        if mb > cap + EPS {
            violations.push(format!("station {gs} admits {mb} > bucket capacity {cap} in bucket {b}"));
        }
    }

    // Energy replay with the battery gate on link hops.
    let sun = crate::constellation::Vec3::new(1.0, 0.0, 0.0);
    let mut batteries = vec![BatteryState::new(&world.energy); n];
    for u in 0..=last_tick {
        for s in 0..n {
            if gated.contains(&(u, s))
                && !crate::energy::check_min_level(batteries[s].level_wmin, &world.energy)
            {
                violations.push(format!(
                    "satellite {s} drives a link hop at tick {u} below the charge floor"
                ));
            }
        }
        for s in 0..n {
            let pos = world.propagator.position(c, s, u as f64);
            let sunlit = crate::constellation::in_sunlight(pos, sun);
            crate::energy::step_energy(
                &mut batteries[s],
                &world.energy,
                sunlit,
                tx.get(&(s, u)).copied().unwrap_or(0.0),
                io.get(&(s, u)).copied().unwrap_or(0.0),
                1.0,
            );
        }
    }
    let life_term: f64 = batteries.iter().map(|b| b.life_consumed).sum();
    let mut delay_term = 0.0;
    for task in tasks {
        match plans.get(&task.id) {
            Some(plan) => delay_term += (plan.deliver_at - task.created_at) as f64,
            None => violations.push(format!("task {} has no plan", task.id)),
        }
    }

    PlanSetEvaluation {
        objective: ObjectiveValue::new(life_term, delay_term),
        violations,
    }
}

/// Price a plan set for a tiny instance (convenience wrapper).
pub fn evaluate_objective(
    inst: &TinyInstance,
    plans: &BTreeMap<TaskId, DeliveryPlan>,
) -> Result<ObjectiveValue, Vec<String>> {
    let world = inst.build_world();
    let tasks = inst.task_specs(&world.constellation);
    let seeds = inst.occupancy_seeds(&world.constellation);
    let visible = instance_visibility(inst, &world.constellation);
    let eval = evaluate_plan_set(&world, &tasks, plans, &seeds, &visible);
    if eval.violations.is_empty() {
        Ok(eval.objective)
    } else {
        Err(eval.violations)
    }
}

fn instance_visibility<'a>(
    inst: &'a TinyInstance,
    c: &'a Constellation,
) -> impl Fn(SatId, GsId, u32) -> bool + 'a {
    move |sat, gs, tick| {
        let plane = c_plane_of(c, sat);
        inst.windows
            .iter()
            .any(|w| w.plane == plane && w.gs == gs && w.start <= tick && tick < w.end)
    }
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

/// One structural plan choice before its crossing tick is resolved.
#[derive(Debug, Clone)]
struct Candidate {
    gs: GsId,
    path: Vec<SatId>,
    deliver_at: u32,
    mode: PlanMode,
    delay: u32,
}

/// Integer-milli-megabit ledger so DFS apply/undo is exact. Flat per-(sat,
/// tick) arrays keep footprint checks at array-read cost; an auxiliary
/// refcounted index lists every tick with energy activity (transmit or
/// recorder write) so leaves can be priced without scanning the grid.
struct Ledger {
    /// Ticks tracked per satellite (instance horizon + 1).
    ticks: usize,
    tx: Vec<u64>,
    store: Vec<u64>,
    io: Vec<u64>,
    gated: Vec<u32>,
    /// Admission per station per bucket.
    bucket: Vec<u64>,
    buckets_per_gs: usize,
    /// Refcounted (sat, tick) pairs with tx or io activity, kept sorted.
    events: BTreeMap<(SatId, u32), u32>,
}

impl Ledger {
    fn new(n_sats: usize, horizon: u32, n_gs: usize, bucket_minutes: u32) -> Self {
        let ticks = horizon as usize + 1;
        let buckets_per_gs = horizon as usize / bucket_minutes as usize + 1;
        Ledger {
            ticks,
            tx: vec![0; n_sats * ticks],
            store: vec![0; n_sats * ticks],
            io: vec![0; n_sats * ticks],
            gated: vec![0; n_sats * ticks],
            bucket: vec![0; n_gs * buckets_per_gs],
            buckets_per_gs,
            events: BTreeMap::new(),
        }
    }

    #[inline]
    fn at(&self, sat: SatId, tick: u32) -> usize {
        sat * self.ticks + tick as usize
    }

    fn bump_event(&mut self, sat: SatId, tick: u32, sign: i64) {
        if sign > 0 {
            *self.events.entry((sat, tick)).or_insert(0) += 1;
        } else if let Some(r) = self.events.get_mut(&(sat, tick)) {
            *r -= 1;
            if *r == 0 {
                self.events.remove(&(sat, tick));
            }
        }
    }

    fn add_io(&mut self, sat: SatId, tick: u32, amt: u64, sign: i64) {
        let idx = self.at(sat, tick);
        if sign > 0 {
            self.io[idx] += amt;
        } else {
            self.io[idx] -= amt;
        }
        self.bump_event(sat, tick, sign);
    }

    fn apply_plan(&mut self, plan: &DeliveryPlan, bucket_minutes: u32, sign: i64) {
        let vol = as_milli(plan.volume_mb).expect("volumes validated");
        for (sat, tick, mb) in plan.transmissions() {
            let amt = as_milli(mb).unwrap_or_else(|| (mb * 1000.0).round() as u64);
            let idx = self.at(sat, tick);
            if sign > 0 {
                self.tx[idx] += amt;
            } else {
                self.tx[idx] -= amt;
            }
            self.bump_event(sat, tick, sign);
            if sat == plan.tail && tick == plan.deliver_at {
                let b = plan.gs * self.buckets_per_gs + (tick / bucket_minutes) as usize;
                if sign > 0 {
                    self.bucket[b] += amt;
                } else {
                    self.bucket[b] -= amt;
                }
            } else {
                if sign > 0 {
                    self.gated[idx] += 1;
                } else {
                    self.gated[idx] -= 1;
                }
                if let Some(pos) = plan.path.iter().position(|&p| p == sat) {
                    self.add_io(plan.path[pos + 1], tick, amt, sign);
                }
            }
        }
        for (sat, a, b) in plan.holdings() {
            for u in a..b {
                let idx = self.at(sat, u);
                if sign > 0 {
                    self.store[idx] += vol;
                } else {
                    self.store[idx] -= vol;
                }
            }
        }
    }
}

struct Enumeration<'a> {
    world: &'a OracleWorld,
    tasks: Vec<TaskSpec>,
    candidates: Vec<Vec<Candidate>>,
    slots: Vec<u32>,
    hop_ticks: Vec<u32>,
    tx_cap: u64,
    store_cap: u64,
    bucket_caps: Vec<u64>,
    suffix_min_delay: Vec<u32>,
    /// Sunlit flag per satellite per tick, precomputed once.
    sunlit: Vec<Vec<bool>>,
    /// Prefix sums of `sunlit` (index t = sunlit ticks in [0, t)).
    sun_prefix: Vec<Vec<u32>>,
    best: Option<(f64, BTreeMap<TaskId, DeliveryPlan>)>,
    leaves: u64,
}

/// Enumerate every joint plan assignment in the declared family and return
/// the objective minimizer, or report the instance infeasible.
///
/// The family per task: carry on the holder (offload at any window tick), or
/// a link chain of at most [`MAX_PATH_HOPS`] hops that crosses at most
/// `max_offset` planes at a fixed grid column (the crossing inserted at any
/// point of an in-plane relay run), first hop at one of the instance's
/// crossing slots, then carry by the chain's tail. Joint feasibility uses
/// the same per-tick budgets the scheduler books, and each complete
/// assignment is re-validated and priced by [`evaluate_plan_set`].
pub fn exhaustive_schedule(inst: &TinyInstance) -> Result<OracleReport, OracleError> {
    inst.check_bounds()?;
    let world = inst.build_world();
    let tasks = inst.task_specs(&world.constellation);
    let candidates = build_candidates(inst, &world)?;

    // Fewest options first: cheaper pruning.
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by_key(|&i| (candidates[i].len(), tasks[i].id));
    let tasks_ord: Vec<TaskSpec> = order.iter().map(|&i| tasks[i]).collect();
    let cands_ord: Vec<Vec<Candidate>> = order.iter().map(|&i| candidates[i].clone()).collect();

    let mut suffix = vec![0u32; tasks_ord.len() + 1];
    for i in (0..tasks_ord.len()).rev() {
        let min_d = cands_ord[i].iter().map(|c| c.delay).min().unwrap_or(0);
        suffix[i] = suffix[i + 1] + min_d;
    }

    let hop_ticks = tasks_ord
        .iter()
        .map(|t| Scheduler::hop_ticks(&world.ctx(), t.volume_mb))
        .collect();
    let mut slots = inst.crossing_slots.clone();
    slots.sort_unstable();
    slots.dedup();

    let n = world.constellation.satellites.len();
    let mut ledger = Ledger::new(n, inst.horizon, inst.stations.len(), inst.bucket_minutes);
    for &(sat, a, b, mb) in &inst.occupancy_seeds(&world.constellation) {
        let amt = as_milli(mb).expect("occupancy validated");
        for u in a..b {
            let idx = ledger.at(sat, u);
            ledger.store[idx] += amt;
        }
    }
    // Materialization writes are the same in every assignment; seed them once.
    for t in &tasks_ord {
        let amt = as_milli(t.volume_mb).expect("volumes validated");
        ledger.add_io(t.holder, t.created_at, amt, 1);
    }

    // Per-satellite illumination, precomputed so leaf pricing stays trig-free.
    let sun = crate::constellation::Vec3::new(1.0, 0.0, 0.0);
    let mut sunlit = vec![vec![false; inst.horizon as usize + 1]; n];
    let mut sun_prefix = vec![vec![0u32; inst.horizon as usize + 2]; n];
    for s in 0..n {
        for u in 0..=inst.horizon {
            let pos = world.propagator.position(&world.constellation, s, u as f64);
            sunlit[s][u as usize] = crate::constellation::in_sunlight(pos, sun);
            sun_prefix[s][u as usize + 1] =
                sun_prefix[s][u as usize] + u32::from(sunlit[s][u as usize]);
        }
    }

    let mut en = Enumeration {
        tx_cap: as_milli(inst.link_mbps * 60.0).unwrap_or(u64::MAX),
        store_cap: as_milli(inst.storage_mb).unwrap_or(u64::MAX),
        bucket_caps: inst
            .stations
            .iter()
            .map(|s| {
                as_milli(s.capacity_mbps * 60.0 * inst.bucket_minutes as f64).unwrap_or(u64::MAX)
            })
            .collect(),
        suffix_min_delay: suffix,
        world: &world,
        tasks: tasks_ord,
        candidates: cands_ord,
        slots,
        hop_ticks,
        sunlit,
        sun_prefix,
        best: None,
        leaves: 0,
    };
    let mut chosen: BTreeMap<TaskId, DeliveryPlan> = BTreeMap::new();
    en.dfs(0, 0, &mut ledger, &mut chosen);

    Ok(match en.best {
        Some((fast_total, plans)) => {
            // Re-price the winner with the reference evaluator; the fast leaf
            // pricing must agree exactly (modulo float noise) or the
            // enumerator itself is buggy.
            let objective = match evaluate_objective(inst, &plans) {
                Ok(obj) => obj,
                Err(violations) => {
                    panic!("enumerated optimum failed reference validation: {violations:?}")
                }
            };
            assert!(
                (objective.total - fast_total).abs() < 1e-6,
                "leaf pricing diverged from the reference evaluator: {fast_total} vs {}",
                objective.total
            );
            OracleReport::Optimal { objective, plans }
        }
        None => OracleReport::Infeasible,
    })
}

impl Enumeration<'_> {
    fn dfs(
        &mut self,
        idx: usize,
        partial_delay: u32,
        ledger: &mut Ledger,
        chosen: &mut BTreeMap<TaskId, DeliveryPlan>,
    ) {
        if let Some((best_total, _)) = &self.best {
            // Life is nonnegative, so delay alone lower-bounds the total.
            if (partial_delay + self.suffix_min_delay[idx]) as f64 >= *best_total {
                return;
            }
        }
        if idx == self.tasks.len() {
            self.leaves += 1;
            if let Some(total) = self.leaf_total(ledger, partial_delay) {
                if self.best.as_ref().map_or(true, |(b, _)| total < *b) {
                    self.best = Some((total, chosen.clone()));
                }
            }
            return;
        }
        let task = self.tasks[idx];
        let k = self.hop_ticks[idx];
        for ci in 0..self.candidates[idx].len() {
            let cand = self.candidates[idx][ci].clone();
            if let Some((best_total, _)) = &self.best {
                // Candidates are delay-sorted, so once this one cannot beat
                // the incumbent no later one can either.
                if f64::from(partial_delay + cand.delay + self.suffix_min_delay[idx + 1])
                    >= *best_total
                {
                    break;
                }
            }
            let Some(plan) = self.resolve_crossing(&task, &cand, k, ledger) else {
                continue;
            };
            ledger.apply_plan(&plan, self.world.bucket_minutes, 1);
            chosen.insert(task.id, plan.clone());
            self.dfs(idx + 1, partial_delay + cand.delay, ledger, chosen);
            chosen.remove(&task.id);
            ledger.apply_plan(&plan, self.world.bucket_minutes, -1);
        }
    }

    /// Price one complete assignment: the tracked delay sum plus battery life
    /// replayed from the ledger's per-tick energy events; `None` when a
    /// charge-gated hop finds its transmitter below the floor.
    ///
    /// Only satellites with events are replayed (idle satellites never
    /// discharge, so they consume no life), and gaps between events collapse
    /// to one clamped solar credit via the sunlit prefix sums — exact,
    /// because charging is monotone and costs no life. The returned total
    /// matches [`evaluate_plan_set`] bit-for-bit on integer-megabit volumes;
    /// the enumerator asserts that agreement on the final optimum.
    fn leaf_total(&self, ledger: &Ledger, delay_sum: u32) -> Option<f64> {
        let energy = &self.world.energy;
        let events: Vec<(SatId, u32)> = ledger.events.keys().copied().collect();

        let mut life = 0.0;
        let mut i = 0;
        while i < events.len() {
            let sat = events[i].0;
            let mut state = BatteryState::new(energy);
            let mut cursor = 0u32;
            while i < events.len() && events[i].0 == sat {
                let u = events[i].1;
                if u > cursor {
                    let gained = energy.solar_power_w
                        * f64::from(
                            self.sun_prefix[sat][u as usize] - self.sun_prefix[sat][cursor as usize],
                        );
                    if gained > 0.0 {
                        let lv = (state.level_wmin + gained).min(energy.battery_max_wmin);
                        state.level_wmin = lv;
                        state.dod = crate::energy::compute_dod(lv, energy.battery_max_wmin);
                    }
                }
                let idx = ledger.at(sat, u);
                if ledger.gated[idx] > 0
                    && !crate::energy::check_min_level(state.level_wmin, energy)
                {
                    return None;
                }
                crate::energy::step_energy(
                    &mut state,
                    energy,
                    self.sunlit[sat][u as usize],
                    ledger.tx[idx] as f64 / 1000.0,
                    ledger.io[idx] as f64 / 1000.0,
                    1.0,
                );
                cursor = u + 1;
                i += 1;
            }
            life += state.life_consumed;
        }
        Some(f64::from(delay_sum) + life)
    }

    /// Turn a structural candidate into a concrete plan by picking the
    /// earliest crossing slot whose footprint clears the current ledger.
    fn resolve_crossing(
        &self,
        task: &TaskSpec,
        cand: &Candidate,
        k: u32,
        ledger: &Ledger,
    ) -> Option<DeliveryPlan> {
        let hops = (cand.path.len() - 1) as u32;
        let make = |s: Option<u32>| DeliveryPlan {
            task_id: task.id,
            fragment: 0,
            mode: cand.mode,
            gs: cand.gs,
            source: task.holder,
            tail: *cand.path.last().expect("paths are nonempty"),
            planned_at: task.created_at,
            path: cand.path.clone(),
            crossing_tick: s,
            hop_ticks: k,
            deliver_at: cand.deliver_at,
            volume_mb: task.volume_mb,
        };
        if hops == 0 {
            let p = make(None);
            return self.fits(&p, ledger).then_some(p);
        }
        self.slots
            .iter()
            .copied()
            .filter(|&s| s >= task.created_at && s + hops * k <= cand.deliver_at)
            .map(|s| make(Some(s)))
            .find(|p| self.fits(p, ledger))
    }

    /// The plan's full footprint against caps minus what the ledger already
    /// carries.
    fn fits(&self, plan: &DeliveryPlan, ledger: &Ledger) -> bool {
        let vol = as_milli(plan.volume_mb).expect("volumes validated");
        for (sat, tick, mb) in plan.transmissions() {
            let amt = as_milli(mb).unwrap_or_else(|| (mb * 1000.0).round() as u64);
            if ledger.tx[ledger.at(sat, tick)] + amt > self.tx_cap {
                return false;
            }
            if sat == plan.tail && tick == plan.deliver_at {
                let b = plan.gs * ledger.buckets_per_gs
                    + (tick / self.world.bucket_minutes) as usize;
                if ledger.bucket[b] + amt > self.bucket_caps[plan.gs] {
                    return false;
                }
            }
        }
        for (sat, a, b) in plan.holdings() {
            for u in a..b {
                if ledger.store[ledger.at(sat, u)] + vol > self.store_cap {
                    return false;
                }
            }
        }
        true
    }
}

/// Structural candidates per task: (station, relay chain, offload tick).
fn build_candidates(
    inst: &TinyInstance,
    world: &OracleWorld,
) -> Result<Vec<Vec<Candidate>>, OracleError> {
    let c = &world.constellation;
    let planes = inst.planes as i64;
    let spp = inst.sats_per_plane as i64;
    let mut all = Vec::with_capacity(inst.tasks.len());
    for task in &inst.tasks {
        let spec_deadline = task.deadline_abs();
        let k = Scheduler::hop_ticks(&world.ctx(), task.volume_mb);
        let mut cands: Vec<Candidate> = Vec::new();
        for q_off in -inst.max_offset..=inst.max_offset {
            let q = ((task.plane as i64 + q_off).rem_euclid(planes)) as usize;
            for j in 0..inst.sats_per_plane {
                for path in
                    chain_paths(c, task.plane, task.index, q, j, q_off != 0, spp as usize)
                {
                    let hops = (path.len() - 1) as u32;
                    if hops as usize > MAX_PATH_HOPS {
                        continue;
                    }
                    let tail_plane = q;
                    let mode = if hops == 0 {
                        PlanMode::PcoOnly
                    } else if q_off != 0 {
                        PlanMode::Hybrid
                    } else {
                        PlanMode::IslOnly
                    };
                    for w in inst
                        .windows
                        .iter()
                        .filter(|w| w.plane == tail_plane)
                    {
                        for deliver in w.start..w.end {
                            if deliver > spec_deadline
                                || deliver < task.created_at + hops * k
                            {
                                continue;
                            }
                            cands.push(Candidate {
                                gs: w.gs,
                                path: path.clone(),
                                deliver_at: deliver,
                                mode,
                                delay: deliver - task.created_at,
                            });
                        }
                    }
                }
            }
        }
        cands.sort_by(|a, b| {
            (a.delay, a.path.len(), a.gs, a.deliver_at, a.path.last())
                .partial_cmp(&(b.delay, b.path.len(), b.gs, b.deliver_at, b.path.last()))
                .expect("total order")
        });
        cands.dedup_by(|a, b| a.gs == b.gs && a.path == b.path && a.deliver_at == b.deliver_at);
        if cands.len() > MAX_CANDIDATES_PER_TASK {
            return Err(OracleError::Bounds(format!(
                "task {} has {} candidates (> {MAX_CANDIDATES_PER_TASK}); shrink the windows or slots",
                task.id,
                cands.len()
            )));
        }
        all.push(cands);
    }
    Ok(all)
}

/// Grid chains from holder `(plane h, index i)` to tail `(plane q, index j)`:
/// ring steps within a plane plus (optionally) one fixed-column crossing
/// inserted at any point of the run. Both ring directions are produced when
/// they tie.
fn chain_paths(
    c: &Constellation,
    h: usize,
    i: usize,
    q: usize,
    j: usize,
    crosses: bool,
    spp: usize,
) -> Vec<Vec<SatId>> {
    let fwd = (j + spp - i) % spp;
    let bwd = (i + spp - j) % spp;
    let mut dirs: Vec<(i64, usize)> = Vec::new();
    if fwd == 0 {
        dirs.push((1, 0));
    } else if fwd < bwd {
        dirs.push((1, fwd));
    } else if bwd < fwd {
        dirs.push((-1, bwd));
    } else {
        dirs.push((1, fwd));
        dirs.push((-1, bwd));
    }
    let mut out = Vec::new();
    for (dir, steps) in dirs {
        let cross_positions: Vec<usize> = if crosses {
            (0..=steps).collect()
        } else {
            vec![usize::MAX] // sentinel: never crosses
        };
        for p in cross_positions {
            let mut path = Vec::with_capacity(steps + 2);
            let mut plane = h;
            let mut idx = i as i64;
            path.push(c.member_at(plane, idx as usize));
            for step in 0..=steps {
                if crosses && step == p {
                    plane = q;
                    path.push(c.member_at(plane, idx.rem_euclid(spp as i64) as usize));
                }
                if step < steps {
                    idx += dir;
                    path.push(c.member_at(plane, idx.rem_euclid(spp as i64) as usize));
                }
            }
            out.push(path);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Library-scheduler arm and gap
// ---------------------------------------------------------------------------

/// Plan the instance with the library scheduler (diffusion, crossing flow,
/// bookings), one epoch per distinct creation tick, exactly as the engine
/// drives it. The scheduler is held to the instance's plane-offset bound so
/// both arms search the same family.
pub fn schedule_with_library(
    inst: &TinyInstance,
) -> Result<BTreeMap<TaskId, DeliveryPlan>, (TaskId, FailureReason)> {
    let world = inst.build_world();
    let c = &world.constellation;
    let n = c.satellites.len();
    let mut sched = Scheduler::new(
        StrategyConfig {
            selection: SelectionPolicy::Oan,
            routing: RoutingPolicy::Hybrid,
        },
        inst.bucket_minutes,
        n,
    )
    .with_max_offset(inst.max_offset);
    for &(sat, a, b, mb) in &inst.occupancy_seeds(c) {
        sched.reserve_storage(sat, a, b, mb);
    }
    let battery = vec![world.energy.battery_max_wmin; n];
    let sat_ok = vec![true; n];
    let gs_ok = vec![true; world.stations.len()];

    let mut plans = BTreeMap::new();
    let mut ticks: Vec<u32> = inst.tasks.iter().map(|t| t.created_at).collect();
    ticks.sort_unstable();
    ticks.dedup();
    for t in ticks {
        let mut requests = Vec::new();
        for task in inst.tasks.iter().filter(|x| x.created_at == t) {
            let holder = c.member_at(task.plane, task.index);
            // Materialization admission, exactly as the engine applies it: the
            // recorder must fit the new data alongside standing bookings for
            // the whole hold range.
            let free = (t..task.deadline_abs())
                .map(|u| sched.store_free(&world.ctx(), holder, u))
                .fold(f64::INFINITY, f64::min);
            if free < task.volume_mb {
                return Err((task.id, FailureReason::StorageOverflow));
            }
            sched.place_hold(
                (task.id, 0),
                holder,
                t,
                task.deadline_abs(),
                task.volume_mb,
            );
            requests.push(PlanRequest {
                task_id: task.id,
                fragment: 0,
                holder,
                created_at: t,
                deadline_abs: task.deadline_abs(),
                volume_mb: task.volume_mb,
                urgent: false,
            });
        }
        let result = sched.schedule_epoch(
            &world.ctx(),
            &EpochView {
                tick: t,
                battery_view: &battery,
                sat_ok: &sat_ok,
                gs_ok: &gs_ok,
            },
            &requests,
        );
        if let Some(&(tid, _, reason)) = result.failures.first() {
            return Err((tid, reason));
        }
        for plan in result.plans {
            plans.insert(plan.task_id, plan);
        }
    }
    Ok(plans)
}

/// How one instance compares: library scheduler against the enumerated
/// optimum, both priced by the same evaluator.
#[derive(Debug, Clone)]
pub enum GapOutcome {
    Compared {
        optimum: ObjectiveValue,
        scheduler: ObjectiveValue,
        /// (scheduler − optimum) / optimum.
        gap: f64,
    },
    /// The enumerator found an optimum but the scheduler failed the instance.
    SchedulerFailed {
        optimum: ObjectiveValue,
        task_id: TaskId,
        reason: FailureReason,
    },
    /// The scheduler's plans broke a rule the evaluator enforces — a bug.
    SchedulerInvalid { violations: Vec<String> },
    /// Neither arm can serve the instance.
    BothInfeasible,
    /// The scheduler served an instance the enumerator called infeasible —
    /// the declared family missed a real plan; also a bug.
    OracleMissedFeasible { scheduler: ObjectiveValue },
}

/// Run both arms on one instance and report the relative objective gap.
pub fn oracle_gap(inst: &TinyInstance) -> Result<GapOutcome, OracleError> {
    let report = exhaustive_schedule(inst)?;
    let sched_arm = schedule_with_library(inst);
    Ok(match (report, sched_arm) {
        (OracleReport::Optimal { objective, .. }, Ok(plans)) => {
            match evaluate_objective(inst, &plans) {
                Ok(sched_obj) => {
                    let gap = if objective.total > 1e-12 {
                        (sched_obj.total - objective.total) / objective.total
                    } else {
                        sched_obj.total - objective.total
                    };
                    GapOutcome::Compared {
                        optimum: objective,
                        scheduler: sched_obj,
                        gap,
                    }
                }
                Err(violations) => GapOutcome::SchedulerInvalid { violations },
            }
        }
        (OracleReport::Optimal { objective, .. }, Err((task_id, reason))) => {
            GapOutcome::SchedulerFailed {
                optimum: objective,
                task_id,
                reason,
            }
        }
        (OracleReport::Infeasible, Err(_)) => GapOutcome::BothInfeasible,
        (OracleReport::Infeasible, Ok(plans)) => match evaluate_objective(inst, &plans) {
            Ok(sched_obj) => GapOutcome::OracleMissedFeasible {
                scheduler: sched_obj,
            },
            Err(violations) => GapOutcome::SchedulerInvalid { violations },
        },
    })
}
