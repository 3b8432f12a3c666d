//! Discrete-time delivery simulation.
//!
//! The engine advances one minute per tick. Each tick it applies outages,
//! deadline tightenings, telemetry-delayed battery views, fresh task
//! materialization, scheduling, plan execution with execution-time charge
//! gating, ground-station admission and queueing, per-satellite energy
//! stepping, and metric recording. Runs are deterministic given a scenario
//! seed: two runs of the same scenario produce byte-identical artifacts.
//!
//! Recovery ladder, applied when execution diverges from the plan:
//! - a failed satellite carrying data hands off to the nearest live
//!   link-reachable satellite with room, which replans; if no single
//!   satellite has room the data splits into up to four equal fragments
//!   across several relays; if nothing fits, the task fails;
//! - a station unavailable at the offload tick defers the offload inside the
//!   current visibility pass for a bounded grace, else the task is rerouted
//!   to another station;
//! - a relay whose real battery cannot drive a planned link hop rejects the
//!   hop; the task's data waits on its current holder and is rescheduled
//!   once the holder recharges (counted as a fallback).

use crate::constellation::{in_sunlight, SatId, Vec3};
use crate::energy::{check_min_level, step_energy, BatteryState};
use crate::oan::{build_oan, OanGraph};
use crate::scenario::{
    selection_name, FaultTarget, ScenarioConfig, SelectionPolicy, UrgencyBoost, World, WorldError,
};
use crate::scheduler::{
    DeliveryPlan, EpochView, FailureReason, PlanKey, PlanMode, PlanRequest, SchedCtx, Scheduler,
};
use crate::tasking::{
    import_csv, Task, TaskConfigError, TaskCsvError, TaskGenerator, TaskId, Urgency,
};
use crate::topology::{GridTopology, GsId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Fixed sun direction for the cylindrical shadow test.
const SUN_DIR: Vec3 = Vec3::new(1.0, 0.0, 0.0);
/// Longest an offload may wait, in ticks, for its station to come back
/// before the task is rerouted to another station.
const DEFER_GRACE_MIN: u32 = 10;
/// Most pieces a task may be split into during outage recovery.
const MAX_FRAGMENTS: usize = 4;
/// Slack for floating-point capacity comparisons.
const CAP_EPS: f64 = 1e-6;

/// Builds a [`SchedCtx`] from engine fields without borrowing the whole
/// engine, so the scheduler can be borrowed mutably at the same time.
macro_rules! sched_ctx {
    ($e:expr) => {
        SchedCtx {
            constellation: &$e.world.constellation,
            stations: &$e.world.stations,
            oan: &$e.oan,
            grid: &$e.grid,
            propagator: &$e.world.propagator,
            energy: &$e.cfg.energy,
        }
    };
}

// ---------------------------------------------------------------------------
// Run artifacts
// ---------------------------------------------------------------------------

/// One per-tick sample of fleet and ground-segment state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub tick: u32,
    pub active_plans: u32,
    /// Cumulative counts up to and including this tick.
    pub tasks_created: u32,
    pub tasks_delivered: u32,
    pub tasks_failed: u32,
    /// Offloaded volume in the station's current admission bucket divided by
    /// the bucket capacity; can exceed 1 only for queue-based strategies.
    pub mean_station_load: f64,
    pub max_station_load: f64,
    /// Worst backlog wait a new arrival would see at the end of this tick.
    pub max_queue_delay_ms: f64,
    /// Recorder occupancy divided by recorder capacity.
    pub mean_storage_ratio: f64,
    pub max_storage_ratio: f64,
    pub mean_battery_wmin: f64,
    pub min_battery_wmin: f64,
    /// Cumulative battery life consumed by the whole fleet.
    pub total_life_consumed: f64,
}

/// Aggregates for a whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub strategy: String,
    pub seed: u64,
    pub intensity: u8,
    pub horizon_min: u32,
    pub run_ticks: u32,
    pub tasks_created: u32,
    pub tasks_delivered: u32,
    pub tasks_failed: u32,
    pub success_ratio: f64,
    pub failed_timeout: u32,
    pub failed_gs_congestion: u32,
    pub failed_storage_overflow: u32,
    pub failed_satellite_outage: u32,
    /// Mean minutes from creation to completed offload, over delivered tasks.
    pub mean_delivery_minutes: f64,
    /// Mean link hops of the delivering route, over delivered fragments.
    pub mean_path_hops: f64,
    /// Times a planned link hop was rejected by the transmitter's real
    /// charge and the task had to be rescheduled.
    pub fallback_count: u32,
    pub fallback_ratio: f64,
    /// Times data was moved off a failed satellite.
    pub handoff_count: u32,
    /// Times an offload was shifted later inside its visibility pass.
    pub deferral_count: u32,
    /// Times a task was split across relays during outage recovery.
    pub fragment_splits: u32,
    pub max_queue_delay_ms: f64,
    pub total_life_consumed: f64,
    pub life_per_delivered: f64,
}

/// Final per-task outcome line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRow {
    pub task_id: TaskId,
    pub created_at: u32,
    pub origin: SatId,
    pub volume_mb: f64,
    pub deadline_abs: u32,
    pub urgent: bool,
    /// `delivered` or `failed`.
    pub outcome: &'static str,
    /// Failure reason; empty for delivered tasks.
    pub reason: String,
    /// Minutes from creation to completion, fractional when the offload
    /// drained through a station queue. Absent for failed tasks.
    pub completion_min: Option<f64>,
    pub station: Option<GsId>,
    pub mode: Option<PlanMode>,
    /// Link hops summed over delivered fragments.
    pub link_hops: u32,
    pub fragments: u8,
    pub fallbacks: u32,
    pub handoffs: u32,
}

/// One plan as booked, with its final disposition.
#[derive(Debug, Clone, Serialize)]
pub struct PlanRecord {
    /// `completed`, `superseded` (replaced by a replan), or `canceled`
    /// (its task failed).
    pub status: &'static str,
    #[serde(flatten)]
    pub plan: DeliveryPlan,
}

/// Everything a run produces.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub metrics: Vec<MetricsRecord>,
    pub tasks: Vec<TaskRow>,
    pub plans: Vec<PlanRecord>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    TaskConfig(#[from] TaskConfigError),
    #[error("failed to read task file {path}")]
    TaskFileRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    TaskCsv(#[from] TaskCsvError),
    #[error("station ids must be dense 0..n-1 in catalog order (found id {found} at position {pos})")]
    SparseStationIds { found: GsId, pos: usize },
}

// ---------------------------------------------------------------------------
// Internal state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct FragState {
    /// Minutes from task creation to this fragment's completion.
    completed: Option<f64>,
    /// Link hops of the plan that delivered it.
    hops: u32,
}

#[derive(Debug, Clone)]
struct TaskState {
    created_at: u32,
    origin: SatId,
    volume_mb: f64,
    deadline_abs: u32,
    urgent: bool,
    frags: BTreeMap<u8, FragState>,
    outcome: Option<Result<f64, FailureReason>>,
    station: Option<GsId>,
    mode: Option<PlanMode>,
    fallbacks: u32,
    handoffs: u32,
}

impl TaskState {
    fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }
}

#[derive(Debug, Clone)]
struct ActivePlan {
    plan: DeliveryPlan,
    log_idx: usize,
}

/// Data parked on a holder whose charge cannot drive the next link hop;
/// rescheduled once the holder recovers.
#[derive(Debug, Clone, Copy)]
struct PendingRetry {
    holder: SatId,
    volume_mb: f64,
}

/// The satellite holding a complete copy of the plan's data at `tick`.
/// During a hop the transmitter keeps its copy until the hop finishes, so
/// the first matching occupancy interval is the authoritative holder.
fn holder_at(plan: &DeliveryPlan, tick: u32) -> SatId {
    if tick >= plan.deliver_at {
        return plan.tail;
    }
    for (sat, start, end) in plan.holdings() {
        if start <= tick && tick < end {
            return sat;
        }
    }
    plan.source
}

/// FIFO queue admission at one station: the arrival starts service when the
/// backlog ahead of it drains. Returns the absolute finish time in minutes
/// and the wait in milliseconds.
fn queue_outcome(busy_until: f64, tick: u32, volume_mb: f64, rate_mb_per_min: f64) -> (f64, f64) {
    let start = busy_until.max(tick as f64);
    let finish = start + volume_mb / rate_mb_per_min;
    let delay_ms = (finish - tick as f64) * 60_000.0;
    (finish, delay_ms)
}

fn reason_slot(reason: FailureReason) -> usize {
    match reason {
        FailureReason::Timeout => 0,
        FailureReason::GsCongestion => 1,
        FailureReason::StorageOverflow => 2,
        FailureReason::SatelliteOutage => 3,
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

pub struct SimEngine {
    cfg: ScenarioConfig,
    world: World,
    oan: OanGraph,
    grid: GridTopology,
    sched: Scheduler,
    generator: Option<TaskGenerator>,
    /// Pre-generated task stream (replaces seeded generation).
    scripted: Vec<Task>,
    battery: Vec<BatteryState>,
    /// Battery levels as the scheduler sees them this tick (stale for the
    /// sampled satellites under telemetry delay).
    view_levels: Vec<f64>,
    /// Ring of start-of-tick battery snapshots, newest last.
    hist: VecDeque<Vec<f64>>,
    stale: Vec<bool>,
    tasks: BTreeMap<TaskId, TaskState>,
    active: BTreeMap<PlanKey, ActivePlan>,
    pending: BTreeMap<PlanKey, PendingRetry>,
    /// Per-station virtual time at which its FIFO queue drains.
    busy_until: Vec<f64>,
    /// Megabits offloaded into each (station, admission bucket).
    arrivals: BTreeMap<(GsId, u32), f64>,
    plan_log: Vec<PlanRecord>,
    metrics: Vec<MetricsRecord>,
    n_created: u32,
    n_delivered: u32,
    n_failed: [u32; 4],
    fallback_count: u32,
    handoff_count: u32,
    deferral_count: u32,
    fragment_splits: u32,
    max_queue_delay_ms: f64,
    /// Per-tick transmit and recorder-write volumes, reset each tick.
    tx_tally: Vec<f64>,
    io_tally: Vec<f64>,
}

impl SimEngine {
    /// Build a full engine from a scenario, including its visibility graph.
    pub fn new(cfg: ScenarioConfig) -> Result<Self, EngineError> {
        let world = cfg.build_world()?;
        let oan = build_oan(
            &world.constellation,
            &world.stations,
            &world.propagator,
            cfg.run_ticks(),
            cfg.stations.elevation_threshold_deg,
        );
        Self::from_parts(cfg, world, oan)
    }

    /// Build an engine around an existing world and visibility graph, so
    /// sweeps over seeds and strategies can share the expensive parts.
    pub fn from_parts(cfg: ScenarioConfig, world: World, oan: OanGraph) -> Result<Self, EngineError> {
        for (pos, g) in world.stations.iter().enumerate() {
            if g.id != pos {
                return Err(EngineError::SparseStationIds { found: g.id, pos });
            }
        }
        let n = world.constellation.satellites.len();
        let grid = GridTopology::build(&world.constellation);
        let (generator, scripted) = match &cfg.task_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| {
                    EngineError::TaskFileRead {
                        path: path.clone(),
                        source,
                    }
                })?;
                let mut tasks = import_csv(&text)?;
                tasks.sort_by_key(|t| (t.created_at, t.id));
                (None, tasks)
            }
            None => (
                Some(TaskGenerator::new(cfg.tasks.clone(), cfg.engine.seed)?),
                Vec::new(),
            ),
        };
        // Deterministic sample of satellites whose telemetry lags.
        let stale = {
            let mut mask = vec![false; n];
            let k = ((cfg.telemetry.stale_fraction.clamp(0.0, 1.0)) * n as f64).floor() as usize;
            if k > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.engine.seed.wrapping_mul(0x9E37_79B9).wrapping_add(2),
                );
                for idx in rand::seq::index::sample(&mut rng, n, k).into_vec() {
                    mask[idx] = true;
                }
            }
            mask
        };
        let battery = vec![BatteryState::new(&cfg.energy); n];
        let view_levels = battery.iter().map(|b| b.level_wmin).collect();
        let sched = Scheduler::new(cfg.strategy, cfg.stations.bucket_minutes, n);
        let busy_until = vec![0.0; world.stations.len()];
        Ok(Self {
            cfg,
            world,
            oan,
            grid,
            sched,
            generator,
            scripted,
            battery,
            view_levels,
            hist: VecDeque::new(),
            stale,
            tasks: BTreeMap::new(),
            active: BTreeMap::new(),
            pending: BTreeMap::new(),
            busy_until,
            arrivals: BTreeMap::new(),
            plan_log: Vec::new(),
            metrics: Vec::new(),
            n_created: 0,
            n_delivered: 0,
            n_failed: [0; 4],
            fallback_count: 0,
            handoff_count: 0,
            deferral_count: 0,
            fragment_splits: 0,
            max_queue_delay_ms: 0.0,
            tx_tally: vec![0.0; n],
            io_tally: vec![0.0; n],
        })
    }

    /// Execute the whole scenario and return its artifacts.
    pub fn run(mut self) -> RunOutput {
        let run_ticks = self.cfg.run_ticks();
        for tick in 0..run_ticks {
            self.step_tick(tick);
        }
        // Nothing should outlive the drain grace; fail leftovers honestly.
        let leftover: BTreeSet<TaskId> = self
            .active
            .keys()
            .map(|k| k.0)
            .chain(self.pending.keys().map(|k| k.0))
            .collect();
        for tid in leftover {
            self.fail_task(tid, FailureReason::Timeout, run_ticks);
        }
        assert_eq!(
            self.n_delivered + self.n_failed.iter().sum::<u32>(),
            self.n_created,
            "every task ends exactly once: delivered or failed with a reason"
        );
        self.finish(run_ticks)
    }

    // -- per-tick pipeline ---------------------------------------------------

    fn step_tick(&mut self, tick: u32) {
        self.tx_tally.fill(0.0);
        self.io_tally.fill(0.0);
        self.refresh_views();
        let sat_ok = self.sat_ok_at(tick);
        let gs_ok = self.gs_ok_at(tick);

        // Outages beginning this tick displace the plans that relied on them.
        let mut fresh_outages: Vec<SatId> = self
            .cfg
            .faults
            .iter()
            .filter(|f| f.start == tick)
            .filter_map(|f| match f.target {
                FaultTarget::Satellite(s) if s < sat_ok.len() => Some(s),
                _ => None,
            })
            .collect();
        fresh_outages.sort_unstable();
        fresh_outages.dedup();
        for s in fresh_outages {
            self.on_sat_outage(s, tick, &sat_ok, &gs_ok);
        }

        // Deadline tightenings scheduled for this tick.
        let mut boosts: Vec<UrgencyBoost> = self
            .cfg
            .urgency_boosts
            .iter()
            .copied()
            .filter(|b| b.at_tick == tick)
            .collect();
        boosts.sort_by_key(|b| b.task_id);
        for b in boosts {
            self.apply_boost(b, tick, &sat_ok, &gs_ok);
        }

        // Holders that recovered enough charge ask to be rescheduled.
        let retry_keys: Vec<PlanKey> = self.pending.keys().copied().collect();
        for key in retry_keys {
            self.retry_pending(key, tick, &sat_ok, &gs_ok);
        }

        // Fresh tasks materialize onboard, then the epoch plans them.
        let mut requests = Vec::new();
        for task in self.fresh_tasks(tick) {
            self.register_task(task, tick, &sat_ok, &mut requests);
        }
        if !requests.is_empty() {
            let result = self.sched.schedule_epoch(
                &sched_ctx!(self),
                &EpochView {
                    tick,
                    battery_view: &self.view_levels,
                    sat_ok: &sat_ok,
                    gs_ok: &gs_ok,
                },
                &requests,
            );
            for plan in result.plans {
                self.activate(plan);
            }
            for (tid, frag, reason) in result.failures {
                self.sched.release_hold((tid, frag));
                self.fail_task(tid, reason, tick);
            }
        }

        // Execute this tick of every active plan. Replacements created
        // mid-tick are re-examined so their same-tick events still run.
        let mut work: VecDeque<PlanKey> = self.active.keys().copied().collect();
        while let Some(key) = work.pop_front() {
            self.execute_plan(key, tick, &sat_ok, &gs_ok, &mut work);
        }

        self.step_energy_all(tick);
        self.record_metrics(tick);
    }

    /// Snapshot start-of-tick battery levels and rebuild the scheduler's
    /// view: sampled satellites report the level from `delay_min` ago.
    fn refresh_views(&mut self) {
        let snap: Vec<f64> = self.battery.iter().map(|b| b.level_wmin).collect();
        self.hist.push_back(snap);
        let cap = self.cfg.telemetry.delay_min as usize + 1;
        while self.hist.len() > cap {
            self.hist.pop_front();
        }
        let oldest = self.hist.front().expect("history is never empty");
        let newest = self.hist.back().expect("history is never empty");
        for i in 0..self.view_levels.len() {
            self.view_levels[i] = if self.stale[i] { oldest[i] } else { newest[i] };
        }
    }

    fn sat_ok_at(&self, tick: u32) -> Vec<bool> {
        let mut ok = vec![true; self.world.constellation.satellites.len()];
        for f in &self.cfg.faults {
            if let FaultTarget::Satellite(s) = f.target {
                if s < ok.len() && f.start <= tick && tick < f.end {
                    ok[s] = false;
                }
            }
        }
        ok
    }

    fn gs_ok_at(&self, tick: u32) -> Vec<bool> {
        let mut ok = vec![true; self.world.stations.len()];
        for f in &self.cfg.faults {
            if let FaultTarget::Station(g) = f.target {
                if g < ok.len() && f.start <= tick && tick < f.end {
                    ok[g] = false;
                }
            }
        }
        ok
    }

    fn gs_up_at(&self, gs: GsId, tick: u32) -> bool {
        !self.cfg.faults.iter().any(|f| {
            matches!(f.target, FaultTarget::Station(g) if g == gs)
                && f.start <= tick
                && tick < f.end
        })
    }

    fn fresh_tasks(&mut self, tick: u32) -> Vec<Task> {
        if self.generator.is_some() && tick >= self.cfg.engine.horizon_min {
            return Vec::new();
        }
        match &mut self.generator {
            Some(generator) => generator.tasks_at(
                tick,
                &self.world.constellation,
                &self.world.propagator,
                &self.world.stations,
            ),
            None => self
                .scripted
                .iter()
                .filter(|t| t.created_at == tick)
                .cloned()
                .collect(),
        }
    }

    /// Materialize one sensed task: it occupies the origin's recorder from
    /// now to its deadline, or fails immediately if the recorder cannot hold
    /// it. Dead origins cannot sense at all.
    fn register_task(
        &mut self,
        task: Task,
        tick: u32,
        sat_ok: &[bool],
        requests: &mut Vec<PlanRequest>,
    ) {
        let tid = task.id;
        debug_assert!(!self.tasks.contains_key(&tid), "task ids are unique");
        self.n_created += 1;
        let mut frags = BTreeMap::new();
        frags.insert(
            0u8,
            FragState {
                completed: None,
                hops: 0,
            },
        );
        let state = TaskState {
            created_at: task.created_at,
            origin: task.origin,
            volume_mb: task.volume_mb,
            deadline_abs: task.deadline_abs(),
            urgent: task.urgency == Urgency::Urgent,
            frags,
            outcome: None,
            station: None,
            mode: None,
            fallbacks: 0,
            handoffs: 0,
        };
        let deadline = state.deadline_abs;
        self.tasks.insert(tid, state);
        if !sat_ok[task.origin] {
            // The epoch will fail it as an outage; no data was recorded.
            requests.push(PlanRequest::from_task(&task));
            return;
        }
        if self.free_over(task.origin, tick, deadline) < task.volume_mb {
            self.fail_task(tid, FailureReason::StorageOverflow, tick);
            return;
        }
        self.sched
            .place_hold((tid, 0), task.origin, tick, deadline, task.volume_mb);
        self.io_tally[task.origin] += task.volume_mb;
        requests.push(PlanRequest::from_task(&task));
    }

    // -- plan execution ------------------------------------------------------

    fn execute_plan(
        &mut self,
        key: PlanKey,
        tick: u32,
        sat_ok: &[bool],
        gs_ok: &[bool],
        work: &mut VecDeque<PlanKey>,
    ) {
        let Some(entry) = self.active.get(&key) else {
            return; // torn down earlier this tick
        };
        let plan = entry.plan.clone();
        for (sat, tx_tick, mb) in plan.transmissions() {
            if tx_tick != tick {
                continue;
            }
            if sat == plan.tail && tick == plan.deliver_at {
                continue; // the offload is handled below
            }
            debug_assert!(sat_ok[sat], "outage rerouting keeps plans off failed satellites");
            // Execution-time charge gate: a link hop needs the transmitter's
            // *real* battery above the floor, whatever telemetry claimed.
            if !check_min_level(self.battery[sat].level_wmin, &self.cfg.energy) {
                self.gate_blocked(key, &plan, sat, tick);
                return;
            }
            self.tx_tally[sat] += mb;
            if let Some(pos) = plan.path.iter().position(|&p| p == sat) {
                if pos + 1 < plan.path.len() {
                    // The receiving side writes the hop's share to its recorder.
                    self.io_tally[plan.path[pos + 1]] += mb;
                }
            }
        }
        if tick == plan.deliver_at {
            self.execute_offload(key, &plan, tick, sat_ok, gs_ok, work);
        }
    }

    /// A planned link hop was rejected by the transmitter's real charge.
    /// Park the data on the holder and reschedule once it recharges.
    fn gate_blocked(&mut self, key: PlanKey, plan: &DeliveryPlan, sat: SatId, tick: u32) {
        // The refusing satellite reports its true level with the rejection.
        self.view_levels[sat] = self.battery[sat].level_wmin;
        self.fallback_count += 1;
        if let Some(st) = self.tasks.get_mut(&key.0) {
            st.fallbacks += 1;
        }
        if let Some(old) = self.active.remove(&key) {
            self.plan_log[old.log_idx].status = "superseded";
        }
        self.sched.cancel_from(key, tick);
        let selection = self.sched.strategy.selection;
        if selection != SelectionPolicy::Oan {
            // Baselines have no recovery path: the hop simply never happens.
            self.fail_task(key.0, FailureReason::Timeout, tick);
            return;
        }
        let deadline = self.tasks[&key.0].deadline_abs;
        self.sched
            .place_hold(key, sat, tick, deadline, plan.volume_mb);
        self.pending.insert(
            key,
            PendingRetry {
                holder: sat,
                volume_mb: plan.volume_mb,
            },
        );
    }

    /// Try to reschedule parked data once its holder's real charge clears
    /// the floor again; keeps waiting while resources stay blocked.
    fn retry_pending(&mut self, key: PlanKey, tick: u32, sat_ok: &[bool], gs_ok: &[bool]) {
        let Some(pr) = self.pending.get(&key).copied() else {
            return;
        };
        let Some(st) = self.tasks.get(&key.0) else {
            return;
        };
        if st.is_terminal() {
            self.pending.remove(&key);
            self.sched.release_hold(key);
            return;
        }
        if tick > st.deadline_abs {
            self.pending.remove(&key);
            self.sched.release_hold(key);
            self.fail_task(key.0, FailureReason::Timeout, tick);
            return;
        }
        if !sat_ok[pr.holder] {
            return; // the outage handler owns this case
        }
        if !check_min_level(self.battery[pr.holder].level_wmin, &self.cfg.energy) {
            return; // still recharging
        }
        // The holder initiates contact, so its telemetry is current.
        self.view_levels[pr.holder] = self.battery[pr.holder].level_wmin;
        let req = PlanRequest {
            task_id: key.0,
            fragment: key.1,
            holder: pr.holder,
            created_at: st.created_at,
            deadline_abs: st.deadline_abs,
            volume_mb: pr.volume_mb,
            urgent: st.urgent,
        };
        if let Ok(plan) = self.replan(&req, tick, sat_ok, gs_ok) {
            self.pending.remove(&key);
            self.activate(plan);
        }
    }

    fn execute_offload(
        &mut self,
        key: PlanKey,
        plan: &DeliveryPlan,
        tick: u32,
        sat_ok: &[bool],
        gs_ok: &[bool],
        work: &mut VecDeque<PlanKey>,
    ) {
        debug_assert!(sat_ok[plan.tail], "offloader is alive");
        if !gs_ok[plan.gs] {
            if self.sched.strategy.selection == SelectionPolicy::Oan {
                self.defer_or_reroute(key, plan, tick, sat_ok, gs_ok, work);
            } else {
                self.reroute(key, plan.tail, plan.volume_mb, tick, sat_ok, gs_ok, false, work);
            }
            return;
        }
        // The pass is live: the downlink happens (exempt from the charge
        // gate — the pass forces the transmission).
        self.tx_tally[plan.tail] += plan.volume_mb;
        let bucket = self.sched.bucket_of(tick);
        let slot = self.arrivals.entry((plan.gs, bucket)).or_insert(0.0);
        *slot += plan.volume_mb;
        let books_bucket = matches!(
            self.sched.strategy.selection,
            SelectionPolicy::Oan | SelectionPolicy::NearestAvailable
        );
        if books_bucket {
            let cap = self.sched.bucket_capacity_mb(&sched_ctx!(self), plan.gs);
            let seen = *slot;
            assert!(
                seen <= cap + CAP_EPS,
                "admitted volume {seen} exceeds bucket capacity {cap} at station {}",
                plan.gs
            );
            let st = &self.tasks[&key.0];
            let completion = (tick - st.created_at) as f64;
            self.deliver_frag(key, plan, completion);
        } else {
            // Queue-based admission: excess waits in an unbounded FIFO and
            // is dropped only when its service would finish past the deadline.
            let rate = self.world.stations[plan.gs].capacity_mbps * 60.0;
            let (finish, delay_ms) = queue_outcome(self.busy_until[plan.gs], tick, plan.volume_mb, rate);
            self.max_queue_delay_ms = self.max_queue_delay_ms.max(delay_ms);
            let st = &self.tasks[&key.0];
            if finish <= st.deadline_abs as f64 + 1e-9 {
                self.busy_until[plan.gs] = finish;
                let completion = finish - st.created_at as f64;
                self.deliver_frag(key, plan, completion);
            } else {
                self.fail_task(key.0, FailureReason::Timeout, tick);
            }
        }
    }

    /// The offload's station is down. Shift the offload later inside the
    /// current visibility pass if the station recovers within the grace;
    /// otherwise pick a new station through a fresh plan.
    fn defer_or_reroute(
        &mut self,
        key: PlanKey,
        plan: &DeliveryPlan,
        tick: u32,
        sat_ok: &[bool],
        gs_ok: &[bool],
        work: &mut VecDeque<PlanKey>,
    ) {
        let deadline = self.tasks[&key.0].deadline_abs;
        let window = self
            .oan
            .window_containing(&self.world.constellation, plan.tail, plan.gs, tick);
        let hi = match window {
            Some(w) => (tick + DEFER_GRACE_MIN)
                .min(deadline)
                .min(w.end.saturating_sub(1)),
            None => tick,
        };
        let shifted = (tick + 1..=hi).find(|&t| self.gs_up_at(plan.gs, t));
        if let Some(t2) = shifted {
            self.sched.cancel_from(key, tick);
            let cont = DeliveryPlan {
                task_id: key.0,
                fragment: key.1,
                mode: plan.mode,
                gs: plan.gs,
                source: plan.tail,
                tail: plan.tail,
                planned_at: tick,
                path: vec![plan.tail],
                crossing_tick: None,
                hop_ticks: 1,
                deliver_at: t2,
                volume_mb: plan.volume_mb,
            };
            let bucket = self.sched.bucket_of(t2);
            self.sched.book_bucket(key, plan.gs, bucket, plan.volume_mb);
            self.sched.book_plan(&cont);
            if let Some(old) = self.active.remove(&key) {
                self.plan_log[old.log_idx].status = "superseded";
            }
            self.activate(cont);
            self.deferral_count += 1;
            work.push_back(key);
        } else {
            self.reroute(key, plan.tail, plan.volume_mb, tick, sat_ok, gs_ok, true, work);
        }
    }

    /// Replace a broken plan with a fresh one from wherever the data sits.
    /// `escalate` lets non-urgent traffic use the immediate-relay fallback,
    /// the recovery ladder's last resort.
    #[allow(clippy::too_many_arguments)]
    fn reroute(
        &mut self,
        key: PlanKey,
        holder: SatId,
        volume_mb: f64,
        tick: u32,
        sat_ok: &[bool],
        gs_ok: &[bool],
        escalate: bool,
        work: &mut VecDeque<PlanKey>,
    ) {
        if let Some(old) = self.active.remove(&key) {
            self.plan_log[old.log_idx].status = "superseded";
        }
        self.sched.cancel_from(key, tick);
        let st = &self.tasks[&key.0];
        let (created_at, deadline, urgent) = (st.created_at, st.deadline_abs, st.urgent);
        self.sched.place_hold(key, holder, tick, deadline, volume_mb);
        let req = PlanRequest {
            task_id: key.0,
            fragment: key.1,
            holder,
            created_at,
            deadline_abs: deadline,
            volume_mb,
            urgent: urgent || escalate,
        };
        match self.replan(&req, tick, sat_ok, gs_ok) {
            Ok(plan) => {
                let replaces = plan.key();
                self.activate(plan);
                work.push_back(replaces);
            }
            Err(reason) => {
                self.sched.release_hold(key);
                self.fail_task(key.0, reason, tick);
            }
        }
    }

    fn replan(
        &mut self,
        req: &PlanRequest,
        tick: u32,
        sat_ok: &[bool],
        gs_ok: &[bool],
    ) -> Result<DeliveryPlan, FailureReason> {
        self.sched.plan_task(
            &sched_ctx!(self),
            &EpochView {
                tick,
                battery_view: &self.view_levels,
                sat_ok,
                gs_ok,
            },
            req,
        )
    }

    // -- outage recovery -----------------------------------------------------

    fn on_sat_outage(&mut self, s: SatId, tick: u32, sat_ok: &[bool], gs_ok: &[bool]) {
        // Parked data on the failed holder must move too.
        let parked: Vec<PlanKey> = self
            .pending
            .iter()
            .filter(|(_, p)| p.holder == s)
            .map(|(k, _)| *k)
            .collect();
        for key in parked {
            let pr = self.pending.remove(&key).expect("collected above");
            self.sched.release_hold(key);
            if self.sched.strategy.selection == SelectionPolicy::Oan {
                self.recover_from_lost_holder(key, s, pr.volume_mb, tick, sat_ok, gs_ok);
            } else {
                self.fail_task(key.0, FailureReason::SatelliteOutage, tick);
            }
        }
        let keys: Vec<PlanKey> = self.active.keys().copied().collect();
        for key in keys {
            let Some(entry) = self.active.get(&key) else {
                continue; // removed while handling a sibling fragment
            };
            let plan = entry.plan.clone();
            let holder = holder_at(&plan, tick);
            let future_involved = holder == s
                || plan
                    .transmissions()
                    .iter()
                    .any(|&(sat, tk, _)| sat == s && tk >= tick)
                || plan
                    .holdings()
                    .iter()
                    .any(|&(sat, _, end)| sat == s && end > tick);
            if !future_involved {
                continue;
            }
            if let Some(old) = self.active.remove(&key) {
                self.plan_log[old.log_idx].status = "superseded";
            }
            self.sched.cancel_from(key, tick);
            if holder == s {
                // The data itself is stranded on the failed satellite.
                if self.sched.strategy.selection == SelectionPolicy::Oan {
                    self.recover_from_lost_holder(key, s, plan.volume_mb, tick, sat_ok, gs_ok);
                } else {
                    self.fail_task(key.0, FailureReason::SatelliteOutage, tick);
                }
            } else {
                // A future relay or offloader failed; rebuild from where the
                // data actually is.
                let st = &self.tasks[&key.0];
                let (created_at, deadline, urgent) = (st.created_at, st.deadline_abs, st.urgent);
                self.sched
                    .place_hold(key, holder, tick, deadline, plan.volume_mb);
                let oan_strategy = self.sched.strategy.selection == SelectionPolicy::Oan;
                let req = PlanRequest {
                    task_id: key.0,
                    fragment: key.1,
                    holder,
                    created_at,
                    deadline_abs: deadline,
                    volume_mb: plan.volume_mb,
                    urgent: urgent || oan_strategy,
                };
                match self.replan(&req, tick, sat_ok, gs_ok) {
                    Ok(new_plan) => self.activate(new_plan),
                    Err(reason) => {
                        self.sched.release_hold(key);
                        self.fail_task(key.0, reason, tick);
                    }
                }
            }
        }
    }

    /// The recovery ladder for data stranded on a failed satellite: hand it
    /// to the nearest live link-reachable satellite with room and replan
    /// from there; if no single satellite has room, split into equal pieces
    /// across several; if nothing works, the task is lost.
    fn recover_from_lost_holder(
        &mut self,
        key: PlanKey,
        lost: SatId,
        volume_mb: f64,
        tick: u32,
        sat_ok: &[bool],
        gs_ok: &[bool],
    ) {
        let st = &self.tasks[&key.0];
        if st.is_terminal() {
            return;
        }
        let (created_at, deadline) = (st.created_at, st.deadline_abs);
        let order = self.live_bfs(lost, sat_ok);

        // Single handoff to the nearest satellite that can hold all of it.
        if let Some(&target) = order
            .iter()
            .find(|&&n| self.free_over(n, tick, deadline) >= volume_mb)
        {
            self.sched.place_hold(key, target, tick, deadline, volume_mb);
            self.handoff_count += 1;
            if let Some(ts) = self.tasks.get_mut(&key.0) {
                ts.handoffs += 1;
            }
            let req = PlanRequest {
                task_id: key.0,
                fragment: key.1,
                holder: target,
                created_at,
                deadline_abs: deadline,
                volume_mb,
                urgent: true, // recovery may use the immediate-relay ladder
            };
            match self.replan(&req, tick, sat_ok, gs_ok) {
                Ok(plan) => {
                    self.activate(plan);
                    return;
                }
                Err(_) => self.sched.release_hold(key),
            }
        }

        // Split into equal pieces across the nearest satellites with room.
        let existing = self.tasks[&key.0].frags.len();
        for pieces in 2..=MAX_FRAGMENTS {
            if existing - 1 + pieces > MAX_FRAGMENTS {
                break;
            }
            let share = volume_mb / pieces as f64;
            let mut targets = Vec::new();
            for &n in &order {
                if targets.len() == pieces {
                    break;
                }
                if self.free_over(n, tick, deadline) >= share {
                    targets.push(n);
                }
            }
            if targets.len() < pieces {
                continue;
            }
            let base = self.tasks[&key.0]
                .frags
                .keys()
                .max()
                .copied()
                .unwrap_or(0)
                + 1;
            let mut placed = Vec::new();
            let mut planned = Vec::new();
            let mut all_ok = true;
            for (i, &n) in targets.iter().enumerate() {
                let fkey = (key.0, base + i as u8);
                self.sched.place_hold(fkey, n, tick, deadline, share);
                placed.push(fkey);
                let req = PlanRequest {
                    task_id: fkey.0,
                    fragment: fkey.1,
                    holder: n,
                    created_at,
                    deadline_abs: deadline,
                    volume_mb: share,
                    urgent: true,
                };
                match self.replan(&req, tick, sat_ok, gs_ok) {
                    Ok(plan) => planned.push(plan),
                    Err(_) => {
                        all_ok = false;
                        break;
                    }
                }
            }
            if all_ok {
                {
                    let ts = self.tasks.get_mut(&key.0).expect("task exists");
                    ts.frags.remove(&key.1);
                    ts.handoffs += 1;
                    for i in 0..pieces {
                        ts.frags.insert(
                            base + i as u8,
                            FragState {
                                completed: None,
                                hops: 0,
                            },
                        );
                    }
                }
                for plan in planned {
                    self.activate(plan);
                }
                self.handoff_count += 1;
                self.fragment_splits += 1;
                return;
            }
            for plan in planned {
                self.sched.cancel(plan.key());
            }
            for fkey in placed {
                self.sched.release_hold(fkey);
            }
        }
        self.fail_task(key.0, FailureReason::SatelliteOutage, tick);
    }

    /// Live satellites reachable from `from` over the link grid, nearest
    /// ring first, ids ascending within a ring. `from` itself is excluded.
    fn live_bfs(&self, from: SatId, sat_ok: &[bool]) -> Vec<SatId> {
        let n = self.world.constellation.satellites.len();
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut out = Vec::new();
        let mut frontier = vec![from];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &self.grid.neighbors[u] {
                    if !seen[v] && sat_ok[v] {
                        seen[v] = true;
                        next.push(v);
                    }
                }
            }
            next.sort_unstable();
            out.extend(&next);
            frontier = next;
        }
        out
    }

    /// Least recorder headroom on `sat` across `[from, to)`.
    fn free_over(&self, sat: SatId, from: u32, to: u32) -> f64 {
        (from..to)
            .map(|k| self.sched.store_free(&sched_ctx!(self), sat, k))
            .fold(f64::INFINITY, f64::min)
    }

    // -- deadline tightening ---------------------------------------------------

    fn apply_boost(&mut self, boost: UrgencyBoost, tick: u32, sat_ok: &[bool], gs_ok: &[bool]) {
        let Some(st) = self.tasks.get_mut(&boost.task_id) else {
            return;
        };
        if st.is_terminal() {
            return;
        }
        let new_deadline = st.deadline_abs.min(tick + boost.new_deadline_min);
        st.deadline_abs = new_deadline;
        st.urgent = true;
        let created_at = st.created_at;
        let frag_ids: Vec<u8> = st.frags.keys().copied().collect();
        for frag in frag_ids {
            let key = (boost.task_id, frag);
            // Parked data: shrink its hold to the new deadline.
            if let Some(pr) = self.pending.get(&key).copied() {
                self.sched.release_hold(key);
                self.sched
                    .place_hold(key, pr.holder, tick, new_deadline, pr.volume_mb);
                continue;
            }
            let Some(entry) = self.active.get(&key) else {
                continue; // already completed
            };
            let plan = entry.plan.clone();
            if plan.deliver_at <= new_deadline {
                continue; // still fast enough
            }
            if let Some(old) = self.active.remove(&key) {
                self.plan_log[old.log_idx].status = "superseded";
            }
            self.sched.cancel_from(key, tick);
            let holder = holder_at(&plan, tick);
            self.sched
                .place_hold(key, holder, tick, new_deadline, plan.volume_mb);
            let req = PlanRequest {
                task_id: key.0,
                fragment: key.1,
                holder,
                created_at,
                deadline_abs: new_deadline,
                volume_mb: plan.volume_mb,
                urgent: true,
            };
            match self.replan(&req, tick, sat_ok, gs_ok) {
                Ok(new_plan) => self.activate(new_plan),
                Err(reason) => {
                    self.sched.release_hold(key);
                    self.fail_task(key.0, reason, tick);
                }
            }
        }
    }

    // -- bookkeeping -----------------------------------------------------------

    fn activate(&mut self, plan: DeliveryPlan) {
        let key = plan.key();
        debug_assert!(!self.active.contains_key(&key), "one active plan per fragment");
        let log_idx = self.plan_log.len();
        self.plan_log.push(PlanRecord {
            status: "active",
            plan: plan.clone(),
        });
        self.active.insert(key, ActivePlan { plan, log_idx });
    }

    fn deliver_frag(&mut self, key: PlanKey, plan: &DeliveryPlan, completion_min: f64) {
        if let Some(entry) = self.active.remove(&key) {
            self.plan_log[entry.log_idx].status = "completed";
        }
        let st = self.tasks.get_mut(&key.0).expect("task exists");
        assert!(
            st.created_at as f64 + completion_min <= st.deadline_abs as f64 + 1e-9,
            "completions never pass the deadline"
        );
        if let Some(frag) = st.frags.get_mut(&key.1) {
            frag.completed = Some(completion_min);
            frag.hops = plan.path.len() as u32 - 1;
        }
        st.station = Some(plan.gs);
        st.mode = Some(plan.mode);
        if st.frags.values().all(|f| f.completed.is_some()) {
            let total = st
                .frags
                .values()
                .map(|f| f.completed.expect("checked above"))
                .fold(0.0, f64::max);
            st.outcome = Some(Ok(total));
            self.n_delivered += 1;
        }
    }

    fn fail_task(&mut self, tid: TaskId, reason: FailureReason, tick: u32) {
        let Some(st) = self.tasks.get_mut(&tid) else {
            return;
        };
        if st.is_terminal() {
            return;
        }
        st.outcome = Some(Err(reason));
        let frag_ids: Vec<u8> = st.frags.keys().copied().collect();
        self.n_failed[reason_slot(reason)] += 1;
        for frag in frag_ids {
            let key = (tid, frag);
            if let Some(entry) = self.active.remove(&key) {
                self.plan_log[entry.log_idx].status = "canceled";
                self.sched.cancel_from(key, tick);
            }
            self.pending.remove(&key);
            self.sched.release_hold(key);
        }
    }

    // -- energy and metrics ------------------------------------------------------

    fn step_energy_all(&mut self, tick: u32) {
        let c = &self.world.constellation;
        for s in 0..c.satellites.len() {
            let cap = c.satellites[s].link_capacity_mbps * 60.0;
            assert!(
                self.tx_tally[s] <= cap + CAP_EPS,
                "per-tick transmissions of satellite {s} exceed its link budget"
            );
            let pos = self.world.propagator.position(c, s, tick as f64);
            let sunlit = in_sunlight(pos, SUN_DIR);
            step_energy(
                &mut self.battery[s],
                &self.cfg.energy,
                sunlit,
                self.tx_tally[s],
                self.io_tally[s],
                1.0,
            );
        }
    }

    fn record_metrics(&mut self, tick: u32) {
        let c = &self.world.constellation;
        let n = c.satellites.len();
        // Real recorder occupancy: every holding interval of every live plan
        // plus parked data. Mirrors the bookings the plans were screened by.
        let mut occupancy = vec![0.0; n];
        for entry in self.active.values() {
            for (sat, start, end) in entry.plan.holdings() {
                if start <= tick && tick < end {
                    occupancy[sat] += entry.plan.volume_mb;
                }
            }
        }
        for pr in self.pending.values() {
            occupancy[pr.holder] += pr.volume_mb;
        }
        let mut mean_storage = 0.0;
        let mut max_storage = 0.0f64;
        for s in 0..n {
            let cap = c.satellites[s].storage_capacity_mb;
            assert!(
                occupancy[s] <= cap + CAP_EPS,
                "recorder occupancy of satellite {s} exceeds its capacity"
            );
            let ratio = occupancy[s] / cap;
            mean_storage += ratio;
            max_storage = max_storage.max(ratio);
        }
        mean_storage /= n as f64;

        let mut mean_batt = 0.0;
        let mut min_batt = f64::INFINITY;
        let mut life = 0.0;
        for b in &self.battery {
            mean_batt += b.level_wmin;
            min_batt = min_batt.min(b.level_wmin);
            life += b.life_consumed;
        }
        mean_batt /= n as f64;

        let bucket = self.sched.bucket_of(tick);
        let mut mean_load = 0.0;
        let mut max_load = 0.0f64;
        for g in &self.world.stations {
            let cap = self.sched.bucket_capacity_mb(&sched_ctx!(self), g.id);
            let seen = self
                .arrivals
                .get(&(g.id, bucket))
                .copied()
                .unwrap_or(0.0);
            let ratio = seen / cap;
            mean_load += ratio;
            max_load = max_load.max(ratio);
        }
        mean_load /= self.world.stations.len() as f64;
        let mut queue_ms = 0.0f64;
        for &busy in &self.busy_until {
            queue_ms = queue_ms.max((busy - (tick + 1) as f64).max(0.0) * 60_000.0);
        }
        self.max_queue_delay_ms = self.max_queue_delay_ms.max(queue_ms);

        self.metrics.push(MetricsRecord {
            tick,
            active_plans: self.active.len() as u32,
            tasks_created: self.n_created,
            tasks_delivered: self.n_delivered,
            tasks_failed: self.n_failed.iter().sum(),
            mean_station_load: mean_load,
            max_station_load: max_load,
            max_queue_delay_ms: queue_ms,
            mean_storage_ratio: mean_storage,
            max_storage_ratio: max_storage,
            mean_battery_wmin: mean_batt,
            min_battery_wmin: min_batt,
            total_life_consumed: life,
        });
    }

    fn finish(self, run_ticks: u32) -> RunOutput {
        let mut rows = Vec::with_capacity(self.tasks.len());
        let mut delivery_sum = 0.0;
        let mut hop_sum = 0u64;
        let mut hop_frags = 0u64;
        for (tid, st) in &self.tasks {
            let outcome = st.outcome.expect("all tasks terminal at run end");
            let (label, reason, completion) = match outcome {
                Ok(minutes) => {
                    delivery_sum += minutes;
                    ("delivered", String::new(), Some(minutes))
                }
                Err(r) => ("failed", r.to_string(), None),
            };
            let mut link_hops = 0;
            for f in st.frags.values() {
                if f.completed.is_some() {
                    link_hops += f.hops;
                    hop_sum += f.hops as u64;
                    hop_frags += 1;
                }
            }
            rows.push(TaskRow {
                task_id: *tid,
                created_at: st.created_at,
                origin: st.origin,
                volume_mb: st.volume_mb,
                deadline_abs: st.deadline_abs,
                urgent: st.urgent,
                outcome: label,
                reason,
                completion_min: completion,
                station: st.station,
                mode: st.mode,
                link_hops,
                fragments: st.frags.len() as u8,
                fallbacks: st.fallbacks,
                handoffs: st.handoffs,
            });
        }
        let total_life: f64 = self.battery.iter().map(|b| b.life_consumed).sum();
        let delivered = self.n_delivered;
        let created = self.n_created;
        let summary = RunSummary {
            strategy: self.cfg.strategy.label(),
            seed: self.cfg.engine.seed,
            intensity: self.cfg.tasks.intensity,
            horizon_min: self.cfg.engine.horizon_min,
            run_ticks,
            tasks_created: created,
            tasks_delivered: delivered,
            tasks_failed: self.n_failed.iter().sum(),
            success_ratio: if created > 0 {
                delivered as f64 / created as f64
            } else {
                1.0
            },
            failed_timeout: self.n_failed[0],
            failed_gs_congestion: self.n_failed[1],
            failed_storage_overflow: self.n_failed[2],
            failed_satellite_outage: self.n_failed[3],
            mean_delivery_minutes: if delivered > 0 {
                delivery_sum / delivered as f64
            } else {
                0.0
            },
            mean_path_hops: if hop_frags > 0 {
                hop_sum as f64 / hop_frags as f64
            } else {
                0.0
            },
            fallback_count: self.fallback_count,
            fallback_ratio: if created > 0 {
                self.fallback_count as f64 / created as f64
            } else {
                0.0
            },
            handoff_count: self.handoff_count,
            deferral_count: self.deferral_count,
            fragment_splits: self.fragment_splits,
            max_queue_delay_ms: self.max_queue_delay_ms,
            total_life_consumed: total_life,
            life_per_delivered: if delivered > 0 {
                total_life / delivered as f64
            } else {
                0.0
            },
        };
        RunOutput {
            summary,
            metrics: self.metrics,
            tasks: rows,
            plans: self.plan_log,
        }
    }
}

// ---------------------------------------------------------------------------
// On-disk artifacts
// ---------------------------------------------------------------------------

fn csv_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => String::new(),
    }
}

/// Per-tick samples as CSV. Field order matches [`MetricsRecord`].
pub fn metrics_csv(metrics: &[MetricsRecord]) -> String {
    let mut out = String::from(
        "tick,active_plans,tasks_created,tasks_delivered,tasks_failed,\
         mean_station_load,max_station_load,max_queue_delay_ms,\
         mean_storage_ratio,max_storage_ratio,mean_battery_wmin,\
         min_battery_wmin,total_life_consumed\n",
    );
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.tick,
            m.active_plans,
            m.tasks_created,
            m.tasks_delivered,
            m.tasks_failed,
            m.mean_station_load,
            m.max_station_load,
            m.max_queue_delay_ms,
            m.mean_storage_ratio,
            m.max_storage_ratio,
            m.mean_battery_wmin,
            m.min_battery_wmin,
            m.total_life_consumed
        );
    }
    out
}

/// Per-task outcomes as CSV. Field order matches [`TaskRow`].
pub fn tasks_csv(rows: &[TaskRow]) -> String {
    let mut out = String::from(
        "task_id,created_at,origin,volume_mb,deadline_abs,urgent,outcome,\
         reason,completion_min,station,mode,link_hops,fragments,fallbacks,handoffs\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.task_id,
            r.created_at,
            r.origin,
            r.volume_mb,
            r.deadline_abs,
            r.urgent,
            r.outcome,
            r.reason,
            csv_opt(&r.completion_min),
            csv_opt(&r.station),
            csv_opt(&r.mode),
            r.link_hops,
            r.fragments,
            r.fallbacks,
            r.handoffs
        );
    }
    out
}

/// Write `metrics.csv`, `tasks.csv`, `summary.json`, and `plans.json` into
/// `dir` (created if missing). Output bytes are a pure function of the run.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("metrics.csv"), metrics_csv(&out.metrics))?;
    std::fs::write(dir.join("tasks.csv"), tasks_csv(&out.tasks))?;
    let mut summary = serde_json::to_string_pretty(&out.summary).expect("summary serializes");
    summary.push('\n');
    std::fs::write(dir.join("summary.json"), summary)?;
    let mut plans = serde_json::to_string_pretty(&out.plans).expect("plans serialize");
    plans.push('\n');
    std::fs::write(dir.join("plans.json"), plans)?;
    Ok(())
}

/// Convenience label for run directories: `strategy-seedN`.
pub fn run_dir_name(cfg: &ScenarioConfig) -> String {
    format!(
        "{}-seed{}",
        cfg.strategy.label().replace('+', "-"),
        cfg.engine.seed
    )
}

/// True when this strategy pre-books station admission volume (and so never
/// queues at the station).
pub fn books_admission(selection: SelectionPolicy) -> bool {
    selection_name(selection) != "nearest"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{
        preset_config, EngineConfig, FaultWindow, RoutingPolicy, StrategyConfig, TelemetryConfig,
    };
    use crate::tasking::{export_csv, OriginDistribution, TaskGenConfig};

    /// Small, fast scenario: 4x4 walker, light traffic, short horizon.
    fn tiny_cfg() -> ScenarioConfig {
        let mut cfg = preset_config("toy-4x4").expect("preset exists");
        cfg.engine = EngineConfig {
            horizon_min: 40,
            drain_grace_min: 200,
            seed: 7,
        };
        cfg.tasks = TaskGenConfig {
            tasks_per_tick: 0.5,
            intensity: 1,
            origin: OriginDistribution::Uniform,
            ..TaskGenConfig::default()
        };
        cfg
    }

    fn run_cfg(cfg: ScenarioConfig) -> RunOutput {
        SimEngine::new(cfg).expect("engine builds").run()
    }

    #[test]
    fn queue_wait_matches_service_rate() {
        // 47.5 megabits draining at 10 Gbps wait exactly 4.75 ms.
        let rate_mb_per_min = 10_000.0 * 60.0;
        let (finish, delay_ms) = queue_outcome(0.0, 3, 47.5, rate_mb_per_min);
        assert!((delay_ms - 4.75).abs() < 1e-9, "{delay_ms}");
        assert!((finish - (3.0 + 47.5 / rate_mb_per_min)).abs() < 1e-12);
        // A backlog pushes the start time out.
        let (finish2, delay2) = queue_outcome(10.0, 3, 47.5, rate_mb_per_min);
        assert!(finish2 > 10.0 && delay2 > 7.0 * 60_000.0);
    }

    #[test]
    fn runs_are_deterministic_and_conserve_tasks() {
        let a = run_cfg(tiny_cfg());
        let b = run_cfg(tiny_cfg());
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            "same scenario, same bytes"
        );
        assert!(a.summary.tasks_created > 0);
        assert_eq!(
            a.summary.tasks_created,
            a.summary.tasks_delivered + a.summary.tasks_failed
        );
        for row in &a.tasks {
            if let Some(minutes) = row.completion_min {
                assert!(row.created_at as f64 + minutes <= row.deadline_abs as f64 + 1e-9);
                assert_eq!(row.outcome, "delivered");
            } else {
                assert_eq!(row.outcome, "failed");
                assert!(!row.reason.is_empty());
            }
        }
        // Per-tick rows cover the whole run.
        assert_eq!(a.metrics.len() as u32, a.summary.run_ticks);
    }

    #[test]
    fn outage_of_uninvolved_satellite_changes_nothing() {
        let base = run_cfg(tiny_cfg());
        let mut involved: BTreeSet<SatId> = base.tasks.iter().map(|t| t.origin).collect();
        for p in &base.plans {
            involved.extend(p.plan.path.iter().copied());
        }
        let n = 16; // toy constellation size
        let idle = (0..n).find(|s| !involved.contains(s)).expect("an idle satellite exists");
        let mut cfg = tiny_cfg();
        cfg.faults.push(FaultWindow {
            target: FaultTarget::Satellite(idle),
            start: 5,
            end: 30,
        });
        let faulted = run_cfg(cfg);
        assert_eq!(
            serde_json::to_string(&base.summary).unwrap(),
            serde_json::to_string(&faulted.summary).unwrap()
        );
        assert_eq!(base.metrics, faulted.metrics);
    }

    #[test]
    fn carrier_outage_triggers_recovery_or_honest_failure() {
        // Script one task, then kill its origin mid-carry.
        let probe = run_cfg(tiny_cfg());
        let victim = probe.tasks.first().expect("probe run has tasks");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tasks.csv");
        let task = Task {
            id: 0,
            created_at: 2,
            origin: victim.origin,
            volume_mb: 1000.0,
            deadline_min: 120,
            urgency: Urgency::Routine,
        };
        std::fs::write(&path, export_csv(std::slice::from_ref(&task))).unwrap();
        let mut cfg = tiny_cfg();
        cfg.task_file = Some(path);
        cfg.faults.push(FaultWindow {
            target: FaultTarget::Satellite(victim.origin),
            start: 4,
            end: 60,
        });
        let out = run_cfg(cfg);
        assert_eq!(out.summary.tasks_created, 1);
        let row = &out.tasks[0];
        if row.outcome == "delivered" {
            assert!(
                out.summary.handoff_count >= 1 || row.created_at as u32 + 2 > 4,
                "a delivery across the outage implies recovery"
            );
        } else {
            assert_eq!(row.reason, "satellite_outage");
        }
    }

    #[test]
    fn scripted_task_file_replaces_generation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tasks.csv");
        let tasks: Vec<Task> = (0..3)
            .map(|i| Task {
                id: i,
                created_at: i as u32,
                origin: i,
                volume_mb: 500.0,
                deadline_min: 90,
                urgency: Urgency::Routine,
            })
            .collect();
        std::fs::write(&path, export_csv(&tasks)).unwrap();
        let mut cfg = tiny_cfg();
        cfg.task_file = Some(path);
        let out = run_cfg(cfg);
        assert_eq!(out.summary.tasks_created, 3);
        let ids: Vec<TaskId> = out.tasks.iter().map(|t| t.task_id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn zero_delay_telemetry_equals_instant_view() {
        let mut stale_but_undelayed = tiny_cfg();
        stale_but_undelayed.telemetry = TelemetryConfig {
            delay_min: 0,
            stale_fraction: 0.5,
        };
        let a = run_cfg(tiny_cfg());
        let b = run_cfg(stale_but_undelayed);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            "zero delay makes staleness unobservable"
        );
    }

    #[test]
    fn delayed_telemetry_run_is_stable() {
        let mut cfg = tiny_cfg();
        cfg.telemetry = TelemetryConfig {
            delay_min: 20,
            stale_fraction: 0.3,
        };
        let out = run_cfg(cfg);
        assert_eq!(
            out.summary.tasks_created,
            out.summary.tasks_delivered + out.summary.tasks_failed
        );
    }

    #[test]
    fn baseline_strategies_run_and_queue_only_at_nearest() {
        let mut cfg = tiny_cfg();
        cfg.strategy = StrategyConfig {
            selection: SelectionPolicy::NearestAvailable,
            routing: RoutingPolicy::IslShortest,
        };
        let na = run_cfg(cfg.clone());
        assert_eq!(
            na.summary.max_queue_delay_ms, 0.0,
            "admission-booking strategies never queue"
        );
        cfg.strategy.selection = SelectionPolicy::Nearest;
        let nearest = run_cfg(cfg);
        assert_eq!(
            nearest.summary.tasks_created,
            nearest.summary.tasks_delivered + nearest.summary.tasks_failed
        );
    }

    #[test]
    fn artifacts_round_trip_to_disk() {
        let out = run_cfg(tiny_cfg());
        let dir = tempfile::tempdir().unwrap();
        let run_dir = dir.path().join(run_dir_name(&tiny_cfg()));
        write_outputs(&run_dir, &out).unwrap();
        for name in ["metrics.csv", "tasks.csv", "summary.json", "plans.json"] {
            assert!(run_dir.join(name).exists(), "{name} written");
        }
        let metrics = std::fs::read_to_string(run_dir.join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count() as u32, out.summary.run_ticks + 1);
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(run_dir.join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(
            summary["tasks_created"].as_u64().unwrap() as u32,
            out.summary.tasks_created
        );
    }
}
