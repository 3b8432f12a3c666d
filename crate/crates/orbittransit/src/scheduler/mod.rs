//! Delivery planning and resource bookkeeping.
//!
//! The scheduler turns tasks into [`DeliveryPlan`]s under three cooperating
//! mechanisms:
//!
//! 1. **Diffusion** ([`diffusion`]): pick a ground station by scanning the
//!    origin's own plane first, then neighboring planes outward, ordering
//!    stations by how soon the plane's phase-mapped member could offload.
//! 2. **Crossing assignment** ([`crossing`]): tasks that must hop planes get
//!    their crossing tick chosen jointly by a min-cost max-flow over shared
//!    transmit and recorder capacity, preferring early crossings.
//! 3. **Bookings**: every accepted plan reserves station admission volume,
//!    per-tick transmit budget, and recorder intervals, so later decisions
//!    see earlier commitments and the resulting schedule never oversubscribes
//!    a resource by construction.
//!
//! Battery handling is deliberately asymmetric: the diffusion and crossing
//! stages refuse satellites whose *reported* charge is below the operational
//! floor (reports may be stale), while the engine re-checks *actual* charge
//! when a crossing executes. Baseline strategies skip the reported-charge
//! check entirely — that is their defining naivety, not an oversight.

mod crossing;
mod diffusion;

use crate::constellation::{Constellation, Propagator, SatId};
use crate::energy::EnergyParams;
use crate::oan::OanGraph;
use crate::scenario::{RoutingPolicy, SelectionPolicy, StrategyConfig};
use crate::tasking::{Task, TaskId};
use crate::topology::{GridTopology, GroundStation, GsId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub use crossing::MAX_CANDIDATE_SLOTS;

/// Borrowed world context shared by all planning calls.
#[derive(Clone, Copy)]
pub struct SchedCtx<'a> {
    pub constellation: &'a Constellation,
    pub stations: &'a [GroundStation],
    pub oan: &'a OanGraph,
    pub grid: &'a GridTopology,
    pub propagator: &'a Propagator,
    pub energy: &'a EnergyParams,
}

/// What the scheduler believes about the fleet at one tick. Battery levels
/// are *reported* values and may lag reality under telemetry delay.
#[derive(Clone, Copy)]
pub struct EpochView<'a> {
    pub tick: u32,
    pub battery_view: &'a [f64],
    pub sat_ok: &'a [bool],
    pub gs_ok: &'a [bool],
}

/// One unit of work to plan: either a fresh task or a replanned remainder
/// (after a fault handoff or deadline tightening) holding on some satellite.
#[derive(Debug, Clone)]
pub struct PlanRequest {
    pub task_id: TaskId,
    /// Fragment index; 0 for unsplit tasks.
    pub fragment: u8,
    /// Satellite currently holding the data.
    pub holder: SatId,
    pub created_at: u32,
    pub deadline_abs: u32,
    pub volume_mb: f64,
    pub urgent: bool,
}

impl PlanRequest {
    pub fn from_task(task: &Task) -> Self {
        Self {
            task_id: task.id,
            fragment: 0,
            holder: task.origin,
            created_at: task.created_at,
            deadline_abs: task.deadline_abs(),
            volume_mb: task.volume_mb,
            urgent: task.urgency == crate::tasking::Urgency::Urgent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    /// The holder carries the data until it passes the station itself.
    PcoOnly,
    /// Carry on the holder, cross planes at a chosen tick, carry on the
    /// receiving plane's member, offload at its window.
    Hybrid,
    /// Relay over inter-satellite links immediately.
    IslOnly,
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanMode::PcoOnly => "pco_only",
            PlanMode::Hybrid => "hybrid",
            PlanMode::IslOnly => "isl_only",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// No resource-feasible route reaches a station before the deadline.
    Timeout,
    /// Every time-feasible candidate was blocked by station admission volume.
    GsCongestion,
    /// Every time-feasible candidate was blocked by recorder or transmit
    /// budget exhaustion.
    StorageOverflow,
    /// The data was lost to, or stranded by, a satellite outage.
    SatelliteOutage,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::Timeout => "timeout",
            FailureReason::GsCongestion => "gs_congestion",
            FailureReason::StorageOverflow => "storage_overflow",
            FailureReason::SatelliteOutage => "satellite_outage",
        })
    }
}

/// A fully booked delivery route for one task (or fragment).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeliveryPlan {
    pub task_id: TaskId,
    pub fragment: u8,
    pub mode: PlanMode,
    pub gs: GsId,
    /// Holder when the plan was made.
    pub source: SatId,
    /// Satellite that performs the offload.
    pub tail: SatId,
    pub planned_at: u32,
    /// Relay chain `source ..= tail`; length 1 when no links are used.
    pub path: Vec<SatId>,
    /// First hop tick, when the plan uses links.
    pub crossing_tick: Option<u32>,
    /// Ticks each hop occupies (1 under the reference link budget).
    pub hop_ticks: u32,
    /// Offload tick.
    pub deliver_at: u32,
    pub volume_mb: f64,
}

impl DeliveryPlan {
    pub fn key(&self) -> PlanKey {
        (self.task_id, self.fragment)
    }

    /// Minutes from task creation to offload.
    pub fn delivery_minutes(&self, created_at: u32) -> u32 {
        self.deliver_at.saturating_sub(created_at)
    }

    /// Tick at which the data lands on `tail`.
    pub fn arrival_tick(&self) -> u32 {
        match self.crossing_tick {
            Some(s) => s + (self.path.len() as u32 - 1) * self.hop_ticks,
            None => self.planned_at,
        }
    }

    /// Every transmission this plan performs: `(satellite, tick, megabits)`.
    /// Inter-satellite hops send `volume / hop_ticks` per tick; the offload
    /// sends the full volume at `deliver_at`.
    pub fn transmissions(&self) -> Vec<(SatId, u32, f64)> {
        let mut out = Vec::new();
        if let Some(s) = self.crossing_tick {
            let k = self.hop_ticks;
            let per_tick = self.volume_mb / k as f64;
            for (j, &sat) in self.path[..self.path.len() - 1].iter().enumerate() {
                for q in 0..k {
                    out.push((sat, s + j as u32 * k + q, per_tick));
                }
            }
        }
        out.push((self.tail, self.deliver_at, self.volume_mb));
        out
    }

    /// Recorder occupancy intervals `(satellite, start, end)`, half-open.
    /// The final holder frees its recorder at the offload tick.
    pub fn holdings(&self) -> Vec<(SatId, u32, u32)> {
        let mut out = Vec::new();
        match self.crossing_tick {
            None => out.push((self.source, self.planned_at, self.deliver_at)),
            Some(s) => {
                let k = self.hop_ticks;
                out.push((self.source, self.planned_at, s + k));
                for (j, &sat) in self.path.iter().enumerate().skip(1) {
                    let start = s + j as u32 * k;
                    let end = if sat == self.tail && j == self.path.len() - 1 {
                        self.deliver_at
                    } else {
                        start + k
                    };
                    out.push((sat, start, end));
                }
            }
        }
        out.retain(|&(_, a, b)| a < b);
        out
    }
}

pub type PlanKey = (TaskId, u8);

#[derive(Debug, Clone)]
pub struct EpochResult {
    pub plans: Vec<DeliveryPlan>,
    pub failures: Vec<(TaskId, u8, FailureReason)>,
}

/// Resources one plan reserved, kept so plans can be canceled exactly.
#[derive(Debug, Default, Clone)]
struct BookingRecord {
    bucket: Option<(GsId, u32, f64)>,
    tx: Vec<(SatId, u32, f64)>,
    store: Vec<(SatId, u32, u32, f64)>,
}

/// Tallies of why candidates were rejected during one planning attempt,
/// used to classify the failure honestly.
#[derive(Debug, Default, Clone, Copy)]
struct BlockTally {
    bucket: bool,
    resource: bool,
}

impl BlockTally {
    fn reason(&self) -> FailureReason {
        if self.bucket {
            FailureReason::GsCongestion
        } else if self.resource {
            FailureReason::StorageOverflow
        } else {
            FailureReason::Timeout
        }
    }
}

/// Planning radius: how many planes outward diffusion searches.
pub const DEFAULT_MAX_OFFSET: i64 = 2;

pub struct Scheduler {
    pub strategy: StrategyConfig,
    bucket_minutes: u32,
    max_offset: i64,
    /// Booked transmit megabits per (satellite, tick); grown on demand.
    tx_booked: Vec<Vec<f64>>,
    /// Booked recorder megabits per (satellite, tick); grown on demand.
    store_booked: Vec<Vec<f64>>,
    /// Booked admission megabits per (station, bucket index).
    bucket_booked: BTreeMap<(GsId, u32), f64>,
    records: BTreeMap<PlanKey, BookingRecord>,
    /// Materialized-but-unplanned data: recorder holds placed at sensing time
    /// so other tasks' screening sees data that has no plan yet.
    holds: BTreeMap<PlanKey, (SatId, u32, u32, f64)>,
}

impl Scheduler {
    pub fn new(strategy: StrategyConfig, bucket_minutes: u32, num_sats: usize) -> Self {
        assert!(bucket_minutes > 0);
        Self {
            strategy,
            bucket_minutes,
            max_offset: DEFAULT_MAX_OFFSET,
            tx_booked: vec![Vec::new(); num_sats],
            store_booked: vec![Vec::new(); num_sats],
            bucket_booked: BTreeMap::new(),
            records: BTreeMap::new(),
            holds: BTreeMap::new(),
        }
    }

    pub fn with_max_offset(mut self, max_offset: i64) -> Self {
        self.max_offset = max_offset;
        self
    }

    pub fn max_offset(&self) -> i64 {
        self.max_offset
    }

    pub fn bucket_of(&self, tick: u32) -> u32 {
        tick / self.bucket_minutes
    }

    pub fn bucket_capacity_mb(&self, ctx: &SchedCtx<'_>, gs: GsId) -> f64 {
        ctx.stations[gs].capacity_mbps * 60.0 * self.bucket_minutes as f64
    }

    pub fn bucket_free(&self, ctx: &SchedCtx<'_>, gs: GsId, bucket: u32) -> f64 {
        self.bucket_capacity_mb(ctx, gs) - self.bucket_booked.get(&(gs, bucket)).copied().unwrap_or(0.0)
    }

    fn tx_cap(ctx: &SchedCtx<'_>, sat: SatId) -> f64 {
        ctx.constellation.satellites[sat].link_capacity_mbps * 60.0
    }

    pub fn tx_free(&self, ctx: &SchedCtx<'_>, sat: SatId, tick: u32) -> f64 {
        let booked = self.tx_booked[sat].get(tick as usize).copied().unwrap_or(0.0);
        Self::tx_cap(ctx, sat) - booked
    }

    pub fn store_free(&self, ctx: &SchedCtx<'_>, sat: SatId, tick: u32) -> f64 {
        let booked = self.store_booked[sat].get(tick as usize).copied().unwrap_or(0.0);
        ctx.constellation.satellites[sat].storage_capacity_mb - booked
    }

    /// Reported charge clears the operational floor.
    fn battery_ok(&self, ctx: &SchedCtx<'_>, view: &EpochView<'_>, sat: SatId) -> bool {
        view.battery_view[sat]
            >= ctx.energy.min_level_fraction * ctx.energy.battery_max_wmin - 1e-9
    }

    /// Ticks one hop of `volume_mb` occupies on the slowest link in the
    /// fleet (uniform so multi-hop timing stays coherent).
    pub fn hop_ticks(ctx: &SchedCtx<'_>, volume_mb: f64) -> u32 {
        let min_cap = ctx
            .constellation
            .satellites
            .iter()
            .map(|s| s.link_capacity_mbps * 60.0)
            .fold(f64::INFINITY, f64::min);
        (volume_mb / min_cap).ceil().max(1.0) as u32
    }

    // -- booking primitives -------------------------------------------------

    fn add_tx(&mut self, sat: SatId, tick: u32, mb: f64) {
        let v = &mut self.tx_booked[sat];
        if v.len() <= tick as usize {
            v.resize(tick as usize + 16, 0.0);
        }
        v[tick as usize] += mb;
    }

    fn add_store(&mut self, sat: SatId, start: u32, end: u32, mb: f64) {
        if start >= end {
            return;
        }
        let v = &mut self.store_booked[sat];
        if v.len() < end as usize {
            v.resize(end as usize + 16, 0.0);
        }
        for k in start..end {
            v[k as usize] += mb;
        }
    }

    /// Standing recorder reservation outside any plan (payload operations,
    /// pre-seeded occupancy in synthetic instances). Not cancelable.
    pub fn reserve_storage(&mut self, sat: SatId, start: u32, end: u32, mb: f64) {
        self.add_store(sat, start, end, mb);
    }

    /// Register freshly sensed data that has no plan yet, occupying the
    /// holder's recorder until its deadline. Planning replaces the hold with
    /// exact bookings; a terminal failure must release it.
    pub fn place_hold(&mut self, key: PlanKey, sat: SatId, start: u32, end: u32, mb: f64) {
        debug_assert!(!self.holds.contains_key(&key), "hold already placed");
        self.add_store(sat, start, end, mb);
        self.holds.insert(key, (sat, start, end, mb));
    }

    pub fn release_hold(&mut self, key: PlanKey) {
        if let Some((sat, start, end, mb)) = self.holds.remove(&key) {
            let v = &mut self.store_booked[sat];
            for k in start..end {
                if let Some(slot) = v.get_mut(k as usize) {
                    *slot -= mb;
                }
            }
        }
    }

    /// Recorder headroom over `[start, end)` as seen by the plan `key`
    /// itself: its own unplanned hold does not count against it.
    fn store_free_over_excl(
        &self,
        ctx: &SchedCtx<'_>,
        sat: SatId,
        start: u32,
        end: u32,
        key: PlanKey,
    ) -> f64 {
        let own = match self.holds.get(&key) {
            Some(&(hsat, hs, he, mb)) if hsat == sat => Some((hs, he, mb)),
            _ => None,
        };
        (start..end)
            .map(|k| {
                let mut free = self.store_free(ctx, sat, k);
                if let Some((hs, he, mb)) = own {
                    if (hs..he).contains(&k) {
                        free += mb;
                    }
                }
                free
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Standing admission reservation on a station bucket. Not cancelable.
    pub fn reserve_bucket(&mut self, gs: GsId, bucket: u32, mb: f64) {
        *self.bucket_booked.entry((gs, bucket)).or_insert(0.0) += mb;
    }

    pub(crate) fn book_bucket(&mut self, key: PlanKey, gs: GsId, bucket: u32, mb: f64) {
        *self.bucket_booked.entry((gs, bucket)).or_insert(0.0) += mb;
        let rec = self.records.entry(key).or_default();
        debug_assert!(rec.bucket.is_none(), "one admission booking per plan");
        rec.bucket = Some((gs, bucket, mb));
    }

    fn unbook_bucket(&mut self, key: PlanKey) {
        if let Some(rec) = self.records.get_mut(&key) {
            if let Some((gs, bucket, mb)) = rec.bucket.take() {
                if let Some(v) = self.bucket_booked.get_mut(&(gs, bucket)) {
                    *v -= mb;
                }
            }
        }
    }

    /// Record every transmission and holding of an accepted plan. Replaces
    /// the plan's materialization hold, if one is still standing.
    pub(crate) fn book_plan(&mut self, plan: &DeliveryPlan) {
        let key = plan.key();
        self.release_hold(key);
        for (sat, tick, mb) in plan.transmissions() {
            self.add_tx(sat, tick, mb);
            self.records.entry(key).or_default().tx.push((sat, tick, mb));
        }
        for (sat, start, end) in plan.holdings() {
            self.add_store(sat, start, end, plan.volume_mb);
            self.records
                .entry(key)
                .or_default()
                .store
                .push((sat, start, end, plan.volume_mb));
        }
    }

    /// Release everything a plan reserved.
    pub fn cancel(&mut self, key: PlanKey) {
        self.cancel_from(key, 0);
    }

    /// Release the parts of a plan's reservations at or after `tick`
    /// (exclusive of already-elapsed usage). The admission booking is
    /// released only if the offload had not happened yet.
    pub fn cancel_from(&mut self, key: PlanKey, tick: u32) {
        let Some(rec) = self.records.remove(&key) else {
            return;
        };
        let mut kept = BookingRecord::default();
        if let Some((gs, bucket, mb)) = rec.bucket {
            // The offload tick lives in the tx list as the largest entry for
            // the plan; release the bucket when any future tx remains.
            let offload_future = rec.tx.iter().any(|&(_, tk, _)| tk >= tick);
            if offload_future {
                if let Some(v) = self.bucket_booked.get_mut(&(gs, bucket)) {
                    *v -= mb;
                }
            } else {
                kept.bucket = Some((gs, bucket, mb));
            }
        }
        for (sat, tk, mb) in rec.tx {
            if tk >= tick {
                let v = &mut self.tx_booked[sat];
                if let Some(slot) = v.get_mut(tk as usize) {
                    *slot -= mb;
                }
            } else {
                kept.tx.push((sat, tk, mb));
            }
        }
        for (sat, start, end, mb) in rec.store {
            let cut = tick.max(start);
            if cut < end {
                let v = &mut self.store_booked[sat];
                for k in cut..end {
                    if let Some(slot) = v.get_mut(k as usize) {
                        *slot -= mb;
                    }
                }
            }
            if start < cut {
                kept.store.push((sat, start, cut.min(end), mb));
            }
        }
        if kept.bucket.is_some() || !kept.tx.is_empty() || !kept.store.is_empty() {
            self.records.insert(key, kept);
        }
    }

    // -- planning ------------------------------------------------------------

    /// Plan every request for this tick. Urgent requests are served first;
    /// ties resolve by task id, so runs are reproducible.
    pub fn schedule_epoch(
        &mut self,
        ctx: &SchedCtx<'_>,
        view: &EpochView<'_>,
        requests: &[PlanRequest],
    ) -> EpochResult {
        let mut order: Vec<usize> = (0..requests.len()).collect();
        order.sort_by_key(|&i| {
            (
                !requests[i].urgent,
                requests[i].task_id,
                requests[i].fragment,
            )
        });

        let mut plans = Vec::new();
        let mut failures = Vec::new();
        let mut hybrid_batch: Vec<diffusion::HybridAssignment> = Vec::new();

        for &i in &order {
            let req = &requests[i];
            if !view.sat_ok[req.holder] {
                failures.push((req.task_id, req.fragment, FailureReason::SatelliteOutage));
                continue;
            }
            match self.strategy.selection {
                SelectionPolicy::Oan => {
                    match self.plan_oan(ctx, view, req, &mut hybrid_batch) {
                        Ok(Some(plan)) => plans.push(plan),
                        Ok(None) => {} // queued in hybrid_batch
                        Err(reason) => failures.push((req.task_id, req.fragment, reason)),
                    }
                }
                SelectionPolicy::Nearest | SelectionPolicy::NearestAvailable => {
                    match self.plan_baseline(ctx, view, req) {
                        Ok(plan) => plans.push(plan),
                        Err(reason) => failures.push((req.task_id, req.fragment, reason)),
                    }
                }
            }
        }

        if !hybrid_batch.is_empty() {
            let (mut done, mut failed) = self.resolve_hybrids(ctx, view, hybrid_batch);
            plans.append(&mut done);
            failures.append(&mut failed);
        }
        failures.sort();
        EpochResult { plans, failures }
    }

    /// Plan one request immediately (replans, urgency boosts). Hybrid
    /// crossings degenerate to a single-task flow, which picks the earliest
    /// feasible crossing tick.
    pub fn plan_task(
        &mut self,
        ctx: &SchedCtx<'_>,
        view: &EpochView<'_>,
        req: &PlanRequest,
    ) -> Result<DeliveryPlan, FailureReason> {
        let result = self.schedule_epoch(ctx, view, std::slice::from_ref(req));
        debug_assert_eq!(result.plans.len() + result.failures.len(), 1);
        result
            .plans
            .into_iter()
            .next()
            .ok_or_else(|| result.failures[0].2)
    }

    /// Diffusion-based pipeline. Returns Ok(None) when the request joined
    /// the hybrid crossing batch.
    fn plan_oan(
        &mut self,
        ctx: &SchedCtx<'_>,
        view: &EpochView<'_>,
        req: &PlanRequest,
        hybrid_batch: &mut Vec<diffusion::HybridAssignment>,
    ) -> Result<Option<DeliveryPlan>, FailureReason> {
        let mut tally = BlockTally::default();
        match diffusion::diffuse(self, ctx, view, req, &mut tally) {
            Some(diffusion::Assigned::Pco { gs, deliver_at }) => {
                Ok(Some(self.finalize_pco(view.tick, req, gs, deliver_at)))
            }
            Some(diffusion::Assigned::Hybrid(assignment)) => {
                hybrid_batch.push(assignment);
                Ok(None)
            }
            Some(diffusion::Assigned::Planned(plan)) => Ok(Some(plan)),
            None => {
                // Last resort for urgent traffic: immediate relay to any
                // admissible station.
                if req.urgent {
                    if let Some(plan) = self.plan_isl_any(ctx, view, req, &mut tally) {
                        return Ok(Some(plan));
                    }
                }
                Err(tally.reason())
            }
        }
    }

    /// Book and emit a carry-only plan; the admission volume was already
    /// booked by diffusion.
    fn finalize_pco(
        &mut self,
        tick: u32,
        req: &PlanRequest,
        gs: GsId,
        deliver_at: u32,
    ) -> DeliveryPlan {
        let plan = DeliveryPlan {
            task_id: req.task_id,
            fragment: req.fragment,
            mode: PlanMode::PcoOnly,
            gs,
            source: req.holder,
            tail: req.holder,
            planned_at: tick,
            path: vec![req.holder],
            crossing_tick: None,
            hop_ticks: 1,
            deliver_at,
            volume_mb: req.volume_mb,
        };
        self.book_plan(&plan);
        plan
    }

    /// Resolve the queued hybrid assignments via the crossing flow, booking
    /// successful plans and falling back to relays for the rest.
    fn resolve_hybrids(
        &mut self,
        ctx: &SchedCtx<'_>,
        view: &EpochView<'_>,
        batch: Vec<diffusion::HybridAssignment>,
    ) -> (Vec<DeliveryPlan>, Vec<(TaskId, u8, FailureReason)>) {
        let mut plans = Vec::new();
        let mut failures = Vec::new();
        let slots = crossing::assign_slots(self, ctx, view, &batch);
        // Book every successful crossing before attempting any fallback, so
        // fallback relays cannot take resources a validated slot relies on.
        let mut starved = Vec::new();
        for (assignment, slot) in batch.into_iter().zip(slots) {
            match slot {
                Some(s) => {
                    let plan = assignment.into_plan(s);
                    self.book_plan(&plan);
                    plans.push(plan);
                }
                None => starved.push(assignment),
            }
        }
        for assignment in starved {
            // Crossing starved: drop the admission hold and relay to the
            // same station if links still make the deadline.
            let key = (assignment.req.task_id, assignment.req.fragment);
            self.unbook_bucket(key);
            let mut tally = BlockTally {
                bucket: false,
                resource: true,
            };
            let req = assignment.req.clone();
            if let Some(plan) =
                self.plan_isl_only(ctx, view, &req, assignment.gs, true, true, &mut tally)
            {
                plans.push(plan);
            } else if req.urgent {
                if let Some(plan) = self.plan_isl_any(ctx, view, &req, &mut tally) {
                    plans.push(plan);
                } else {
                    failures.push((req.task_id, req.fragment, tally.reason()));
                }
            } else {
                failures.push((req.task_id, req.fragment, tally.reason()));
            }
        }
        (plans, failures)
    }

    /// Baseline pipeline: geometric station choice, then the configured
    /// routing, with no reported-charge screening.
    fn plan_baseline(
        &mut self,
        ctx: &SchedCtx<'_>,
        view: &EpochView<'_>,
        req: &PlanRequest,
    ) -> Result<DeliveryPlan, FailureReason> {
        let (lat, lon) = crate::baselines::subpoint(
            ctx.propagator,
            ctx.constellation,
            req.holder,
            view.tick,
        );
        let book_bucket = self.strategy.selection == SelectionPolicy::NearestAvailable;
        let gs = match self.strategy.selection {
            SelectionPolicy::Nearest => {
                crate::baselines::select_nearest(ctx.stations, view.gs_ok, lat, lon)
            }
            SelectionPolicy::NearestAvailable => {
                let bucket = self.bucket_of(view.tick);
                crate::baselines::select_nearest_available(ctx.stations, view.gs_ok, lat, lon, |g| {
                    self.bucket_free(ctx, g, bucket) >= req.volume_mb
                })
            }
            SelectionPolicy::Oan => unreachable!("handled by plan_oan"),
        }
        .ok_or(FailureReason::GsCongestion)?;

        let mut tally = BlockTally::default();
        let plan = match self.strategy.routing {
            RoutingPolicy::PcoWithhold => {
                self.plan_pco_to(ctx, view, req, gs, book_bucket, &mut tally)
            }
            RoutingPolicy::IslShortest => {
                self.plan_isl_only(ctx, view, req, gs, book_bucket, false, &mut tally)
            }
            // Without diffusion, hybrid degrades to carry-first at the
            // chosen station, relaying only when carry misses the deadline.
            RoutingPolicy::Hybrid => self
                .plan_pco_to(ctx, view, req, gs, book_bucket, &mut tally)
                .or_else(|| {
                    self.plan_isl_only(ctx, view, req, gs, book_bucket, false, &mut tally)
                }),
        };
        plan.ok_or_else(|| tally.reason())
    }

    /// Carry-only plan from the holder to a fixed station: offload at the
    /// holder's next window. Books everything on success.
    fn plan_pco_to(
        &mut self,
        ctx: &SchedCtx<'_>,
        view: &EpochView<'_>,
        req: &PlanRequest,
        gs: GsId,
        book_bucket: bool,
        tally: &mut BlockTally,
    ) -> Option<DeliveryPlan> {
        let t = view.tick;
        if !view.gs_ok[gs] {
            return None;
        }
        let wait = ctx
            .oan
            .pco_delivery_time(ctx.constellation, req.holder, t, gs)?;
        let deliver_at = t + wait;
        if deliver_at > req.deadline_abs {
            return None;
        }
        let key = (req.task_id, req.fragment);
        if self.store_free_over_excl(ctx, req.holder, t, deliver_at, key) < req.volume_mb
            || self.tx_free(ctx, req.holder, deliver_at) < req.volume_mb
        {
            tally.resource = true;
            return None;
        }
        let bucket = self.bucket_of(deliver_at);
        if book_bucket {
            if self.bucket_free(ctx, gs, bucket) < req.volume_mb {
                tally.bucket = true;
                return None;
            }
        }
        let plan = DeliveryPlan {
            task_id: req.task_id,
            fragment: req.fragment,
            mode: PlanMode::PcoOnly,
            gs,
            source: req.holder,
            tail: req.holder,
            planned_at: t,
            path: vec![req.holder],
            crossing_tick: None,
            hop_ticks: 1,
            deliver_at,
            volume_mb: req.volume_mb,
        };
        if book_bucket {
            self.book_bucket(plan.key(), gs, bucket, req.volume_mb);
        }
        self.book_plan(&plan);
        Some(plan)
    }

    /// Immediate-relay plan to a fixed station: breadth-first over the link
    /// grid to the member whose offload lands earliest. Books on success.
    ///
    /// `check_battery` screens relays by reported charge (the diffusion
    /// pipeline's discipline); baselines pass false.
    fn plan_isl_only(
        &mut self,
        ctx: &SchedCtx<'_>,
        view: &EpochView<'_>,
        req: &PlanRequest,
        gs: GsId,
        book_bucket: bool,
        check_battery: bool,
        tally: &mut BlockTally,
    ) -> Option<DeliveryPlan> {
        if !view.gs_ok[gs] {
            return None;
        }
        let t = view.tick;
        let d = req.volume_mb;
        let k = Self::hop_ticks(ctx, d);
        let usable = |s: SatId| view.sat_ok[s] && (!check_battery || self.battery_ok(ctx, view, s));
        if !usable(req.holder) {
            return None;
        }

        // Single BFS from the holder gives hop counts to every candidate.
        let n = ctx.constellation.satellites.len();
        let mut dist: Vec<Option<u32>> = vec![None; n];
        let mut parent: Vec<SatId> = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        dist[req.holder] = Some(0);
        queue.push_back(req.holder);
        while let Some(u) = queue.pop_front() {
            for &v in &ctx.grid.neighbors[u] {
                if dist[v].is_none() && usable(v) {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }

        // Best candidate: minimal (deliver_at, hops, member id).
        let mut best: Option<(u32, u32, SatId)> = None;
        if gs < ctx.oan.orbits_by_gs.len() {
            for &orbit in &ctx.oan.orbits_by_gs[gs] {
                for &m in &ctx.oan.nodes[orbit].members {
                    let Some(h) = dist[m] else { continue };
                    let arrive = t + h * k;
                    let Some(wait) =
                        ctx.oan.pco_delivery_time(ctx.constellation, m, arrive, gs)
                    else {
                        continue;
                    };
                    let deliver_at = arrive + wait;
                    if deliver_at > req.deadline_abs {
                        continue;
                    }
                    if let Some((bd, bh, bm)) = best {
                        if (deliver_at, h, m) >= (bd, bh, bm) {
                            continue;
                        }
                    }
                    // Resource screening for this candidate.
                    let key = (req.task_id, req.fragment);
                    if self.store_free_over_excl(ctx, m, arrive, deliver_at, key) < d
                        || self.tx_free(ctx, m, deliver_at) < d
                    {
                        tally.resource = true;
                        continue;
                    }
                    if book_bucket
                        && self.bucket_free(ctx, gs, self.bucket_of(deliver_at)) < d
                    {
                        tally.bucket = true;
                        continue;
                    }
                    // Recorder and transmit budget along the relay chain:
                    // every node before the tail holds the data for one hop
                    // interval and transmits it onward.
                    let mut path_ok = true;
                    {
                        let mut node = m;
                        let mut chain = vec![m];
                        while node != req.holder {
                            node = parent[node];
                            chain.push(node);
                        }
                        chain.reverse();
                        'hops: for (j, &sat) in chain[..chain.len() - 1].iter().enumerate() {
                            let seg = t + j as u32 * k;
                            if self.store_free_over_excl(ctx, sat, seg, seg + k, key) < d {
                                path_ok = false;
                                break 'hops;
                            }
                            for q in 0..k {
                                if self.tx_free(ctx, sat, seg + q) < d / k as f64 {
                                    path_ok = false;
                                    break 'hops;
                                }
                            }
                        }
                    }
                    if !path_ok {
                        tally.resource = true;
                        continue;
                    }
                    best = Some((deliver_at, h, m));
                }
            }
        }
        let (deliver_at, hops, m) = best?;

        let mut path = vec![m];
        let mut node = m;
        while node != req.holder {
            node = parent[node];
            path.push(node);
        }
        path.reverse();

        let plan = DeliveryPlan {
            task_id: req.task_id,
            fragment: req.fragment,
            mode: if hops == 0 {
                PlanMode::PcoOnly
            } else {
                PlanMode::IslOnly
            },
            gs,
            source: req.holder,
            tail: m,
            planned_at: t,
            path,
            crossing_tick: if hops == 0 { None } else { Some(t) },
            hop_ticks: k,
            deliver_at,
            volume_mb: d,
        };
        if book_bucket {
            self.book_bucket(plan.key(), gs, self.bucket_of(deliver_at), d);
        }
        self.book_plan(&plan);
        Some(plan)
    }

    /// Relay to whichever admissible station delivers earliest — the urgent
    /// fallback when diffusion finds nothing.
    fn plan_isl_any(
        &mut self,
        ctx: &SchedCtx<'_>,
        view: &EpochView<'_>,
        req: &PlanRequest,
        tally: &mut BlockTally,
    ) -> Option<DeliveryPlan> {
        let (lat, lon) = crate::baselines::subpoint(
            ctx.propagator,
            ctx.constellation,
            req.holder,
            view.tick,
        );
        let mut order: Vec<(u64, GsId)> = ctx
            .stations
            .iter()
            .filter(|g| view.gs_ok[g.id])
            .map(|g| {
                let km =
                    crate::topology::great_circle_km(lat, lon, g.latitude_deg, g.longitude_deg);
                (km as u64, g.id)
            })
            .collect();
        order.sort();
        for (_, gs) in order.into_iter().take(20) {
            if let Some(plan) = self.plan_isl_only(ctx, view, req, gs, true, true, tally) {
                return Some(plan);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests;
