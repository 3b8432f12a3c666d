//! Joint crossing-tick assignment by min-cost max-flow.
//!
//! Tasks that diffusion sent to another plane all draw on the same scarce
//! pools: recorder space on the receiving plane's member between arrival
//! and offload, and that member's transmit budget at the offload tick.
//! Picking crossing ticks one task at a time lets early tasks strand later
//! ones, so each epoch assigns them jointly: every task contributes up to
//! [`MAX_CANDIDATE_SLOTS`] candidate crossing ticks as unit-capacity arcs
//! costing their deferral, receiving-side recorder ticks become a chain of
//! shared-capacity arcs, and offload transmissions become capacitated
//! exits. A min-cost max-flow then crosses as many tasks as possible,
//! preferring early ticks.
//!
//! The chain treats in-transit units as anonymous, so the flow's internal
//! pairing of chain entries to exits can differ from the tasks' actual
//! carry intervals (a unit may exit through another task's earlier offload
//! arc). Aggregate occupancy is pairing-invariant only when the exit
//! multiset matches, so the final word belongs to a sequential
//! re-validation of every assigned slot against the booking ledgers. A slot
//! that fails re-validation is repaired greedily to the earliest tick that
//! still fits; tasks with no fit are reported unassigned and the caller
//! falls back to relaying.

use super::diffusion::HybridAssignment;
use super::*;
use crate::flow::FlowNetwork;

/// Upper bound on candidate crossing ticks offered per task to one flow.
pub const MAX_CANDIDATE_SLOTS: usize = 30;

/// Usage accepted earlier in this call but not yet booked in the scheduler
/// ledgers (booking happens after all slots are returned): extra transmit
/// and recorder megabits per (satellite, tick).
#[derive(Default)]
struct Pending {
    tx: BTreeMap<(SatId, u32), f64>,
    store: BTreeMap<(SatId, u32), f64>,
}

impl Pending {
    fn tx_at(&self, sat: SatId, tick: u32) -> f64 {
        self.tx.get(&(sat, tick)).copied().unwrap_or(0.0)
    }

    fn store_at(&self, sat: SatId, tick: u32) -> f64 {
        self.store.get(&(sat, tick)).copied().unwrap_or(0.0)
    }

    fn add_tx(&mut self, sat: SatId, tick: u32, mb: f64) {
        *self.tx.entry((sat, tick)).or_insert(0.0) += mb;
    }

    fn add_store(&mut self, sat: SatId, start: u32, end: u32, mb: f64) {
        for u in start..end {
            *self.store.entry((sat, u)).or_insert(0.0) += mb;
        }
    }
}

/// Choose a crossing tick for each assignment, or `None` when no tick fits.
/// Read-only against the scheduler; the caller books the winning plans.
pub(super) fn assign_slots(
    sched: &Scheduler,
    ctx: &SchedCtx<'_>,
    view: &EpochView<'_>,
    batch: &[HybridAssignment],
) -> Vec<Option<u32>> {
    let mut slots: Vec<Option<u32>> = vec![None; batch.len()];
    let mut pending = Pending::default();

    // Rounds keep the chain capacities meaningful: equal volumes make
    // "units of one task" a well-defined arc capacity, and unique holders
    // avoid the most common within-round transmit collision (two tasks
    // leaving the same satellite). Batch order is priority order, so
    // first-fit grouping keeps urgent tasks in the earliest rounds.
    let mut rounds: Vec<Vec<usize>> = Vec::new();
    for i in 0..batch.len() {
        let bits = batch[i].req.volume_mb.to_bits();
        let holder = batch[i].req.holder;
        let spot = rounds.iter_mut().find(|r| {
            batch[r[0]].req.volume_mb.to_bits() == bits
                && !r.iter().any(|&j| batch[j].req.holder == holder)
        });
        match spot {
            Some(r) => r.push(i),
            None => rounds.push(vec![i]),
        }
    }

    for round in rounds {
        assign_round(sched, ctx, view, batch, &round, &mut pending, &mut slots);
    }
    slots
}

fn assign_round(
    sched: &Scheduler,
    ctx: &SchedCtx<'_>,
    view: &EpochView<'_>,
    batch: &[HybridAssignment],
    round: &[usize],
    pending: &mut Pending,
    slots: &mut [Option<u32>],
) {
    let d = batch[round[0]].req.volume_mb;

    // Candidate ticks per task, earliest first, screened on the resources
    // private to the task (source/mid recorders, hop transmit budget). The
    // shared receiving-side pools are the flow's concern.
    let cands: Vec<Vec<u32>> = round
        .iter()
        .map(|&i| candidate_slots(sched, ctx, view, &batch[i], pending))
        .collect();

    let mut net = FlowNetwork::new(2);
    let (s_node, t_node) = (0, 1);

    // Chain nodes per (tail, tick), created lazily over each tail's span.
    let mut chain: BTreeMap<(SatId, u32), usize> = BTreeMap::new();
    let mut tail_span: BTreeMap<SatId, (u32, u32)> = BTreeMap::new();
    for (pos, &i) in round.iter().enumerate() {
        let a = &batch[i];
        let tail = *a.path.last().unwrap();
        let hops = a.path.len() as u32 - 1;
        let Some(&first) = cands[pos].first() else {
            continue;
        };
        let lo = first + hops * a.hop_ticks;
        let hi = a.deliver_at;
        let span = tail_span.entry(tail).or_insert((lo, hi));
        span.0 = span.0.min(lo);
        span.1 = span.1.max(hi);
    }
    for (&tail, &(lo, hi)) in &tail_span {
        let mut prev = net.add_node();
        chain.insert((tail, lo), prev);
        for u in lo..hi {
            let next = net.add_node();
            chain.insert((tail, u + 1), next);
            let free = sched.store_free(ctx, tail, u) - pending.store_at(tail, u);
            let cap = (free / d).floor().max(0.0) as i64;
            net.add_edge(prev, next, cap, 0);
            prev = next;
        }
    }

    // One exit arc per distinct (tail, offload tick), shared by every task
    // offloading there.
    let mut exits: BTreeMap<(SatId, u32), crate::flow::EdgeId> = BTreeMap::new();
    for (pos, &i) in round.iter().enumerate() {
        if cands[pos].is_empty() {
            continue;
        }
        let a = &batch[i];
        let tail = *a.path.last().unwrap();
        exits.entry((tail, a.deliver_at)).or_insert_with(|| {
            let node = chain[&(tail, a.deliver_at)];
            let free = sched.tx_free(ctx, tail, a.deliver_at) - pending.tx_at(tail, a.deliver_at);
            let cap = (free / d).floor().max(0.0) as i64;
            net.add_edge(node, t_node, cap, 0)
        });
    }

    // Task nodes and their candidate slot arcs (cost = deferral).
    let mut slot_arcs: Vec<(usize, u32, crate::flow::EdgeId)> = Vec::new();
    for (pos, &i) in round.iter().enumerate() {
        let a = &batch[i];
        if cands[pos].is_empty() {
            continue;
        }
        let tail = *a.path.last().unwrap();
        let hops = a.path.len() as u32 - 1;
        let task_node = net.add_node();
        net.add_edge(s_node, task_node, 1, 0);
        for &s in &cands[pos] {
            let arrive = s + hops * a.hop_ticks;
            let eid = net.add_edge(
                task_node,
                chain[&(tail, arrive)],
                1,
                (s - a.planned_at) as i64,
            );
            slot_arcs.push((pos, s, eid));
        }
    }

    net.min_cost_flow(s_node, t_node, round.len() as i64);

    let mut proposed: Vec<Option<u32>> = vec![None; round.len()];
    for (pos, s, eid) in slot_arcs {
        if net.flow_on(eid) == 1 {
            proposed[pos] = Some(s);
        }
    }

    // Sequential re-validation in priority order. Accepted footprints join
    // `pending` immediately so later tasks see them; rejected or unassigned
    // tasks retry greedily at the earliest tick that truly fits.
    for (pos, &i) in round.iter().enumerate() {
        let a = &batch[i];
        let slot = match proposed[pos] {
            Some(s) if footprint_fits(sched, ctx, a, s, pending, true) => Some(s),
            _ => earliest_fit(sched, ctx, view, a, pending),
        };
        if let Some(s) = slot {
            commit(a, s, pending);
            slots[i] = Some(s);
        }
    }
}

/// Candidate crossing ticks for one assignment: every tick in
/// `[now, deliver_at - hops * hop_ticks]` whose task-private resources
/// clear, truncated to [`MAX_CANDIDATE_SLOTS`].
fn candidate_slots(
    sched: &Scheduler,
    ctx: &SchedCtx<'_>,
    view: &EpochView<'_>,
    a: &HybridAssignment,
    pending: &Pending,
) -> Vec<u32> {
    let hops = a.path.len() as u32 - 1;
    let t = view.tick;
    let hi = a.deliver_at - hops * a.hop_ticks;
    let mut out = Vec::new();
    for s in t..=hi {
        if footprint_fits(sched, ctx, a, s, pending, false) {
            out.push(s);
            if out.len() == MAX_CANDIDATE_SLOTS {
                break;
            }
        }
    }
    out
}

/// Earliest crossing tick whose full footprint clears the ledgers and the
/// batch's pending usage — the repair path, and the definition the flow's
/// answer is held to.
fn earliest_fit(
    sched: &Scheduler,
    ctx: &SchedCtx<'_>,
    view: &EpochView<'_>,
    a: &HybridAssignment,
    pending: &Pending,
) -> Option<u32> {
    let hops = a.path.len() as u32 - 1;
    let hi = a.deliver_at - hops * a.hop_ticks;
    (view.tick..=hi).find(|&s| footprint_fits(sched, ctx, a, s, pending, true))
}

/// Check the resources a crossing at `s` actually uses. With
/// `shared: false`, only the task-private part (source and mid recorders,
/// hop transmit): the candidate pre-screen. With `shared: true`, also the
/// receiving-side recorder span and offload transmit: the full footprint.
fn footprint_fits(
    sched: &Scheduler,
    ctx: &SchedCtx<'_>,
    a: &HybridAssignment,
    s: u32,
    pending: &Pending,
    shared: bool,
) -> bool {
    let d = a.req.volume_mb;
    let k = a.hop_ticks;
    let key = (a.req.task_id, a.req.fragment);
    let hops = a.path.len() - 1;
    let tail = a.path[hops];
    let t = a.planned_at;

    // Source recorder holds from planning until the first hop completes;
    // its own materialization hold does not count against it.
    for u in t..s + k {
        if sched.store_free_over_excl(ctx, a.req.holder, u, u + 1, key) - pending.store_at(a.req.holder, u)
            < d
        {
            return false;
        }
    }
    // Mid recorders hold for one hop each.
    for (j, &sat) in a.path.iter().enumerate().skip(1).take(hops - 1) {
        let start = s + j as u32 * k;
        for u in start..start + k {
            if sched.store_free(ctx, sat, u) - pending.store_at(sat, u) < d {
                return false;
            }
        }
    }
    // Hop transmit budget, volume spread over each hop's ticks.
    let per_tick = d / k as f64;
    for (j, &sat) in a.path[..hops].iter().enumerate() {
        let start = s + j as u32 * k;
        for u in start..start + k {
            if sched.tx_free(ctx, sat, u) - pending.tx_at(sat, u) < per_tick {
                return false;
            }
        }
    }
    if shared {
        // Receiving-side carry and offload.
        let arrive = s + hops as u32 * k;
        for u in arrive..a.deliver_at {
            if sched.store_free(ctx, tail, u) - pending.store_at(tail, u) < d {
                return false;
            }
        }
        if sched.tx_free(ctx, tail, a.deliver_at) - pending.tx_at(tail, a.deliver_at) < d {
            return false;
        }
    }
    true
}

/// Record an accepted footprint, mirroring what booking the plan will add.
fn commit(a: &HybridAssignment, s: u32, pending: &mut Pending) {
    let plan = a.clone().into_plan(s);
    for (sat, tick, mb) in plan.transmissions() {
        pending.add_tx(sat, tick, mb);
    }
    for (sat, start, end) in plan.holdings() {
        pending.add_store(sat, start, end, plan.volume_mb);
    }
}
