//! Ground-station selection by plane-level traffic diffusion.
//!
//! For a task holding on satellite `s`, candidate planes are scanned own
//! plane first, then outward by alternating ring offsets (+1, -1, +2, -2,
//! ...). Within each plane, stations are ordered by how soon the plane's
//! phase-mapped member (the satellite sharing `s`'s in-plane index, i.e. the
//! one the data lands on after a fixed-column crossing) could offload. The
//! first candidate that clears deadline, admission, reported-charge, and
//! recorder screens wins — so load spreads across neighboring planes instead
//! of piling onto the geometrically nearest station.

use super::*;

/// Outcome of diffusion for one request.
pub(super) enum Assigned {
    /// Same-plane carry: the holder delivers it at `deliver_at`.
    Pco { gs: GsId, deliver_at: u32 },
    /// Cross-plane carry: needs a crossing tick from the flow stage.
    Hybrid(HybridAssignment),
    /// Fully planned already (relay routing under diffusion selection).
    Planned(DeliveryPlan),
}

/// A station assignment awaiting its crossing tick. The admission volume is
/// already booked; the crossing stage picks the tick jointly for the batch.
#[derive(Debug, Clone)]
pub(super) struct HybridAssignment {
    pub req: PlanRequest,
    pub gs: GsId,
    /// Crossing chain `holder ..= tail`, one member per plane stepped.
    pub path: Vec<SatId>,
    pub deliver_at: u32,
    pub hop_ticks: u32,
    pub planned_at: u32,
}

impl HybridAssignment {
    pub fn into_plan(self, crossing_tick: u32) -> DeliveryPlan {
        let tail = *self.path.last().expect("crossing path is nonempty");
        DeliveryPlan {
            task_id: self.req.task_id,
            fragment: self.req.fragment,
            mode: PlanMode::Hybrid,
            gs: self.gs,
            source: self.req.holder,
            tail,
            planned_at: self.planned_at,
            path: self.path,
            crossing_tick: Some(crossing_tick),
            hop_ticks: self.hop_ticks,
            deliver_at: self.deliver_at,
            volume_mb: self.req.volume_mb,
        }
    }
}

/// Scan candidates in diffusion order and claim the first feasible one.
/// Returns `None` when nothing fits; `tally` records what blocked the
/// time-feasible candidates so the failure can be classified.
pub(super) fn diffuse(
    sched: &mut Scheduler,
    ctx: &SchedCtx<'_>,
    view: &EpochView<'_>,
    req: &PlanRequest,
    tally: &mut BlockTally,
) -> Option<Assigned> {
    let t = view.tick;
    let c = ctx.constellation;
    let d = req.volume_mb;
    let key = (req.task_id, req.fragment);
    let src_orbit = c.satellites[req.holder].orbit_index;
    let k = Scheduler::hop_ticks(ctx, d);

    for delta in ctx.oan.offset_sequence() {
        if delta.abs() > sched.max_offset {
            break;
        }
        if sched.strategy.routing == RoutingPolicy::PcoWithhold && delta != 0 {
            // Withhold routing never leaves the holder's plane.
            break;
        }
        let orbit = ctx.oan.orbit_at_offset(src_orbit, delta);
        let tail = ctx.oan.phase_mapped_member(c, req.holder, orbit);
        if !view.sat_ok[tail] || !sched.battery_ok(ctx, view, tail) {
            continue;
        }

        // Stations this plane covers, soonest offload by the tail first.
        let mut cands: Vec<(u32, GsId)> = ctx.oan.nodes[orbit]
            .coverage
            .iter()
            .filter(|cov| view.gs_ok[cov.gs_id])
            .filter_map(|cov| {
                ctx.oan
                    .pco_delivery_time(c, tail, t, cov.gs_id)
                    .map(|wait| (wait, cov.gs_id))
            })
            .collect();
        cands.sort_unstable();

        for (wait, gs) in cands {
            let deliver_at = t + wait;
            if deliver_at > req.deadline_abs {
                // Waits are ascending: everything after is late too.
                break;
            }
            if sched.strategy.routing == RoutingPolicy::IslShortest {
                // Diffusion chooses the station; links do the moving.
                if let Some(plan) =
                    sched.plan_isl_only(ctx, view, req, gs, true, true, tally)
                {
                    return Some(Assigned::Planned(plan));
                }
                continue;
            }
            let delta_hops = delta.unsigned_abs() as u32;
            if delta != 0 && deliver_at < t + delta_hops * k {
                // No crossing tick could land the data before the window.
                continue;
            }
            let bucket = sched.bucket_of(deliver_at);
            if sched.bucket_free(ctx, gs, bucket) < d {
                tally.bucket = true;
                continue;
            }
            if delta == 0 {
                if sched.store_free_over_excl(ctx, req.holder, t, deliver_at, key) < d {
                    tally.resource = true;
                    continue;
                }
                if sched.tx_free(ctx, req.holder, deliver_at) < d {
                    tally.resource = true;
                    continue;
                }
                sched.book_bucket(key, gs, bucket, d);
                return Some(Assigned::Pco { gs, deliver_at });
            }
            // Cross-plane: build the fixed-column chain and screen it.
            let step = if delta > 0 { 1i64 } else { -1 };
            let mut path = vec![req.holder];
            for j in 1..=delta_hops as i64 {
                let o = ctx.oan.orbit_at_offset(src_orbit, step * j);
                path.push(ctx.oan.phase_mapped_member(c, req.holder, o));
            }
            debug_assert_eq!(*path.last().unwrap(), tail);
            if path
                .iter()
                .any(|&s| !view.sat_ok[s] || !sched.battery_ok(ctx, view, s))
            {
                continue;
            }
            // Cheap peeks; the crossing stage checks the full carry span.
            if deliver_at > t && sched.store_free(ctx, tail, deliver_at - 1) < d {
                tally.resource = true;
                continue;
            }
            if sched.tx_free(ctx, tail, deliver_at) < d {
                tally.resource = true;
                continue;
            }
            sched.book_bucket(key, gs, bucket, d);
            return Some(Assigned::Hybrid(HybridAssignment {
                req: req.clone(),
                gs,
                path,
                deliver_at,
                hop_ticks: k,
                planned_at: t,
            }));
        }
    }
    None
}
