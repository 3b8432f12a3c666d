use super::*;
use crate::constellation::{generate_walker, ResourceProfile, WalkerConfig};
use crate::oan::Window;
use crate::topology::GroundStation;

const HORIZON: u32 = 200;
const VOL: f64 = 6_000.0;
const STORAGE: f64 = 100_000.0;
/// 1000 Mbps -> 60_000 Mb per tick of transmit budget.
const LINK: f64 = 1_000.0;
const BUCKET_MIN: u32 = 60;

struct TestWorld {
    c: Constellation,
    stations: Vec<GroundStation>,
    oan: OanGraph,
    grid: GridTopology,
    prop: Propagator,
    energy: EnergyParams,
}

impl TestWorld {
    fn ctx(&self) -> SchedCtx<'_> {
        SchedCtx {
            constellation: &self.c,
            stations: &self.stations,
            oan: &self.oan,
            grid: &self.grid,
            propagator: &self.prop,
            energy: &self.energy,
        }
    }

    fn scheduler(&self, selection: SelectionPolicy, routing: RoutingPolicy) -> Scheduler {
        Scheduler::new(
            StrategyConfig { selection, routing },
            BUCKET_MIN,
            self.c.satellites.len(),
        )
    }
}

struct ViewBufs {
    battery: Vec<f64>,
    sat_ok: Vec<bool>,
    gs_ok: Vec<bool>,
}

impl ViewBufs {
    fn full(world: &TestWorld) -> Self {
        Self {
            battery: vec![world.energy.battery_max_wmin; world.c.satellites.len()],
            sat_ok: vec![true; world.c.satellites.len()],
            gs_ok: vec![true; world.stations.len()],
        }
    }

    fn view(&self, tick: u32) -> EpochView<'_> {
        EpochView {
            tick,
            battery_view: &self.battery,
            sat_ok: &self.sat_ok,
            gs_ok: &self.gs_ok,
        }
    }
}

fn station(id: GsId, lat: f64, lon: f64, capacity_mbps: f64) -> GroundStation {
    GroundStation {
        id,
        latitude_deg: lat,
        longitude_deg: lon,
        capacity_mbps,
        antenna_count: 1,
    }
}

/// 4 planes x 4 members with hand-authored visibility windows. The closure
/// receives the constellation so tests can key windows off plane and
/// in-plane indices.
fn world_with_windows(
    stations: Vec<GroundStation>,
    link_mbps: f64,
    windows: impl Fn(&Constellation, SatId, GsId) -> Vec<Window>,
) -> TestWorld {
    let cfg = WalkerConfig {
        num_orbits: 4,
        sats_per_orbit: 4,
        altitude_km: 550.0,
        inclination_deg: 53.0,
        phase_offset_deg: 0.0,
        resources: ResourceProfile {
            battery_max_wmin: 5_000.0,
            storage_capacity_mb: STORAGE,
            link_capacity_mbps: link_mbps,
        },
    };
    let c = generate_walker(&cfg);
    let gs_ids: Vec<GsId> = stations.iter().map(|g| g.id).collect();
    let oan = OanGraph::from_windows(&c, HORIZON, &gs_ids, |s, g| windows(&c, s, g));
    let grid = GridTopology::build(&c);
    TestWorld {
        c,
        stations,
        oan,
        grid,
        prop: Propagator {
            earth_rotation: true,
        },
        energy: EnergyParams::default(),
    }
}

fn request(task_id: TaskId, holder: SatId, t: u32, deadline_abs: u32, urgent: bool) -> PlanRequest {
    PlanRequest {
        task_id,
        fragment: 0,
        holder,
        created_at: t,
        deadline_abs,
        volume_mb: VOL,
        urgent,
    }
}

/// Windows for the "two planes, two stations" world used by several tests:
/// plane 1 reaches station 0 at [30, 32), plane 2 reaches station 1 at
/// [5, 7), uniformly across members.
fn ladder_windows(c: &Constellation, sat: SatId, gs: GsId) -> Vec<Window> {
    match (c.satellites[sat].orbit_index, gs) {
        (1, 0) => vec![Window { start: 30, end: 32 }],
        (2, 1) => vec![Window { start: 5, end: 7 }],
        _ => Vec::new(),
    }
}

#[test]
fn carry_only_plan_books_all_resources() {
    let w = world_with_windows(vec![station(0, 0.0, 0.0, 100.0)], LINK, |c, s, g| {
        match (c.satellites[s].orbit_index, g) {
            (0, 0) => vec![Window { start: 3, end: 5 }],
            _ => Vec::new(),
        }
    });
    let holder = w.c.member_at(0, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    let ctx = w.ctx();

    let plan = sched
        .plan_task(&ctx, &bufs.view(0), &request(1, holder, 0, 50, false))
        .expect("carry plan fits");
    assert_eq!(plan.mode, PlanMode::PcoOnly);
    assert_eq!(plan.gs, 0);
    assert_eq!(plan.deliver_at, 3);
    assert_eq!(plan.path, vec![holder]);
    assert_eq!(plan.crossing_tick, None);

    // Recorder held over [0, 3), freed at the offload tick.
    assert_eq!(sched.store_free(&ctx, holder, 0), STORAGE - VOL);
    assert_eq!(sched.store_free(&ctx, holder, 2), STORAGE - VOL);
    assert_eq!(sched.store_free(&ctx, holder, 3), STORAGE);
    // Offload transmission at tick 3.
    assert_eq!(sched.tx_free(&ctx, holder, 3), LINK * 60.0 - VOL);
    assert_eq!(sched.tx_free(&ctx, holder, 2), LINK * 60.0);
    // Admission volume booked in the delivery bucket.
    assert_eq!(
        sched.bucket_free(&ctx, 0, 0),
        100.0 * 60.0 * BUCKET_MIN as f64 - VOL
    );
}

#[test]
fn own_plane_wins_even_when_slower() {
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 100.0), station(1, 20.0, 20.0, 100.0)],
        LINK,
        ladder_windows,
    );
    let holder = w.c.member_at(1, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    let plan = sched
        .plan_task(&w.ctx(), &bufs.view(0), &request(1, holder, 0, 40, false))
        .expect("own-plane carry fits the deadline");
    assert_eq!(plan.mode, PlanMode::PcoOnly);
    assert_eq!(plan.gs, 0, "own plane preferred over a faster neighbor");
    assert_eq!(plan.deliver_at, 30);
}

#[test]
fn crosses_to_neighbor_plane_when_own_is_late() {
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 100.0), station(1, 20.0, 20.0, 100.0)],
        LINK,
        ladder_windows,
    );
    let holder = w.c.member_at(1, 0);
    let tail = w.c.member_at(2, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    let plan = sched
        .plan_task(&w.ctx(), &bufs.view(0), &request(1, holder, 0, 20, false))
        .expect("neighbor plane fits");
    assert_eq!(plan.mode, PlanMode::Hybrid);
    assert_eq!(plan.gs, 1);
    assert_eq!(plan.deliver_at, 5);
    assert_eq!(plan.path, vec![holder, tail]);
    assert_eq!(plan.tail, tail);
    assert_eq!(plan.crossing_tick, Some(0), "earliest crossing tick wins");
}

#[test]
fn withhold_routing_never_leaves_the_plane() {
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 100.0), station(1, 20.0, 20.0, 100.0)],
        LINK,
        ladder_windows,
    );
    let holder = w.c.member_at(1, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::PcoWithhold);
    let bufs = ViewBufs::full(&w);
    let err = sched
        .plan_task(&w.ctx(), &bufs.view(0), &request(1, holder, 0, 20, false))
        .unwrap_err();
    assert_eq!(err, FailureReason::Timeout);

    // With a deadline the own plane can meet, it still carries there.
    let plan = sched
        .plan_task(&w.ctx(), &bufs.view(0), &request(2, holder, 0, 40, false))
        .expect("own-plane carry");
    assert_eq!(plan.gs, 0);
    assert_eq!(plan.path.len(), 1);
}

#[test]
fn no_window_before_deadline_times_out() {
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 100.0), station(1, 20.0, 20.0, 100.0)],
        LINK,
        ladder_windows,
    );
    let holder = w.c.member_at(1, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    // Deadline 4: the neighbor's window at 5 and own plane's at 30 both miss.
    let err = sched
        .plan_task(&w.ctx(), &bufs.view(0), &request(1, holder, 0, 4, false))
        .unwrap_err();
    assert_eq!(err, FailureReason::Timeout);
}

#[test]
fn admission_exhaustion_reports_congestion() {
    // Station buckets hold 60 Mb/s * 60 s * 60 min = tiny vs the 6000 Mb task.
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 0.001), station(1, 20.0, 20.0, 0.001)],
        LINK,
        ladder_windows,
    );
    let holder = w.c.member_at(1, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    let err = sched
        .plan_task(&w.ctx(), &bufs.view(0), &request(1, holder, 0, 40, false))
        .unwrap_err();
    assert_eq!(err, FailureReason::GsCongestion);
}

#[test]
fn depleted_reported_charge_diverts_to_other_plane() {
    let w = world_with_windows(
        vec![
            station(0, 0.0, 0.0, 100.0),
            station(1, 20.0, 20.0, 100.0),
            station(2, -20.0, -20.0, 100.0),
        ],
        LINK,
        |c, s, g| match (c.satellites[s].orbit_index, g) {
            (1, 0) => vec![Window { start: 30, end: 32 }],
            (2, 1) => vec![Window { start: 5, end: 7 }],
            (0, 2) => vec![Window { start: 8, end: 10 }],
            _ => Vec::new(),
        },
    );
    let holder = w.c.member_at(1, 0);
    let preferred_tail = w.c.member_at(2, 0);
    let fallback_tail = w.c.member_at(0, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let mut bufs = ViewBufs::full(&w);
    bufs.battery[preferred_tail] = 0.0; // reported below the floor
    let plan = sched
        .plan_task(&w.ctx(), &bufs.view(0), &request(1, holder, 0, 20, false))
        .expect("other neighbor still fits");
    assert_eq!(plan.gs, 2, "depleted plane skipped");
    assert_eq!(plan.tail, fallback_tail);
    assert_eq!(plan.deliver_at, 8);
}

#[test]
fn crossing_defers_until_receiving_recorder_frees() {
    let w = world_with_windows(
        vec![station(0, 20.0, 20.0, 100.0)],
        LINK,
        |c, s, g| match (c.satellites[s].orbit_index, g) {
            (2, 0) => vec![Window { start: 12, end: 14 }],
            _ => Vec::new(),
        },
    );
    let holder = w.c.member_at(1, 0);
    let tail = w.c.member_at(2, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    // Receiving recorder nearly full until tick 11: any earlier arrival
    // cannot sit there.
    sched.reserve_storage(tail, 1, 11, STORAGE - 5_000.0);
    let bufs = ViewBufs::full(&w);
    let plan = sched
        .plan_task(&w.ctx(), &bufs.view(0), &request(1, holder, 0, 40, false))
        .expect("deferred crossing fits");
    assert_eq!(plan.mode, PlanMode::Hybrid);
    assert_eq!(
        plan.crossing_tick,
        Some(10),
        "crossing waits for the receiving recorder"
    );
    assert_eq!(plan.deliver_at, 12);
}

#[test]
fn batch_shares_receiving_recorder_units() {
    let w = world_with_windows(
        vec![station(0, 20.0, 20.0, 100.0)],
        LINK,
        |c, s, g| match (c.satellites[s].orbit_index, g) {
            (2, 0) => vec![Window { start: 12, end: 14 }],
            _ => Vec::new(),
        },
    );
    // Holders on planes 1 and 3 share in-plane index 0, so both cross to
    // the same receiving member on plane 2.
    let h1 = w.c.member_at(1, 0);
    let h3 = w.c.member_at(3, 0);
    let tail = w.c.member_at(2, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    // One task's worth of recorder headroom during the carry span.
    sched.reserve_storage(tail, 1, 12, STORAGE - 9_000.0);
    let bufs = ViewBufs::full(&w);
    let reqs = vec![
        request(1, h1, 0, 40, false),
        request(2, h3, 0, 40, false),
    ];
    let result = sched.schedule_epoch(&w.ctx(), &bufs.view(0), &reqs);
    assert!(result.failures.is_empty(), "{:?}", result.failures);
    assert_eq!(result.plans.len(), 2);
    let mut ticks: Vec<u32> = result
        .plans
        .iter()
        .map(|p| p.crossing_tick.expect("both cross"))
        .collect();
    ticks.sort_unstable();
    assert_eq!(
        ticks,
        vec![0, 11],
        "one task carries, the other crosses just in time"
    );
    for p in &result.plans {
        assert_eq!(p.tail, tail);
        assert_eq!(p.deliver_at, 12);
    }
    // Exactly one task occupies the shared recorder mid-span.
    assert_eq!(sched.store_free(&w.ctx(), tail, 5), 3_000.0);
}

#[test]
fn same_holder_tasks_cross_on_consecutive_ticks() {
    // Transmit budget of 100 Mbps * 60 s = exactly one task per tick.
    let mut w = world_with_windows(
        vec![station(0, 20.0, 20.0, 100.0)],
        100.0,
        |c, s, g| match (c.satellites[s].orbit_index, g) {
            (2, 0) => vec![Window { start: 12, end: 14 }],
            _ => Vec::new(),
        },
    );
    let holder = w.c.member_at(1, 0);
    let tail = w.c.member_at(2, 0);
    // Give the receiving member budget for both offloads at tick 12 while
    // the sender stays limited to one crossing per tick.
    w.c.satellites[tail].link_capacity_mbps = 200.0;
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    let reqs = vec![
        request(1, holder, 0, 40, false),
        request(2, holder, 0, 40, false),
    ];
    let result = sched.schedule_epoch(&w.ctx(), &bufs.view(0), &reqs);
    assert!(result.failures.is_empty(), "{:?}", result.failures);
    let mut ticks: Vec<u32> = result
        .plans
        .iter()
        .map(|p| p.crossing_tick.expect("both cross"))
        .collect();
    ticks.sort_unstable();
    assert_eq!(ticks, vec![0, 1], "sender budget spreads crossings out");
}

#[test]
fn offload_contention_falls_back_to_relay() {
    // Both tasks want the same receiving member and offload tick, but its
    // transmit budget fits only one offload; the loser relays to another
    // member of the receiving plane instead.
    let w = world_with_windows(
        vec![station(0, 20.0, 20.0, 100.0)],
        100.0,
        |c, s, g| match (c.satellites[s].orbit_index, g) {
            (2, 0) => vec![Window { start: 12, end: 14 }],
            _ => Vec::new(),
        },
    );
    let h1 = w.c.member_at(1, 0);
    let h3 = w.c.member_at(3, 0);
    let tail = w.c.member_at(2, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    let reqs = vec![
        request(1, h1, 0, 40, false),
        request(2, h3, 0, 40, false),
    ];
    let result = sched.schedule_epoch(&w.ctx(), &bufs.view(0), &reqs);
    assert!(result.failures.is_empty(), "{:?}", result.failures);
    assert_eq!(result.plans.len(), 2);
    let hybrid = result
        .plans
        .iter()
        .find(|p| p.mode == PlanMode::Hybrid)
        .expect("one crossing");
    let relay = result
        .plans
        .iter()
        .find(|p| p.mode == PlanMode::IslOnly)
        .expect("one relay");
    assert_eq!(hybrid.tail, tail);
    assert_ne!(relay.tail, tail, "relay lands on a different member");
    assert_eq!(relay.deliver_at, 12);
}

#[test]
fn cancel_restores_every_ledger() {
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 100.0), station(1, 20.0, 20.0, 100.0)],
        LINK,
        ladder_windows,
    );
    let holder = w.c.member_at(1, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    let ctx = w.ctx();
    let plan = sched
        .plan_task(&ctx, &bufs.view(0), &request(1, holder, 0, 40, false))
        .unwrap();
    assert_eq!(plan.deliver_at, 30);
    sched.cancel(plan.key());
    assert_eq!(sched.store_free(&ctx, holder, 10), STORAGE);
    assert_eq!(sched.tx_free(&ctx, holder, 30), LINK * 60.0);
    assert_eq!(
        sched.bucket_free(&ctx, 0, 0),
        100.0 * 60.0 * BUCKET_MIN as f64
    );
}

#[test]
fn cancel_from_keeps_elapsed_usage() {
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 100.0), station(1, 20.0, 20.0, 100.0)],
        LINK,
        ladder_windows,
    );
    let holder = w.c.member_at(1, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let bufs = ViewBufs::full(&w);
    let ctx = w.ctx();
    let plan = sched
        .plan_task(&ctx, &bufs.view(0), &request(1, holder, 0, 40, false))
        .unwrap();
    sched.cancel_from(plan.key(), 10);
    // Carry before the cut stays on the books; everything after is free.
    assert_eq!(sched.store_free(&ctx, holder, 5), STORAGE - VOL);
    assert_eq!(sched.store_free(&ctx, holder, 15), STORAGE);
    assert_eq!(sched.tx_free(&ctx, holder, 30), LINK * 60.0);
    assert_eq!(
        sched.bucket_free(&ctx, 0, 0),
        100.0 * 60.0 * BUCKET_MIN as f64,
        "undelivered admission volume returns"
    );
}

#[test]
fn materialization_hold_blocks_others_not_self() {
    let w = world_with_windows(vec![station(0, 0.0, 0.0, 100.0)], LINK, |c, s, g| {
        match (c.satellites[s].orbit_index, g) {
            (0, 0) => vec![Window { start: 3, end: 5 }],
            _ => Vec::new(),
        }
    });
    let holder = w.c.member_at(0, 0);
    let bufs = ViewBufs::full(&w);
    let ctx = w.ctx();

    // Another task's hold leaves too little room for a newcomer.
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    sched.place_hold((7, 0), holder, 0, 20, STORAGE - VOL + 500.0);
    let err = sched
        .plan_task(&ctx, &bufs.view(0), &request(8, holder, 0, 50, false))
        .unwrap_err();
    assert_eq!(err, FailureReason::StorageOverflow);

    // The hold's own task plans fine: its hold does not block itself, and
    // booking replaces the hold with exact intervals.
    let plan = sched
        .plan_task(&ctx, &bufs.view(0), &request(7, holder, 0, 50, false))
        .expect("hold owner plans");
    assert_eq!(plan.deliver_at, 3);
    assert_eq!(
        sched.store_free(&ctx, holder, 10),
        STORAGE,
        "hold released on booking; carry ends at the offload"
    );
}

#[test]
fn nearest_ignores_admission_but_available_checks_it() {
    // Two stations the holder's own plane passes; place station 0 under the
    // holder and station 1 far away.
    let probe = world_with_windows(vec![station(0, 0.0, 0.0, 100.0)], LINK, |_, _, _| Vec::new());
    let holder = probe.c.member_at(1, 0);
    let (lat, lon) = crate::baselines::subpoint(&probe.prop, &probe.c, holder, 0);

    let w = world_with_windows(
        vec![station(0, lat, lon, 100.0), station(1, lat, lon + 40.0, 100.0)],
        LINK,
        |c, s, g| match (c.satellites[s].orbit_index, g) {
            (1, 0) => vec![Window { start: 4, end: 6 }],
            (1, 1) => vec![Window { start: 6, end: 8 }],
            _ => Vec::new(),
        },
    );
    let bufs = ViewBufs::full(&w);
    let ctx = w.ctx();

    let mut nearest = w.scheduler(SelectionPolicy::Nearest, RoutingPolicy::PcoWithhold);
    // Exhaust station 0's admission window; nearest selection must not care.
    nearest.reserve_bucket(0, 0, 1e12);
    let plan = nearest
        .plan_task(&ctx, &bufs.view(0), &request(1, holder, 0, 40, false))
        .expect("nearest plans regardless of admission");
    assert_eq!(plan.gs, 0);
    assert_eq!(plan.deliver_at, 4);

    let mut avail = w.scheduler(SelectionPolicy::NearestAvailable, RoutingPolicy::PcoWithhold);
    avail.reserve_bucket(0, 0, 1e12);
    let plan = avail
        .plan_task(&ctx, &bufs.view(0), &request(2, holder, 0, 40, false))
        .expect("available selection diverts");
    assert_eq!(plan.gs, 1, "full station skipped");
    assert_eq!(plan.deliver_at, 6);
}

#[test]
fn nearest_with_relay_routing_crosses_planes() {
    let probe = world_with_windows(vec![station(0, 0.0, 0.0, 100.0)], LINK, |_, _, _| Vec::new());
    let holder = probe.c.member_at(1, 0);
    let (lat, lon) = crate::baselines::subpoint(&probe.prop, &probe.c, holder, 0);

    // The only station is covered by plane 2, not the holder's plane.
    let w = world_with_windows(
        vec![station(0, lat, lon, 100.0)],
        LINK,
        |c, s, g| match (c.satellites[s].orbit_index, g) {
            (2, 0) => vec![Window { start: 10, end: 12 }],
            _ => Vec::new(),
        },
    );
    let bufs = ViewBufs::full(&w);
    let ctx = w.ctx();

    let mut relay = w.scheduler(SelectionPolicy::Nearest, RoutingPolicy::IslShortest);
    let plan = relay
        .plan_task(&ctx, &bufs.view(0), &request(1, holder, 0, 40, false))
        .expect("relay reaches the covering plane");
    assert_eq!(plan.mode, PlanMode::IslOnly);
    assert_eq!(plan.path.len(), 2);
    assert_eq!(plan.deliver_at, 10);

    let mut withhold = w.scheduler(SelectionPolicy::Nearest, RoutingPolicy::PcoWithhold);
    let err = withhold
        .plan_task(&ctx, &bufs.view(0), &request(2, holder, 0, 40, false))
        .unwrap_err();
    assert_eq!(err, FailureReason::Timeout, "withhold cannot reach it");
}

#[test]
fn urgent_requests_relay_when_diffusion_finds_nothing() {
    // The receiving plane's phase-mapped member passes too late, but another
    // member of that plane passes early: only a relay can use it.
    let w = world_with_windows(
        vec![station(0, 20.0, 20.0, 100.0)],
        LINK,
        |c, s, g| match (c.satellites[s].orbit_index, c.satellites[s].in_plane_index, g) {
            (2, 0, 0) => vec![Window { start: 50, end: 52 }],
            (2, 2, 0) => vec![Window { start: 10, end: 12 }],
            _ => Vec::new(),
        },
    );
    let holder = w.c.member_at(1, 0);
    let early_member = w.c.member_at(2, 2);
    let bufs = ViewBufs::full(&w);
    let ctx = w.ctx();

    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let plan = sched
        .plan_task(&ctx, &bufs.view(0), &request(1, holder, 0, 20, true))
        .expect("urgent relay fallback");
    assert_eq!(plan.mode, PlanMode::IslOnly);
    assert_eq!(plan.tail, early_member);
    assert_eq!(plan.deliver_at, 10);
    assert_eq!(plan.path.len(), 4, "three link hops");

    let err = sched
        .plan_task(&ctx, &bufs.view(0), &request(2, holder, 0, 20, false))
        .unwrap_err();
    assert_eq!(err, FailureReason::Timeout, "routine traffic waits");
}

#[test]
fn faulted_holder_reports_outage() {
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 100.0), station(1, 20.0, 20.0, 100.0)],
        LINK,
        ladder_windows,
    );
    let holder = w.c.member_at(1, 0);
    let mut sched = w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid);
    let mut bufs = ViewBufs::full(&w);
    bufs.sat_ok[holder] = false;
    let result =
        sched.schedule_epoch(&w.ctx(), &bufs.view(0), &[request(1, holder, 0, 40, false)]);
    assert_eq!(
        result.failures,
        vec![(1, 0, FailureReason::SatelliteOutage)]
    );
}

#[test]
fn epoch_accounts_every_request_and_is_deterministic() {
    let w = world_with_windows(
        vec![station(0, 0.0, 0.0, 100.0), station(1, 20.0, 20.0, 100.0)],
        LINK,
        ladder_windows,
    );
    let reqs = vec![
        request(0, w.c.member_at(1, 0), 0, 40, false),
        request(1, w.c.member_at(1, 1), 0, 20, false),
        request(2, w.c.member_at(1, 2), 0, 4, false), // nothing fits
        request(3, w.c.member_at(3, 0), 0, 20, false), // reaches plane 2 at -1
        request(4, w.c.member_at(1, 3), 0, 40, true),
        request(5, w.c.member_at(0, 0), 0, 40, false), // no coverage anywhere
    ];
    let run = |mut sched: Scheduler| {
        let bufs = ViewBufs::full(&w);
        sched.schedule_epoch(&w.ctx(), &bufs.view(0), &reqs)
    };
    let a = run(w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid));
    let b = run(w.scheduler(SelectionPolicy::Oan, RoutingPolicy::Hybrid));

    assert_eq!(a.plans.len() + a.failures.len(), reqs.len());
    let keys: std::collections::BTreeSet<PlanKey> = a
        .plans
        .iter()
        .map(|p| p.key())
        .chain(a.failures.iter().map(|f| (f.0, f.1)))
        .collect();
    assert_eq!(keys.len(), reqs.len(), "every request accounted once");
    for p in &a.plans {
        let req = reqs.iter().find(|r| r.task_id == p.task_id).unwrap();
        assert!(p.deliver_at <= req.deadline_abs);
    }

    let ja = serde_json::to_string(&a.plans).unwrap();
    let jb = serde_json::to_string(&b.plans).unwrap();
    assert_eq!(ja, jb, "identical inputs, identical plans");
    assert_eq!(a.failures, b.failures);
}

#[test]
fn hop_duration_scales_with_volume() {
    let w = world_with_windows(vec![station(0, 0.0, 0.0, 100.0)], 100.0, |_, _, _| {
        Vec::new()
    });
    let ctx = w.ctx();
    // 100 Mbps -> 6000 Mb per tick.
    assert_eq!(Scheduler::hop_ticks(&ctx, 6_000.0), 1);
    assert_eq!(Scheduler::hop_ticks(&ctx, 6_001.0), 2);
    assert_eq!(Scheduler::hop_ticks(&ctx, 100.0), 1);
}
