//! Cross-cutting soundness checks, each packaged as a report the CLI can
//! print as text or JSON:
//!
//! - ring-decomposition routing is hop-optimal on every small +Grid torus;
//! - the battery model holds its invariants over randomized step sequences;
//! - the library scheduler stays within a declared objective gap of the
//!   enumerated optimum over a seeded cohort of tiny instances.
//!
//! Every check returns the evidence (counts, worst cases, violations), not
//! just a verdict, and its `pass` flag is computed from thresholds declared
//! here as constants.

use crate::constellation::{generate_walker, ResourceProfile, WalkerConfig};
use crate::energy::{
    compute_dod, life_increment, step_energy, BatteryState, EnergyParams, EnergyStep,
};
use crate::oan::OanGraph;
use crate::oracle::{oracle_gap, GapOutcome, OracleError, TinyInstance};
use crate::topology::GridTopology;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::VecDeque;
use std::fmt::Write as _;

/// Share of compared instances that must sit within [`GAP_LIMIT`].
pub const GAP_SHARE_REQUIRED: f64 = 0.90;
/// Per-instance relative objective gap limit.
pub const GAP_LIMIT: f64 = 0.10;
/// Required bound on the mean gap across compared instances.
pub const MEAN_GAP_LIMIT: f64 = 0.05;
/// Most negative gap tolerated before a comparison is treated as an
/// enumeration-family bug (the scheduler may undercut the slot-restricted
/// optimum by a sliver of battery life; see the oracle module).
pub const GAP_FLOOR: f64 = -1e-3;

// ---------------------------------------------------------------------------
// Routing optimality
// ---------------------------------------------------------------------------

/// One satellite pair where the ring decomposition disagreed with BFS.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RouteMismatch {
    pub planes: usize,
    pub sats_per_plane: usize,
    pub from: usize,
    pub to: usize,
    pub bfs_hops: u32,
    pub decomposed_hops: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct OanOptimalityReport {
    pub max_grid: usize,
    pub grids_checked: usize,
    pub pairs_checked: u64,
    /// First few disagreements, if any.
    pub mismatches: Vec<RouteMismatch>,
    pub pass: bool,
}

/// Verify, for every torus grid with 3..=`max_grid` planes and satellites
/// per plane, that the orbit-level route arithmetic (plane ring distance
/// plus in-plane ring distance) equals the true BFS hop count between every
/// ordered satellite pair. This is what justifies planning over plane-level
/// tables instead of a satellite-pair table.
pub fn check_oan_optimality(max_grid: usize) -> OanOptimalityReport {
    assert!((3..=8).contains(&max_grid), "grids above 8x8 add nothing but time");
    let mut report = OanOptimalityReport {
        max_grid,
        grids_checked: 0,
        pairs_checked: 0,
        mismatches: Vec::new(),
        pass: true,
    };
    for planes in 3..=max_grid {
        for spp in 3..=max_grid {
            let c = generate_walker(&WalkerConfig {
                num_orbits: planes,
                sats_per_orbit: spp,
                altitude_km: 550.0,
                inclination_deg: 53.0,
                phase_offset_deg: 0.0,
                resources: ResourceProfile {
                    battery_max_wmin: 5_000.0,
                    storage_capacity_mb: 1.0e5,
                    link_capacity_mbps: 1_000.0,
                },
            });
            let grid = GridTopology::build(&c);
            let oan = OanGraph::from_windows(&c, 1, &[], |_, _| Vec::new());
            let n = c.satellites.len();
            for from in 0..n {
                let dist = bfs_hops(&grid, from, n);
                for to in 0..n {
                    let sa = &c.satellites[from];
                    let sb = &c.satellites[to];
                    let ring_planes = oan.orbit_hops(sa.orbit_index, sb.orbit_index) as u32;
                    let di = sa.in_plane_index.abs_diff(sb.in_plane_index);
                    let ring_phase = di.min(spp - di) as u32;
                    let decomposed = ring_planes + ring_phase;
                    report.pairs_checked += 1;
                    if dist[to] != decomposed {
                        report.pass = false;
                        if report.mismatches.len() < 16 {
                            report.mismatches.push(RouteMismatch {
                                planes,
                                sats_per_plane: spp,
                                from,
                                to,
                                bfs_hops: dist[to],
                                decomposed_hops: decomposed,
                            });
                        }
                    }
                }
            }
            report.grids_checked += 1;
        }
    }
    report
}

fn bfs_hops(grid: &GridTopology, from: usize, n: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; n];
    dist[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(u) = q.pop_front() {
        for &v in &grid.neighbors[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist
}

// ---------------------------------------------------------------------------
// Energy invariants
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EnergyInvariantReport {
    pub sequences: usize,
    pub steps_checked: u64,
    /// First few violated invariants, if any.
    pub violations: Vec<String>,
    pub pass: bool,
}

/// Drive randomized load/illumination sequences through the battery model
/// and check every step against the model's contract:
///
/// - the level stays in [0, capacity] and the depth of discharge matches it;
/// - charging or neutral steps consume zero life, strict discharges consume
///   exactly `exp(delta_dod)` (cross-checked against an independent `exp`);
/// - cumulative life never decreases and equals the sum of increments;
/// - clamp flags fire exactly when the raw balance left [0, capacity];
/// - a dark idle step is an identity.
pub fn check_energy_invariants(sequences: usize, seed: u64) -> EnergyInvariantReport {
    let params = EnergyParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EnergyInvariantReport {
        sequences,
        steps_checked: 0,
        violations: Vec::new(),
        pass: true,
    };
    let mut violate = |r: &mut EnergyInvariantReport, msg: String| {
        r.pass = false;
        if r.violations.len() < 16 {
            r.violations.push(msg);
        }
    };

    for seq in 0..sequences {
        // Vary the starting level so deep-discharge regions get visited.
        let start = rng.gen_range(0.0..=params.battery_max_wmin);
        let mut st = BatteryState {
            level_wmin: start,
            dod: compute_dod(start, params.battery_max_wmin),
            life_consumed: 0.0,
        };
        let mut life_sum = 0.0;
        for step in 0..32 {
            let sunlit = rng.gen_bool(0.6);
            let tx = if rng.gen_bool(0.3) {
                rng.gen_range(0.0..40_000.0)
            } else {
                0.0
            };
            let io = if rng.gen_bool(0.5) {
                rng.gen_range(0.0..5.0e7)
            } else {
                0.0
            };
            let prev = st;
            let out = step_energy(&mut st, &params, sunlit, tx, io, 1.0);
            report.steps_checked += 1;

            let ctx = || format!("seq {seq} step {step} (tx {tx:.1}, io {io:.1}, sunlit {sunlit})");
            check_step(&mut report, &mut violate, &params, &prev, &st, &out, sunlit, tx, io, &ctx);
            life_sum += out.life_increment;
            if (st.life_consumed - life_sum).abs() > 1e-9 {
                violate(
                    &mut report,
                    format!("{}: cumulative life drifted from the increment sum", ctx()),
                );
            }
        }
        // A dark idle step changes nothing, wherever the sequence ended.
        let before = st;
        let out = step_energy(&mut st, &params, false, 0.0, 0.0, 1.0);
        report.steps_checked += 1;
        if out.level_wmin != before.level_wmin || out.life_increment != 0.0 {
            violate(
                &mut report,
                format!("seq {seq}: dark idle step is not an identity"),
            );
        }
    }

    // The model's worked example: a discharge deepening DoD by exactly 0.5
    // costs exactly e^0.5.
    let inc = life_increment(0.25, 0.75);
    if (inc - 0.5f64.exp()).abs() > 1e-12 {
        violate(
            &mut report,
            format!("worked example: DoD +0.5 cost {inc}, expected e^0.5"),
        );
    }
    report
}

#[allow(clippy::too_many_arguments)]
fn check_step(
    report: &mut EnergyInvariantReport,
    violate: &mut impl FnMut(&mut EnergyInvariantReport, String),
    params: &EnergyParams,
    prev: &BatteryState,
    cur: &BatteryState,
    out: &EnergyStep,
    sunlit: bool,
    tx: f64,
    io: f64,
    ctx: &dyn Fn() -> String,
) {
    if !(0.0..=params.battery_max_wmin).contains(&cur.level_wmin) {
        violate(report, format!("{}: level {} out of bounds", ctx(), cur.level_wmin));
    }
    if (cur.dod - compute_dod(cur.level_wmin, params.battery_max_wmin)).abs() > 1e-12 {
        violate(report, format!("{}: DoD inconsistent with level", ctx()));
    }
    let expected_inc = if cur.dod <= prev.dod {
        0.0
    } else {
        (cur.dod - prev.dod).exp()
    };
    if (out.life_increment - expected_inc).abs() > 1e-12 {
        violate(
            report,
            format!(
                "{}: life increment {} but the DoD transition implies {}",
                ctx(),
                out.life_increment,
                expected_inc
            ),
        );
    }
    if out.life_increment < 0.0 || cur.life_consumed < prev.life_consumed {
        violate(report, format!("{}: life went backwards", ctx()));
    }
    // Clamp flags must mirror the raw energy balance.
    let solar = if sunlit { params.solar_power_w } else { 0.0 };
    let raw = prev.level_wmin + solar
        - params.kappa_wmin_per_mb * tx
        - params.zeta_wmin_per_mb * io;
    if out.clamped_empty != (raw < 0.0) || out.clamped_full != (raw > params.battery_max_wmin) {
        violate(report, format!("{}: clamp flags disagree with the raw balance", ctx()));
    }
    let expect_level = raw.clamp(0.0, params.battery_max_wmin);
    if (cur.level_wmin - expect_level).abs() > 1e-9 {
        violate(report, format!("{}: level arithmetic off", ctx()));
    }
}

// ---------------------------------------------------------------------------
// Scheduler vs oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub instances: usize,
    pub compared: usize,
    pub scheduler_failed: usize,
    pub both_infeasible: usize,
    /// Scheduler plans that broke evaluator rules — always a bug.
    pub scheduler_invalid: usize,
    /// Feasible instances the enumeration family missed — always a bug.
    pub oracle_missed: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub min_gap: f64,
    pub within_limit: usize,
    /// Worst (seed, gap) pairs for inspection.
    pub worst: Vec<(u64, f64)>,
    pub pass: bool,
}

/// Compare the library scheduler against the enumerated optimum on
/// `instances` seeded tiny instances and summarize the relative objective
/// gaps. Passing requires ≥ [`GAP_SHARE_REQUIRED`] of compared instances at
/// or under [`GAP_LIMIT`], a mean gap at or under [`MEAN_GAP_LIMIT`], at
/// least [`GAP_SHARE_REQUIRED`] of instances comparable at all, and zero
/// bug-class outcomes.
pub fn check_scheduler_vs_oracle(instances: usize, seed: u64) -> Result<GapReport, OracleError> {
    let mut gaps: Vec<(u64, f64)> = Vec::new();
    let mut report = GapReport {
        instances,
        compared: 0,
        scheduler_failed: 0,
        both_infeasible: 0,
        scheduler_invalid: 0,
        oracle_missed: 0,
        mean_gap: 0.0,
        max_gap: 0.0,
        min_gap: 0.0,
        within_limit: 0,
        worst: Vec::new(),
        pass: false,
    };
    for i in 0..instances {
        let inst_seed = seed + i as u64;
        let inst = TinyInstance::random(inst_seed);
        match oracle_gap(&inst)? {
            GapOutcome::Compared { gap, .. } => {
                if gap < GAP_FLOOR {
                    report.oracle_missed += 1;
                } else {
                    gaps.push((inst_seed, gap));
                }
            }
            GapOutcome::SchedulerFailed { .. } => report.scheduler_failed += 1,
            GapOutcome::BothInfeasible => report.both_infeasible += 1,
            GapOutcome::SchedulerInvalid { .. } => report.scheduler_invalid += 1,
            GapOutcome::OracleMissedFeasible { .. } => report.oracle_missed += 1,
        }
    }
    report.compared = gaps.len();
    if !gaps.is_empty() {
        report.mean_gap = gaps.iter().map(|g| g.1).sum::<f64>() / gaps.len() as f64;
        report.max_gap = gaps.iter().map(|g| g.1).fold(f64::MIN, f64::max);
        report.min_gap = gaps.iter().map(|g| g.1).fold(f64::MAX, f64::min);
        report.within_limit = gaps.iter().filter(|g| g.1 <= GAP_LIMIT).count();
        let mut sorted = gaps.clone();
        sorted.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("gaps are finite"));
        report.worst = sorted.into_iter().take(5).collect();
    }
    let share_required = (GAP_SHARE_REQUIRED * instances as f64).ceil() as usize;
    report.pass = report.scheduler_invalid == 0
        && report.oracle_missed == 0
        && report.compared >= share_required
        && report.within_limit as f64 >= GAP_SHARE_REQUIRED * report.compared as f64
        && report.mean_gap <= MEAN_GAP_LIMIT;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Aggregate report
// ---------------------------------------------------------------------------

/// Everything the `report` CLI subcommand prints.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub routing: OanOptimalityReport,
    pub energy: EnergyInvariantReport,
    pub gaps: GapReport,
    pub pass: bool,
}

/// Run all three checks with the given sizes.
pub fn run_validation(
    max_grid: usize,
    energy_sequences: usize,
    gap_instances: usize,
    seed: u64,
) -> Result<ValidationSummary, OracleError> {
    let routing = check_oan_optimality(max_grid);
    let energy = check_energy_invariants(energy_sequences, seed);
    let gaps = check_scheduler_vs_oracle(gap_instances, seed)?;
    let pass = routing.pass && energy.pass && gaps.pass;
    Ok(ValidationSummary {
        routing,
        energy,
        gaps,
        pass,
    })
}

impl ValidationSummary {
    /// Human-readable rendering; the JSON side is plain serde.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "routing optimality   {}  ({} grids, {} pairs, {} mismatches)",
            verdict(self.routing.pass),
            self.routing.grids_checked,
            self.routing.pairs_checked,
            self.routing.mismatches.len()
        );
        let _ = writeln!(
            s,
            "energy invariants    {}  ({} sequences, {} steps, {} violations)",
            verdict(self.energy.pass),
            self.energy.sequences,
            self.energy.steps_checked,
            self.energy.violations.len()
        );
        let _ = writeln!(
            s,
            "scheduler vs oracle  {}  ({}/{} compared, {}/{} within {:.0}%, mean gap {:.2}%, max {:.2}%)",
            verdict(self.gaps.pass),
            self.gaps.compared,
            self.gaps.instances,
            self.gaps.within_limit,
            self.gaps.compared,
            GAP_LIMIT * 100.0,
            self.gaps.mean_gap * 100.0,
            self.gaps.max_gap * 100.0
        );
        let _ = writeln!(s, "overall              {}", verdict(self.pass));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_decomposition_matches_bfs_on_small_grids() {
        let report = check_oan_optimality(5);
        assert!(report.pass, "mismatches: {:?}", report.mismatches);
        assert_eq!(report.grids_checked, 9); // 3..=5 squared
        // Pairs: sum over grids of (planes * spp)^2.
        let expected: u64 = (3..=5u64)
            .flat_map(|p| (3..=5u64).map(move |m| (p * m).pow(2)))
            .sum();
        assert_eq!(report.pairs_checked, expected);
    }

    #[test]
    fn energy_invariants_hold_over_random_sequences() {
        let report = check_energy_invariants(300, 11);
        assert!(report.pass, "violations: {:?}", report.violations);
        assert_eq!(report.steps_checked, 300 * 33); // 32 random + 1 idle probe
    }

    #[test]
    fn gap_check_passes_on_a_small_cohort() {
        let report = check_scheduler_vs_oracle(10, 0).unwrap();
        assert!(
            report.pass,
            "compared {}, within {}, mean {}",
            report.compared, report.within_limit, report.mean_gap
        );
        assert_eq!(report.scheduler_invalid, 0);
        assert_eq!(report.oracle_missed, 0);
    }

    #[test]
    fn summary_renders_text_and_json() {
        let summary = run_validation(3, 50, 3, 0).unwrap();
        let text = summary.to_text();
        assert!(text.contains("routing optimality"));
        assert!(text.contains("overall"));
        let json = serde_json::to_string_pretty(&summary).unwrap();
        assert!(json.contains("\"pairs_checked\""));
        assert!(json.contains("\"mean_gap\""));
    }
}
