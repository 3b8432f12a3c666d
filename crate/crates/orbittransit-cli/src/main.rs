//! Command-line front end: scenario generation, single runs, strategy
//! comparisons, tiny-instance oracle checks, and the validation report.
//!
//! Every subcommand is non-interactive and deterministic: the same inputs
//! and seed produce byte-identical outputs. The output root defaults to the
//! current directory and can be overridden by the `ORBITTRANSIT_OUT`
//! environment variable or per-command `--out` flags.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use orbittransit::engine::{write_outputs, MetricsRecord, RunOutput, SimEngine};
use orbittransit::oan::{build_oan, OanGraph};
use orbittransit::oracle::{
    evaluate_objective, exhaustive_schedule, worked_contention_instance, ObjectiveValue,
    OracleReport, TinyInstance,
};
use orbittransit::scheduler::DeliveryPlan;
use orbittransit::scenario::{
    load_scenario, preset_config, RoutingPolicy, ScenarioConfig, SelectionPolicy, StrategyConfig,
    World, PRESET_NAMES,
};
use orbittransit::tasking::TaskId;
use orbittransit::validation::run_validation;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Write to stdout, exiting quietly when the consumer closed the pipe early
/// (e.g. `orbittransit run ... | head`); a panicking backtrace would be noise.
fn emit(text: std::fmt::Arguments<'_>) {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    if out.write_fmt(text).and_then(|()| out.flush()).is_err() {
        std::process::exit(0);
    }
}

macro_rules! say {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

#[derive(Parser)]
#[command(
    name = "orbittransit",
    version,
    about = "Discrete-time LEO constellation downlink simulator",
    after_help = "Output root: --out flag, else $ORBITTRANSIT_OUT, else the current directory."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a complete preset scenario file.
    Gen(GenArgs),
    /// Execute one scenario and write its run artifacts.
    Run(RunArgs),
    /// Run several strategies on one scenario and tabulate the results.
    Compare(CompareArgs),
    /// Exhaustively solve a tiny instance; optionally gap a supplied plan set.
    Oracle(OracleArgs),
    /// Run the validation battery (routing optimality, energy invariants,
    /// scheduler-vs-oracle gaps) or dump a scenario's coverage windows.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Preset name: starlink-s1, oneweb, telesat, or toy-4x4.
    #[arg(long, value_parser = parse_preset)]
    preset: String,
    /// Task-generation seed baked into the file.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; defaults to <root>/<preset>.scn.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file to execute.
    scenario: PathBuf,
    /// Override the station-selection policy: oan, nearest, nearest_available.
    #[arg(long, value_parser = parse_selection)]
    selection: Option<SelectionPolicy>,
    /// Override the routing policy: orbittransit, hybrid, isl_shortest,
    /// pco_withhold. `orbittransit` selects oan+hybrid and ignores
    /// --selection (the diffusion embeds its own station choice).
    #[arg(long, value_parser = parse_routing)]
    routing: Option<RoutingArg>,
    /// Override the engine seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the traffic intensity (1..=5).
    #[arg(long)]
    intensity: Option<u8>,
    /// Directory to place the run directory in; defaults to the output root.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario file to execute.
    scenario: PathBuf,
    /// Comma-separated strategy labels (at least two). Each label is either
    /// `orbittransit` or `<selection>+<routing>`, e.g. nearest+isl_shortest.
    #[arg(long, value_delimiter = ',', required = true)]
    strategies: Vec<String>,
    /// Comma-separated traffic intensities; defaults to the scenario's own.
    #[arg(long, value_delimiter = ',')]
    intensities: Vec<u8>,
    /// Comma-separated seeds; defaults to the scenario's own.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Directory for the comparison artifacts; defaults to
    /// <root>/compare-<scenario-stem>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Tiny-instance JSON file (see `--example` for the format).
    instance: Option<PathBuf>,
    /// Plan-set JSON (map of task id to plan) to price against the optimum.
    #[arg(long)]
    plans: Option<PathBuf>,
    /// Write the optimum plan set as JSON to this file.
    #[arg(long)]
    emit_plans: Option<PathBuf>,
    /// Write the bundled contention example instance to this file and exit.
    #[arg(long)]
    example: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Largest grid side for the routing-optimality sweep (3..=8).
    #[arg(long, default_value_t = 6)]
    max_grid: usize,
    /// Randomized battery sequences to drive.
    #[arg(long, default_value_t = 400)]
    energy_sequences: usize,
    /// Seeded tiny instances for the scheduler-vs-oracle gap check.
    #[arg(long, default_value_t = 12)]
    gap_instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the JSON form; defaults to <root>/validation.json.
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Instead of the validation battery: dump this scenario's coverage
    /// windows as CSV (orbit, gs, start, end).
    #[arg(long)]
    windows: Option<PathBuf>,
    /// Where to write the windows CSV; defaults to stdout.
    #[arg(long)]
    windows_out: Option<PathBuf>,
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Output root: explicit flag beats `ORBITTRANSIT_OUT` beats the current dir.
fn out_root(flag: Option<PathBuf>) -> PathBuf {
    if let Some(p) = flag {
        return p;
    }
    match std::env::var("ORBITTRANSIT_OUT") {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("."),
    }
}

fn parse_preset(s: &str) -> Result<String, String> {
    if PRESET_NAMES.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("unknown preset {s:?}; expected one of {PRESET_NAMES:?}"))
    }
}

fn parse_selection(s: &str) -> Result<SelectionPolicy, String> {
    match s {
        "oan" => Ok(SelectionPolicy::Oan),
        "nearest" => Ok(SelectionPolicy::Nearest),
        "nearest_available" => Ok(SelectionPolicy::NearestAvailable),
        _ => Err(format!(
            "unknown selection {s:?}; expected oan, nearest, or nearest_available"
        )),
    }
}

/// `orbittransit` is a whole-strategy alias, not just a routing mode, so it
/// needs its own arm.
#[derive(Clone, Copy, Debug)]
enum RoutingArg {
    OrbitTransit,
    Plain(RoutingPolicy),
}

fn parse_routing(s: &str) -> Result<RoutingArg, String> {
    match s {
        "orbittransit" => Ok(RoutingArg::OrbitTransit),
        "hybrid" => Ok(RoutingArg::Plain(RoutingPolicy::Hybrid)),
        "isl_shortest" => Ok(RoutingArg::Plain(RoutingPolicy::IslShortest)),
        "pco_withhold" => Ok(RoutingArg::Plain(RoutingPolicy::PcoWithhold)),
        _ => Err(format!(
            "unknown routing {s:?}; expected orbittransit, hybrid, isl_shortest, or pco_withhold"
        )),
    }
}

fn apply_strategy(
    cfg: &mut ScenarioConfig,
    selection: Option<SelectionPolicy>,
    routing: Option<RoutingArg>,
) {
    if let Some(s) = selection {
        cfg.strategy.selection = s;
    }
    match routing {
        Some(RoutingArg::OrbitTransit) => {
            cfg.strategy = StrategyConfig {
                selection: SelectionPolicy::Oan,
                routing: RoutingPolicy::Hybrid,
            };
        }
        Some(RoutingArg::Plain(r)) => cfg.strategy.routing = r,
        None => {}
    }
}

/// Parse a compare-list label: `orbittransit` or `<selection>+<routing>`.
fn parse_strategy_label(label: &str) -> Result<StrategyConfig> {
    if label == "orbittransit" {
        return Ok(StrategyConfig {
            selection: SelectionPolicy::Oan,
            routing: RoutingPolicy::Hybrid,
        });
    }
    let (sel, rout) = label
        .split_once('+')
        .ok_or_else(|| anyhow!("strategy {label:?} is not `orbittransit` or `selection+routing`"))?;
    let selection = parse_selection(sel).map_err(|e| anyhow!(e))?;
    let routing = match parse_routing(rout).map_err(|e| anyhow!(e))? {
        RoutingArg::OrbitTransit => bail!("use plain `orbittransit` instead of {label:?}"),
        RoutingArg::Plain(r) => r,
    };
    Ok(StrategyConfig { selection, routing })
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn cmd_gen(a: GenArgs) -> Result<()> {
    let mut cfg = preset_config(&a.preset).expect("preset names validated by clap");
    cfg.engine.seed = a.seed;
    let path = a
        .out
        .unwrap_or_else(|| out_root(None).join(format!("{}.scn", a.preset)));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(&path, cfg.to_config_string())
        .with_context(|| format!("writing {}", path.display()))?;
    say!("wrote {}\n", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = load_scenario(&a.scenario)
        .with_context(|| format!("loading {}", a.scenario.display()))?;
    apply_strategy(&mut cfg, a.selection, a.routing);
    if let Some(seed) = a.seed {
        cfg.engine.seed = seed;
    }
    if let Some(intensity) = a.intensity {
        cfg.tasks.intensity = intensity;
    }
    cfg.validate()?;

    let dir = out_root(a.out).join(run_label(&cfg));
    let out = SimEngine::new(cfg)?.run();
    write_outputs(&dir, &out).with_context(|| format!("writing {}", dir.display()))?;

    let s = &out.summary;
    say!(
        "{} seed {} intensity {}: {}/{} delivered (success {:.3}), {} failed \
         (timeout {}, congestion {}, overflow {}, outage {})\n",
        s.strategy,
        s.seed,
        s.intensity,
        s.tasks_delivered,
        s.tasks_created,
        s.success_ratio,
        s.tasks_failed,
        s.failed_timeout,
        s.failed_gs_congestion,
        s.failed_storage_overflow,
        s.failed_satellite_outage
    );
    say!(
        "mean delivery {:.1} min, mean path {:.2} hops, life {:.3} ({:.5}/delivered), \
         max queue {:.0} ms\n",
        s.mean_delivery_minutes,
        s.mean_path_hops,
        s.total_life_consumed,
        s.life_per_delivered,
        s.max_queue_delay_ms
    );
    say!("outputs: {}\n", dir.display());
    Ok(())
}

/// Run directory name: strategy, intensity, and seed, so sweeps never collide.
fn run_label(cfg: &ScenarioConfig) -> String {
    format!(
        "{}-i{}-seed{}",
        cfg.strategy.label().replace('+', "-"),
        cfg.tasks.intensity,
        cfg.engine.seed
    )
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareRow {
    strategy: String,
    intensity: u8,
    seed: u64,
    created: u32,
    delivered: u32,
    failed: u32,
    success_ratio: f64,
    mean_path_hops: f64,
    life_per_delivered: f64,
    total_life: f64,
    mean_load: f64,
    max_load: f64,
    max_queue_ms: f64,
    timeout: u32,
    congestion: u32,
    overflow: u32,
    outage: u32,
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let strategies: Vec<(String, StrategyConfig)> = a
        .strategies
        .iter()
        .map(|s| parse_strategy_label(s).map(|cfg| (s.clone(), cfg)))
        .collect::<Result<_>>()?;
    if strategies.len() < 2 {
        bail!("compare needs at least two strategies");
    }
    for (i, (label, _)) in strategies.iter().enumerate() {
        if strategies[..i].iter().any(|(l, _)| l == label) {
            bail!("strategy {label:?} listed twice");
        }
    }

    let base = load_scenario(&a.scenario)
        .with_context(|| format!("loading {}", a.scenario.display()))?;
    let intensities = if a.intensities.is_empty() {
        vec![base.tasks.intensity]
    } else {
        a.intensities.clone()
    };
    let seeds = if a.seeds.is_empty() {
        vec![base.engine.seed]
    } else {
        a.seeds.clone()
    };

    let stem = a
        .scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let dir = a
        .out
        .unwrap_or_else(|| out_root(None).join(format!("compare-{stem}")));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    // The constellation, station catalog, and visibility graph depend only on
    // the scenario's physical sections, so every run shares one build.
    let world = base.build_world()?;
    let oan = build_oan(
        &world.constellation,
        &world.stations,
        &world.propagator,
        base.run_ticks(),
        base.stations.elevation_threshold_deg,
    );

    let mut rows = Vec::new();
    for (label, strategy) in &strategies {
        for &intensity in &intensities {
            for &seed in &seeds {
                let mut cfg = base.clone();
                cfg.strategy = *strategy;
                cfg.tasks.intensity = intensity;
                cfg.engine.seed = seed;
                cfg.validate()?;
                let out = SimEngine::from_parts(cfg, world.clone(), oan.clone())?.run();
                rows.push(make_row(label, seed, &out));
            }
        }
    }

    let text = render_table(&rows);
    say!("{text}");
    std::fs::write(dir.join("comparison.txt"), &text)?;
    std::fs::write(dir.join("comparison.csv"), render_csv(&rows))?;
    write_plot_series(&dir, &strategies, &intensities, &rows)?;
    say!("outputs: {}\n", dir.display());
    Ok(())
}

fn make_row(label: &str, seed: u64, out: &RunOutput) -> CompareRow {
    let s = &out.summary;
    let (mean_load, max_load) = load_stats(&out.metrics);
    CompareRow {
        strategy: label.to_string(),
        intensity: s.intensity,
        seed,
        created: s.tasks_created,
        delivered: s.tasks_delivered,
        failed: s.tasks_failed,
        success_ratio: s.success_ratio,
        mean_path_hops: s.mean_path_hops,
        life_per_delivered: s.life_per_delivered,
        total_life: s.total_life_consumed,
        mean_load,
        max_load,
        max_queue_ms: s.max_queue_delay_ms,
        timeout: s.failed_timeout,
        congestion: s.failed_gs_congestion,
        overflow: s.failed_storage_overflow,
        outage: s.failed_satellite_outage,
    }
}

/// Time-mean of the per-tick mean station load, and the run max.
fn load_stats(metrics: &[MetricsRecord]) -> (f64, f64) {
    if metrics.is_empty() {
        return (0.0, 0.0);
    }
    let mean = metrics.iter().map(|m| m.mean_station_load).sum::<f64>() / metrics.len() as f64;
    let max = metrics
        .iter()
        .map(|m| m.max_station_load)
        .fold(0.0, f64::max);
    (mean, max)
}

const COMPARE_HEADER: [&str; 17] = [
    "strategy",
    "intensity",
    "seed",
    "created",
    "delivered",
    "failed",
    "success_ratio",
    "mean_path_hops",
    "life_per_delivered",
    "total_life",
    "mean_load",
    "max_load",
    "max_queue_ms",
    "timeout",
    "congestion",
    "overflow",
    "outage",
];

fn row_cells(r: &CompareRow) -> [String; 17] {
    [
        r.strategy.clone(),
        r.intensity.to_string(),
        r.seed.to_string(),
        r.created.to_string(),
        r.delivered.to_string(),
        r.failed.to_string(),
        format!("{:.4}", r.success_ratio),
        format!("{:.3}", r.mean_path_hops),
        format!("{:.5}", r.life_per_delivered),
        format!("{:.3}", r.total_life),
        format!("{:.4}", r.mean_load),
        format!("{:.4}", r.max_load),
        format!("{:.1}", r.max_queue_ms),
        r.timeout.to_string(),
        r.congestion.to_string(),
        r.overflow.to_string(),
        r.outage.to_string(),
    ]
}

fn render_csv(rows: &[CompareRow]) -> String {
    let mut out = COMPARE_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&row_cells(r).join(","));
        out.push('\n');
    }
    out
}

fn render_table(rows: &[CompareRow]) -> String {
    let cells: Vec<[String; 17]> = rows.iter().map(row_cells).collect();
    let mut widths: Vec<usize> = COMPARE_HEADER.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for (i, h) in COMPARE_HEADER.iter().enumerate() {
        let sep = if i + 1 == widths.len() { '\n' } else { ' ' };
        let _ = write!(out, "{:>width$}{}", h, sep, width = widths[i]);
    }
    for row in &cells {
        for (i, c) in row.iter().enumerate() {
            let sep = if i + 1 == widths.len() { '\n' } else { ' ' };
            let _ = write!(out, "{:>width$}{}", c, sep, width = widths[i]);
        }
    }
    out
}

/// One CSV per headline metric: x = intensity, one column per strategy,
/// values averaged over seeds.
fn write_plot_series(
    dir: &Path,
    strategies: &[(String, StrategyConfig)],
    intensities: &[u8],
    rows: &[CompareRow],
) -> Result<()> {
    let metrics: [(&str, fn(&CompareRow) -> f64); 4] = [
        ("success_ratio", |r| r.success_ratio),
        ("mean_path_hops", |r| r.mean_path_hops),
        ("life_per_delivered", |r| r.life_per_delivered),
        ("station_load", |r| r.mean_load),
    ];
    for (name, pick) in metrics {
        let mut out = String::from("intensity");
        for (label, _) in strategies {
            let _ = write!(out, ",{label}");
        }
        out.push('\n');
        for &i in intensities {
            let _ = write!(out, "{i}");
            for (label, _) in strategies {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.strategy == *label && r.intensity == i)
                    .map(pick)
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let _ = write!(out, ",{mean}");
            }
            out.push('\n');
        }
        std::fs::write(dir.join(format!("plot_{name}.csv")), out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    if let Some(path) = a.example {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, worked_contention_instance().to_json())
            .with_context(|| format!("writing {}", path.display()))?;
        say!("wrote {}\n", path.display());
        return Ok(());
    }
    let instance_path = a
        .instance
        .ok_or_else(|| anyhow!("an instance file is required (or use --example)"))?;
    let text = std::fs::read_to_string(&instance_path)
        .with_context(|| format!("reading {}", instance_path.display()))?;
    let inst = TinyInstance::from_json(&text)?;
    say!(
        "instance: {} tasks, {}x{} grid, {} stations, horizon {}\n",
        inst.tasks.len(),
        inst.planes,
        inst.sats_per_plane,
        inst.stations.len(),
        inst.horizon
    );

    let optimum = match exhaustive_schedule(&inst)? {
        OracleReport::Optimal { objective, plans } => {
            say!("optimum: {}\n", fmt_objective(&objective));
            for (id, p) in &plans {
                let cross = match p.crossing_tick {
                    Some(t) => format!("cross @{t}"),
                    None => "carry".into(),
                };
                say!(
                    "  task {id}: gs {}, path {:?}, {}, offload @{} ({})\n",
                    p.gs, p.path, cross, p.deliver_at, p.mode
                );
            }
            if let Some(path) = a.emit_plans {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                let mut json = serde_json::to_string_pretty(&plans)?;
                json.push('\n');
                std::fs::write(&path, json)
                    .with_context(|| format!("writing {}", path.display()))?;
                say!("plans written to {}\n", path.display());
            }
            Some(objective)
        }
        OracleReport::Infeasible => {
            say!("optimum: infeasible within enumeration bounds\n");
            None
        }
    };

    if let Some(plans_path) = a.plans {
        let text = std::fs::read_to_string(&plans_path)
            .with_context(|| format!("reading {}", plans_path.display()))?;
        let plans: BTreeMap<TaskId, DeliveryPlan> = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", plans_path.display()))?;
        match evaluate_objective(&inst, &plans) {
            Ok(supplied) => {
                say!("supplied: {}\n", fmt_objective(&supplied));
                match optimum {
                    Some(opt) => {
                        let abs = supplied.total - opt.total;
                        let rel = if opt.total > 1e-12 { abs / opt.total } else { abs };
                        say!("gap: absolute {abs:.6}, relative {:.2}%\n", rel * 100.0);
                    }
                    None => say!("gap: undefined (instance judged infeasible)\n"),
                }
            }
            Err(violations) => {
                say!("supplied: infeasible comparison\n");
                for v in violations.iter().take(8) {
                    say!("  violation: {v}\n");
                }
            }
        }
    }
    Ok(())
}

fn fmt_objective(o: &ObjectiveValue) -> String {
    format!(
        "life {:.6} + delay {} = {:.6}",
        o.life_term, o.delay_term, o.total
    )
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn cmd_report(a: ReportArgs) -> Result<()> {
    if let Some(scn) = a.windows {
        return dump_windows(&scn, a.windows_out);
    }
    let summary = run_validation(a.max_grid, a.energy_sequences, a.gap_instances, a.seed)?;
    say!("{}", summary.to_text());
    let json_path = a
        .json_out
        .unwrap_or_else(|| out_root(None).join("validation.json"));
    if let Some(dir) = json_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    std::fs::write(&json_path, json)
        .with_context(|| format!("writing {}", json_path.display()))?;
    say!("json: {}\n", json_path.display());
    if !summary.pass {
        std::process::exit(1);
    }
    Ok(())
}

/// Coverage-window table of a scenario as CSV: one line per contiguous
/// interval during which an orbital plane sees a station.
fn dump_windows(scenario: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = load_scenario(scenario)
        .with_context(|| format!("loading {}", scenario.display()))?;
    let world: World = cfg.build_world()?;
    let oan: OanGraph = build_oan(
        &world.constellation,
        &world.stations,
        &world.propagator,
        cfg.run_ticks(),
        cfg.stations.elevation_threshold_deg,
    );
    let mut csv = String::from("orbit,gs,start,end\n");
    for node in &oan.nodes {
        for cov in &node.coverage {
            for w in &cov.union_windows {
                let _ = writeln!(csv, "{},{},{},{}", node.orbit, cov.gs_id, w.start, w.end);
            }
        }
    }
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, csv)
                .with_context(|| format!("writing {}", path.display()))?;
            say!("wrote {}\n", path.display());
        }
        None => say!("{csv}"),
    }
    Ok(())
}
