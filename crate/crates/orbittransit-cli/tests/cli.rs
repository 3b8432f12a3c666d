//! End-to-end tests of the binary: every subcommand, its artifacts, its
//! error paths, and byte-level determinism across reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orbittransit"))
}

fn repo_scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_summary(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("summary.json")).expect("summary.json");
    serde_json::from_str(&text).expect("summary parses")
}

#[test]
fn gen_writes_a_parseable_scenario_and_rejects_unknown_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gen", "--preset", "toy-4x4", "--seed", "9"])
        .env("ORBITTRANSIT_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let path = tmp.path().join("toy-4x4.scn");
    assert!(stdout(&out).contains("toy-4x4.scn"));
    let cfg = orbittransit::scenario::load_scenario(&path).expect("generated file parses");
    assert_eq!(cfg.engine.seed, 9);

    let bad = bin()
        .args(["gen", "--preset", "galaxy-9"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("galaxy-9"));
}

#[test]
fn run_delivers_everything_on_the_bundled_toy_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(repo_scenario("toy.scn"))
        .args(["--routing", "orbittransit"])
        .env("ORBITTRANSIT_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("oan-hybrid-i1-seed0");
    for f in ["summary.json", "metrics.csv", "tasks.csv", "plans.json"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let summary = read_summary(&dir);
    assert_eq!(summary["success_ratio"], 1.0, "summary: {summary}");
    assert_eq!(summary["strategy"], "oan+hybrid");
}

#[test]
fn run_withholding_on_the_hotspot_toy_misses_deadlines() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(repo_scenario("toy.scn"))
        .args(["--routing", "pco_withhold", "--selection", "nearest"])
        .env("ORBITTRANSIT_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = read_summary(&tmp.path().join("nearest-pco_withhold-i1-seed0"));
    let failed = summary["tasks_failed"].as_u64().unwrap();
    assert!(failed > 0, "summary: {summary}");
}

#[test]
fn run_reports_parse_errors_with_line_numbers_and_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let scn = tmp.path().join("bad.scn");
    std::fs::write(&scn, "[engine]\nwarp_speed = 9\n").unwrap();
    let out = bin().arg("run").arg(&scn).output().unwrap();
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("line 2"), "stderr: {err}");
    assert!(err.contains("warp_speed"), "stderr: {err}");
}

#[test]
fn run_is_byte_identical_across_reruns() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    for tmp in [&tmp_a, &tmp_b] {
        let out = bin()
            .args(["run"])
            .arg(repo_scenario("toy.scn"))
            .args(["--routing", "orbittransit"])
            .env("ORBITTRANSIT_OUT", tmp.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for f in ["summary.json", "metrics.csv", "tasks.csv", "plans.json"] {
        let a = std::fs::read(tmp_a.path().join("oan-hybrid-i1-seed0").join(f)).unwrap();
        let b = std::fs::read(tmp_b.path().join("oan-hybrid-i1-seed0").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn compare_requires_two_strategies_and_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let single = bin()
        .args(["compare"])
        .arg(repo_scenario("toy.scn"))
        .args(["--strategies", "orbittransit"])
        .env("ORBITTRANSIT_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(!single.status.success());
    assert!(stderr(&single).contains("at least two"));

    let out = bin()
        .args(["compare"])
        .arg(repo_scenario("toy.scn"))
        .args(["--strategies", "orbittransit,nearest+pco_withhold"])
        .env("ORBITTRANSIT_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("compare-toy");
    let csv = std::fs::read_to_string(dir.join("comparison.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("strategy,intensity,seed"));
    assert_eq!(lines.count(), 2, "one row per strategy");
    assert!(dir.join("comparison.txt").exists());
    for plot in [
        "plot_success_ratio.csv",
        "plot_mean_path_hops.csv",
        "plot_life_per_delivered.csv",
        "plot_station_load.csv",
    ] {
        let text = std::fs::read_to_string(dir.join(plot)).unwrap();
        assert!(
            text.starts_with("intensity,orbittransit,nearest+pco_withhold"),
            "{plot}: {text}"
        );
    }
    // The table itself lands on stdout too.
    let text = stdout(&out);
    assert!(text.contains("success_ratio"));
    assert!(text.contains("orbittransit"));
}

#[test]
fn oracle_prices_plan_sets_against_the_optimum() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("tiny.json");
    let plans = tmp.path().join("best.json");

    let ex = bin()
        .args(["oracle", "--example"])
        .arg(&inst)
        .output()
        .unwrap();
    assert!(ex.status.success(), "{}", stderr(&ex));

    let solve = bin()
        .arg("oracle")
        .arg(&inst)
        .arg("--emit-plans")
        .arg(&plans)
        .output()
        .unwrap();
    assert!(solve.status.success(), "{}", stderr(&solve));
    let text = stdout(&solve);
    assert!(text.contains("optimum: life"), "stdout: {text}");
    assert!(text.contains("cross @10"), "stdout: {text}");

    // The optimum plan set gaps against itself at zero.
    let zero = bin()
        .arg("oracle")
        .arg(&inst)
        .arg("--plans")
        .arg(&plans)
        .output()
        .unwrap();
    assert!(zero.status.success(), "{}", stderr(&zero));
    assert!(
        stdout(&zero).contains("relative 0.00%"),
        "stdout: {}",
        stdout(&zero)
    );

    // Delaying the offload by one tick is feasible but strictly worse.
    let mut parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&plans).unwrap()).unwrap();
    let plan = parsed.as_object_mut().unwrap().get_mut("1").unwrap();
    plan["deliver_at"] = 13.into();
    let worse = tmp.path().join("worse.json");
    std::fs::write(&worse, serde_json::to_string(&parsed).unwrap()).unwrap();
    let gap = bin()
        .arg("oracle")
        .arg(&inst)
        .arg("--plans")
        .arg(&worse)
        .output()
        .unwrap();
    assert!(gap.status.success(), "{}", stderr(&gap));
    let text = stdout(&gap);
    assert!(text.contains("gap: absolute 1."), "stdout: {text}");

    // An empty plan set is an infeasible comparison, reported not crashed.
    let empty = tmp.path().join("empty.json");
    std::fs::write(&empty, "{}\n").unwrap();
    let inf = bin()
        .arg("oracle")
        .arg(&inst)
        .arg("--plans")
        .arg(&empty)
        .output()
        .unwrap();
    assert!(inf.status.success(), "{}", stderr(&inf));
    assert!(
        stdout(&inf).contains("infeasible comparison"),
        "stdout: {}",
        stdout(&inf)
    );
}

#[test]
fn oracle_rejects_oversized_instances() {
    let tmp = tempfile::tempdir().unwrap();
    let inst_path = tmp.path().join("big.json");
    let mut inst = orbittransit::oracle::worked_contention_instance();
    inst.planes = 40;
    std::fs::write(&inst_path, inst.to_json()).unwrap();
    let out = bin().arg("oracle").arg(&inst_path).output().unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("bounds"), "stderr: {}", stderr(&out));
}

#[test]
fn report_emits_text_and_json_and_dumps_windows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "report",
            "--max-grid",
            "3",
            "--energy-sequences",
            "50",
            "--gap-instances",
            "2",
        ])
        .env("ORBITTRANSIT_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for needle in ["routing optimality", "energy invariants", "scheduler vs oracle", "overall"] {
        assert!(text.contains(needle), "stdout: {text}");
    }
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("validation.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["pass"], true, "{json}");

    let windows = bin()
        .args(["report", "--windows"])
        .arg(repo_scenario("toy.scn"))
        .output()
        .unwrap();
    assert!(windows.status.success(), "{}", stderr(&windows));
    let text = stdout(&windows);
    assert!(text.starts_with("orbit,gs,start,end\n"), "stdout: {text}");
    assert!(text.lines().count() > 10, "windows table is nonempty");
}

#[test]
fn help_lists_every_subcommand() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    for sub in ["gen", "run", "compare", "oracle", "report"] {
        assert!(text.contains(sub), "help: {text}");
    }
}
