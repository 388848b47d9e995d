use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amopt::balance::ProbeReport;

const MODEL: &str = r#"
[model]
n = 1
r = 0.05
T = 1.0
lambda = 0.04
s0 = [100.0]
dividends = [0.0]
volatility = [[0.2]]
"#;

const PUT: &str = r#"
[payoff]
kind = "put_on_min"
strike = 100.0
"#;

const SMALL_GRID: &str = r#"
[grid]
space_nodes = 60
time_steps = 60
"#;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amopt"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("CI")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_payoff_prices_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("{MODEL}\n[payoff]\nkind = \"zero\"\n{SMALL_GRID}"));
    let o = run(&["price"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0.0");
    let csv = fs::read_to_string(dir.path().join("out/surface.csv")).unwrap();
    assert!(csv.starts_with("t,x1,S1,v,dv_dS1,exercised\n"));
    assert!(dir.path().join("out/solver_report.json").exists());
}

#[test]
fn missing_grid_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("{MODEL}{PUT}"));
    let o = run(&["price"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[grid]"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_bad_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", &format!("{MODEL}{PUT}{SMALL_GRID}\n[extra]\nx = 1\n"));
    assert_eq!(run(&["price"], &cfg, dir.path()).status.code(), Some(2));
    let bad_lambda = MODEL.replace("lambda = 0.04", "lambda = 0.5");
    let cfg = write_config(dir.path(), "b.toml", &format!("{bad_lambda}{PUT}{SMALL_GRID}"));
    assert_eq!(run(&["price"], &cfg, dir.path()).status.code(), Some(2));
    let cfg = write_config(dir.path(), "c.toml", "not toml at all [");
    assert_eq!(run(&["price"], &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn monte_carlo_needs_paths_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", &format!("{MODEL}{PUT}{SMALL_GRID}\n[mc]\npaths = 0\nseed = 1\n"));
    let o = run(&["verify-balance"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "b.toml", &format!("{MODEL}{PUT}{SMALL_GRID}\n[mc]\npaths = 10\n"));
    let o = run(&["verify-balance"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn checkpoints_inside_the_terminal_window_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", &format!("{MODEL}{PUT}{SMALL_GRID}\n[mc]\npaths = 10\nseed = 1\ncheckpoints = [0.0, 1.0]\n"));
    assert_eq!(run(&["verify-balance"], &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let grid = "[grid]\nspace_nodes = 80\ntime_steps = 20\npsor = { omega = 1.5, tolerance = 1e-14, max_iterations = 1 }\n";
    let cfg = write_config(dir.path(), "a.toml", &format!("{MODEL}{PUT}{grid}"));
    let o = run(&["price"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn unhedged_probe_reports_a_ratio_above_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["verify-balance", "--quiet"], &repo().join("configs/probe_zero.toml"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let probes: ProbeReport = serde_json::from_str(&fs::read_to_string(out.join("probes.json")).unwrap()).unwrap();
    assert_eq!(probes.probes.len(), 1);
    assert!(probes.probes[0].ratios.iter().all(|&r| r > 1.0));
    let csv = fs::read_to_string(out.join("balance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn threshold_breach_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let thresholds = r#"{
  "seed": 3, "n_paths": 100, "dt": 0.016666666666666666,
  "checkpoints": [{"t": 0.0, "mean_abs_max": 1e-9, "std_max": 1e-9}],
  "argmax_fraction_min": 0.5, "probes": [], "compensator_fraction_max": 1.0
}"#;
    fs::write(dir.path().join("th.json"), thresholds).unwrap();
    let body = format!("{MODEL}{PUT}{SMALL_GRID}\n[mc]\npaths = 100\nseed = 3\ncheckpoints = [0.0]\n\n[thresholds]\nfile = \"th.json\"\n");
    let cfg = write_config(dir.path(), "a.toml", &body);
    let o = run(&["verify-balance", "--quiet"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("std"));
}

#[test]
fn recalibration_round_trips_and_refuses_ci() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{MODEL}{PUT}{SMALL_GRID}\n[mc]\npaths = 100\nseed = 3\n\n[probe]\nperturbations = [{{ kind = \"zero\" }}]\n\n[thresholds]\nfile = \"th.json\"\ngolden_report = \"golden.json\"\n"
    );
    let cfg = write_config(dir.path(), "a.toml", &body);
    let out = dir.path().join("out");
    let ci = Command::new(env!("CARGO_BIN_EXE_amopt"))
        .args(["verify-balance", "--recalibrate", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("CI", "true")
        .output()
        .unwrap();
    assert_eq!(ci.status.code(), Some(2));
    assert!(!dir.path().join("th.json").exists());

    assert_eq!(run(&["verify-balance", "--recalibrate", "--quiet"], &cfg, &out).status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("golden.json")).unwrap(), fs::read(out.join("balance.json")).unwrap());
    let o = run(&["verify-balance"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("thresholds: pass"));

    // a different seed no longer reproduces the frozen report
    let cfg = write_config(dir.path(), "a.toml", &body.replace("seed = 3", "seed = 4"));
    assert_eq!(run(&["verify-balance", "--quiet"], &cfg, &out).status.code(), Some(4));
}

#[test]
fn reference_price_matches_the_binomial_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["price"], &repo().join("configs/reference_put.toml"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: f64 = stdout(&o).lines().next().unwrap().parse().unwrap();
    let golden: serde_json::Value = serde_json::from_str(&fs::read_to_string(repo().join("golden/reference_binomial.json")).unwrap()).unwrap();
    let crr = golden["value"].as_f64().unwrap();
    assert!(((v - crr) / crr).abs() < 0.005);
}

#[test]
fn snell_check_passes_and_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.toml", "[tree]\ncount = 100\nseed = 5\nmax_depth = 5\n");
    let o = run(&["snell-check"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("violations: 0"));
    assert!(dir.path().join("snell_check.json").exists());
}

#[test]
fn single_node_trees_pass_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.toml", "[tree]\ncount = 20\nseed = 5\nmin_depth = 0\nmax_depth = 0\n");
    let o = run(&["snell-check"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("violations: 0"));
}

#[test]
fn corrupted_decomposition_exits_with_five_and_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.toml", "[tree]\ncount = 5\nseed = 5\nmax_depth = 3\ncorrupt_decomposition = true\n");
    let o = run(&["snell-check", "--quiet"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    let text = stdout(&o);
    let witness_start = text.find('{').unwrap();
    let witness: serde_json::Value = serde_json::from_str(&text[witness_start..]).unwrap();
    assert!(witness["witness"]["nodes"].as_array().is_some_and(|n| !n.is_empty()));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/probe_zero.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["verify-balance", "--quiet"], &cfg, &a).status.code(), Some(0));
    assert_eq!(run(&["verify-balance", "--quiet"], &cfg, &b).status.code(), Some(0));
    for name in ["balance.json", "balance.csv", "probes.json", "probes.csv", "compensator.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}
