use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const ENV: &str = "[environment]\nm_E = 1.0\ng = 1.0\n";

struct Run {
    output: Output,
    dir: PathBuf,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exited normally")
    }

    fn summary(&self) -> Value {
        serde_json::from_str(&fs::read_to_string(self.dir.join("summary.json")).unwrap()).unwrap()
    }

    fn file(&self, name: &str) -> String {
        fs::read_to_string(self.dir.join(name)).unwrap()
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }
}

fn relclock(tmp: &Path, scenario: &str, config: &str, extra: &[&str], envs: &[(&str, &str)]) -> Run {
    let config_path = tmp.join(format!("{scenario}-{}.toml", extra.join("_").replace(['-', '/'], "")));
    fs::write(&config_path, config).unwrap();
    let dir = tmp.join(format!("out-{}", fs::read_dir(tmp).unwrap().count()));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relclock"));
    cmd.arg(scenario).arg("--config").arg(&config_path).arg("--output").arg(&dir).args(extra);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    Run { output: cmd.output().unwrap(), dir }
}

#[test]
fn markov_limit_converges() {
    let tmp = TempDir::new().unwrap();
    let run = relclock(
        tmp.path(),
        "markov_limit",
        &format!("{ENV}[markov_limit]\nsigmas = [2.0, 5.0, 10.0, 20.0]\n"),
        &["--quiet"],
        &[],
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let s = run.summary();
    assert_eq!(s["outputs"]["converged"], Value::Bool(true));
    for key in ["scenario", "config_hash", "seed", "outputs", "checks", "wall_time_s", "version"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }
    let csv = run.file("markov_limit.csv");
    assert_eq!(csv.lines().next(), Some("sigma,kappa_tcl,kappa_markov,relative_error"));
    assert_eq!(csv.lines().count(), 5);
    assert!(run.stderr().is_empty());
}

#[test]
fn tradeoff_boundary_has_zero_margin() {
    let tmp = TempDir::new().unwrap();
    let run = relclock(tmp.path(), "tradeoff", &format!("{ENV}[tradeoff]\nd0 = 2.0\nd1 = 2.0\nd2 = 1.0\n"), &[], &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let s = run.summary();
    assert!(s["outputs"]["margin"].as_f64().unwrap().abs() <= 1e-12);
    assert_eq!(s["outputs"]["verdict"], "satisfied");
    assert_eq!(s["outputs"]["range_ok"], true);
}

#[test]
fn tradeoff_reports_range_violations_for_matrices() {
    let tmp = TempDir::new().unwrap();
    let config = format!("{ENV}[tradeoff]\nd0 = [[1.0, 0.0], [0.0, 0.0]]\nd1 = [[0.0, 1.0]]\nd2 = 1.0\n");
    let run = relclock(tmp.path(), "tradeoff", &config, &[], &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    assert_eq!(run.summary()["outputs"]["verdict"], "range_violation");
}

#[test]
fn flat_slice_has_no_curl() {
    let tmp = TempDir::new().unwrap();
    let run = relclock(tmp.path(), "curl", &format!("{ENV}[curl]\nn_sites = 3\nsigmas = [2.0]\n"), &[], &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let s = run.summary();
    assert!(s["outputs"]["residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(s["checks"]["null_residual"], true);
}

const NOISE: &str =
    "[noise]\nsigma = 1.0\ngrid = { start = 0.0, stop = 1.5, points = 16 }\nn_real = 500\ntolerance = 1.0\n";

#[test]
fn seeded_runs_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let config = format!("{ENV}{NOISE}");
    let a = relclock(tmp.path(), "noise", &config, &["--seed", "9"], &[("RELCLOCK_THREADS", "1")]);
    let b = relclock(tmp.path(), "noise", &config, &["--seed", "9"], &[("RELCLOCK_THREADS", "4")]);
    let c = relclock(tmp.path(), "noise", &config, &["--seed", "10"], &[]);
    for r in [&a, &b, &c] {
        assert_eq!(r.code(), 0, "{}", r.stderr());
    }
    assert_eq!(a.file("noise.csv"), b.file("noise.csv"));
    assert_ne!(a.file("noise.csv"), c.file("noise.csv"));
    assert_eq!(a.summary()["config_hash"], b.summary()["config_hash"]);
    assert_ne!(a.summary()["config_hash"], c.summary()["config_hash"]);
    assert_eq!(a.summary()["seed"], 9);
}

#[test]
fn unravel_writes_raw_records() {
    let tmp = TempDir::new().unwrap();
    let config = format!(
        "seed = 4\n{ENV}[unravel]\ngamma_down = 1.0\ngamma_up = 0.0\nt_final = 0.5\ndt = 0.005\nn_traj = 2000\nrecord_intervals = 10\nraw_dump = true\n"
    );
    let run = relclock(tmp.path(), "unravel", &config, &[], &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let raw = fs::read(run.dir.join("trajectories.bin")).unwrap();
    // 2000 trajectories, 11 recorded times, 2 amplitudes of two f32 each.
    assert_eq!(raw.len(), 2000 * 11 * 2 * 8);
    assert_eq!(run.summary()["checks"]["master_equation_agreement"], true);
    assert_eq!(run.file("unravel.csv").lines().count(), 12);
}

#[test]
fn gkls_reads_model_files() {
    let tmp = TempDir::new().unwrap();
    let model = tmp.path().join("model.toml");
    fs::write(
        &model,
        "dim = 2\nhamiltonian = [\"-1,0\", \"0,0\", \"0,0\", \"1,0\"]\nkossakowski = [\"0.5,0\"]\n\n[[jump]]\nomega = -2.0\noperator = [\"0,0\", \"1,0\", \"0,0\", \"0,0\"]\n",
    )
    .unwrap();
    let config = format!("{ENV}[gkls]\nmodel_file = {:?}\nt_final = 20.0\nn_times = 5\n", model.display().to_string());
    let run = relclock(tmp.path(), "gkls", &config, &[], &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let s = run.summary();
    let ground = s["outputs"]["final_populations"][0].as_f64().unwrap();
    assert!((ground - 1.0).abs() < 1e-4, "{ground}");
    assert!(s["checks"].as_object().unwrap().values().all(|v| v == true));
}

#[test]
fn failed_invariant_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let config = format!("{ENV}[markov_limit]\nsigmas = [2.0, 5.0]\ntolerance = 1e-9\n");
    let run = relclock(tmp.path(), "markov_limit", &config, &["--quiet"], &[]);
    assert_eq!(run.code(), 2);
    assert_eq!(run.summary()["checks"]["converged"], false);
    assert!(run.stderr().contains("FAIL converged"));
}

#[test]
fn bad_configs_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let run = relclock(tmp.path(), "rates", &format!("{ENV}[rates]\nsigma = -1.0\nomega_grid = [-2.0]\n"), &[], &[]);
    assert_eq!(run.code(), 1);
    assert!(run.stderr().contains("sigma must be > 0"), "{}", run.stderr());

    let run = relclock(tmp.path(), "noise", &format!("{ENV}{NOISE}"), &[], &[]);
    assert_eq!(run.code(), 1);
    assert!(run.stderr().contains("seed"), "{}", run.stderr());

    let run = relclock(
        tmp.path(),
        "rates",
        &format!("{ENV}[rates]\nomega_grid = [-2.0]\n"),
        &[],
        &[("RELCLOCK_THREADS", "zero")],
    );
    assert_eq!(run.code(), 1);
    assert!(run.stderr().contains("RELCLOCK_THREADS"));
}

#[test]
fn module_errors_carry_scenario_context() {
    let tmp = TempDir::new().unwrap();
    let config = "[environment]\nm_E = 1.0\ng = 1.0\nbeta = 1.0\nrapidity = 0.5\n[rates]\nomega_grid = [-2.0]\n";
    let run = relclock(tmp.path(), "rates", config, &[], &[]);
    assert_eq!(run.code(), 1);
    assert!(run.stderr().contains("scenario rates"), "{}", run.stderr());
}

#[test]
fn rates_table_follows_schema() {
    let tmp = TempDir::new().unwrap();
    let run = relclock(
        tmp.path(),
        "rates",
        &format!("{ENV}[rates]\nomega_grid = {{ start = -3.0, stop = 1.0, points = 5 }}\n"),
        &[],
        &[],
    );
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let csv = run.file("rates.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("omega,sigma,beta,rapidity,kappa_tcl,kappa_markov,delta_kappa"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], -3.0);
    assert_eq!(first[1], 5.0);
    assert!(first[2].is_infinite());
    let markov = 2.0 * std::f64::consts::PI * 8f64.sqrt() / (4.0 * std::f64::consts::PI.powi(2));
    assert!((first[5] - markov).abs() <= 1e-15 * markov);
}
