use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const OSCILLATOR_HEADER: &str = "t,x_0,x_1,u_0,u_1,alpha_0,alpha_1,gamma,eps_hat,rho,objective";
const ALLOCATION_HEADER: &str = "t,x_0,x_1,x_2,u_0,u_1,u_2,alpha_0,alpha_1,alpha_2,gamma,eps_hat,rho,objective";
const REGRET_SUFFIX: &str = ",bound,realized,realized_se,w,f,a_mu,l_eps,rho_from_gap";

// Row t = 3 of `run --horizon 5 --t0 3 --seed 7`.
const GOLDEN_ROW: &str = "3,1.0004533970319736e0,-5.1853427265117213e-3,-1.7546218176765116e-1,5.9999999999999998e-1,\
-1.1276752506382763e0,2.1278138313209638e0,2.1754520416324009e4,1.2524592277728480e2,3.0111967030954644e-9,\
2.9062466461909056e0";

fn opal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opal"))
        .args(args)
        .current_dir(dir)
        .env_remove("OPAL_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}

#[test]
fn csv_schema_is_stable() {
    let dir = TempDir::new().unwrap();
    let out = opal(dir.path(), &["run", "--horizon", "5", "--t0", "3", "--seed", "7", "--out", "o.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(dir.path().join("o.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], OSCILLATOR_HEADER);
    assert_eq!(lines[3], GOLDEN_ROW);
    assert_eq!(lines.len(), 6);

    let out = opal(dir.path(), &["run", "--scenario", "allocation", "--horizon", "2", "--t0", "2", "--out", "a.csv"]);
    assert!(out.status.success());
    assert_eq!(read(dir.path().join("a.csv")).lines().next().unwrap(), ALLOCATION_HEADER);
}

#[test]
fn regret_columns_follow_the_core_columns() {
    let dir = TempDir::new().unwrap();
    let out = opal(dir.path(), &["run", "--horizon", "5", "--t0", "3", "--regret", "--out", "r.csv"]);
    assert!(out.status.success());
    let text = read(dir.path().join("r.csv"));
    assert_eq!(text.lines().next().unwrap(), format!("{OSCILLATOR_HEADER}{REGRET_SUFFIX}"));
    let last = text.lines().last().unwrap();
    assert_eq!(last.split(',').count(), 19);
    assert!(last.split(',').all(|c| !c.is_empty()));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for scenario in ["oscillator", "allocation"] {
        for (name, format) in [("a", "csv"), ("b", "csv"), ("c", "json"), ("d", "json")] {
            let path = format!("{scenario}-{name}.{format}");
            let out = opal(
                dir.path(),
                &["run", "--scenario", scenario, "--horizon", "200", "--t0", "50", "--seed", "42", "--format", format, "--out", &path],
            );
            assert!(out.status.success());
        }
        let bytes = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
        assert_eq!(bytes(&format!("{scenario}-a.csv")), bytes(&format!("{scenario}-b.csv")));
        assert_eq!(bytes(&format!("{scenario}-c.json")), bytes(&format!("{scenario}-d.json")));
    }
}

#[test]
fn horizon_one_emits_one_row() {
    let dir = TempDir::new().unwrap();
    for scenario in ["oscillator", "allocation"] {
        let out = opal(dir.path(), &["run", "--scenario", scenario, "--horizon", "1", "--out", "one.csv"]);
        assert!(out.status.success());
        let text = read(dir.path().join("one.csv"));
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("1,"));
        assert_eq!(json(&out.stdout)["steps"], 1);
    }
}

#[test]
fn summary_reports_scenario_metrics() {
    let dir = TempDir::new().unwrap();
    let out = opal(dir.path(), &["run", "--horizon", "50", "--t0", "20", "--out", "o.csv"]);
    let s = json(&out.stdout);
    assert_eq!(s["final_alpha"].as_array().unwrap().len(), 2);
    assert!(s["tracking_mse"].is_number() && s["mean_profit"].is_null());
    assert!(s["mean_eps_hat"].as_f64().unwrap() > 0.0);

    let out = opal(dir.path(), &["run", "--scenario", "allocation", "--horizon", "50", "--t0", "20", "--out", "a.csv"]);
    let s = json(&out.stdout);
    assert!(s["mean_profit"].is_number() && s["tracking_mse"].is_null());
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.toml"), "scenario = \"allocation\"\nhorizon = 30\nt0 = 10\nseed = 3\n").unwrap();
    let out = opal(dir.path(), &["run", "--config", "c.toml", "--horizon", "4", "--out", "c.csv"]);
    assert!(out.status.success());
    let s = json(&out.stdout);
    assert_eq!((s["scenario"].as_str(), s["steps"].as_u64(), s["seed"].as_u64()), (Some("allocation"), Some(4), Some(3)));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_opal"))
        .args(["run", "--horizon", "2", "--format", "json"])
        .env("OPAL_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("oscillator.json").exists());
}

#[test]
fn replications_write_one_file_each_in_index_order() {
    let dir = TempDir::new().unwrap();
    let out = opal(dir.path(), &["run", "--horizon", "20", "--t0", "5", "--seed", "10", "--replications", "3", "--out", "r.csv"]);
    assert!(out.status.success());
    let seeds: Vec<u64> = json(&out.stdout).as_array().unwrap().iter().map(|s| s["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, [10, 11, 12]);
    let single = opal(dir.path(), &["run", "--horizon", "20", "--t0", "5", "--seed", "11", "--out", "s.csv"]);
    assert!(single.status.success());
    assert_eq!(read(dir.path().join("r.rep1.csv")), read(dir.path().join("s.csv")));
}

#[test]
fn validate_lists_every_violation() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "beta = 1.5\ntheta = -1\n").unwrap();
    let out = opal(dir.path(), &["validate", "bad.toml"]);
    assert!(!out.status.success());
    let report = json(&out.stdout);
    let fields: Vec<&str> = report["violations"].as_array().unwrap().iter().map(|v| v["field"].as_str().unwrap()).collect();
    assert_eq!(fields, ["beta", "theta"]);

    std::fs::write(dir.path().join("ok.toml"), "").unwrap();
    let out = opal(dir.path(), &["validate", "ok.toml"]);
    assert!(out.status.success());
    assert_eq!(json(&out.stdout)["violations"].as_array().unwrap().len(), 0);

    std::fs::write(dir.path().join("junk.toml"), "horizon = \"many\"\n").unwrap();
    let out = opal(dir.path(), &["validate", "junk.toml"]);
    assert!(!out.status.success());
    assert_eq!(json(&out.stderr)["error"], "config");
}

#[test]
fn errors_are_machine_readable() {
    let dir = TempDir::new().unwrap();
    let out = opal(dir.path(), &["run", "--horizon", "0"]);
    assert!(!out.status.success());
    let record = json(&out.stderr);
    assert_eq!(record["error"], "config");
    assert!(record["message"].as_str().unwrap().contains("horizon"));

    let out = opal(dir.path(), &["run", "--horizon", "2", "--out", "missing/dir/o.csv"]);
    assert!(!out.status.success());
    assert_eq!(json(&out.stderr)["error"], "io");
}

#[test]
fn export_converts_json_records() {
    let dir = TempDir::new().unwrap();
    let run = |fmt: &str, path: &str| opal(dir.path(), &["run", "--horizon", "30", "--t0", "10", "--format", fmt, "--out", path]);
    assert!(run("json", "t.json").status.success());
    assert!(run("csv", "t.csv").status.success());
    let out = opal(dir.path(), &["export", "t.json", "--format", "csv", "--out", "x.csv"]);
    assert!(out.status.success());
    assert_eq!(read(dir.path().join("x.csv")), read(dir.path().join("t.csv")));
    let out = opal(dir.path(), &["export", "t.json", "--format", "json", "--out", "y.json"]);
    assert!(out.status.success());
    assert_eq!(read(dir.path().join("y.json")), read(dir.path().join("t.json")));
}

#[test]
fn failed_runs_flush_a_truncation_marker() {
    // Noise this large overflows the cubic predictor on the first step.
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("big.toml"), "sigma = 1e200\nhorizon = 50\nt0 = 10\n").unwrap();
    let out = opal(dir.path(), &["run", "--config", "big.toml", "--out", "big.csv"]);
    assert!(!out.status.success());
    let record = json(&out.stderr);
    assert_eq!((record["error"].as_str(), record["step"].as_u64()), (Some("non-finite-predictor"), Some(1)));
    assert!(json(&out.stdout)["truncated"].is_object());
    let text = read(dir.path().join("big.csv"));
    assert_eq!(text.lines().next().unwrap(), OSCILLATOR_HEADER);
    assert!(text.lines().last().unwrap().starts_with("# truncated at step 1: non-finite-predictor"));
}
