use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TRIANGLE: &str = "states: 3\nsimple\nedge 0 1\nedge 1 2\nedge 0 2\n";
const UNIFORM: &str = "state,weight\n0,1\n1,1\n2,1\n";
const SKEWED: &str = "state,weight\n0,1\n1,0.5\n2,0.2\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schrodinger"))
        .current_dir(dir)
        .env("SCHRODINGER_WORKERS", "2")
        .args(args)
        .output()
        .expect("binary runs")
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("tri.graph"), TRIANGLE).unwrap();
    fs::write(dir.path().join("u.csv"), UNIFORM).unwrap();
    fs::write(dir.path().join("v.csv"), SKEWED).unwrap();
    dir
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn uniform_triangle_value() {
    let dir = workspace();
    let out = run(dir.path(), &["solve", "--graph", "tri.graph", "--mu0", "u.csv", "--mu1", "u.csv", "--out-dir", "s"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = json(&dir.path().join("s/solution.json"));
    let value = sol["primal_value"].as_f64().unwrap();
    assert!((value + 6f64.ln()).abs() < 1e-9, "{value}");
    let manifest = json(&dir.path().join("s/manifest.json"));
    assert_eq!(manifest["command"], "solve");
    assert!(manifest["outputs"]["solution.json"].is_string());
    assert!(manifest["inputs"]["tri.graph"].is_string());
}

#[test]
fn missing_file_exits_2() {
    let dir = workspace();
    let out = run(dir.path(), &["solve", "--graph", "nope.graph", "--mu0", "u.csv", "--mu1", "u.csv", "--out-dir", "s"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.graph"));
}

#[test]
fn malformed_marginal_exits_2() {
    let dir = workspace();
    fs::write(dir.path().join("bad.csv"), "0,1\n7,1\n").unwrap();
    let out = run(dir.path(), &["solve", "--graph", "tri.graph", "--mu0", "bad.csv", "--mu1", "u.csv", "--out-dir", "s"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_output_is_deterministic() {
    let dir = workspace();
    for name in ["a", "b"] {
        let out = run(
            dir.path(),
            &["solve", "--graph", "tri.graph", "--mu0", "u.csv", "--mu1", "v.csv", "--tol", "1e-12", "--out-dir", name],
        );
        assert!(out.status.success());
    }
    for file in ["solution.json", "residual.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
}

#[test]
fn interpolate_checks_graph_digest() {
    let dir = workspace();
    let out = run(dir.path(), &["solve", "--graph", "tri.graph", "--mu0", "u.csv", "--mu1", "v.csv", "--out-dir", "s"]);
    assert!(out.status.success());
    let out = run(dir.path(), &["interpolate", "--graph", "tri.graph", "--solution", "s/solution.json", "--grid-size", "100", "--out-dir", "i"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("i/path.csv")).unwrap();
    assert!(csv.starts_with("t,state,mu,f,g,phi,psi\n"));
    assert_eq!(csv.lines().count(), 1 + 101 * 3);
    let diag = json(&dir.path().join("i/diagnostics.json"));
    assert!(diag["action_gap"].as_f64().unwrap() < 1e-4);

    fs::write(dir.path().join("path.graph"), "states: 3\nsimple\nedge 0 1\nedge 1 2\n").unwrap();
    let out = run(dir.path(), &["interpolate", "--graph", "path.graph", "--solution", "s/solution.json", "--out-dir", "j"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gamma_sweep_writes_chart() {
    let dir = workspace();
    let out = run(dir.path(), &["gamma", "--graph", "tri.graph", "--mu0", "u.csv", "--mu1", "v.csv", "--k", "10,100,1000", "--out-dir", "g"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("g/gamma_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let svg = fs::read_to_string(dir.path().join("g/gamma_sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let summary = json(&dir.path().join("g/gamma_summary.json"));
    assert!(summary["last_is_closest"].as_bool().unwrap());
}

#[test]
fn gamma_on_grid_reports_midpoints() {
    let dir = TempDir::new().unwrap();
    let gauss = |c: f64| {
        let mut s = String::new();
        for i in 0..11 {
            let x = i as f64 / 10.0;
            s.push_str(&format!("{i},{}\n", (-(x - c).powi(2) / 0.02).exp()));
        }
        s
    };
    fs::write(dir.path().join("a.csv"), gauss(0.3)).unwrap();
    fs::write(dir.path().join("b.csv"), gauss(0.7)).unwrap();
    let out = run(
        dir.path(),
        &["gamma", "--grid-points", "11", "--mu0", "a.csv", "--mu1", "b.csv", "--k", "10,100", "--out-dir", "g"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("g/gamma_summary.json"));
    assert_eq!(summary["tv_midpoint_distance"].as_array().unwrap().len(), 2);
}

fn particles_config(dir: &Path, epsilon: f64) {
    let config = format!(
        "graph = \"tri.graph\"\nmu0 = \"u.csv\"\ntarget = \"v.csv\"\nn = 20\nepsilon = {epsilon}\nseed = 7\nbatches = 500\n"
    );
    fs::write(dir.join("p.toml"), config).unwrap();
}

#[test]
fn particles_report_and_seed() {
    let dir = workspace();
    particles_config(dir.path(), 0.1);
    let out = run(dir.path(), &["particles", "--config", "p.toml", "--out-dir", "p"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("p/conditional_report.json"));
    assert!(report["report"]["accepted_batches"].as_u64().unwrap() > 0);
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(json(&dir.path().join("p/manifest.json"))["seed"], 7);
}

#[test]
fn particles_without_acceptance_exit_4() {
    let dir = workspace();
    particles_config(dir.path(), 1e-9);
    let out = run(dir.path(), &["particles", "--config", "p.toml", "--out-dir", "p"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}
