use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ccst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccst"))
        .args(args)
        .env("CCST_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run_with(dir: &Path, experiment: &str, toml: &str, out: &str) -> Output {
    let cfg = dir.join(format!("{out}.toml"));
    fs::write(&cfg, toml).unwrap();
    let out = dir.join(out);
    ccst(&[experiment, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

const SMALL_EIGEN: &str = r#"
experiment = "eigen-evolve"
[geometry]
nx = 8
ny = 2
[time]
dt = 0.5
t_final = 10.0
[modes]
count = 6
[output]
vtk_stride = 5
svg = false
"#;

#[test]
fn rigidity_run_writes_echo_and_table() {
    let dir = TempDir::new().unwrap();
    let toml = "[sweep]\nh_over_l = [100.0, 1.0]\n";
    let out = run_with(dir.path(), "cantilever-rigidity", toml, "rig");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let echo = fs::read_to_string(dir.path().join("rig/config.resolved.toml")).unwrap();
    assert!(echo.contains("experiment = \"cantilever-rigidity\""));
    assert!(echo.contains("h_over_l = [100.0, 1.0]"));

    let (header, rows) = read_csv(&dir.path().join("rig/rigidity.csv"));
    assert_eq!(header, ["h_over_l", "eta", "K", "K_ratio"]);
    assert_eq!(rows.len(), 2);
    assert!(rows[1][3] > rows[0][3]);
    assert!(dir.path().join("rig/summary.txt").exists());
}

#[test]
fn eigen_run_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    for name in ["a", "b"] {
        let out = run_with(dir.path(), "eigen-evolve", SMALL_EIGEN, name);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["modes.csv", "timeseries_ccst.csv", "timeseries_classical.csv", "eigen_ccst_000005.vtk"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert!(!a.is_empty() && a == b, "{file} differs between runs");
    }

    let (header, rows) = read_csv(&dir.path().join("a/timeseries_ccst.csv"));
    assert_eq!(
        header,
        [
            "step",
            "t",
            "probe_id",
            "x",
            "y",
            "ux",
            "uy",
            "theta",
            "energy_kinetic",
            "energy_strain",
            "energy_curvature",
            "energy_total"
        ]
    );
    // 4 default probes, 20 steps
    assert_eq!(rows.len(), 4 * 20);
    for r in &rows {
        assert!((r[8] + r[9] + r[10] - r[11]).abs() <= 1e-12 * r[11].abs().max(1e-300));
    }
    assert!(!dir.path().join("a/eigen.svg").exists());
}

#[test]
fn bad_inputs_exit_with_config_status() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("cantilever-rigidity", "[time]\ndt = 0.0\n"),
        ("mms-static", "[material]\nnu = 0.5\n"),
        ("pulse", "[geometry]\nbogus = 1\n"),
        ("pulse", "experiment = \"mms-static\"\n"),
        ("no-such-experiment", ""),
    ];
    for (i, (exp, toml)) in cases.iter().enumerate() {
        let out = run_with(dir.path(), exp, toml, &format!("bad{i}"));
        assert_eq!(out.status.code(), Some(1), "{exp} with {toml:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("ccst:"));
    }
    assert_eq!(ccst(&["pulse"]).status.code(), Some(1));
    assert_eq!(ccst(&["pulse", "--config", "/nonexistent/ccst.toml"]).status.code(), Some(1));
    assert!(ccst(&["--help"]).status.success());
}
