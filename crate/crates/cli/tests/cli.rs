use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, cmd: &str, config: Option<&str>, extra: &[&str]) -> i32 {
    let mut c = Command::new(env!("CARGO_BIN_EXE_critasym"));
    c.arg(cmd).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.toml");
        fs::write(&path, text).unwrap();
        c.arg("--config").arg(path);
    }
    c.args(extra);
    let out = c.output().unwrap();
    out.status.code().unwrap()
}

fn csv(dir: &Path, name: &str) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(dir.join("out").join(format!("{name}.csv"))).unwrap();
    let mut lines = text.lines();
    let hash = lines.next().unwrap().strip_prefix("# config_hash=").unwrap().to_string();
    let _header = lines.next().unwrap();
    (hash, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn col(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn kdv_phase_default_widths_grow_and_manifest_matches() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "kdv-phase", None, &[]), 0);
    let (hash, rows) = csv(d.path(), "kdv_phase");
    assert_eq!(rows.len(), 8);
    let widths = col(&rows, 3);
    assert!(widths.windows(2).all(|w| w[1] > w[0]), "{widths:?}");
    let m = json(d.path().join("out/kdv_phase.manifest.json"));
    assert_eq!(m["config_hash"], hash.as_str());
    assert_eq!(m["status"], "ok");
}

#[test]
fn kdv_phase_rejects_times_before_breaking() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "kdv-phase", Some("[kdv_phase]\nt_grid = [0.1, 0.25]\n"), &[]), 1);
    let e = json(d.path().join("out/error.json"));
    assert_eq!(e["kind"], "validation");
    assert_eq!(e["exit_code"], 1);
    assert!(!d.path().join("out/kdv_phase.csv").exists());
}

#[test]
fn kdv_phase_empty_grid_writes_header_only() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "kdv-phase", Some("[kdv_phase]\nt_grid = []\n"), &[]), 0);
    let (_, rows) = csv(d.path(), "kdv_phase");
    assert!(rows.is_empty());
}

#[test]
fn kdv_phase_marks_rows_past_the_validity_window() {
    let d = TempDir::new().unwrap();
    let code = run(d.path(), "kdv-phase", Some("[kdv_phase]\nt_grid = [0.23, 0.25, 0.30, 0.31]\n"), &[]);
    assert_eq!(code, 2);
    let (_, rows) = csv(d.path(), "kdv_phase");
    let status: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(&status[..2], ["ok", "ok"]);
    assert_ne!(status[2], "ok");
    assert_eq!(status[3], "not_reached");
    assert_eq!(json(d.path().join("out/kdv_phase.manifest.json"))["status"], "partial");
}

#[test]
fn kdv_compare_hopf_errors_decrease() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "kdv-compare", None, &[]), 0);
    let (_, rows) = csv(d.path(), "kdv_compare");
    let err = col(&rows, 1);
    assert_eq!(err.len(), 3);
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
}

#[test]
fn kdv_compare_single_eps_gives_one_row() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "kdv-compare", Some("[kdv_compare]\neps = [0.2]\nlog2_points = 10\n"), &[]), 0);
    assert_eq!(csv(d.path(), "kdv_compare").1.len(), 1);
}

#[test]
fn kdv_compare_flags_under_resolved_eps() {
    let d = TempDir::new().unwrap();
    let cfg = "[kdv_compare]\neps = [0.2, 0.02]\nlog2_points = 10\n";
    assert_eq!(run(d.path(), "kdv-compare", Some(cfg), &[]), 2);
    let (_, rows) = csv(d.path(), "kdv_compare");
    assert_eq!(rows[0][4], "ok");
    assert_eq!(rows[1][4], "resolution");
}

#[test]
fn kdv_compare_checks_window_against_breaking_time() {
    let d = TempDir::new().unwrap();
    let cfg = "[kdv_compare]\nwindow = \"leading_edge\"\nt = 0.1\n";
    assert_eq!(run(d.path(), "kdv-compare", Some(cfg), &[]), 1);
}

#[test]
fn rmt_default_grid_finds_edge_point() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "rmt-phase", None, &[]), 0);
    let (_, rows) = csv(d.path(), "rmt_phase");
    let cell = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 0.0 && r[1].parse::<f64>().unwrap() == 1.0);
    assert_eq!(cell.unwrap()[2], "edge_III");
}

#[test]
fn op_table_gaussian_errors_are_at_machine_precision() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "op-table", None, &[]), 0);
    let (_, rows) = csv(d.path(), "op_table");
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let (ge, be): (f64, f64) = (r[7].parse().unwrap(), r[8].parse().unwrap());
        assert!(ge < 1e-14 && be < 1e-14, "{r:?}");
    }
}

#[test]
fn toda_zero_steps_echoes_input() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "toda-run", Some("[toda_run]\nsteps = 0\nm = 12\neps = 0.1\n"), &[]), 0);
    let (_, rows) = csv(d.path(), "toda_run");
    for (n, r) in rows.iter().enumerate() {
        assert_eq!(r[1].parse::<f64>().unwrap(), (n as f64 * 0.1).sqrt());
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }

    // Feed the table back in: the body must come out byte for byte.
    let first = fs::read_to_string(d.path().join("out/toda_run.csv")).unwrap();
    fs::copy(d.path().join("out/toda_run.csv"), d.path().join("lattice.csv")).unwrap();
    let cfg = "[toda_run]\ninitial = \"table\"\nfile = \"lattice.csv\"\nsteps = 0\neps = 0.1\n";
    assert_eq!(run(d.path(), "toda-run", Some(cfg), &[]), 0);
    let second = fs::read_to_string(d.path().join("out/toda_run.csv")).unwrap();
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&first), body(&second));
}

#[test]
fn toda_flow_reports_time_and_drift() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "toda-run", None, &[]), 0);
    let m = json(d.path().join("out/toda_run.manifest.json"));
    assert!((m["summary"]["t_k"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert!(m["summary"]["spectrum_drift"].as_f64().unwrap() < 1e-8);
}

#[test]
fn unknown_config_keys_and_bad_flags_are_validation_errors() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), "rmt-phase", Some("[rmt_phase]\nx_gird = [0.0]\n"), &[]), 1);
    assert_eq!(run(d.path(), "rmt-phase", None, &["--tol-scale=-1"]), 1);
    assert_eq!(run(d.path(), "rmt-phase", None, &["--no-such-flag"]), 1);
    assert_eq!(run(d.path(), "rmt-phase", None, &["--jobs", "0"]), 1);
    assert_eq!(json(d.path().join("out/error.json"))["exit_code"], 1);
}

#[test]
fn tol_scale_enters_the_config_hash() {
    let d = TempDir::new().unwrap();
    let cfg = "[toda_run]\nsteps = 0\nm = 4\n";
    run(d.path(), "toda-run", Some(cfg), &[]);
    let a = csv(d.path(), "toda_run").0;
    run(d.path(), "toda-run", Some(cfg), &["--tol-scale", "2"]);
    let b = csv(d.path(), "toda_run").0;
    assert_ne!(a, b);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_command_is_byte_identical_on_rerun() {
    let cfg = "[kdv_compare]\neps = [0.2, 0.1]\nlog2_points = 11\n[op_table]\nn_max = 8\n[toda_run]\nsteps = 20\n";
    for cmd in ["kdv-phase", "kdv-compare", "rmt-phase", "op-table", "toda-run"] {
        let a = TempDir::new().unwrap();
        let b = TempDir::new().unwrap();
        assert_eq!(run(a.path(), cmd, Some(cfg), &["--jobs", "1"]), 0, "{cmd}");
        assert_eq!(run(b.path(), cmd, Some(cfg), &["--jobs", "4"]), 0, "{cmd}");
        let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
        assert_eq!(sa.len(), 2, "{cmd}");
        assert!(sa == sb, "{cmd} output differs between runs");
    }
}
