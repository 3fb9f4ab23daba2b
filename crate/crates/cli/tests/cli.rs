use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sgip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgip"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> Value {
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let line = err.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

const CUBIC: &str = "\
dim=1
L=60
M=150
N=1000000
dt=0.5
T=20
D=1
flow=zero
reaction=cubic
scheme=backward_euler
init=interval:0,1
seed=7
snapshot_every=1
";

fn small(dir: &Path, name: &str, extra: &str) -> String {
    let text = format!(
        "dim=1\nL=20\nM=40\nN=20000\ndt=0.5\nT=2\nD=1\nflow=zero\nreaction=fkpp\nscheme=closed_form\ninit=interval:0,1\nseed=3\n{extra}"
    );
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn cubic_run_writes_41_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cubic.cfg");
    fs::write(&cfg, CUBIC).unwrap();
    let out = dir.path().join("out");
    let o = sgip(&["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["status"], "complete");
    assert_eq!(summary["steps"], 40);
    let snaps = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "sgrd"))
        .count();
    assert_eq!(snaps, 41);
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("# sgip-diag v1\nstep,time,total_mass"));
    assert_eq!(diag.lines().count(), 2 + 41);
}

#[test]
fn compare_with_itself_prints_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "a.cfg", "");
    let o = sgip(&["run", &cfg]);
    assert!(o.status.success());
    let snap = dir.path().join("a_out/snap_000004.sgrd");
    let s = snap.to_str().unwrap();
    let o = sgip(&["compare", s, s]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.0");
}

#[test]
fn compare_restricts_to_the_coarser_grid() {
    let dir = tempfile::tempdir().unwrap();
    let a = small(dir.path(), "a.cfg", "");
    let fdm = dir.path().join("b.cfg");
    fs::write(
        &fdm,
        "dim=1\nL=20\ndx=0.25\ndt=0.5\nT=2\nD=1\nflow=zero\nreaction=fkpp\nscheme=explicit\ninit=interval:0,1\n",
    )
    .unwrap();
    assert!(sgip(&["run", &a]).status.success());
    let o = sgip(&["fdm", fdm.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = sgip(&[
        "compare",
        dir.path().join("a_out/snap_000004.sgrd").to_str().unwrap(),
        dir.path().join("b_out/snap_000004.sgrd").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let l2: f64 = stdout(&o).trim().parse().unwrap();
    assert!(l2 > 0.0 && l2 < 0.5, "{l2}");
}

#[test]
fn front_threshold_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "a.cfg", "");
    assert!(sgip(&["run", &cfg]).status.success());
    let run_dir = dir.path().join("a_out");
    let o = sgip(&["front", run_dir.to_str().unwrap(), "--threshold", "1.5"]);
    let e = error_json(&o);
    assert_eq!(e["error"], "invalid_parameter");
    assert!(e["message"].as_str().unwrap().contains("1.5"));
}

#[test]
fn front_series_over_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "a.cfg", "");
    assert!(sgip(&["run", &cfg]).status.success());
    let o = sgip(&["front", dir.path().join("a_out").to_str().unwrap(), "--threshold", "0.2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# sgip-front v1"));
    assert_eq!(lines.next(), Some("t,front_x"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, x) = l.split_once(',').unwrap();
            (t.parse().unwrap(), x.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0].0, 0.0);
    assert!(rows[4].1 > rows[0].1);
}

#[test]
fn config_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "a.cfg", "dtt=0.1\n");
    let e = error_json(&sgip(&["run", &cfg]));
    assert_eq!(e["error"], "config");
    assert_eq!(e["key"], "dtt");
    assert_eq!(e["line"], 13);

    let p = dir.path().join("b.cfg");
    fs::write(&p, "dim=1\nL=20\nM=40\nN=10\nT=2\nD=1\nflow=zero\nreaction=fkpp\nscheme=closed_form\ninit=interval:0,1\nseed=1\n").unwrap();
    let e = error_json(&sgip(&["run", p.to_str().unwrap()]));
    assert_eq!(e["key"], "dt");
}

#[test]
fn missing_files_and_bad_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let e = error_json(&sgip(&["run", dir.path().join("nope.cfg").to_str().unwrap()]));
    assert_eq!(e["error"], "io");
    let bad = dir.path().join("x.sgrd");
    fs::write(&bad, b"XXXX0000000000000000000000000000000000000000000000000000000000000000").unwrap();
    let b = bad.to_str().unwrap();
    let e = error_json(&sgip(&["compare", b, b]));
    assert_eq!(e["error"], "bad_magic");
}

#[test]
fn usage_errors_are_json_too() {
    let o = sgip(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "usage");
    let o = sgip(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("converge"));
}

#[test]
fn wrong_solver_for_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "a.cfg", "");
    let e = error_json(&sgip(&["fdm", &cfg]));
    assert_eq!(e["error"], "usage");
}

#[test]
fn converge_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "a.cfg", "");
    let sched = dir.path().join("levels.txt");
    fs::write(&sched, "dt,dx,N\n0.5,2,2000\n0.25,1,32000\n").unwrap();
    let table = dir.path().join("conv.csv");
    let o = sgip(&[
        "converge",
        &cfg,
        "--schedule",
        sched.to_str().unwrap(),
        "--seeds",
        "2",
        "--output",
        table.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# sgip-converge v1"));
    assert_eq!(lines.next(), Some("level,dt,dx,N,seed,l2_error"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("1,0.5,2,2000,3,"));
    assert!(rows[3].starts_with("2,0.25,1,32000,4,"));
}
