use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn epivax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epivax")).args(args).output().unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn optimize_writes_a_feasible_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = data("tiny_101.json");
    let out = dir.path().join("run");
    let o = epivax(&["optimize", "--scenario", s(&scenario), "--method", "knapsack", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["plan.tsv", "trajectory.tsv", "ledger.tsv", "diagnostics.txt", "equity.tsv", "summary.txt"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let plan = out.join("plan.tsv");
    let o = epivax(&["validate", "--scenario", s(&scenario), "--plan", s(&plan)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let sim = dir.path().join("sim");
    let o = epivax(&["simulate", "--scenario", s(&scenario), "--plan", s(&plan), "--out", s(&sim)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(sim.join("trajectory.tsv")).unwrap(), std::fs::read(out.join("trajectory.tsv")).unwrap());
}

#[test]
fn gen_then_optimize_gini() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("mid.json");
    let o = epivax(&["gen", "--preset", "mid", "--seed", "7", "--out", s(&scenario)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&scenario).unwrap(), std::fs::read(data("mid_size.json")).unwrap());
    let out = dir.path().join("run");
    let o = epivax(&["optimize", "--scenario", s(&scenario), "--method", "gini", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(epivax(&["optimize", "--bogus"]).status.code(), Some(2));
    assert_eq!(epivax(&[]).status.code(), Some(2));
    let scenario = data("tiny_101.json");
    let o = epivax(&["optimize", "--scenario", s(&scenario), "--weights", "1,2,3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = epivax(&["sensitivity", "--scenario", s(&scenario), "--parameter", "wind"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = epivax(&["validate", "--scenario", s(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"horizon\": \"soon\"}").unwrap();
    let o = epivax(&["validate", "--scenario", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon"));
}

#[test]
fn calibrate_forecast_and_sensitivity() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = data("mid_size.json");
    let sim = dir.path().join("sim");
    assert_eq!(epivax(&["simulate", "--scenario", s(&scenario), "--out", s(&sim)]).status.code(), Some(0));
    let traj = std::fs::read_to_string(sim.join("trajectory.tsv")).unwrap();
    let mut ts = String::from("region_id\tperiod\tcases\tdoses\n");
    for line in traj.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        if f[6] != "NaN" {
            ts.push_str(&format!("{}\t{}\t{}\t0\n", f[0], f[1], f[6]));
        }
    }
    let tsv = dir.path().join("ts.tsv");
    std::fs::write(&tsv, ts).unwrap();

    let cal = dir.path().join("cal");
    let o = epivax(&["calibrate", "--scenario", s(&scenario), "--timeseries", s(&tsv), "--out", s(&cal)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rates = cal.join("rates.tsv");
    assert!(rates.is_file());

    let fc = dir.path().join("fc");
    let o = epivax(&["forecast", "--rates", s(&rates), "--m-max", "3", "--horizon", "2", "--out", s(&fc)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let sens = dir.path().join("sens");
    let o = epivax(&["sensitivity", "--scenario", s(&scenario), "--parameter", "supply", "--out", s(&sens)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(sens.join("sensitivity.tsv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}
