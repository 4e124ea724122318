use epivax::analysis::{assemble_report, ReportExtras};
use epivax::harness::synthetic::{mid_size, tiny};
use epivax::harness::{
    parse_scenario, parse_timeseries, read_plan, read_trajectory, scenario_from_str, write_bundle, write_scenario,
    write_timeseries, IoError, BUNDLE_FILES,
};
use epivax::optimizer::run_knapsack_decomposition;
use epivax::scenario::{Formulation, Topology};
use std::path::Path;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn scenario_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let s = mid_size(7);
    let p = dir.path().join("s.json");
    write_scenario(&p, &s).unwrap();
    assert_eq!(parse_scenario(&p).unwrap(), s);
}

#[test]
fn schema_errors_name_the_field() {
    let mut v: serde_json::Value = serde_json::to_value(tiny(101)).unwrap();
    v["epidemic"]["gamma"] = serde_json::json!("fast");
    let err = scenario_from_str(&v.to_string(), Path::new("x.json")).unwrap_err();
    match err {
        IoError::Schema { field, .. } => assert_eq!(field, "epidemic.gamma"),
        other => panic!("unexpected {other}"),
    }
    v["epidemic"]["gamma"] = serde_json::json!(0.2);
    v["colour"] = serde_json::json!(1);
    assert!(matches!(scenario_from_str(&v.to_string(), Path::new("x.json")), Err(IoError::Schema { .. })));
}

#[test]
fn invalid_scenarios_are_rejected_after_parsing() {
    let mut s = tiny(101);
    s.svi[0] = 2.0;
    let text = serde_json::to_string(&s).unwrap();
    match scenario_from_str(&text, Path::new("x.json")).unwrap_err() {
        IoError::Invalid { issues, .. } => assert!(issues.iter().any(|i| i.field == "svi[0]")),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn timeseries_round_trip_and_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "ts.tsv",
        "region_id\tperiod\tcases\tdoses\nb\t0\t5\t1\nb\t2\t7\t0\na\t0\t1\t2\na\t1\t3\t4\na\t2\t6\t8\n",
    );
    let obs = parse_timeseries(&p).unwrap();
    assert_eq!(obs.regions, ["b", "a"]);
    assert_eq!(obs.cases, [vec![5.0, 0.0, 7.0], vec![1.0, 3.0, 6.0]]);
    assert_eq!(obs.doses[1], [2.0, 4.0, 8.0]);
    assert_eq!(obs.gaps, [(0, 1)]);
    let q = dir.path().join("ts2.tsv");
    write_timeseries(&q, &obs).unwrap();
    assert_eq!(parse_timeseries(&q).unwrap(), obs);
}

#[test]
fn timeseries_errors() {
    let dir = tempfile::tempdir().unwrap();
    let header = "region_id\tperiod\tcases\tdoses\n";
    let empty = write(dir.path(), "empty.tsv", header);
    assert!(matches!(parse_timeseries(&empty), Err(IoError::NoRecords { .. })));
    let blank = write(dir.path(), "blank.tsv", "");
    assert!(matches!(parse_timeseries(&blank), Err(IoError::NoRecords { .. })));
    let dup = write(dir.path(), "dup.tsv", &format!("{header}a\t0\t1\t1\na\t0\t2\t2\n"));
    assert!(matches!(parse_timeseries(&dup), Err(IoError::Duplicate { period: 0, .. })));
    let back = write(dir.path(), "back.tsv", &format!("{header}a\t3\t1\t1\na\t1\t2\t2\n"));
    assert!(matches!(parse_timeseries(&back), Err(IoError::NonMonotone { period: 1, previous: 3, .. })));
    let bad = write(dir.path(), "bad.tsv", &format!("{header}a\t0\tmany\t1\n"));
    assert!(matches!(parse_timeseries(&bad), Err(IoError::Record { line: 2, .. })));
    let cols = write(dir.path(), "cols.tsv", "region\tt\tcases\tdoses\na\t0\t1\t1\n");
    assert!(matches!(parse_timeseries(&cols), Err(IoError::Record { line: 1, .. })));
    let missing = dir.path().join("missing.tsv");
    assert!(parse_timeseries(&missing).is_err());
}

#[test]
fn bundle_plan_and_trajectory_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let s = tiny(103);
    let (plan, traj, diag) = run_knapsack_decomposition(&s).unwrap();
    let extras = ReportExtras { diagnostics: Some(diag), ..Default::default() };
    let report = assemble_report(&s, "knapsack", Formulation::Knapsack, &plan, &traj, extras).unwrap();
    let paths = write_bundle(dir.path(), &s, &plan, &traj, &report).unwrap();
    assert_eq!(paths.len(), BUNDLE_FILES.len());
    let topo = Topology::new(&s);
    assert_eq!(read_plan(&dir.path().join("plan.tsv"), &topo, s.horizon).unwrap(), plan);
    let back = read_trajectory(&dir.path().join("trajectory.tsv"), s.num_regions()).unwrap();
    assert_eq!(back.states, traj.states);
    assert_eq!(back.new_infections, traj.new_infections);
    assert_eq!(back.tau, traj.tau);
}

#[test]
fn shipped_data_matches_generators() {
    use epivax::harness::synthetic::{uniform_regional, TINY_SUITE_SEEDS};
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for seed in TINY_SUITE_SEEDS {
        assert_eq!(parse_scenario(&data.join(format!("tiny_{seed}.json"))).unwrap(), tiny(seed));
    }
    assert_eq!(parse_scenario(&data.join("uniform_regional.json")).unwrap(), uniform_regional(1));
    assert_eq!(parse_scenario(&data.join("mid_size.json")).unwrap(), mid_size(7));
}
