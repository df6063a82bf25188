mod common;

use common::*;

#[test]
fn unknown_flag_exits_with_usage_error() {
    let o = fleetmix(&["solve", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = fleetmix(&["solve", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn params_show_needs_no_seed() {
    let o = fleetmix(&["params", "--show", "--case", "mth"]);
    assert_eq!(o.status.code(), Some(0));
    let cfg: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cfg["case"], "mth");
    assert!(cfg["alns"].is_object());
}

#[test]
fn verify_rejects_both_counterexamples() {
    let dir = tempfile::tempdir().unwrap();
    let (instance, scenario, plans) = write_counterexamples(dir.path());
    for plan in &plans {
        let o = fleetmix(&[
            "verify",
            "--case",
            "custom",
            "--instance",
            path(&instance),
            "--scenario",
            path(&scenario),
            "--seed",
            "1",
            "--solution",
            path(plan),
        ]);
        assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o).trim(), "station_on_icev");
    }
}

#[test]
fn solve_twice_writes_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (instance, scenario, _) = write_counterexamples(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = fleetmix(&[
            "solve",
            "--case",
            "custom",
            "--instance",
            path(&instance),
            "--scenario",
            path(&scenario),
            "--seed",
            "7",
            "--iterations",
            "200",
            "--time-limit",
            "0",
            "--out",
            path(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let read = |dir: &std::path::Path| {
        ["solution.json", "routes.csv"].map(|f| std::fs::read_to_string(dir.join(f)).unwrap())
    };
    let a = run("a");
    let first = read(&a);
    assert_eq!(read(&run("a")), first);
    let report: serde_json::Value = serde_json::from_str(&first[0]).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["config"]["alns"]["max_iterations"], 200);
    // Another output directory only changes the embedded config.
    let b = run("b");
    assert_eq!(csv_body(&a.join("routes.csv")), csv_body(&b.join("routes.csv")));
    let o = fleetmix(&[
        "verify",
        "--case",
        "custom",
        "--instance",
        path(&instance),
        "--scenario",
        path(&scenario),
        "--seed",
        "7",
        "--solution",
        path(&a.join("solution.json")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("feasible"));
}

#[test]
fn optimize_covers_the_region_h_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = fleetmix(&[
        "optimize",
        "--instance",
        path(&bundled_region_h()),
        "--seed",
        "3",
        "--samples",
        "2",
        "--iterations",
        "5",
        "--time-limit",
        "0",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("mixes.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert_eq!(lines.next().unwrap(), "# seed: 3");
    assert!(lines.next().unwrap().starts_with("rank,mix,"));
    assert_eq!(lines.count(), 136);
    assert!(dir.path().join("samples.csv").exists());
    assert!(dir.path().join("meta.json").exists());
}

#[test]
fn bad_mix_is_rejected() {
    let o = fleetmix(&["solve", "--seed", "1", "--mix", "1,x", "--out", "/nonexistent/never"]);
    assert_eq!(o.status.code(), Some(2));
}
