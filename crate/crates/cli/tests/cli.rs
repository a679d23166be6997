use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn inp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn write_scenario(dir: &Path, body: serde_json::Value) -> String {
    let path: PathBuf = dir.join("scenario.json");
    fs::write(&path, body.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn line_world(
    comm: &[&str],
    robots: serde_json::Value,
    teams: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "format": 1,
        "locations": [{"id": "a"}, {"id": "b"}, {"id": "c"}, {"id": "d"}],
        "edges": [
            {"from": "a", "to": "b", "length": 1},
            {"from": "b", "to": "c", "length": 1},
            {"from": "c", "to": "d", "length": 1}
        ],
        "comm_points": comm,
        "robots": robots,
        "teams": teams,
        "alpha": 0.5,
        "travel_time": {"lo": 1, "hi": 2},
        "seed": 3
    })
}

#[test]
fn validate_reports_sizes() {
    let o = inp(&["validate", &scenario("fig1.json")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("12 locations"), "{}", stdout(&o));
    assert!(stdout(&o).contains("3 robots"));
}

#[test]
fn simulate_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = inp(&[
        "simulate",
        &scenario("fig1.json"),
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "schedules.json",
        "assignment.json",
        "events.jsonl",
        "costs.csv",
        "summary.txt",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let costs = fs::read_to_string(out.join("costs.csv")).unwrap();
    assert!(costs.starts_with("iteration,total_cost\n"));
    let totals: Vec<f64> = costs
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(totals.windows(2).all(|w| w[1] <= w[0]));

    let r = inp(&["report", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", stderr(&r));
    let text = stdout(&r);
    assert!(text.contains("repeating cycle detected: P="), "{text}");
    assert!(text.contains("team 3:"));
    assert_eq!(text, fs::read_to_string(out.join("summary.txt")).unwrap());
    assert!(out.join("consensus.csv").exists());
    assert!(out.join("meetings.csv").exists());
}

#[test]
fn short_horizon_finds_no_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = inp(&[
        "simulate",
        &scenario("fig1.json"),
        "--horizon",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("stopped by: horizon"), "{text}");
    assert!(text.contains("no cycle detected within horizon"), "{text}");
}

#[test]
fn disconnected_teams_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = line_world(
        &["b", "c"],
        serde_json::json!([
            {"id": 1, "initial": "a", "task": "[]<> a"},
            {"id": 2, "initial": "d", "task": "[]<> d"}
        ]),
        serde_json::json!([
            {"id": 1, "members": [1], "comm_set": ["b"]},
            {"id": 2, "members": [2], "comm_set": ["c"]}
        ]),
    );
    let path = write_scenario(tmp.path(), doc);
    let o = inp(&["validate", &path]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("disconnected"), "{err}");
    assert!(err.contains("{T1} {T2}"), "{err}");
}

#[test]
fn contradictory_task_is_infeasible() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = line_world(
        &["c"],
        serde_json::json!([{"id": 1, "initial": "a", "task": "[]<> a && [] !c"}]),
        serde_json::json!([{"id": 1, "members": [1], "comm_set": ["c"]}]),
    );
    let path = write_scenario(tmp.path(), doc);
    let o = inp(&["plan", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("initialization infeasible"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn lone_robot_has_no_consensus_error() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = line_world(
        &["d"],
        serde_json::json!([{"id": 1, "initial": "a", "task": "[]<> b"}]),
        serde_json::json!([{"id": 1, "members": [1], "comm_set": ["d"]}]),
    );
    let path = write_scenario(tmp.path(), doc);
    let out = tmp.path().join("run");
    let o = inp(&["simulate", &path, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("consensus error at end: 0.000e0"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn plan_writes_assignment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = inp(&[
        "plan",
        &scenario("fig1.json"),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("assignment.json")).unwrap())
            .unwrap();
    assert_eq!(doc["assignment"].as_object().unwrap().len(), 3);
    assert_eq!(doc["robots"].as_array().unwrap().len(), 3);
}

#[test]
fn missing_log_directory_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = inp(&["report", tmp.path().join("nothing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("events.jsonl"), "{}", stderr(&o));
}

#[test]
fn corrupt_log_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("events.jsonl"),
        "{\"kind\": \"stop\", \"time\": 1.0, \"reason\": \"horizon\"}\nnot json\n",
    )
    .unwrap();
    let o = inp(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}
