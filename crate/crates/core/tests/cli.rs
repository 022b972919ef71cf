use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpf_formation::io;
use fpf_formation::scenario::presets;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpf-nav"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bundled_configs_match_presets() {
    let read = |n| io::read_scenario(&config(n)).unwrap();
    assert_eq!(read("pentagon.json"), presets::assembly(5, 1));
    assert_eq!(read("decagon.json"), presets::assembly(10, 1));
    assert_eq!(read("narrow_passage.json"), presets::narrow_passage());
}

#[test]
fn check_accepts_pentagon() {
    let o = run(&["check", "--config", config("pentagon.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok: 5 robots"));
}

#[test]
fn check_rejects_weak_gain() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = presets::assembly(5, 1);
    s.fpf.k_v = 0.5;
    // Serialize without validation by going through the file form.
    let doc = serde_json::to_string(&io::ScenarioFile::from(&s)).unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc).unwrap();
    let o = run(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k_v > 1"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["check"]).status.code(), Some(1));
    assert_eq!(run(&["check", "--config", "/nonexistent/scenario.json"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn design_map_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    let o = run(&[
        "design-map", "--kv-min", "1", "--kv-max", "2.5", "--vs-min", "1", "--vs-max", "2.5", "--grid", "50", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2501);
    assert_eq!(text.lines().next(), Some("k_v,varsigma,scaled_radius"));

    let o = run(&["design-map", "--kv-min", "2", "--kv-max", "1", "--vs-min", "1", "--vs-max", "2", "--grid", "4", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn assemble_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (traj, summary) = (dir.path().join("t.csv"), dir.path().join("s.json"));
    let o = run(&[
        "assemble", "--config", config("pentagon.json").to_str().unwrap(), "--out-traj", traj.to_str().unwrap(),
        "--out-summary", summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = io::read_csv(&traj).unwrap();
    assert_eq!(table.header.len(), 3 + 5 * 6);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["termination"], "converged");
    assert_eq!(s["steps"].as_u64().unwrap() as usize + 1, table.rows.len());
    assert_eq!(s["final_metrics"]["within_tolerance"], true);
}

#[test]
fn navigate_narrow_passage_is_collision_free() {
    let dir = tempfile::tempdir().unwrap();
    let (traj, summary) = (dir.path().join("t.csv"), dir.path().join("s.json"));
    let o = run(&[
        "navigate", "--config", config("narrow_passage.json").to_str().unwrap(), "--out-traj", traj.to_str().unwrap(),
        "--out-summary", summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["collision_events"], 0);
    assert_eq!(s["termination"], "goal_reached");
    assert!(s["note"].as_str().unwrap().contains("qualitative reproduction"));
}

#[test]
fn exhausted_step_budget_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = presets::assembly(5, 1);
    s.integrator.max_steps = 10;
    let path = dir.path().join("short.json");
    std::fs::write(&path, io::serialize_scenario(&s)).unwrap();
    let summary = dir.path().join("s.json");
    let o = run(&[
        "assemble", "--config", path.to_str().unwrap(), "--out-traj", dir.path().join("t.csv").to_str().unwrap(),
        "--out-summary", summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["termination"], "max_steps");
}

#[test]
fn unwritable_output_exits_two() {
    let o = run(&[
        "assemble", "--config", config("pentagon.json").to_str().unwrap(), "--out-traj", "/nonexistent/dir/t.csv",
        "--out-summary", "/nonexistent/dir/s.json",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let traj = dir.path().join(format!("t{k}.csv"));
        let o = run(&[
            "assemble", "--config", config("decagon.json").to_str().unwrap(), "--out-traj", traj.to_str().unwrap(),
            "--out-summary", dir.path().join(format!("s{k}.json")).to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(traj).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
