use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn sepclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepclass")).args(args).output().unwrap()
}

fn path(rel: &str) -> String {
    corpus().join(rel).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sepclass-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn clean_run_exits_zero_and_writes_a_replayable_trace() {
    let dir = scratch("clean");
    let trace = dir.join("t.jsonl").display().to_string();
    let out = sepclass(&["run", "--scenario", &path("scenarios/twodegrees/skips.jsonl"), "--trace-out", &trace]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS coding"));
    assert_eq!(sepclass(&["verify", "--trace", &trace]).status.code(), Some(0));
    let replayed = sepclass(&["replay", "--trace", &trace]);
    assert_eq!(replayed.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&replayed.stdout).starts_with("IDENTICAL"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn fault_fixture_exits_one_and_names_the_verdict() {
    let out = sepclass(&["verify", "--trace", &path("faults/twodegrees/coding.jsonl")]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL coding"), "{text}");
    assert!(text.contains("second code in column 2"), "{text}");
}

#[test]
fn schema_and_hypothesis_errors_have_their_own_codes() {
    assert_eq!(sepclass(&["run", "--scenario", &path("invalid/stage-beyond-horizon.jsonl")]).status.code(), Some(2));
    assert_eq!(sepclass(&["run", "--scenario", &path("invalid/gamma-bit-4.jsonl")]).status.code(), Some(3));
    assert_eq!(sepclass(&["run", "--scenario", &path("invalid/overlap.jsonl")]).status.code(), Some(3));
    assert_eq!(sepclass(&["run", "--scenario", "/nonexistent.jsonl"]).status.code(), Some(2));
    assert_eq!(sepclass(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn batch_verify_reports_every_fault_and_fail_fast_stops_early() {
    let dir = scratch("reports");
    let report = dir.join("r.jsonl").display().to_string();
    let out = sepclass(&["verify", "--trace", &path("faults/upclosure"), "--report-out", &report]);
    assert_eq!(out.status.code(), Some(1));
    let lines = std::fs::read_to_string(&report).unwrap();
    assert_eq!(lines.lines().count(), 7);
    for line in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["report"]["construction"], "upclosure");
    }
    let out = sepclass(&["verify", "--trace", &path("faults/upclosure"), "--fail-fast"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().filter(|l| l.starts_with("FAIL ") && l.ends_with(".jsonl")).count(), 1);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn horizon_flag_shortens_the_run() {
    let dir = scratch("horizon");
    let trace = dir.join("t.jsonl");
    let out = sepclass(&[
        "run",
        "--scenario",
        &path("scenarios/nosupermax/chaser-00.jsonl"),
        "--horizon",
        "120",
        "--trace-out",
        &trace.display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let first = std::fs::read_to_string(&trace).unwrap();
    assert!(first.lines().next().unwrap().contains("\"horizon\":120"));
    std::fs::remove_dir_all(dir).unwrap();
}
