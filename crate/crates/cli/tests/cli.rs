use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn aodv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aodv")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid json on stdout")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn presets_are_listed() {
    let o = aodv(&["presets"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("aodv-ns2         1b,2a,3a,4b,+2"));
    assert_eq!(text.lines().count(), 7);

    let v = json(&aodv(&["presets", "--format", "json"]));
    let names: Vec<_> = v.as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap().to_string()).collect();
    assert_eq!(
        names,
        ["aodv-uu", "kernel-aodv", "aodv-uiuc", "aodv-ucsb", "aodv-ns2", "rfc-strict-loop", "rfc-strict-safe"]
    );
}

#[test]
fn strict_reading_loops_on_figure1() {
    let o = aodv(&["run", "figure1", "--preset", "rfc-strict-loop"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("loop for d: s -> x -> s"), "{text}");
    assert!(text.contains("(d,3,val,3,x) kno"), "{text}");
}

#[test]
fn implementations_stay_loop_free_on_figure1() {
    for preset in ["aodv-uu", "kernel-aodv"] {
        let o = aodv(&["run", "figure1", "--preset", preset]);
        assert_eq!(code(&o), 0, "{preset}");
        assert!(stdout(&o).contains("no routing loops"), "{preset}");
    }
}

#[test]
fn figure1_without_config_runs_every_preset() {
    let o = aodv(&["figure1"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let looping: Vec<_> = text.lines().filter(|l| l.contains("loop for")).collect();
    assert_eq!(looping.len(), 1);
    assert!(looping[0].starts_with("rfc-strict-loop"));

    let o = aodv(&["figure1", "--variant", "ns2", "--preset", "aodv-ns2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("loop for d: s -> x -> s"));
}

#[test]
fn figure1_text_replays_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f1.scn");
    let o = aodv(&["figure1", "--print"]);
    fs::write(&path, &o.stdout).unwrap();
    let o = aodv(&["run", path.to_str().unwrap(), "--amb3", "3a", "--amb4", "4a"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("loop for d"));
}

#[test]
fn single_axis_flags_override_the_preset() {
    let v = json(&aodv(&["run", "figure1", "--preset", "aodv-uu", "--amb3", "3a", "--format", "json"]));
    assert_eq!(v["config"], "1b,2c,3a,4a,+1");
    assert_eq!(v["loops"].as_array().unwrap().len(), 1);
    assert_eq!(v["passed"], true);
}

#[test]
fn trace_is_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let text = dir.path().join("trace.txt");
    let o = aodv(&["run", "figure1", "--preset", "rfc-strict-loop", "--trace", text.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let trace = fs::read_to_string(&text).unwrap();
    assert!(trace.contains("newpkt d a"), "{trace}");

    let structured = dir.path().join("trace.json");
    let o = aodv(&[
        "run",
        "figure1",
        "--seedless",
        "--format",
        "json",
        "--trace",
        structured.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(&structured).unwrap()).unwrap();
    assert!(!v["steps"].as_array().unwrap().is_empty(), "{v}");
}

#[test]
fn failed_assertion_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    fs::write(&path, "scenario bad\nnode a b\nlink a b\nnewpkt a b\ndeliver-all\nassert-entry a b 7 val 1 b\n").unwrap();
    let o = aodv(&["run", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("FAIL line 6"), "{text}");
    assert!(text.contains("actual: a holds (b,1,val,1,b)"), "{text}");
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.scn");
    fs::write(&path, "node a b\nlink a c\n").unwrap();
    let o = aodv(&["run", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(code(&aodv(&["run", "no-such-scenario"])), 2);
    assert_eq!(code(&aodv(&["explore", "--nodes", "9"])), 2);
    assert_eq!(code(&aodv(&["explore", "--amb2", "2z"])), 2);
    assert_eq!(code(&aodv(&["explore", "--from", "figure1", "--from-part", "(z)"])), 2);
}

#[test]
fn zero_events_is_a_trivial_search() {
    let v = json(&aodv(&["explore", "--max-events", "0", "--format", "json"]));
    assert_eq!(v["states_visited"], 1);
    assert_eq!(v["exhausted"], true);
}

#[test]
fn overwrite_decrements_sequence_numbers() {
    let o = aodv(&["explore", "--amb2", "2b", "--nodes", "3", "--max-events", "10", "--format", "json"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert!(v["monotonicity_violations"].as_u64().unwrap() >= 1);
    assert_eq!(v["exhausted"], true);
}

#[test]
fn safe_reading_is_loop_free_at_four_nodes() {
    let o = aodv(&["explore", "--preset", "rfc-strict-safe", "--nodes", "4", "--max-events", "12"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("exhausted: true"), "{text}");
    assert!(text.contains("loops: 0"), "{text}");
}

fn replay_all(dir: &Path, expected: usize) {
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), expected);
    for f in files {
        let o = aodv(&["run", f.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}: {}", f.display(), stdout(&o));
    }
}

#[test]
fn written_witnesses_replay() {
    let dir = tempfile::tempdir().unwrap();
    let o = aodv(&[
        "explore",
        "--preset",
        "aodv-uiuc",
        "--max-events",
        "6",
        "--witness-dir",
        dir.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    let count = v["loops"].as_array().unwrap().len() + v["violation_witnesses"].as_array().unwrap().len();
    assert!(count > 0);
    replay_all(dir.path(), count);
}

#[test]
fn search_from_part_g_finds_the_loop() {
    let dir = tempfile::tempdir().unwrap();
    let o = aodv(&[
        "explore",
        "--preset",
        "rfc-strict-loop",
        "--from",
        "figure1",
        "--from-part",
        "(g)",
        "--max-events",
        "8",
        "--deliver-all",
        "--witness-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("loop for d: s -> x -> s"), "{text}");
    let written = fs::read_dir(dir.path()).unwrap().count();
    replay_all(dir.path(), written);

    let o = aodv(&["explore", "--preset", "aodv-uu", "--from", "figure1", "--from-part", "(g)", "--max-events", "8", "--deliver-all"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}
