use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dualsys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualsys"))
        .args(args)
        .output()
        .expect("dualsys runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&dualsys(&[])), 2);
    assert_eq!(code(&dualsys(&["generate-babi"])), 2);
    assert_eq!(code(&dualsys(&["no-such-command"])), 2);
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.jsonl");
    let r = dualsys(&["generate-babi", "--fault-rate", "1.5", "--out", p(&out)]);
    assert_eq!(code(&r), 2, "{}", String::from_utf8_lossy(&r.stderr));
    let r = dualsys(&["generate-clutrr", "--proposer", "http", "--out", p(&out)]);
    assert_eq!(code(&r), 2, "http without an endpoint");
    let r = dualsys(&["gscan-filter", "--scenes", p(&out), "--proposer", "greedy", "--out", p(&out)]);
    assert_eq!(code(&r), 2);
}

#[test]
fn missing_input_exits_1() {
    let r = dualsys(&["qa-babi", "--in", "/nonexistent/stories.txt"]);
    assert_eq!(code(&r), 1);
}

#[test]
fn unreachable_proposer_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.jsonl");
    let r = dualsys(&[
        "generate-babi", "--proposer", "http", "--endpoint", "http://127.0.0.1:9", "--timeout-secs", "2", "--stories",
        "1", "--out", p(&out),
    ]);
    assert_eq!(code(&r), 3, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn wrong_gold_answers_lower_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let stories = dir.path().join("s.txt");
    std::fs::write(
        &stories,
        "1 Mary picked up the apple.\n2 Mary went to the garden.\n3 Where is the apple?\tkitchen\t1 2\n",
    )
    .unwrap();
    let r = dualsys(&["qa-babi", "--in", p(&stories)]);
    assert_eq!(code(&r), 0);
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("-> garden (gold kitchen) WRONG"), "{stdout}");
    assert!(stdout.contains("accuracy 0.0000 (0/1)"), "{stdout}");
}

#[test]
fn relation_free_story_is_fully_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("k.txt");
    let report = dir.path().join("k.json");
    std::fs::write(&input, "They had a wonderful time.\nMichael laughed, and felt better.\n").unwrap();
    assert_eq!(code(&dualsys(&["check-clutrr", "--in", p(&input), "--out", p(&report)])), 0);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["stats"]["pct_lines_error_free"], 1.0);
    assert_eq!(r["stats"]["pct_stories_error_free"], 1.0);
}

#[test]
fn tampered_manifest_fails_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scenes.json");
    assert_eq!(code(&dualsys(&["gen-gscan-scenes", "--count", "5", "--out", p(&out)])), 0);
    let manifest = dir.path().join("scenes.json.manifest.json");
    let mut m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "gen-gscan-scenes");
    m["outputs"][0]["sha256"] = Value::from("0".repeat(64));
    std::fs::write(&manifest, m.to_string()).unwrap();
    let again = dir.path().join("again.json");
    assert_eq!(code(&dualsys(&["rerun", "--manifest", p(&manifest), "--out", p(&again)])), 1);
}
