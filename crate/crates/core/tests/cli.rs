use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ecidpda::EcidpdaQ;

const GUESSER: &str = r#"{
  "alphabet": { "calls": ["<"], "returns": [">"], "internals": ["a"] },
  "states": ["q0", "q1"],
  "initial": ["q0"],
  "accepting": ["q1"],
  "stack": ["s"],
  "transitions": [
    { "from": "q0", "symbol": "a", "guard": "true", "to": "q0" },
    { "from": "q0", "symbol": "a", "guard": "hist(a) <= 1", "to": "q1" },
    { "from": "q0", "symbol": "<", "guard": "true", "to": "q0", "push": "s" },
    { "from": "q0", "symbol": ">", "guard": "stackhist >= 2", "to": "q1", "pop": "s" }
  ]
}"#;

fn ecidpda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecidpda")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_reports_verdict_through_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", GUESSER);
    let close = write(dir.path(), "close.txt", "a 1\na 1.5\n");
    let far = write(dir.path(), "far.txt", "a 1\na 3\n");
    let bracket = write(dir.path(), "bracket.txt", "< 0\n> 2\n");

    let out = ecidpda(&["run", &a, &close]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).ends_with("accept\n"));
    assert_eq!(stdout(&out).lines().count(), 4, "one trace line per prefix plus the verdict");

    assert_eq!(code(&ecidpda(&["run", &a, &far])), 1);
    assert_eq!(code(&ecidpda(&["run", &a, &bracket])), 0);

    let out = ecidpda(&["--json", "run", &a, &close]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["accepted"], true);
    assert_eq!(report["steps"].as_array().unwrap().len(), 3);
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", GUESSER);
    let backwards = write(dir.path(), "w.txt", "a 2\na 1\n");
    let broken = write(dir.path(), "broken.json", "{ \"states\": ");
    assert_eq!(code(&ecidpda(&["run", &a, &backwards])), 2);
    assert_eq!(code(&ecidpda(&["check-det", &broken])), 2);
    assert_eq!(code(&ecidpda(&["run", &a, "/nonexistent/string.txt"])), 2);
    assert_eq!(code(&ecidpda(&["determinize", &a, "--mode", "regions"])), 2);
    assert_eq!(code(&ecidpda(&["witness", "--n", "2"])), 2);
}

#[test]
fn determinize_writes_a_deterministic_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", GUESSER);
    assert_eq!(code(&ecidpda(&["check-det", &a])), 1);
    for mode in ["direct", "nostackpred"] {
        let out_path = dir.path().join(format!("{mode}.json"));
        let out = ecidpda(&["determinize", &a, "--mode", mode, "-o", out_path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
        assert!(stdout(&out).contains("deterministic: true"));
        assert_eq!(code(&ecidpda(&["check-det", out_path.to_str().unwrap()])), 0);
        let d = EcidpdaQ::parse_json(&fs::read_to_string(&out_path).unwrap()).unwrap();
        assert!(d.is_deterministic().is_deterministic());
        for (w, expected) in [("a 1\na 1.5\n", 0), ("a 1\na 3\n", 1), ("< 0\n> 2\n", 0), ("< 0\n> 1\n", 1)] {
            let path = write(dir.path(), "w.txt", w);
            assert_eq!(code(&ecidpda(&["run", out_path.to_str().unwrap(), &path])), expected, "{mode} on {w:?}");
        }
    }
    // Untimed determinization refuses guarded input.
    assert_eq!(code(&ecidpda(&["determinize", &a, "--mode", "untimed"])), 2);
}

#[test]
fn diff_is_reproducible() {
    let args = ["--json", "diff", "--mode", "nostackpred", "--trials", "6", "--strings", "10", "--seed", "5"];
    let first = ecidpda(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(stdout(&first), stdout(&ecidpda(&args)));
    let report: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["mismatches"].as_array().unwrap().len(), 0);
}

#[test]
fn witness_subcommands() {
    let out = ecidpda(&["witness", "--n", "2", "--k", "1", "--m", "1", "--exhaustive"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("256 string(s), 0 disagreement(s)"));
    assert_eq!(code(&ecidpda(&["witness", "--n", "4", "--k", "1", "--m", "1", "--exhaustive"])), 2);

    let out = ecidpda(&["witness", "--n", "2", "--k", "1", "--m", "1", "--demo"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("continuation:"));

    let dir = tempfile::tempdir().unwrap();
    let valid = write(
        dir.path(),
        "valid.json",
        r#"{ "n": 2, "k": 1, "s": [0, 1], "R": [[[0, 1]]], "X": [["e1"]], "Y": [["e1"]] }"#,
    );
    let invalid = write(
        dir.path(),
        "invalid.json",
        r#"{ "n": 2, "k": 1, "s": [0, 1], "R": [[[1, 1]]], "X": [["e1"]], "Y": [["e1"]] }"#,
    );
    let nfa = dir.path().join("nfa.json");
    let string = dir.path().join("w.json");
    let out = ecidpda(&[
        "witness",
        "--spec",
        &valid,
        "--nfa-out",
        nfa.to_str().unwrap(),
        "--string-out",
        string.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert_eq!(code(&ecidpda(&["run", nfa.to_str().unwrap(), string.to_str().unwrap()])), 0);
    assert_eq!(code(&ecidpda(&["witness", "--spec", &invalid])), 1);
}
