use std::path::Path;
use std::process::{Command, Output};

fn smtilp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smtilp")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_tasks_per_family() {
    let dir = tempfile::tempdir().unwrap();
    let o = smtilp(&["tasks"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 5);
    assert!(out.contains("interval halfplane"));
    assert!(out.contains("ip4_high_score"));
}

#[test]
fn gen_then_eval_the_true_rule() {
    let dir = tempfile::tempdir().unwrap();
    let o = smtilp(&["gen", "interval", "--seed", "4", "--out", "data"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let facts = dir.path().join("data/interval.facts");
    let manifest = std::fs::read_to_string(dir.path().join("data/interval.manifest.json")).unwrap();
    assert!(manifest.contains("\"n_train\": 140"));

    std::fs::write(
        dir.path().join("true.rules"),
        "rule 1 arithmetic: interval(P) ← interval1d(x(P) | l, u) {l=-3, u=4}\n",
    )
    .unwrap();
    let o = smtilp(&["eval", "true.rules", facts.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "accuracy 1.0000 (200/200)");

    std::fs::write(dir.path().join("empty.rules"), "").unwrap();
    let o = smtilp(&["eval", "empty.rules", facts.to_str().unwrap()], dir.path());
    assert_eq!(stdout(&o).trim(), "accuracy 0.5000 (100/200)");
}

#[test]
fn learn_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let o = smtilp(&["learn", "halfplane", "--trials", "1", "--out", "res"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("halfplane"));
    let results = std::fs::read_to_string(dir.path().join("res/results.jsonl")).unwrap();
    assert_eq!(results.lines().count(), 1);
    assert!(dir.path().join("res/rules/halfplane.full.t0.rules").exists());
}

#[test]
fn rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!smtilp(&["gen", "no_such_task"], dir.path()).status.success());
    assert!(!smtilp(&["learn", "interval", "--mode", "bogus"], dir.path()).status.success());
    assert!(!smtilp(&["suite", "geometry9"], dir.path()).status.success());
    std::fs::write(dir.path().join("bad.toml"), "workers = \"many\"\n").unwrap();
    assert!(!smtilp(&["suite", "geometry0", "--config", "bad.toml"], dir.path()).status.success());
}
