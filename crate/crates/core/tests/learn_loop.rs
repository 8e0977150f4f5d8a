use std::collections::BTreeMap;

use smtilp::bench::{self, TaskSpec};
use smtilp::harness::{self, Mode, Prediction, ResultRecord, SuiteConfig};
use smtilp::learn::{run_learning, LearnError, LearnResult, LoopConfig};
use smtilp::logic::serialize_dataset;
use smtilp::smt::BuiltinFitter;

fn learn(task: &str, mode: Mode, seed: u64, edit: impl Fn(&mut LoopConfig)) -> LearnResult {
    let cfg = SuiteConfig::default();
    let g = bench::generate(&TaskSpec::new(task, seed).unwrap()).unwrap();
    let train = g.train();
    let bias = harness::bias_for(task, cfg.family(g.spec.family).literal_budget).unwrap();
    let mut lc = harness::loop_config(&cfg, task, mode, &train);
    edit(&mut lc);
    run_learning(&train, &bias, &lc, &BuiltinFitter::with_seed(seed)).unwrap()
}

fn rendered(r: &LearnResult) -> Vec<String> {
    r.hypothesis.iter().map(|h| h.to_string()).collect()
}

#[test]
fn zero_iterations_is_rejected() {
    let g = bench::generate(&TaskSpec::new("interval", 0).unwrap()).unwrap();
    let bias = harness::bias_for("interval", 3).unwrap();
    let lc = LoopConfig { t_max: 0, ..LoopConfig::default() };
    let err = run_learning(&g.train(), &bias, &lc, &BuiltinFitter::default()).unwrap_err();
    assert!(matches!(err, LearnError::Config(_)));
}

#[test]
fn iteration_log_respects_limits() {
    for (task, mode) in [("interval", Mode::Full), ("left_of", Mode::Full), ("ip1_active", Mode::Full), ("ip2_active", Mode::NoPi)] {
        let r = learn(task, mode, 0, |_| {});
        let lc = LoopConfig::default();
        assert!(!r.log.is_empty() && r.log.len() <= lc.t_max, "{task}");
        for (i, rec) in r.log.iter().enumerate() {
            assert_eq!(rec.t, i);
        }
        for h in &r.hypothesis {
            assert!(h.score >= lc.theta, "{task}: {h} scored {}", h.score);
        }
        for a in &r.background_additions {
            assert!(a.iteration < 3, "{task}: addition at t={}", a.iteration);
            assert!(a.precision > 0.8, "{task}: addition with precision {}", a.precision);
        }
        for rec in &r.log {
            assert!(rec.background_added.len() <= lc.max_bk_per_iteration);
            if rec.t >= 3 {
                assert!(rec.background_added.is_empty());
            }
        }
        let added: usize = r.log.iter().map(|rec| rec.background_added.len()).sum();
        assert_eq!(added, r.background_additions.len());
    }
}

#[test]
fn hypothesis_only_grows_across_iterations() {
    for task in ["left_of", "ip1_active"] {
        let mut prev: Vec<String> = Vec::new();
        for t_max in 1..=3 {
            let r = learn(task, Mode::Full, 1, |lc| {
                lc.t_max = t_max;
                lc.theta_conv = 1e-12;
            });
            let now = rendered(&r);
            assert!(now.len() >= prev.len(), "{task}: {prev:?} -> {now:?}");
            assert_eq!(&now[..prev.len()], &prev[..], "{task}: earlier rules were dropped");
            prev = now;
        }
    }
}

#[test]
fn reruns_are_identical() {
    for task in ["halfplane", "closer_than", "ip1_active"] {
        let a = learn(task, Mode::Full, 2, |_| {});
        let b = learn(task, Mode::Full, 2, |_| {});
        assert_eq!(harness::rules_file(&a), harness::rules_file(&b), "{task}");
        assert_eq!(rendered(&a), rendered(&b));
        assert_eq!(a.background_additions, b.background_additions);
    }
}

#[test]
fn reported_accuracy_matches_predictions_and_rules_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SuiteConfig::default();
    cfg.out_dir = dir.path().to_path_buf();
    for task in ["interval", "touching", "ip1_active"] {
        let out = harness::run_task(&cfg, task, Mode::Full, 0).unwrap();
        let acc = out.record.accuracy.expect("trial succeeded");
        let right = out.predictions.iter().filter(|p| p.label == p.predicted).count();
        assert_eq!(out.predictions.len(), out.record.n_test);
        assert!((acc - right as f64 / out.predictions.len() as f64).abs() < 1e-12, "{task}");

        let g = bench::generate(&TaskSpec::new(task, harness::trial_seed(&cfg, 0)).unwrap()).unwrap();
        let rep = harness::evaluate_rules(&out.rules, &serialize_dataset(&g.test())).unwrap();
        assert_eq!(rep.n, out.record.n_test);
        assert!((rep.accuracy - acc).abs() < 1e-12, "{task}: rules file gives {} vs {acc}", rep.accuracy);
    }
}

#[test]
fn written_report_recomputes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SuiteConfig::default();
    cfg.out_dir = dir.path().to_path_buf();
    let outcomes = harness::run_trials(&cfg, "halfplane", Mode::Full, 2);
    let summaries = harness::summarize(&outcomes);
    let table = harness::render_table("halfplane", &summaries);
    let report = harness::SuiteReport { outcomes, summaries, table };
    harness::write_report(dir.path(), &report).unwrap();

    let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
    let records: Vec<ResultRecord> = read("results.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let preds: Vec<Prediction> = read("predictions.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 2);
    let mut by_trial: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for p in &preds {
        let e = by_trial.entry(p.trial).or_default();
        e.0 += usize::from(p.label == p.predicted);
        e.1 += 1;
    }
    for r in &records {
        let (ok, n) = by_trial[&r.trial];
        assert!((r.accuracy.unwrap() - ok as f64 / n as f64).abs() < 1e-12);
        assert!(dir.path().join(format!("rules/halfplane.full.t{}.rules", r.trial)).exists());
    }
    assert!(!read("results.jsonl").contains("wall_time"));
    assert_eq!(read("timings.jsonl").lines().count(), 2);
}
