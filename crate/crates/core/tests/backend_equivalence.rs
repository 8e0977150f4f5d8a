mod common;

use common::{backend_disagreements, random_instance};
use smtilp::smt::{solve_maxsmt, BuiltinFitter, SmtLibProcess};

#[test]
fn builtin_and_external_agree_on_random_linear_instances() {
    let ext = SmtLibProcess::from_env();
    if !ext.available() {
        eprintln!("external solver not available; skipping");
        return;
    }
    let diffs = backend_disagreements(&ext, 100);
    assert!(diffs.is_empty(), "{diffs:?}");
}

#[test]
fn builtin_soft_weight_is_reproducible() {
    for seed in 0..20 {
        let inst = random_instance(seed);
        let a = solve_maxsmt(&BuiltinFitter::with_seed(9), &inst).unwrap();
        let b = solve_maxsmt(&BuiltinFitter::with_seed(9), &inst).unwrap();
        assert_eq!(a.satisfied_soft_weight, b.satisfied_soft_weight);
        assert_eq!(a.model, b.model);
    }
}

