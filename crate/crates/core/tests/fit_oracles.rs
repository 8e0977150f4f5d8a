mod common;

use common::{line, points, sweep_oracle};
use proptest::prelude::*;
use smtilp::fit::{
    build_maxsmt, instantiate, learn_arithmetic_relations, learn_range_relations, score_fn, score_rule, FitOptions, Origin,
    RuleStats,
};
use smtilp::logic::parse_clause;
use smtilp::smt::BuiltinFitter;
use smtilp::templates::ParamAssignment;

fn interval_clause() -> smtilp::logic::Clause {
    parse_clause("target(P) ← interval1d(x(P) | l, u)").unwrap()
}

#[test]
fn hand_encoded_interval_instance() {
    let ds = line(&[1.0, 2.0, 3.0], &[0.0, 5.0]);
    let enc = build_maxsmt(&interval_clause(), &ds, std::time::Duration::from_secs(5)).unwrap();
    assert_eq!(enc.instance.hard.len(), 3);
    assert_eq!(enc.instance.soft.len(), 2);
    assert!(enc.instance.soft.iter().all(|(_, w)| *w == 1.0));
    // ℓ < 2 < u holds at (1.5, 2.5), ¬(ℓ < 0 < u) too
    let env = |v: &str| match v {
        "l" | "p0_l" => Some(1.5),
        "u" | "p0_u" => Some(2.5),
        _ => None,
    };
    assert_eq!(enc.instance.hard[1].eval(&env, &|_| None), Ok(true));
    assert_eq!(enc.instance.soft[0].0.eval(&env, &|_| None), Ok(true));
}

#[test]
fn clause_without_negatives_has_no_soft_constraints() {
    let ds = line(&[1.0, 2.0], &[]);
    let enc = build_maxsmt(&interval_clause(), &ds, std::time::Duration::from_secs(5)).unwrap();
    assert!(enc.instance.soft.is_empty());
}

#[test]
fn varcmp_clause_needs_no_solving() {
    let ds = points(&[vec![1.0, 2.0]], &[vec![3.0, 2.0]], &["x", "y"]);
    let c = parse_clause("target(P) ← x(P) < y(P)").unwrap();
    let enc = build_maxsmt(&c, &ds, std::time::Duration::from_secs(5)).unwrap();
    assert!(enc.instance.decls.is_empty());
    let r = instantiate(&c, &ds, &BuiltinFitter::default(), &FitOptions::default()).unwrap().unwrap();
    assert_eq!(r.clause, c);
    assert!(r.params.is_empty());
    assert!(r.stats.is_perfect());
}

#[test]
fn circle_separates_unit_disc_from_radius_three() {
    let pos = vec![vec![0.5, 0.0], vec![0.0, -0.7], vec![0.3, 0.4], vec![-0.6, 0.6]];
    let neg = vec![vec![3.0, 0.5], vec![-2.5, -2.5], vec![0.0, 4.0]];
    let ds = points(&pos, &neg, &["x", "y"]);
    let c = parse_clause("target(P) ← circle(x(P), y(P) | r)").unwrap();
    let r = instantiate(&c, &ds, &BuiltinFitter::default(), &FitOptions::default()).unwrap().unwrap();
    let rad = r.params.values().next().copied().unwrap();
    let max_pos = pos.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    assert!(max_pos <= rad && rad < 3.0, "{rad}");
    assert!(r.stats.is_perfect());
}

#[test]
fn range_relation_on_constant_attribute_is_degenerate() {
    let ds = line(&[2.0, 2.0], &[2.0]);
    let rules = learn_range_relations(&ds, &BuiltinFitter::default(), &FitOptions::default()).unwrap();
    assert_eq!(rules.len(), 1);
    assert!(rules[0].degenerate);
    assert_eq!(rules[0].origin, Origin::Arithmetic);
}

#[test]
fn range_relation_excludes_outer_negatives() {
    let ds = line(&[2.0, 3.0, 4.0], &[0.0, 9.0]);
    let rules = learn_range_relations(&ds, &BuiltinFitter::default(), &FitOptions::default()).unwrap();
    let p = &rules[0].params;
    let (l, u) = (p["p0_l"], p["p0_u"]);
    assert!(0.0 <= l && l < 2.0 && 4.0 < u && u <= 9.0, "{l} {u}");
}

#[test]
fn single_attribute_has_no_arithmetic_relations() {
    let ds = line(&[1.0], &[2.0]);
    assert!(learn_arithmetic_relations(&ds, &BuiltinFitter::default(), &FitOptions::default(), true).unwrap().is_empty());
}

/// Most negatives a closed halfplane w·v ≤ t can reject while keeping every
/// positive: the count is constant between the directions where a
/// positive and a negative swap order, so one direction per cell suffices.
fn halfplane_oracle(pos: &[Vec<f64>], neg: &[Vec<f64>]) -> usize {
    let mut angles = vec![0.0];
    for p in pos {
        for n in neg {
            let (dx, dy) = (n[0] - p[0], n[1] - p[1]);
            let a = dy.atan2(dx) + std::f64::consts::FRAC_PI_2;
            for k in [-1.0, 0.0, 1.0, 2.0] {
                angles.push((a + k * std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI));
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.push(angles[0] + 2.0 * std::f64::consts::PI);
    let mut best = 0;
    for w in angles.windows(2) {
        let th = 0.5 * (w[0] + w[1]);
        let (c, s) = (th.cos(), th.sin());
        let t = pos.iter().map(|p| c * p[0] + s * p[1]).fold(f64::NEG_INFINITY, f64::max);
        best = best.max(neg.iter().filter(|n| c * n[0] + s * n[1] > t).count());
    }
    best
}

fn rounded(v: Vec<(f64, f64)>) -> Vec<Vec<f64>> {
    v.into_iter().map(|(a, b)| vec![(a * 10.0).round() / 10.0, (b * 10.0).round() / 10.0]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn interval_fit_matches_sweep_oracle(
        pos in prop::collection::vec(-10.0f64..10.0, 1..12),
        neg in prop::collection::vec(-10.0f64..10.0, 0..12),
    ) {
        let pos: Vec<f64> = pos.iter().map(|v| (v * 2.0).round() / 2.0).collect();
        let neg: Vec<f64> = neg.iter().map(|v| (v * 2.0).round() / 2.0).collect();
        let ds = line(&pos, &neg);
        let r = instantiate(&interval_clause(), &ds, &BuiltinFitter::default(), &FitOptions::default()).unwrap().unwrap();
        prop_assert_eq!(r.stats.cov_pos, pos.len());
        prop_assert_eq!(r.stats.exc_neg, sweep_oracle(&pos, &neg));
    }

    #[test]
    fn halfplane_fit_matches_direction_oracle(
        pos in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..5),
        neg in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..5),
    ) {
        let (pos, neg) = (rounded(pos), rounded(neg));
        let ds = points(&pos, &neg, &["x", "y"]);
        let rules = learn_arithmetic_relations(&ds, &BuiltinFitter::default(), &FitOptions::default(), false).unwrap();
        prop_assert_eq!(rules.len(), 1);
        let r = &rules[0];
        prop_assert!(!r.demoted);
        prop_assert_eq!(r.stats.cov_pos, pos.len());
        prop_assert_eq!(r.stats.exc_neg, halfplane_oracle(&pos, &neg));
    }

    #[test]
    fn stats_match_naive_reevaluation(
        pts in prop::collection::vec(((-5.0f64..5.0, -5.0f64..5.0), any::<bool>()), 1..20),
        a in -3.0f64..3.0, b in -3.0f64..3.0, t in -5.0f64..5.0,
    ) {
        let pos: Vec<Vec<f64>> = pts.iter().filter(|p| p.1).map(|p| vec![p.0 .0, p.0 .1]).collect();
        let neg: Vec<Vec<f64>> = pts.iter().filter(|p| !p.1).map(|p| vec![p.0 .0, p.0 .1]).collect();
        let ds = points(&pos, &neg, &["x", "y"]);
        let c = parse_clause("target(P) ← halfplane2d(x(P), y(P) | a, b, t)").unwrap();
        let params: ParamAssignment = [("p0_a", a), ("p0_b", b), ("p0_t", t)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let c = c.normalize_slots().0;
        let r = score_rule(&c, params, &ds, Origin::Structured, 0).unwrap();
        let inside = |p: &Vec<f64>| a * p[0] + b * p[1] <= t;
        let tp = pos.iter().filter(|p| inside(p)).count();
        let fp = neg.iter().filter(|p| inside(p)).count();
        prop_assert_eq!(r.stats.cov_pos, tp);
        prop_assert_eq!(r.stats.exc_neg, neg.len() - fp);
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if pos.is_empty() { 0.0 } else { tp as f64 / pos.len() as f64 };
        prop_assert!((r.stats.precision - precision).abs() < 1e-12);
        prop_assert!((r.stats.recall - recall).abs() < 1e-12);
        prop_assert!((r.score - score_fn(&r.stats)).abs() < 1e-12);
    }

    #[test]
    fn an_extra_negative_never_raises_precision(
        pos in prop::collection::vec(-5.0f64..5.0, 1..8),
        neg in prop::collection::vec(-5.0f64..5.0, 0..8),
        extra in -5.0f64..5.0,
        l in -5.0f64..0.0, u in 0.0f64..5.0,
    ) {
        let c = interval_clause().normalize_slots().0;
        let params: ParamAssignment = [("p0_l".to_string(), l), ("p0_u".to_string(), u)].into_iter().collect();
        let before = score_rule(&c, params.clone(), &line(&pos, &neg), Origin::Structured, 0).unwrap().stats;
        let mut more = neg.clone();
        more.push(extra);
        let after = score_rule(&c, params, &line(&pos, &more), Origin::Structured, 0).unwrap().stats;
        prop_assert!(after.precision <= before.precision);
        prop_assert!(after.n_neg - after.exc_neg >= before.n_neg - before.exc_neg);
    }

    #[test]
    fn stats_are_recomputable_and_bounded(n_pos in 0usize..30, n_neg in 0usize..30, cp in 0usize..30, en in 0usize..30, len in 0usize..7, budget in 1usize..7) {
        let (cov_pos, exc_neg) = (cp.min(n_pos), en.min(n_neg));
        let s = RuleStats::from_counts(cov_pos, n_pos, exc_neg, n_neg, len.min(budget), budget);
        for v in [s.precision, s.recall, s.f1, s.support, s.compression, score_fn(&s)] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let covered_neg = n_neg - exc_neg;
        let p = if cov_pos + covered_neg == 0 { 0.0 } else { cov_pos as f64 / (cov_pos + covered_neg) as f64 };
        prop_assert_eq!(s.precision, p);
        if s.precision + s.recall > 0.0 {
            prop_assert!((s.f1 - 2.0 / (1.0 / s.precision + 1.0 / s.recall)).abs() < 1e-12 || s.precision == 0.0 || s.recall == 0.0);
        }
    }

    #[test]
    fn instantiate_is_deterministic(pos in prop::collection::vec(-5.0f64..5.0, 1..8), neg in prop::collection::vec(-5.0f64..5.0, 0..8)) {
        let ds = line(&pos, &neg);
        let b = BuiltinFitter::with_seed(3);
        let x = instantiate(&interval_clause(), &ds, &b, &FitOptions::default()).unwrap();
        let y = instantiate(&interval_clause(), &ds, &b, &FitOptions::default()).unwrap();
        prop_assert_eq!(x, y);
    }
}

#[test]
fn score_reference_values() {
    let s = RuleStats { f1: 0.8, precision: 1.0, support: 0.5, compression: 0.5, ..RuleStats::from_counts(0, 0, 0, 0, 0, 1) };
    assert!((score_fn(&s) - 0.77).abs() < 1e-12);
    let perfect = RuleStats::from_counts(5, 5, 5, 5, 0, 3);
    assert!((score_fn(&perfect) - 1.0).abs() < 1e-12);
    assert_eq!(score_fn(&RuleStats::from_counts(0, 5, 0, 5, 3, 3)), 0.0);
}
