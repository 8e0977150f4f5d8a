mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{generator_violations, triangle_closers};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smtilp::bench::{self, ip, Family, TaskSpec};
use smtilp::logic::{serialize_dataset, Dataset};

fn check_task(task: &str, seed: u64) -> Dataset {
    let (ds, violations) = generator_violations(task, seed);
    assert!(violations.is_empty(), "{violations:?}");
    let n = if bench::family_of(task) == Some(Family::Ip) { bench::IP_N } else { bench::GEOMETRY_N };
    assert_eq!(ds.len(), n, "{task}");
    assert_eq!(ds.positives.len(), n / 2, "{task}: class balance");
    ds
}

#[test]
fn every_task_labels_agree_with_ground_truth_and_respect_the_margin() {
    for (_, task) in bench::all_tasks() {
        check_task(task, 0);
    }
}

#[test]
fn labels_hold_for_other_seeds() {
    for task in ["interval", "conjunction", "inside", "donut", "sinusoidal", "ip2_active", "ip4_high_score"] {
        for seed in [1, 17] {
            check_task(task, seed);
        }
    }
}

#[test]
fn generation_is_byte_identical_per_seed() {
    for task in ["halfplane", "near_corner", "in_circle", "ip3_threshold"] {
        let a = bench::generate(&TaskSpec::new(task, 5).unwrap()).unwrap();
        let b = bench::generate(&TaskSpec::new(task, 5).unwrap()).unwrap();
        let c = bench::generate(&TaskSpec::new(task, 6).unwrap()).unwrap();
        assert_eq!(serialize_dataset(&a.dataset), serialize_dataset(&b.dataset));
        assert_eq!(a.manifest, b.manifest);
        assert_ne!(serialize_dataset(&a.dataset), serialize_dataset(&c.dataset));
    }
}

#[test]
fn train_and_test_partition_the_examples() {
    let g = bench::generate(&TaskSpec::new("ip1_active", 3).unwrap()).unwrap();
    let (tr, te) = (g.train(), g.test());
    let ids = |d: &Dataset| d.examples().map(|e| e.id.to_string()).collect::<BTreeSet<_>>();
    assert_eq!(tr.positives.len() + tr.negatives.len(), 210);
    assert!(ids(&tr).is_disjoint(&ids(&te)));
    assert_eq!(ids(&tr).len() + ids(&te).len(), 300);
}

#[test]
fn unknown_task_is_rejected() {
    assert!(TaskSpec::new("no_such_task", 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn triangle_partners_match_enumeration(seed in any::<u64>()) {
        let g = ip::IpGraph::random("g", &mut ChaCha8Rng::seed_from_u64(seed));
        let edges: BTreeSet<(String, String)> =
            g.edges.iter().map(|&(a, b, _)| (g.nodes[a].clone(), g.nodes[b].clone())).collect();
        for a in 0..g.len() {
            let want = triangle_closers(&edges, &g.nodes[a]);
            let got: BTreeSet<String> = g.triangle_partners(a).into_iter().map(|c| g.nodes[c].clone()).collect();
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn hop_predicates_match_enumeration(seed in any::<u64>()) {
        let g = ip::IpGraph::random("g", &mut ChaCha8Rng::seed_from_u64(seed));
        let mut into: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b, _) in &g.edges {
            into.entry(b).or_default().push(a);
        }
        let preds = |n: usize| into.get(&n).cloned().unwrap_or_default();
        for a in 0..g.len() {
            prop_assert_eq!(g.seeded_1hop(a), preds(a).iter().any(|&b| g.seed[b]));
            prop_assert_eq!(g.seeded_2hop(a), preds(a).iter().any(|&c| preds(c).iter().any(|&b| g.seed[b])));
            let mi = g.edges.iter().filter(|e| e.1 == a).map(|e| e.2).fold(0.0, f64::max);
            prop_assert_eq!(g.max_influence(a), mi);
        }
    }
}
