#![allow(dead_code)]
//! Oracles and instance builders shared by the integration tests.

use std::collections::BTreeSet;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smtilp::bench::{self, geometry, ip, TaskSpec, MARGIN};
use smtilp::logic::{Atom, Background, Dataset, Example, Polarity, Sym};
use smtilp::smt::{holds_under, solve_maxsmt, BuiltinFitter, Cmp, Expr, Formula, MaxSmtInstance, SmtLibProcess, Status, VarDecl};
use smtilp::templates::Theory;

pub fn points(pos: &[Vec<f64>], neg: &[Vec<f64>], attrs: &[&str]) -> Dataset {
    let mut bg = Background::new();
    let mut ex = Vec::new();
    for (i, (p, pol)) in pos
        .iter()
        .map(|p| (p, Polarity::Positive))
        .chain(neg.iter().map(|p| (p, Polarity::Negative)))
        .enumerate()
    {
        let o = format!("o{i}");
        for (a, v) in attrs.iter().zip(p) {
            bg.set_measure(&o, a, *v).unwrap();
        }
        ex.push(Example::new(&format!("e{i}"), pol, Atom::new("target", &[&o])));
    }
    Dataset::new(bg, ex, Theory::Lra).unwrap()
}

pub fn line(pos: &[f64], neg: &[f64]) -> Dataset {
    let w = |v: &[f64]| v.iter().map(|x| vec![*x]).collect::<Vec<_>>();
    points(&w(pos), &w(neg), &["x"])
}

/// Most negatives an open interval can reject while containing every
/// positive, by sweeping every pair of cut points between sorted values.
pub fn sweep_oracle(pos: &[f64], neg: &[f64]) -> usize {
    let mut vals: Vec<f64> = pos.iter().chain(neg).copied().collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut cuts = vec![vals[0] - 1.0];
    cuts.extend(vals.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    cuts.push(vals[vals.len() - 1] + 1.0);
    let mut best = 0;
    for (i, &l) in cuts.iter().enumerate() {
        for &u in &cuts[i + 1..] {
            if pos.iter().all(|&x| l < x && x < u) {
                best = best.max(neg.iter().filter(|&&x| !(l < x && x < u)).count());
            }
        }
    }
    best
}

fn atom(rng: &mut ChaCha8Rng, vars: &[String]) -> Formula {
    let mut lhs = Expr::c(0.0);
    for v in vars {
        let c = rng.gen_range(-3..=3);
        if c != 0 {
            lhs = lhs + Expr::c(c as f64) * Expr::var(v);
        }
    }
    let op = [Cmp::Lt, Cmp::Le, Cmp::Ge, Cmp::Gt][rng.gen_range(0..4)];
    Formula::cmp(op, lhs, Expr::c(rng.gen_range(-10..=10) as f64))
}

/// Linear instance with up to three bounded parameters and at most 40
/// constraints, some soft ones shaped like negated coverage conjunctions.
pub fn random_instance(seed: u64) -> MaxSmtInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=3);
    let vars: Vec<String> = (0..k).map(|i| format!("q{i}")).collect();
    let decls = vars.iter().map(|v| VarDecl::bounded(v, -10.0, 10.0)).collect();
    let n_hard = rng.gen_range(0..=4);
    let n_soft = rng.gen_range(1..=(40 - n_hard).min(30));
    let hard = (0..n_hard).map(|_| atom(&mut rng, &vars)).collect();
    let soft = (0..n_soft)
        .map(|_| {
            let f = if rng.gen_bool(0.3) {
                Formula::not(Formula::and(vec![atom(&mut rng, &vars), atom(&mut rng, &vars)]))
            } else {
                atom(&mut rng, &vars)
            };
            (f, 1.0)
        })
        .collect();
    MaxSmtInstance { decls, hard, soft, timeout: Duration::from_secs(20) }
}


/// Solves instances `0..n` with the builtin fitter and `ext`, and describes
/// every instance where status or optimal soft weight differ. Models must
/// satisfy the hard constraints.
pub fn backend_disagreements(ext: &SmtLibProcess, n: u64) -> Vec<String> {
    let builtin = BuiltinFitter::default();
    let mut out = Vec::new();
    for seed in 0..n {
        let inst = random_instance(seed);
        let a = solve_maxsmt(&builtin, &inst).unwrap();
        let b = solve_maxsmt(ext, &inst).unwrap();
        for (who, r) in [("builtin", &a), ("external", &b)] {
            if !matches!(r.status, Status::Sat | Status::Unsat) {
                out.push(format!("{seed}: {who} returned {:?}", r.status));
            }
            if let Some(m) = &r.model {
                if !inst.hard.iter().all(|h| holds_under(h, m, &r.props)) {
                    out.push(format!("{seed}: {who} model breaks a hard constraint"));
                }
            }
        }
        if a.status != b.status || a.satisfied_soft_weight != b.satisfied_soft_weight {
            out.push(format!(
                "{seed}: {:?}/{:?} vs {:?}/{:?}",
                a.status, a.satisfied_soft_weight, b.status, b.satisfied_soft_weight
            ));
        }
    }
    out
}

/// Nodes C closing a directed triangle A→B→C→A, by enumeration of the
/// edge list.
pub fn triangle_closers(edges: &BTreeSet<(String, String)>, a: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (x, b) in edges {
        if x != a {
            continue;
        }
        for (y, c) in edges {
            if y == b && c != a && edges.contains(&(c.clone(), a.to_string())) {
                out.insert(c.clone());
            }
        }
    }
    out
}

fn geo_values(task: &str, bg: &Background, args: &[Sym]) -> Vec<Vec<f64>> {
    let t = geometry::task(task).unwrap();
    args.iter()
        .zip(t.kinds)
        .map(|(o, k)| k.attrs().iter().map(|a| bg.measure(o, a).unwrap()).collect())
        .collect()
}

/// Generates a task and lists every example whose stored polarity
/// disagrees with the ground truth or that lies inside the margin band.
pub fn generator_violations(task: &str, seed: u64) -> (Dataset, Vec<String>) {
    let g = bench::generate(&TaskSpec::new(task, seed).unwrap()).unwrap();
    let ds = g.dataset;
    let bg = &ds.background;
    let mut bad = Vec::new();
    if g.manifest.n_train != (0.7 * ds.len() as f64 + 1e-9).floor() as usize {
        bad.push(format!("{task}: train size {}", g.manifest.n_train));
    }
    let edges: BTreeSet<(String, String)> =
        bg.facts("propagates").iter().map(|e| (e[0].to_string(), e[1].to_string())).collect();
    for e in ds.examples() {
        if bench::true_label(task, bg, &e.head).unwrap() != e.is_positive() {
            bad.push(format!("{task} {}: label", e.id));
        }
        let within = |v: f64| (v - ip::TAU).abs() < ip::IP_MARGIN;
        if let Some(t) = ip::task(task) {
            let a = &e.head.args[0];
            let closers = triangle_closers(&edges, a);
            match t.threshold {
                Some(ip::Threshold::Influence) if within(bg.measure(a, "max_influence").unwrap()) => {
                    bad.push(format!("{task} {}: influence in margin band", e.id));
                }
                Some(ip::Threshold::PartnerScore) if !closers.is_empty() => {
                    let best = closers.iter().map(|c| bg.measure(c, "score").unwrap()).fold(f64::MIN, f64::max);
                    if within(best) {
                        bad.push(format!("{task} {}: partner score in margin band", e.id));
                    }
                }
                _ => {}
            }
        } else {
            let objs = geo_values(task, bg, &e.head.args);
            let (x, y) = (objs[0][0], objs[0][1]);
            let direct = match task {
                "interval" => (x + 3.0).abs().min((x - 4.0).abs()),
                "halfplane" => (x + 2.0 * y - 3.0).abs() / 5f64.sqrt(),
                "left_of" => (x - objs[1][0]).abs(),
                _ => f64::INFINITY,
            };
            if geometry::boundary_distance(task, &objs) < MARGIN || direct < MARGIN {
                bad.push(format!("{task} {}: inside margin", e.id));
            }
        }
    }
    (ds, bad)
}
