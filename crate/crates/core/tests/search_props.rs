use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use smtilp::logic::{covers, parse_clause, Atom, Background, Clause, Dataset, Example, Literal, Polarity, Sym, Term};
use smtilp::search::{generate_clauses, LanguageBias, TemplateUse};
use smtilp::templates::{ParamAssignment, TemplateId, Theory};

fn graph(edges: &[(usize, usize)], seeds: &[usize], xs: &[f64]) -> Background {
    let mut bg = Background::new();
    bg.declare("edge", 2).unwrap();
    bg.declare("seed", 1).unwrap();
    for (i, x) in xs.iter().enumerate() {
        bg.set_measure(&format!("n{i}"), "x", *x).unwrap();
    }
    for (a, b) in edges {
        bg.add_fact("edge", &[&format!("n{a}"), &format!("n{b}")]).unwrap();
    }
    for s in seeds {
        bg.add_fact("seed", &[&format!("n{s}")]).unwrap();
    }
    bg
}

fn dataset(bg: Background, n: usize) -> Dataset {
    let ex = (0..n)
        .map(|i| {
            let pol = if i % 2 == 0 { Polarity::Positive } else { Polarity::Negative };
            Example::new(&format!("e{i}"), pol, Atom::new("active", &[&format!("n{i}")]))
        })
        .collect();
    Dataset::new(bg, ex, Theory::Lra).unwrap()
}

fn symbolic_bias(budget: usize, body_vars: usize, anchored: bool) -> LanguageBias {
    LanguageBias {
        head: smtilp::logic::Head::new("active", &["A"]),
        predicates: vec![("edge".into(), 2), ("seed".into(), 1)],
        literal_budget: budget,
        max_body_vars: body_vars,
        head_anchored: anchored,
        ..LanguageBias::default()
    }
}

/// Canonical text of a symbolic body under the best renaming of body
/// variables, by trying every injective renaming.
fn brute_canonical(body: &[(String, Vec<String>)], body_names: &[&str]) -> String {
    let vars: BTreeSet<&str> = body.iter().flat_map(|(_, a)| a.iter().map(String::as_str)).filter(|v| *v != "A").collect();
    let vars: Vec<&str> = vars.into_iter().collect();
    let mut best: Option<String> = None;
    let mut perm: Vec<usize> = (0..body_names.len()).collect();
    // every arrangement of names; only the first vars.len() positions matter
    fn next_perm(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }
    loop {
        let map: HashMap<&str, &str> = vars.iter().enumerate().map(|(k, v)| (*v, body_names[perm[k]])).collect();
        let mut lits: Vec<String> = body
            .iter()
            .map(|(p, a)| format!("{p}({})", a.iter().map(|v| *map.get(v.as_str()).unwrap_or(&v.as_str())).collect::<Vec<_>>().join(",")))
            .collect();
        lits.sort();
        let s = lits.join(", ");
        if best.as_ref().is_none_or(|b| s < *b) {
            best = Some(s);
        }
        if !next_perm(&mut perm) {
            break;
        }
    }
    best.unwrap()
}

/// Every set of distinct literals buildable one at a time, each new literal
/// sharing a variable with the head or earlier literals, counted up to
/// renaming of body variables.
fn brute_count(budget: usize, body_vars: usize, anchored: bool) -> usize {
    let names = ["B", "C", "D", "E"];
    let universe: Vec<&str> = std::iter::once("A").chain(names.iter().copied().take(body_vars)).collect();
    let mut pool: Vec<(String, Vec<String>)> = Vec::new();
    for x in &universe {
        pool.push(("seed".into(), vec![x.to_string()]));
        for y in &universe {
            if anchored && *x != "A" && *y != "A" {
                continue;
            }
            pool.push(("edge".into(), vec![x.to_string(), y.to_string()]));
        }
    }
    let mut classes = BTreeSet::new();
    let n = pool.len();
    for mask in 1u32..(1 << n) {
        let chosen: Vec<&(String, Vec<String>)> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| &pool[i]).collect();
        if chosen.len() > budget {
            continue;
        }
        if !chosen.iter().any(|(_, a)| a.iter().any(|v| v == "A")) {
            continue;
        }
        // greedy connectivity from the head variable
        let mut reached: BTreeSet<&str> = BTreeSet::from(["A"]);
        let mut left: Vec<&(String, Vec<String>)> = chosen.clone();
        loop {
            let before = left.len();
            left.retain(|(_, a)| {
                if a.iter().any(|v| reached.contains(v.as_str())) {
                    for v in a {
                        reached.insert(v.as_str());
                    }
                    false
                } else {
                    true
                }
            });
            if left.is_empty() || left.len() == before {
                break;
            }
        }
        if !left.is_empty() {
            continue;
        }
        let owned: Vec<(String, Vec<String>)> = chosen.into_iter().cloned().collect();
        classes.insert(brute_canonical(&owned, &names[..body_vars]));
    }
    classes.len()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn template_only_counts_are_subsets_of_the_literal_pool() {
    let bg = graph(&[], &[], &[0.0, 1.0, 2.0]);
    let mut bg2 = bg.clone();
    for i in 0..3 {
        bg2.set_measure(&format!("n{i}"), "y", i as f64).unwrap();
    }
    let ds = dataset(bg2, 3);
    let templates = vec![
        TemplateUse::new(TemplateId::Interval1d, &["x"]),
        TemplateUse::new(TemplateId::Interval1d, &["y"]),
        TemplateUse::new(TemplateId::Halfplane2d, &["x", "y"]),
    ];
    for budget in 1..=3 {
        let bias = LanguageBias { head: smtilp::logic::Head::new("active", &["A"]), templates: templates.clone(), literal_budget: budget, ..LanguageBias::default() };
        let got = generate_clauses(&ds, &bias).unwrap().len();
        let want: usize = (1..=budget).map(|k| binomial(3, k)).sum();
        assert_eq!(got, want, "budget {budget}");
    }
}

#[test]
fn symbolic_counts_match_brute_force() {
    let ds = dataset(graph(&[(0, 1), (1, 2)], &[0], &[0.0, 1.0, 2.0]), 3);
    for budget in 1..=3 {
        for body_vars in 0..=2 {
            for anchored in [true, false] {
                let got = generate_clauses(&ds, &symbolic_bias(budget, body_vars, anchored)).unwrap().len();
                assert_eq!(got, brute_count(budget, body_vars, anchored), "budget {budget}, vars {body_vars}, anchored {anchored}");
            }
        }
    }
}

#[test]
fn triangle_pattern_reachable_with_invention() {
    use smtilp::search::invent_predicates;
    let mut bg = graph(&[(0, 1), (1, 2), (2, 0)], &[], &[0.0, 1.0, 2.0]);
    for i in 0..3 {
        bg.set_measure(&format!("n{i}"), "max_influence", 0.5).unwrap();
    }
    let ds0 = dataset(bg.clone(), 3);
    let mut bias = LanguageBias {
        predicate_invention: true,
        max_invented: 4,
        templates: vec![TemplateUse::new(TemplateId::InfluenceThreshold, &["max_influence"])],
        ..symbolic_bias(4, 4, true)
    };
    bias.predicates = vec![("edge".into(), 2)];
    for p in invent_predicates(&ds0, &bias) {
        p.materialize(&mut bg).unwrap();
        bias = bias.with_predicate(&p.name, 2);
    }
    let ds = dataset(bg, 3);
    let want = parse_clause("active(A) ← inv_reach2(A,B), edge(B,A), influence_threshold(max_influence(A) | t)").unwrap();
    let space = smtilp::search::ClauseSpace::new(&ds, &bias).unwrap();
    let key = space.canonical(&want).1;
    let found = generate_clauses(&ds, &bias).unwrap().iter().any(|c| space.canonical(c).1 == key);
    assert!(found, "{key}");
}

/// Coverage by trying every assignment of objects to body variables.
fn brute_covers(c: &Clause, params: &ParamAssignment, e: &Example, bg: &Background) -> bool {
    let objects: Vec<Sym> = bg.objects().to_vec();
    let head: HashMap<Sym, Sym> = c.head.args.iter().cloned().zip(e.head.args.iter().cloned()).collect();
    let body_vars: Vec<Sym> = c.vars().into_iter().filter(|v| !head.contains_key(v)).collect();
    let mut idx = vec![0usize; body_vars.len()];
    loop {
        let mut env = head.clone();
        for (v, i) in body_vars.iter().zip(&idx) {
            env.insert(v.clone(), objects[*i].clone());
        }
        let ok = c.body.iter().all(|l| match l {
            Literal::Symbolic { pred, args } => {
                let names: Vec<&str> = args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => &*env[v],
                        Term::Const(k) => &**k,
                    })
                    .collect();
                bg.holds(&Atom::new(pred, &names))
            }
            Literal::Comparison { op, lhs, rhs } => match (bg.measure(&env[&lhs.var], &lhs.attr), bg.measure(&env[&rhs.var], &rhs.attr)) {
                (Some(a), Some(b)) => op.holds(a, b),
                _ => false,
            },
            Literal::Parametric { template, args, params: slots } => {
                let vals: Option<Vec<f64>> = args.iter().map(|a| bg.measure(&env[&a.var], &a.attr)).collect();
                let named: ParamAssignment =
                    template.params().iter().zip(slots).map(|(spec, s)| (spec.name.to_string(), params[&**s])).collect();
                vals.is_some_and(|v| template.evaluate(&named, &v).unwrap_or(false))
            }
        });
        if ok {
            return true;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return false;
            }
            idx[k] += 1;
            if idx[k] < objects.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn grounding_matches_brute_force(
        edges in prop::collection::vec((0usize..6, 0usize..6), 0..14),
        seeds in prop::collection::vec(0usize..6, 0..3),
        xs in prop::collection::vec(-5.0f64..5.0, 6),
        lo in -5.0f64..5.0,
        width in 0.0f64..6.0,
    ) {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).collect();
        let ds = dataset(graph(&edges, &seeds, &xs), 6);
        let mut bias = symbolic_bias(3, 2, true);
        bias.templates = vec![TemplateUse::new(TemplateId::Interval1d, &["x"])];
        bias.predicates = vec![("edge".into(), 2), ("seed".into(), 1)];
        let clauses = generate_clauses(&ds, &bias).unwrap();
        for c in clauses.iter().step_by(7) {
            let params: ParamAssignment = c.param_slots().iter().enumerate()
                .map(|(i, s)| (s.to_string(), if i % 2 == 0 { lo } else { lo + width })).collect();
            for e in ds.examples() {
                let got = covers(c, &params, e, &ds.background).unwrap();
                prop_assert_eq!(got, brute_covers(c, &params, e, &ds.background), "{} on {}", c, e.head);
            }
        }
    }

    #[test]
    fn candidate_count_is_monotone_in_budget(body_vars in 0usize..3, anchored: bool) {
        let ds = dataset(graph(&[(0, 1)], &[], &[0.0, 1.0]), 2);
        let mut prev = 0;
        for b in 1..=3 {
            let n = generate_clauses(&ds, &symbolic_bias(b, body_vars, anchored)).unwrap().len();
            prop_assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn no_two_candidates_are_variants(budget in 1usize..4, body_vars in 1usize..3) {
        let ds = dataset(graph(&[(0, 1)], &[0], &[0.0, 1.0]), 2);
        let cs = generate_clauses(&ds, &symbolic_bias(budget, body_vars, false)).unwrap();
        let mut seen = BTreeSet::new();
        for c in &cs {
            let body: Vec<(String, Vec<String>)> = c.body.iter().map(|l| match l {
                Literal::Symbolic { pred, args } => (pred.to_string(), args.iter().map(|t| t.name().to_string()).collect()),
                _ => unreachable!(),
            }).collect();
            prop_assert!(seen.insert(brute_canonical(&body, &["B", "C", "D", "E"][..body_vars])), "duplicate class: {}", c);
        }
    }

    #[test]
    fn symbolic_grounding_ignores_literal_order(
        edges in prop::collection::vec((0usize..5, 0usize..5), 0..10),
        seeds in prop::collection::vec(0usize..5, 0..3),
    ) {
        let ds = dataset(graph(&edges, &seeds, &[0.0; 5]), 5);
        let a = parse_clause("active(A) ← edge(B,A), seed(B), edge(A,C)").unwrap();
        let b = parse_clause("active(A) ← edge(A,C), seed(B), edge(B,A)").unwrap();
        for e in ds.examples() {
            prop_assert_eq!(
                covers(&a, &ParamAssignment::new(), e, &ds.background).unwrap(),
                covers(&b, &ParamAssignment::new(), e, &ds.background).unwrap()
            );
        }
    }
}
