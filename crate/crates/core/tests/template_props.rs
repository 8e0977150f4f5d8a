use proptest::prelude::*;
use smtilp::smt::{Expr, Formula};
use smtilp::templates::{ParamAssignment, TemplateId};

fn unit_to(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u
}

fn sample(t: TemplateId, us: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut it = us.iter().copied();
    let params = t.params().iter().map(|p| unit_to(p.lo, p.hi, it.next().unwrap())).collect();
    let args = (0..t.arity()).map(|_| unit_to(-10.0, 10.0, it.next().unwrap())).collect();
    (params, args)
}

fn named(t: TemplateId, q: &[f64]) -> ParamAssignment {
    t.params().iter().zip(q).map(|(p, v)| (p.name.to_string(), *v)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn concrete_encoding_agrees_with_evaluate(us in prop::collection::vec(0.0f64..1.0, 12)) {
        for t in TemplateId::all() {
            let (q, a) = sample(t, &us);
            let want = t.evaluate(&named(t, &q), &a).unwrap();
            let args: Vec<Expr> = a.iter().map(|v| Expr::c(*v)).collect();
            let params: Vec<Expr> = q.iter().map(|v| Expr::c(*v)).collect();
            let f = t.encode(&args, &params).unwrap();
            prop_assert!(f == Formula::True || f == Formula::False, "{t}: not folded: {f}");
            prop_assert_eq!(f == Formula::True, want, "{}", t);
        }
    }

    #[test]
    fn folding_preserves_truth_under_every_parameter_point(us in prop::collection::vec(0.0f64..1.0, 12), vs in prop::collection::vec(0.0f64..1.0, 4)) {
        for t in TemplateId::all().into_iter().filter(|t| t.is_parametric()) {
            let (_, a) = sample(t, &us);
            let args: Vec<Expr> = a.iter().map(|v| Expr::c(*v)).collect();
            let names: Vec<Expr> = t.params().iter().map(|p| Expr::var(p.name)).collect();
            let raw = t.form(&args, &names).unwrap();
            let folded = t.encode(&args, &names).unwrap();
            let point: ParamAssignment = t.params().iter().zip(&vs).map(|(p, u)| (p.name.to_string(), unit_to(p.lo, p.hi, *u))).collect();
            let env = |v: &str| point.get(v).copied();
            let r = raw.eval(&env, &|_| None).unwrap();
            let f = folded.eval(&env, &|_| None).unwrap();
            prop_assert_eq!(r, f, "{}", t);
        }
    }
}
