//! Grounding by joining symbolic literals against the fact tables, then
//! evaluating or encoding the numeric literals per binding.

use std::collections::{BTreeMap, HashSet};

use super::{Background, Clause, Example, Literal, LogicError, PredFacts, Sym, Term};
use crate::smt::{Cmp, Expr, Formula};
use crate::templates::{ParamAssignment, TemplateId};

/// Variable name → object name.
pub type Binding = BTreeMap<Sym, Sym>;

/// Disjunct cap for one example's encoding, after projection onto the
/// variables the numeric literals read.
pub const MAX_DISJUNCTS: usize = 4096;

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
enum Arg {
    Var(usize),
    Const(u32),
}

struct SymLit<'a> {
    facts: &'a PredFacts,
    args: Vec<Arg>,
}

#[derive(Clone, Copy)]
struct Read {
    var: usize,
    attr: Option<u32>,
}

enum NumLit {
    Cmp { op: Cmp, lhs: Read, rhs: Read },
    Param { template: TemplateId, args: Vec<Read>, params: Vec<Sym> },
}

/// A clause compiled against one background.
pub struct ClausePlan<'a> {
    bg: &'a Background,
    pub vars: Vec<Sym>,
    head_pred: Sym,
    head: Vec<usize>,
    syms: Vec<SymLit<'a>>,
    nums: Vec<NumLit>,
    numeric_vars: Vec<usize>,
    impossible: bool,
}

impl<'a> ClausePlan<'a> {
    pub fn new(clause: &Clause, bg: &'a Background) -> Result<Self, LogicError> {
        let vars = clause.vars();
        let idx = |v: &Sym| vars.iter().position(|x| x == v).expect("clause variable");
        let mut syms = Vec::new();
        let mut nums = Vec::new();
        let mut impossible = false;
        let read = |a: &super::AttrTerm| Read { var: idx(&a.var), attr: bg.attr_id(&a.attr) };
        for lit in &clause.body {
            match lit {
                Literal::Symbolic { pred, args } => {
                    let facts = bg.preds.get(pred).ok_or_else(|| LogicError::UnknownPredicate(pred.to_string()))?;
                    if facts.arity != args.len() {
                        return Err(LogicError::PredicateArity {
                            pred: pred.to_string(),
                            expected: facts.arity,
                            got: args.len(),
                        });
                    }
                    let args = args
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => Arg::Var(idx(v)),
                            Term::Const(c) => Arg::Const(bg.object_id(c).unwrap_or_else(|| {
                                impossible = true;
                                ABSENT
                            })),
                        })
                        .collect();
                    syms.push(SymLit { facts, args });
                }
                Literal::Comparison { op, lhs, rhs } => nums.push(NumLit::Cmp { op: *op, lhs: read(lhs), rhs: read(rhs) }),
                Literal::Parametric { template, args, params } => {
                    if args.len() != template.arity() || params.len() != template.params().len() {
                        return Err(LogicError::Malformed(format!("{lit}")));
                    }
                    nums.push(NumLit::Param {
                        template: *template,
                        args: args.iter().map(read).collect(),
                        params: params.clone(),
                    })
                }
            }
        }
        let mut numeric_vars: Vec<usize> = nums
            .iter()
            .flat_map(|n| match n {
                NumLit::Cmp { lhs, rhs, .. } => vec![lhs.var, rhs.var],
                NumLit::Param { args, .. } => args.iter().map(|r| r.var).collect(),
            })
            .collect();
        numeric_vars.sort_unstable();
        numeric_vars.dedup();
        let head = clause.head.args.iter().map(idx).collect();
        Ok(ClausePlan { bg, head_pred: clause.head.pred.clone(), vars, head, syms, nums, numeric_vars, impossible })
    }

    fn object(&self, name: &str) -> u32 {
        self.bg.object_id(name).unwrap_or(ABSENT)
    }

    /// Seed from the example head; `None` if the head cannot match.
    fn seed(&self, example: &Example) -> Option<Vec<Option<u32>>> {
        if example.head.pred != self.head_pred || example.head.args.len() != self.head.len() {
            return None;
        }
        let mut assign = vec![None; self.vars.len()];
        for (&v, a) in self.head.iter().zip(&example.head.args) {
            let o = self.object(a);
            match assign[v] {
                Some(prev) if prev != o => return None,
                _ => assign[v] = Some(o),
            }
        }
        Some(assign)
    }

    fn domain(&self, example: &Example) -> Vec<u32> {
        let mut d: Vec<u32> = example.head.args.iter().map(|a| self.object(a)).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Calls `f` on each complete binding until it returns `true`.
    /// Returns whether `f` stopped the enumeration.
    fn for_each(&self, assign: &mut Vec<Option<u32>>, domain: &[u32], f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        if self.impossible {
            return false;
        }
        let mut done = vec![false; self.syms.len()];
        self.join(assign, &mut done, domain, f)
    }

    fn join(
        &self,
        assign: &mut Vec<Option<u32>>,
        done: &mut [bool],
        domain: &[u32],
        f: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        let bound = |a: &Arg, assign: &[Option<u32>]| match a {
            Arg::Const(c) => Some(*c),
            Arg::Var(v) => assign[*v],
        };
        // Most constrained literal next; fewer facts breaks ties.
        let pick = (0..self.syms.len()).filter(|i| !done[*i]).max_by_key(|i| {
            let l = &self.syms[*i];
            let nb = l.args.iter().filter(|a| bound(a, assign).is_some()).count();
            (nb, std::cmp::Reverse(l.facts.tuples.len()))
        });
        let Some(i) = pick else { return self.fill(assign, domain, f) };
        let lit = &self.syms[i];
        done[i] = true;
        let key: Vec<Option<u32>> = lit.args.iter().map(|a| bound(a, assign)).collect();
        let stopped = if key.iter().all(Option::is_some) {
            let t: Vec<u32> = key.iter().map(|k| k.unwrap()).collect();
            lit.facts.set.contains(&t) && self.join(assign, done, domain, f)
        } else {
            let narrow = key
                .iter()
                .enumerate()
                .filter_map(|(p, k)| k.map(|o| lit.facts.by_pos[p].get(&o).map_or(&[][..], |v| &v[..])))
                .min_by_key(|c| c.len());
            let mut visit = |t: &Vec<u32>, assign: &mut Vec<Option<u32>>| -> bool {
                let mut set = Vec::new();
                let mut ok = true;
                for (a, &o) in lit.args.iter().zip(t) {
                    match bound(a, assign) {
                        Some(b) if b != o => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            if let Arg::Var(v) = a {
                                assign[*v] = Some(o);
                                set.push(*v);
                            }
                        }
                    }
                }
                let stop = ok && self.join(assign, done, domain, f);
                for v in set {
                    assign[v] = None;
                }
                stop
            };
            let mut stopped = false;
            match narrow {
                Some(ids) => {
                    for &ti in ids {
                        if visit(&lit.facts.tuples[ti], assign) {
                            stopped = true;
                            break;
                        }
                    }
                }
                None => {
                    for t in &lit.facts.tuples {
                        if visit(t, assign) {
                            stopped = true;
                            break;
                        }
                    }
                }
            }
            stopped
        };
        done[i] = false;
        stopped
    }

    /// Variables no symbolic literal constrains range over the example's objects.
    fn fill(&self, assign: &mut Vec<Option<u32>>, domain: &[u32], f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
        match assign.iter().position(Option::is_none) {
            None => {
                let full: Vec<u32> = assign.iter().map(|a| a.unwrap()).collect();
                f(&full)
            }
            Some(v) => {
                for &o in domain {
                    assign[v] = Some(o);
                    if self.fill(assign, domain, f) {
                        assign[v] = None;
                        return true;
                    }
                }
                assign[v] = None;
                false
            }
        }
    }

    fn value(&self, r: Read, binding: &[u32]) -> Option<f64> {
        let o = binding[r.var];
        if o == ABSENT {
            return None;
        }
        self.bg.measure_ids(o, r.attr?)
    }

    fn numeric_holds(&self, binding: &[u32], params: &ParamAssignment) -> bool {
        self.nums.iter().all(|n| match n {
            NumLit::Cmp { op, lhs, rhs } => match (self.value(*lhs, binding), self.value(*rhs, binding)) {
                (Some(a), Some(b)) => op.holds(a, b),
                _ => false,
            },
            NumLit::Param { template, args, params: slots } => {
                let a: Option<Vec<f64>> = args.iter().map(|r| self.value(*r, binding)).collect();
                let q: Option<Vec<f64>> = slots.iter().map(|s| params.get(&**s).copied()).collect();
                match (a, q) {
                    (Some(a), Some(q)) => template.evaluate_raw(&q, &a).unwrap_or(false),
                    _ => false,
                }
            }
        })
    }

    fn encode_binding(&self, binding: &[u32]) -> Formula {
        let mut parts = Vec::with_capacity(self.nums.len());
        for n in &self.nums {
            let f = match n {
                NumLit::Cmp { op, lhs, rhs } => match (self.value(*lhs, binding), self.value(*rhs, binding)) {
                    (Some(a), Some(b)) if op.holds(a, b) => Formula::True,
                    _ => Formula::False,
                },
                NumLit::Param { template, args, params } => {
                    let a: Option<Vec<Expr>> = args.iter().map(|r| self.value(*r, binding).map(Expr::c)).collect();
                    match a {
                        Some(a) => {
                            let q: Vec<Expr> = params.iter().map(|p| Expr::var(p)).collect();
                            template.form(&a, &q).map(|f| f.fold()).unwrap_or(Formula::False)
                        }
                        None => Formula::False,
                    }
                }
            };
            if f == Formula::False {
                return Formula::False;
            }
            parts.push(f);
        }
        Formula::and(parts).fold()
    }

    /// Does some head-seeded binding satisfy every body literal?
    pub fn covers(&self, example: &Example, params: &ParamAssignment) -> bool {
        let Some(mut assign) = self.seed(example) else { return false };
        let domain = self.domain(example);
        self.for_each(&mut assign, &domain, &mut |b| self.numeric_holds(b, params))
    }

    /// Head-seeded bindings of all clause variables.
    pub fn bindings(&self, example: &Example) -> Vec<Binding> {
        let Some(mut assign) = self.seed(example) else { return Vec::new() };
        let domain = self.domain(example);
        let mut out = Vec::new();
        self.for_each(&mut assign, &domain, &mut |b| {
            out.push(self.named(b));
            false
        });
        out
    }

    fn named(&self, b: &[u32]) -> Binding {
        self.vars
            .iter()
            .zip(b)
            .map(|(v, &o)| (v.clone(), if o == ABSENT { super::sym("?") } else { self.bg.object_name(o).clone() }))
            .collect()
    }

    /// Disjunction over bindings of the conjunction of numeric literal
    /// encodings, with parameters left as variables named by their slots.
    pub fn encode(&self, example: &Example) -> Result<Formula, LogicError> {
        let Some(mut assign) = self.seed(example) else { return Ok(Formula::False) };
        let domain = self.domain(example);
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut disjuncts = Vec::new();
        let mut overflow = false;
        let mut is_true = false;
        self.for_each(&mut assign, &domain, &mut |b| {
            let key: Vec<u32> = self.numeric_vars.iter().map(|v| b[*v]).collect();
            if !seen.insert(key) {
                return false;
            }
            match self.encode_binding(b) {
                Formula::True => {
                    is_true = true;
                    true
                }
                Formula::False => false,
                f => {
                    disjuncts.push(f);
                    overflow = disjuncts.len() > MAX_DISJUNCTS;
                    overflow
                }
            }
        });
        if is_true {
            return Ok(Formula::True);
        }
        if overflow {
            return Err(LogicError::TooManyBindings(example.id.to_string()));
        }
        Ok(Formula::or(disjuncts).fold())
    }
}

/// Every substitution of the clause variables, by background objects or
/// the example's own objects, under which all symbolic body literals hold.
/// The head is not used to seed the search.
pub fn ground_clause(clause: &Clause, example: &Example, bg: &Background) -> Result<Vec<Binding>, LogicError> {
    let plan = ClausePlan::new(clause, bg)?;
    let domain = plan.domain(example);
    let mut assign = vec![None; plan.vars.len()];
    let mut out = Vec::new();
    plan.for_each(&mut assign, &domain, &mut |b| {
        out.push(plan.named(b));
        false
    });
    Ok(out)
}

pub fn covers(clause: &Clause, params: &ParamAssignment, example: &Example, bg: &Background) -> Result<bool, LogicError> {
    Ok(ClausePlan::new(clause, bg)?.covers(example, params))
}

pub fn encode_example(clause: &Clause, example: &Example, bg: &Background) -> Result<Formula, LogicError> {
    ClausePlan::new(clause, bg)?.encode(example)
}

#[cfg(test)]
mod tests {
    use super::super::{sym, AttrTerm, Atom, Head, Polarity};
    use super::*;

    fn chain() -> Background {
        let mut b = Background::new();
        b.add_fact("edge", &["a", "b"]).unwrap();
        b.add_fact("edge", &["b", "c"]).unwrap();
        b
    }

    #[test]
    fn chain_of_two_edges() {
        let bg = chain();
        let c = Clause::new(
            Head::new("active", &["A"]),
            vec![Literal::symbolic("edge", &["A", "B"]), Literal::symbolic("edge", &["B", "C"])],
            3,
        );
        let e = Example::new("e", Polarity::Positive, Atom::new("active", &["a"]));
        let g = ground_clause(&c, &e, &bg).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(&*g[0][&sym("C")], "c");
    }

    #[test]
    fn two_points_give_four_bindings() {
        let mut bg = Background::new();
        bg.add_fact("point", &["p1"]).unwrap();
        bg.add_fact("point", &["p2"]).unwrap();
        let c = Clause::new(
            Head::new("left_of", &["P", "Q"]),
            vec![Literal::symbolic("point", &["P"]), Literal::symbolic("point", &["Q"])],
            2,
        );
        let e = Example::new("e", Polarity::Positive, Atom::new("left_of", &["p1", "p2"]));
        assert_eq!(ground_clause(&c, &e, &bg).unwrap().len(), 4);
    }

    #[test]
    fn unknown_predicate_is_an_error() {
        let c = Clause::new(Head::new("t", &["P"]), vec![Literal::symbolic("nope", &["P"])], 1);
        let e = Example::new("e", Polarity::Positive, Atom::new("t", &["p"]));
        assert!(matches!(ground_clause(&c, &e, &chain()), Err(LogicError::UnknownPredicate(_))));
    }

    #[test]
    fn numeric_coverage_and_encoding() {
        let mut bg = Background::new();
        bg.set_measure("p", "x", 0.5).unwrap();
        let c = Clause::new(
            Head::new("t", &["P"]),
            vec![Literal::Parametric {
                template: TemplateId::Interval1d,
                args: vec![AttrTerm::new("x", "P")],
                params: vec![sym("p0_l"), sym("p0_u")],
            }],
            1,
        );
        let e = Example::new("e", Polarity::Positive, Atom::new("t", &["p"]));
        let q: ParamAssignment = [("p0_l".to_string(), 0.0), ("p0_u".to_string(), 1.0)].into();
        assert!(covers(&c, &q, &e, &bg).unwrap());
        let q2: ParamAssignment = [("p0_l".to_string(), 0.6), ("p0_u".to_string(), 1.0)].into();
        assert!(!covers(&c, &q2, &e, &bg).unwrap());
        let f = encode_example(&c, &e, &bg).unwrap();
        let env = |v: &str| q.get(v).copied();
        assert!(f.eval(&env, &|_| None).unwrap());
    }
}
