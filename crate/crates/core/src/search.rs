//! Candidate clause structures: a refinement operator that adds one
//! literal at a time, canonical forms up to body-variable renaming, and
//! chain-style predicate invention.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::logic::{sym, AttrTerm, Background, Clause, Dataset, Head, Literal, LogicError, Sym, Term};
use crate::templates::{ArgShape, TemplateId};

/// A template enabled over a fixed list of attributes. Free-shaped
/// templates (`varcmp`, `abs_diff`, `diff_threshold`) leave `attrs` empty
/// and range over compatible attribute pairs instead.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateUse {
    pub template: TemplateId,
    #[serde(default)]
    pub attrs: Vec<String>,
}

impl TemplateUse {
    pub fn new(template: TemplateId, attrs: &[&str]) -> Self {
        TemplateUse { template, attrs: attrs.iter().map(|s| s.to_string()).collect() }
    }

    pub fn free(template: TemplateId) -> Self {
        TemplateUse { template, attrs: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanguageBias {
    pub head: Head,
    /// Allowed body predicates with their arities.
    pub predicates: Vec<(String, usize)>,
    pub templates: Vec<TemplateUse>,
    /// Attributes that may be compared with each other. An attribute in no
    /// group is only compared with itself.
    #[serde(default)]
    pub attr_groups: Vec<Vec<String>>,
    pub literal_budget: usize,
    pub predicate_invention: bool,
    pub max_invented: usize,
    pub max_body_vars: usize,
    /// Every symbolic literal of arity ≥ 2 must mention a head variable.
    pub head_anchored: bool,
}

impl Default for LanguageBias {
    fn default() -> Self {
        LanguageBias {
            head: Head::new("target", &["P"]),
            predicates: Vec::new(),
            templates: Vec::new(),
            attr_groups: Vec::new(),
            literal_budget: 3,
            predicate_invention: false,
            max_invented: 0,
            max_body_vars: 4,
            head_anchored: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("empty bias: no body predicates and no templates")]
    EmptyBias,
    #[error("invalid bias: {0}")]
    InvalidBias(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

impl LanguageBias {
    pub fn validate(&self, bg: &Background) -> Result<(), SearchError> {
        if self.predicates.is_empty() && self.templates.is_empty() {
            return Err(SearchError::EmptyBias);
        }
        if self.literal_budget == 0 {
            return Err(SearchError::InvalidBias("literal_budget must be at least 1".into()));
        }
        if self.predicate_invention && self.max_invented == 0 {
            return Err(SearchError::InvalidBias("predicate invention needs max_invented ≥ 1".into()));
        }
        for (p, a) in &self.predicates {
            match bg.arity(p) {
                Some(b) if b == *a => {}
                Some(b) => return Err(SearchError::InvalidBias(format!("{p}/{a} declared, background has {p}/{b}"))),
                None => return Err(SearchError::InvalidBias(format!("unknown predicate {p}/{a}"))),
            }
        }
        for u in &self.templates {
            if let ArgShape::Grouped { attrs, .. } = u.template.shape() {
                if u.attrs.len() != attrs {
                    return Err(SearchError::InvalidBias(format!(
                        "{} needs {attrs} attributes, got {}",
                        u.template,
                        u.attrs.len()
                    )));
                }
            }
        }
        Ok(())
    }

    fn group_of(&self, attr: &str) -> Option<usize> {
        self.attr_groups.iter().position(|g| g.iter().any(|a| a == attr))
    }

    fn compatible(&self, a: &str, b: &str) -> bool {
        match (self.group_of(a), self.group_of(b)) {
            (Some(x), Some(y)) => x == y,
            _ => a == b,
        }
    }

    pub fn with_predicate(&self, name: &str, arity: usize) -> LanguageBias {
        let mut b = self.clone();
        if !b.predicates.iter().any(|(p, _)| p == name) {
            b.predicates.push((name.to_string(), arity));
        }
        b
    }
}

/// Which attributes objects at each argument position carry.
struct Typing {
    head: Vec<BTreeSet<Sym>>,
    slots: HashMap<(Sym, usize), BTreeSet<Sym>>,
}

impl Typing {
    fn new(ds: &Dataset, bias: &LanguageBias) -> Typing {
        let bg = &ds.background;
        let common = |objs: &mut dyn Iterator<Item = Sym>| -> BTreeSet<Sym> {
            let mut acc: Option<BTreeSet<Sym>> = None;
            let mut seen = BTreeSet::new();
            for o in objs {
                if !seen.insert(o.clone()) {
                    continue;
                }
                let a = bg.attributes_of(&o);
                acc = Some(match acc {
                    None => a,
                    Some(mut s) => {
                        s.retain(|x| a.contains(x));
                        s
                    }
                });
            }
            acc.unwrap_or_default()
        };
        let head = (0..bias.head.args.len())
            .map(|i| common(&mut ds.examples().filter(|e| e.head.args.len() > i).map(|e| e.head.args[i].clone())))
            .collect();
        let mut slots = HashMap::new();
        for (p, a) in &bias.predicates {
            let facts = bg.facts(p);
            for i in 0..*a {
                slots.insert((sym(p), i), common(&mut facts.iter().map(|t| t[i].clone())));
            }
        }
        Typing { head, slots }
    }
}

/// The refinement graph over clauses allowed by a bias.
pub struct ClauseSpace<'a> {
    bias: &'a LanguageBias,
    typing: Typing,
    names: Vec<Sym>,
    head_vars: Vec<Sym>,
}

/// Literal text without parameter slots; the basis of canonical ordering.
fn lit_key(l: &Literal) -> String {
    match l {
        Literal::Parametric { template, args, .. } => {
            let mut s = format!("{template}(");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "{a}");
            }
            s.push(')');
            s
        }
        other => other.to_string(),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Argument tuples for objects of a grouped template with symmetric roles
/// collapsed to one representative.
fn symmetric_canonical(t: TemplateId, vars: &[Sym]) -> bool {
    match t {
        TemplateId::DistanceThreshold => vars[0] < vars[1],
        TemplateId::Collinear3pt => vars[0] < vars[1] && vars[1] < vars[2],
        TemplateId::Between3pt => vars[1] < vars[2],
        _ => true,
    }
}

impl<'a> ClauseSpace<'a> {
    pub fn new(ds: &Dataset, bias: &'a LanguageBias) -> Result<Self, SearchError> {
        bias.validate(&ds.background)?;
        let head_vars = bias.head.args.clone();
        // Body variable names: capital letters not used by the head.
        let names = ('B'..='Z')
            .chain(std::iter::once('A'))
            .map(|c| sym(&c.to_string()))
            .filter(|n| !head_vars.contains(n))
            .take(bias.max_body_vars)
            .collect();
        Ok(ClauseSpace { bias, typing: Typing::new(ds, bias), names, head_vars })
    }

    pub fn bias(&self) -> &LanguageBias {
        self.bias
    }

    pub fn root(&self) -> Clause {
        Clause::new(self.bias.head.clone(), Vec::new(), self.bias.literal_budget)
    }

    fn body_vars(&self, c: &Clause) -> Vec<Sym> {
        c.vars().into_iter().filter(|v| !self.head_vars.contains(v)).collect()
    }

    /// Canonical representative up to renaming of body-only variables, with
    /// body literals sorted and parameter slots numbered `p{i}_{name}`.
    pub fn canonical(&self, c: &Clause) -> (Clause, String) {
        canonicalize(c, &self.head_vars, &self.names)
    }

    /// Every head variable occurs in the body.
    pub fn is_complete(&self, c: &Clause) -> bool {
        let used: BTreeSet<Sym> = c.body.iter().flat_map(Literal::vars).collect();
        self.head_vars.iter().all(|v| used.contains(v))
    }

    fn var_attrs(&self, c: &Clause) -> BTreeMap<Sym, BTreeSet<Sym>> {
        let mut out: BTreeMap<Sym, BTreeSet<Sym>> = BTreeMap::new();
        for (i, v) in self.head_vars.iter().enumerate() {
            out.entry(v.clone()).or_default().extend(self.typing.head.get(i).cloned().unwrap_or_default());
        }
        for l in &c.body {
            if let Literal::Symbolic { pred, args } = l {
                for (i, t) in args.iter().enumerate() {
                    if let Term::Var(v) = t {
                        if let Some(a) = self.typing.slots.get(&(pred.clone(), i)) {
                            out.entry(v.clone()).or_default().extend(a.iter().cloned());
                        }
                    }
                }
            }
        }
        out
    }

    fn symbolic_literals(&self, c: &Clause) -> Vec<Literal> {
        let existing = c.vars();
        let n_body = self.body_vars(c).len();
        let mut out = Vec::new();
        for (pred, arity) in &self.bias.predicates {
            let mut tuple: Vec<Sym> = Vec::with_capacity(*arity);
            self.tuples(&existing, n_body, *arity, 0, &mut tuple, &mut |t| {
                if !t.iter().any(|v| existing.contains(v)) {
                    return;
                }
                if self.bias.head_anchored && t.len() >= 2 && !t.iter().any(|v| self.head_vars.contains(v)) {
                    return;
                }
                out.push(Literal::Symbolic { pred: sym(pred), args: t.iter().cloned().map(Term::Var).collect() });
            });
        }
        out
    }

    /// Argument tuples over existing variables plus fresh ones, fresh
    /// variables introduced in order.
    fn tuples(
        &self,
        existing: &[Sym],
        n_body: usize,
        arity: usize,
        fresh: usize,
        cur: &mut Vec<Sym>,
        f: &mut dyn FnMut(&[Sym]),
    ) {
        if cur.len() == arity {
            f(cur);
            return;
        }
        for v in existing.iter().chain(self.names[n_body..(n_body + fresh).min(self.names.len())].iter()) {
            cur.push(v.clone());
            self.tuples(existing, n_body, arity, fresh, cur, f);
            cur.pop();
        }
        if n_body + fresh < self.names.len() {
            cur.push(self.names[n_body + fresh].clone());
            self.tuples(existing, n_body, arity, fresh + 1, cur, f);
            cur.pop();
        }
    }

    fn numeric_literals(&self, c: &Clause) -> Vec<Literal> {
        let attrs = self.var_attrs(c);
        let vars: Vec<Sym> = c.vars();
        let terms: Vec<AttrTerm> = vars
            .iter()
            .flat_map(|v| attrs.get(v).into_iter().flatten().map(move |a| AttrTerm { attr: a.clone(), var: v.clone() }))
            .collect();
        let mut out = Vec::new();
        for u in &self.bias.templates {
            let t = u.template;
            let placeholder = |t: TemplateId| t.params().iter().map(|p| sym(p.name)).collect::<Vec<_>>();
            match t.shape() {
                ArgShape::Free(_) => {
                    for (i, x) in terms.iter().enumerate() {
                        for (j, y) in terms.iter().enumerate() {
                            if x.var == y.var || !self.bias.compatible(&x.attr, &y.attr) {
                                continue;
                            }
                            let ordered = matches!(t, TemplateId::DiffThreshold);
                            if !ordered && i > j {
                                continue;
                            }
                            out.push(Literal::Parametric {
                                template: t,
                                args: vec![x.clone(), y.clone()],
                                params: placeholder(t),
                            });
                        }
                    }
                }
                ArgShape::Grouped { objects, .. } => {
                    let wanted: Vec<Sym> = u.attrs.iter().map(|a| sym(a)).collect();
                    let ok: Vec<&Sym> =
                        vars.iter().filter(|v| attrs.get(*v).is_some_and(|s| wanted.iter().all(|a| s.contains(a)))).collect();
                    let mut pick: Vec<Sym> = Vec::new();
                    choose(&ok, objects, &mut pick, &mut |vs| {
                        if !symmetric_canonical(t, vs) {
                            return;
                        }
                        let args = vs
                            .iter()
                            .flat_map(|v| wanted.iter().map(move |a| AttrTerm { attr: a.clone(), var: v.clone() }))
                            .collect();
                        out.push(Literal::Parametric { template: t, args, params: placeholder(t) });
                    });
                }
            }
        }
        // varcmp is written as a comparison literal.
        out.into_iter()
            .map(|l| match l {
                Literal::Parametric { template: TemplateId::VarCmp(op), args, .. } => {
                    Literal::Comparison { op, lhs: args[0].clone(), rhs: args[1].clone() }
                }
                l => l,
            })
            .collect()
    }

    /// One-literal extensions of a clause, canonical and deduplicated, in
    /// lexicographic order. Clauses at the budget have none.
    pub fn refinements(&self, c: &Clause) -> Vec<Clause> {
        if c.body.len() >= self.bias.literal_budget {
            return Vec::new();
        }
        let have: BTreeSet<String> = c.body.iter().map(lit_key).collect();
        let mut seen = BTreeMap::new();
        for lit in self.symbolic_literals(c).into_iter().chain(self.numeric_literals(c)) {
            if have.contains(&lit_key(&lit)) {
                continue;
            }
            let mut body = c.body.clone();
            body.push(lit);
            let (canon, key) = self.canonical(&Clause::new(c.head.clone(), body, c.budget));
            seen.entry(key).or_insert(canon);
        }
        seen.into_values().collect()
    }
}

fn choose(pool: &[&Sym], k: usize, cur: &mut Vec<Sym>, f: &mut dyn FnMut(&[Sym])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for v in pool {
        if cur.contains(v) {
            continue;
        }
        cur.push((*v).clone());
        choose(pool, k, cur, f);
        cur.pop();
    }
}

/// Canonical clause and its key. Body-only variables are renamed to
/// `names` in the order that minimises the sorted literal text.
pub fn canonicalize(c: &Clause, head_vars: &[Sym], names: &[Sym]) -> (Clause, String) {
    let body_vars: Vec<Sym> = c.vars().into_iter().filter(|v| !head_vars.contains(v)).collect();
    assert!(body_vars.len() <= names.len(), "more body variables than names");
    let mut best: Option<(String, Vec<Literal>)> = None;
    for perm in permutations(body_vars.len()) {
        let map: HashMap<&Sym, &Sym> = body_vars.iter().zip(perm.iter().map(|i| &names[*i])).collect();
        let rename = |v: &Sym| map.get(v).map(|n| (*n).clone()).unwrap_or_else(|| v.clone());
        let mut lits: Vec<(String, Literal)> = c
            .body
            .iter()
            .map(|l| {
                let r = l.rename(&rename);
                (lit_key(&r), r)
            })
            .collect();
        lits.sort_by(|a, b| a.0.cmp(&b.0));
        let key = lits.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>().join(", ");
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, lits.into_iter().map(|(_, l)| l).collect()));
        }
    }
    let (key, body) = best.expect("at least one permutation");
    let (clause, _) = Clause::new(c.head.clone(), body, c.budget).normalize_slots();
    (clause, format!("{} ← {key}", c.head))
}

/// All complete clauses up to the literal budget, in (length,
/// lexicographic) order, one per renaming class.
pub fn generate_clauses(ds: &Dataset, bias: &LanguageBias) -> Result<Vec<Clause>, SearchError> {
    let space = ClauseSpace::new(ds, bias)?;
    let mut out = Vec::new();
    let mut level = vec![space.root()];
    for _ in 0..bias.literal_budget {
        let mut next: BTreeMap<String, Clause> = BTreeMap::new();
        for c in &level {
            for r in space.refinements(c) {
                let (_, key) = space.canonical(&r);
                next.entry(key).or_insert(r);
            }
        }
        level = next.into_values().collect();
        out.extend(level.iter().filter(|c| space.is_complete(c)).cloned());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InventedPredicate {
    pub name: Sym,
    pub definition: Clause,
}

impl InventedPredicate {
    /// Adds the predicate's extension to a background as facts.
    pub fn materialize(&self, bg: &mut Background) -> Result<usize, LogicError> {
        let chain: Vec<Sym> = self
            .definition
            .body
            .iter()
            .map(|l| match l {
                Literal::Symbolic { pred, .. } => pred.clone(),
                _ => unreachable!("chain bodies are symbolic"),
            })
            .collect();
        let mut frontier: Vec<(u32, u32)> = Vec::new();
        let facts = |p: &Sym| bg.facts(p);
        let first = facts(&chain[0]);
        let ids = |bg: &Background, s: &Sym| bg.object_id(s).expect("fact objects are interned");
        for t in &first {
            frontier.push((ids(bg, &t[0]), ids(bg, &t[1])));
        }
        for p in &chain[1..] {
            let mut succ: HashMap<u32, Vec<u32>> = HashMap::new();
            for t in facts(p) {
                succ.entry(ids(bg, &t[0])).or_default().push(ids(bg, &t[1]));
            }
            let mut next = Vec::new();
            for (a, b) in frontier {
                for c in succ.get(&b).into_iter().flatten() {
                    next.push((a, *c));
                }
            }
            frontier = next;
        }
        bg.declare(&self.name, 2)?;
        let mut added = 0;
        for (a, c) in frontier {
            if bg.add_fact_ids(&self.name, vec![a, c])? {
                added += 1;
            }
        }
        Ok(added)
    }
}

fn chain_clause(name: &str, preds: &[&str]) -> Clause {
    let vars: Vec<String> = (0..=preds.len()).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let body = preds.iter().enumerate().map(|(i, p)| Literal::symbolic(p, &[&vars[i], &vars[i + 1]])).collect();
    Clause::new(Head::new(name, &[&vars[0], &vars[preds.len()]]), body, preds.len())
}

/// Chain predicates over the binary background predicates the bias
/// allows: every ordered pair at length 2, then single-predicate chains of
/// length 3 when the budget has room for them, capped at `max_invented`.
pub fn invent_predicates(ds: &Dataset, bias: &LanguageBias) -> Vec<InventedPredicate> {
    if !bias.predicate_invention {
        return Vec::new();
    }
    let binary: Vec<&str> = bias
        .predicates
        .iter()
        .filter(|(p, a)| *a == 2 && ds.background.arity(p) == Some(2) && !p.starts_with("inv_"))
        .map(|(p, _)| p.as_str())
        .collect();
    let single = binary.len() == 1;
    let mut out = Vec::new();
    for p in &binary {
        for q in &binary {
            let name = if single { "inv_reach2".to_string() } else { format!("inv_reach2_{p}_{q}") };
            out.push(InventedPredicate { name: sym(&name), definition: chain_clause(&name, &[p, q]) });
        }
    }
    if bias.literal_budget >= 3 {
        for p in &binary {
            let name = if single { "inv_reach3".to_string() } else { format!("inv_reach3_{p}") };
            out.push(InventedPredicate { name: sym(&name), definition: chain_clause(&name, &[p, p, p]) });
        }
    }
    out.truncate(bias.max_invented);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Atom, Example, Polarity};
    use crate::templates::Theory;

    fn points() -> Dataset {
        let mut bg = Background::new();
        let mut ex = Vec::new();
        for i in 0..4 {
            let o = format!("p{i}");
            bg.set_measure(&o, "x", i as f64).unwrap();
            bg.set_measure(&o, "y", 1.0).unwrap();
            let pol = if i < 2 { Polarity::Positive } else { Polarity::Negative };
            ex.push(Example::new(&format!("e{i}"), pol, Atom::new("target", &[&o])));
        }
        Dataset::new(bg, ex, Theory::Lra).unwrap()
    }

    #[test]
    fn single_interval_clause() {
        let bias = LanguageBias {
            templates: vec![TemplateUse::new(TemplateId::Interval1d, &["x"])],
            literal_budget: 1,
            ..LanguageBias::default()
        };
        let cs = generate_clauses(&points(), &bias).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].to_string(), "target(P) ← interval1d(x(P) | p0_l, p0_u)");
    }

    #[test]
    fn empty_bias_is_an_error() {
        let bias = LanguageBias::default();
        assert_eq!(generate_clauses(&points(), &bias).unwrap_err(), SearchError::EmptyBias);
    }

    #[test]
    fn canonical_form_ignores_body_variable_names() {
        let head = [sym("A")];
        let names = [sym("B"), sym("C")];
        let c1 = crate::logic::parse_clause("active(A) ← edge(A,X), edge(X,Y)").unwrap();
        let c2 = crate::logic::parse_clause("active(A) ← edge(Q,R), edge(A,Q)").unwrap();
        assert_eq!(canonicalize(&c1, &head, &names).1, canonicalize(&c2, &head, &names).1);
    }

    #[test]
    fn no_binary_predicates_means_no_invention() {
        let bias = LanguageBias {
            templates: vec![TemplateUse::new(TemplateId::Interval1d, &["x"])],
            predicate_invention: true,
            max_invented: 3,
            ..LanguageBias::default()
        };
        assert!(invent_predicates(&points(), &bias).is_empty());
    }
}
