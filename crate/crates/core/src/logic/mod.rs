//! Terms, literals, clauses, examples and background knowledge.
//!
//! Ground facts and numeric measurements are stored separately: the
//! symbolic join never looks at numbers, and numeric literals read
//! measurements through `(object, attribute)` keys.

mod format;
mod ground;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

pub use format::{parse_clause, parse_dataset, serialize_dataset};
pub use ground::{covers, encode_example, ground_clause, Binding, ClausePlan};

pub use crate::smt::Polarity;
use crate::smt::Cmp;
use crate::templates::{ParamAssignment, TemplateId, Theory};

pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Sym),
    Const(Sym),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(sym(name))
    }

    pub fn name(&self) -> &Sym {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `attr(Var)`: a numeric attribute of the object bound to a variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrTerm {
    pub attr: Sym,
    pub var: Sym,
}

impl AttrTerm {
    pub fn new(attr: &str, var: &str) -> Self {
        AttrTerm { attr: sym(attr), var: sym(var) }
    }
}

impl fmt::Display for AttrTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.attr, self.var)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Symbolic { pred: Sym, args: Vec<Term> },
    Comparison { op: Cmp, lhs: AttrTerm, rhs: AttrTerm },
    /// `params` are the clause-level slot names, one per template parameter.
    Parametric { template: TemplateId, args: Vec<AttrTerm>, params: Vec<Sym> },
}

impl Literal {
    pub fn symbolic(pred: &str, vars: &[&str]) -> Literal {
        Literal::Symbolic { pred: sym(pred), args: vars.iter().map(|v| Term::var(v)).collect() }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, Literal::Symbolic { .. })
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Sym> {
        let mut out: Vec<Sym> = Vec::new();
        let mut push = |v: &Sym| {
            if !out.contains(v) {
                out.push(v.clone());
            }
        };
        match self {
            Literal::Symbolic { args, .. } => args.iter().for_each(|t| {
                if let Term::Var(v) = t {
                    push(v)
                }
            }),
            Literal::Comparison { lhs, rhs, .. } => {
                push(&lhs.var);
                push(&rhs.var);
            }
            Literal::Parametric { args, .. } => args.iter().for_each(|a| push(&a.var)),
        }
        out
    }

    pub fn rename(&self, f: &dyn Fn(&Sym) -> Sym) -> Literal {
        let at = |a: &AttrTerm| AttrTerm { attr: a.attr.clone(), var: f(&a.var) };
        match self {
            Literal::Symbolic { pred, args } => Literal::Symbolic {
                pred: pred.clone(),
                args: args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => Term::Var(f(v)),
                        c => c.clone(),
                    })
                    .collect(),
            },
            Literal::Comparison { op, lhs, rhs } => Literal::Comparison { op: *op, lhs: at(lhs), rhs: at(rhs) },
            Literal::Parametric { template, args, params } => {
                Literal::Parametric { template: *template, args: args.iter().map(at).collect(), params: params.clone() }
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Symbolic { pred, args } => {
                write!(f, "{pred}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Literal::Comparison { op, lhs, rhs } => write!(f, "{lhs} {op} {rhs}"),
            Literal::Parametric { template, args, params } => {
                write!(f, "{template}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                if !params.is_empty() {
                    f.write_str(" | ")?;
                    for (i, p) in params.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        f.write_str(p)?;
                    }
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Head {
    pub pred: Sym,
    pub args: Vec<Sym>,
}

impl Head {
    pub fn new(pred: &str, vars: &[&str]) -> Self {
        Head { pred: sym(pred), args: vars.iter().map(|v| sym(v)).collect() }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.pred, self.args.iter().map(|a| &**a).collect::<Vec<_>>().join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    pub head: Head,
    pub body: Vec<Literal>,
    pub budget: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    BudgetExceeded { len: usize, budget: usize },
    UnboundHeadVariable(Sym),
    ArgArity { template: TemplateId, expected: usize, got: usize },
    ParamArity { template: TemplateId, expected: usize, got: usize },
    SharedSlot(Sym),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BudgetExceeded { len, budget } => write!(f, "budget exceeded: {len} literals, budget {budget}"),
            Violation::UnboundHeadVariable(v) => write!(f, "unbound head variable {v}"),
            Violation::ArgArity { template, expected, got } => {
                write!(f, "{template} takes {expected} arguments, got {got}")
            }
            Violation::ParamArity { template, expected, got } => {
                write!(f, "{template} takes {expected} parameters, got {got}")
            }
            Violation::SharedSlot(s) => write!(f, "parameter slot {s} used more than once"),
        }
    }
}

impl Clause {
    pub fn new(head: Head, body: Vec<Literal>, budget: usize) -> Self {
        Clause { head, body, budget }
    }

    /// Head variables first, then body variables in order of appearance.
    pub fn vars(&self) -> Vec<Sym> {
        let mut out = self.head.args.clone();
        for l in &self.body {
            for v in l.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn param_slots(&self) -> Vec<Sym> {
        self.body
            .iter()
            .flat_map(|l| match l {
                Literal::Parametric { params, .. } => params.clone(),
                _ => Vec::new(),
            })
            .collect()
    }

    pub fn parametric_count(&self) -> usize {
        self.body.iter().filter(|l| matches!(l, Literal::Parametric { template, .. } if template.is_parametric())).count()
    }

    /// Diagnostics; an empty list means the clause is well formed.
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.body.len() > self.budget {
            out.push(Violation::BudgetExceeded { len: self.body.len(), budget: self.budget });
        }
        let body_vars: BTreeSet<Sym> = self.body.iter().flat_map(Literal::vars).collect();
        for v in &self.head.args {
            if !body_vars.contains(v) {
                out.push(Violation::UnboundHeadVariable(v.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for l in &self.body {
            if let Literal::Parametric { template, args, params } = l {
                if args.len() != template.arity() {
                    out.push(Violation::ArgArity { template: *template, expected: template.arity(), got: args.len() });
                }
                if params.len() != template.params().len() {
                    out.push(Violation::ParamArity {
                        template: *template,
                        expected: template.params().len(),
                        got: params.len(),
                    });
                }
                for p in params {
                    if !seen.insert(p.clone()) {
                        out.push(Violation::SharedSlot(p.clone()));
                    }
                }
            }
        }
        out
    }

    /// Renames parameter slots to `p{i}_{name}` by parametric-literal index.
    pub fn normalize_slots(&self) -> (Clause, BTreeMap<Sym, Sym>) {
        let mut map = BTreeMap::new();
        let mut k = 0;
        let body = self
            .body
            .iter()
            .map(|l| match l {
                Literal::Parametric { template, args, params } => {
                    let fresh: Vec<Sym> = template
                        .params()
                        .iter()
                        .zip(params)
                        .map(|(spec, old)| {
                            let new = sym(&format!("p{k}_{}", spec.name));
                            map.insert(old.clone(), new.clone());
                            new
                        })
                        .collect();
                    k += 1;
                    Literal::Parametric { template: *template, args: args.clone(), params: fresh }
                }
                other => other.clone(),
            })
            .collect();
        (Clause { head: self.head.clone(), body, budget: self.budget }, map)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ←", self.head)?;
        for (i, l) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// A ground atom over object names.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Sym>,
}

impl Atom {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        Atom { pred: sym(pred), args: args.iter().map(|a| sym(a)).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.pred, self.args.iter().map(|a| &**a).collect::<Vec<_>>().join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Example {
    pub id: Sym,
    pub polarity: Polarity,
    pub head: Atom,
}

impl Example {
    pub fn new(id: &str, polarity: Polarity, head: Atom) -> Self {
        Example { id: sym(id), polarity, head }
    }

    pub fn is_positive(&self) -> bool {
        self.polarity == Polarity::Positive
    }
}

/// A predicate defined by an instantiated clause. Its extension is
/// materialised as facts; the definition is kept for unfolding.
#[derive(Clone, Debug, PartialEq)]
pub struct Derived {
    pub name: Sym,
    pub clause: Clause,
    pub params: ParamAssignment,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct PredFacts {
    pub arity: usize,
    pub tuples: Vec<Vec<u32>>,
    pub set: HashSet<Vec<u32>>,
    pub by_pos: Vec<HashMap<u32, Vec<usize>>>,
}

impl PredFacts {
    fn new(arity: usize) -> Self {
        PredFacts { arity, tuples: Vec::new(), set: HashSet::new(), by_pos: vec![HashMap::new(); arity] }
    }

    fn insert(&mut self, t: Vec<u32>) -> bool {
        if !self.set.insert(t.clone()) {
            return false;
        }
        let idx = self.tuples.len();
        for (pos, o) in t.iter().enumerate() {
            self.by_pos[pos].entry(*o).or_default().push(idx);
        }
        self.tuples.push(t);
        true
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LogicError {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{pred}` used with arity {got}, declared {expected}")]
    PredicateArity { pred: String, expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate example id `{0}`")]
    DuplicateId(String),
    #[error("conflicting values for {obj}.{attr}")]
    ConflictingMeasure { obj: String, attr: String },
    #[error("missing attribute {attr} of {obj}")]
    MissingAttribute { obj: String, attr: String },
    #[error("too many bindings for example `{0}`")]
    TooManyBindings(String),
    #[error("clause is malformed: {0}")]
    Malformed(String),
}

/// Ground facts, measurements and derived predicates, with objects and
/// attributes interned.
#[derive(Clone, Debug, Default)]
pub struct Background {
    objects: Vec<Sym>,
    obj_index: HashMap<Sym, u32>,
    attrs: Vec<Sym>,
    attr_index: HashMap<Sym, u32>,
    pub(crate) preds: BTreeMap<Sym, PredFacts>,
    measures: HashMap<(u32, u32), f64>,
    pub derived: Vec<Derived>,
}

impl Background {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.obj_index.get(name) {
            return i;
        }
        let i = self.objects.len() as u32;
        let s = sym(name);
        self.objects.push(s.clone());
        self.obj_index.insert(s, i);
        i
    }

    fn intern_attr(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.attr_index.get(name) {
            return i;
        }
        let i = self.attrs.len() as u32;
        let s = sym(name);
        self.attrs.push(s.clone());
        self.attr_index.insert(s, i);
        i
    }

    pub fn object_id(&self, name: &str) -> Option<u32> {
        self.obj_index.get(name).copied()
    }

    pub fn object_name(&self, id: u32) -> &Sym {
        &self.objects[id as usize]
    }

    pub fn attr_id(&self, name: &str) -> Option<u32> {
        self.attr_index.get(name).copied()
    }

    pub fn objects(&self) -> &[Sym] {
        &self.objects
    }

    pub fn attributes(&self) -> BTreeSet<Sym> {
        self.attrs.iter().cloned().collect()
    }

    /// Declares a predicate with no facts (so clauses may mention it).
    pub fn declare(&mut self, pred: &str, arity: usize) -> Result<(), LogicError> {
        match self.preds.get(pred) {
            Some(p) if p.arity != arity => {
                Err(LogicError::PredicateArity { pred: pred.to_string(), expected: p.arity, got: arity })
            }
            Some(_) => Ok(()),
            None => {
                self.preds.insert(sym(pred), PredFacts::new(arity));
                Ok(())
            }
        }
    }

    pub fn add_fact(&mut self, pred: &str, args: &[&str]) -> Result<bool, LogicError> {
        self.declare(pred, args.len())?;
        let t: Vec<u32> = args.iter().map(|a| self.intern(a)).collect();
        Ok(self.preds.get_mut(pred).expect("declared").insert(t))
    }

    pub(crate) fn add_fact_ids(&mut self, pred: &str, t: Vec<u32>) -> Result<bool, LogicError> {
        self.declare(pred, t.len())?;
        Ok(self.preds.get_mut(pred).expect("declared").insert(t))
    }

    pub fn set_measure(&mut self, obj: &str, attr: &str, value: f64) -> Result<(), LogicError> {
        let (o, a) = (self.intern(obj), self.intern_attr(attr));
        match self.measures.insert((o, a), value) {
            Some(old) if old.to_bits() != value.to_bits() => {
                Err(LogicError::ConflictingMeasure { obj: obj.to_string(), attr: attr.to_string() })
            }
            _ => Ok(()),
        }
    }

    pub fn measure(&self, obj: &str, attr: &str) -> Option<f64> {
        self.measure_ids(self.object_id(obj)?, self.attr_id(attr)?)
    }

    pub(crate) fn measure_ids(&self, obj: u32, attr: u32) -> Option<f64> {
        self.measures.get(&(obj, attr)).copied()
    }

    pub fn has_predicate(&self, pred: &str) -> bool {
        self.preds.contains_key(pred)
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.preds.get(pred).map(|p| p.arity)
    }

    /// `(name, arity)` of every predicate, sorted by name.
    pub fn predicates(&self) -> Vec<(Sym, usize)> {
        self.preds.iter().map(|(k, v)| (k.clone(), v.arity)).collect()
    }

    pub fn holds(&self, atom: &Atom) -> bool {
        let Some(p) = self.preds.get(&atom.pred) else { return false };
        let ids: Option<Vec<u32>> = atom.args.iter().map(|a| self.object_id(a)).collect();
        ids.is_some_and(|t| p.set.contains(&t))
    }

    /// Facts of one predicate as name tuples, in insertion order.
    pub fn facts(&self, pred: &str) -> Vec<Vec<Sym>> {
        self.preds
            .get(pred)
            .map(|p| p.tuples.iter().map(|t| t.iter().map(|o| self.object_name(*o).clone()).collect()).collect())
            .unwrap_or_default()
    }

    /// Every measurement as `(object, attribute, value)`, sorted by name.
    pub fn measurements(&self) -> Vec<(Sym, Sym, f64)> {
        let mut out: Vec<(Sym, Sym, f64)> = self
            .measures
            .iter()
            .map(|((o, a), v)| (self.objects[*o as usize].clone(), self.attrs[*a as usize].clone(), *v))
            .collect();
        out.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
        out
    }

    /// Attributes measured on an object.
    pub fn attributes_of(&self, obj: &str) -> BTreeSet<Sym> {
        let Some(o) = self.object_id(obj) else { return BTreeSet::new() };
        self.attrs.iter().enumerate().filter(|(a, _)| self.measures.contains_key(&(o, *a as u32))).map(|(_, s)| s.clone()).collect()
    }

    pub fn derived(&self, name: &str) -> Option<&Derived> {
        self.derived.iter().find(|d| &*d.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub background: Arc<Background>,
    pub positives: Vec<Example>,
    pub negatives: Vec<Example>,
    pub theory: Theory,
}

impl Dataset {
    /// Splits examples by polarity. Ids must be unique across both lists.
    pub fn new(background: Background, examples: Vec<Example>, theory: Theory) -> Result<Self, LogicError> {
        let mut seen = BTreeSet::new();
        for e in &examples {
            if !seen.insert(e.id.clone()) {
                return Err(LogicError::DuplicateId(e.id.to_string()));
            }
        }
        let (positives, negatives) = examples.into_iter().partition(Example::is_positive);
        Ok(Dataset { background: Arc::new(background), positives, negatives, theory })
    }

    pub fn examples(&self) -> impl Iterator<Item = &Example> {
        self.positives.iter().chain(&self.negatives)
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same background, restricted to the given example ids (in the given order).
    pub fn subset(&self, ids: &[Sym]) -> Dataset {
        let by_id: HashMap<&Sym, &Example> = self.examples().map(|e| (&e.id, e)).collect();
        let chosen: Vec<Example> = ids.iter().filter_map(|i| by_id.get(i).map(|e| (*e).clone())).collect();
        let (positives, negatives) = chosen.into_iter().partition(Example::is_positive);
        Dataset { background: self.background.clone(), positives, negatives, theory: self.theory }
    }

    pub fn with_background(&self, background: Background) -> Dataset {
        Dataset { background: Arc::new(background), ..self.clone() }
    }

    /// Target predicate name and arity, taken from the first example.
    pub fn target(&self) -> Option<(Sym, usize)> {
        self.examples().next().map(|e| (e.head.pred.clone(), e.head.args.len()))
    }

    /// Numeric attributes measured on the head objects of every example.
    pub fn head_attributes(&self) -> BTreeSet<Sym> {
        let mut it = self.examples().flat_map(|e| e.head.args.iter());
        let Some(first) = it.next() else { return BTreeSet::new() };
        let mut common = self.background.attributes_of(first);
        for o in it {
            let a = self.background.attributes_of(o);
            common.retain(|x| a.contains(x));
        }
        common
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_body_leaves_head_unbound() {
        let c = Clause::new(Head::new("target", &["P"]), vec![], 3);
        assert_eq!(c.check(), vec![Violation::UnboundHeadVariable(sym("P"))]);
    }

    #[test]
    fn seven_literals_exceed_budget_six() {
        let body = (0..7).map(|i| Literal::symbolic(&format!("q{i}"), &["P"])).collect();
        let c = Clause::new(Head::new("target", &["P"]), body, 6);
        assert_eq!(c.check(), vec![Violation::BudgetExceeded { len: 7, budget: 6 }]);
    }

    #[test]
    fn well_formed_three_literal_clause() {
        let body = vec![
            Literal::symbolic("edge", &["A", "B"]),
            Literal::symbolic("edge", &["B", "C"]),
            Literal::Parametric {
                template: TemplateId::InfluenceThreshold,
                args: vec![AttrTerm::new("max_influence", "A")],
                params: vec![sym("p0_tau")],
            },
        ];
        let c = Clause::new(Head::new("active", &["A"]), body, 3);
        assert!(c.check().is_empty());
    }

    #[test]
    fn shared_slot_is_reported() {
        let lit = Literal::Parametric {
            template: TemplateId::Interval1d,
            args: vec![AttrTerm::new("x", "P")],
            params: vec![sym("l"), sym("u")],
        };
        let c = Clause::new(Head::new("t", &["P"]), vec![lit.clone(), lit], 3);
        assert!(c.check().contains(&Violation::SharedSlot(sym("l"))));
    }

    #[test]
    fn conflicting_measure_rejected() {
        let mut b = Background::new();
        b.set_measure("p", "x", 1.0).unwrap();
        assert!(b.set_measure("p", "x", 1.0).is_ok());
        assert!(b.set_measure("p", "x", 2.0).is_err());
    }
}
