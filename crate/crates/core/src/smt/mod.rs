//! Formulas, satisfiability and MaxSMT solving.
//!
//! Two backends implement [`Backend`]: [`BuiltinFitter`], a solver-free
//! numeric fitter, and [`SmtLibProcess`], which drives an external SMT-LIB2
//! solver over a pipe. Every model a backend returns passes through
//! [`solve_maxsmt`], which re-evaluates it concretely before reporting `sat`.

pub mod builtin;
pub mod compiled;
pub mod external;
pub mod formula;
pub mod interval;
mod lp;
pub mod sexp;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use builtin::BuiltinFitter;
pub use external::SmtLibProcess;
pub use formula::{Cmp, EvalError, Expr, Formula, MAX_DEPTH};

/// Values for real-sorted variables, keyed by name.
pub type Assignment = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub name: Arc<str>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl VarDecl {
    pub fn bounded(name: &str, lo: f64, hi: f64) -> Self {
        VarDecl { name: Arc::from(name), lo: Some(lo), hi: Some(hi) }
    }

    pub fn free(name: &str) -> Self {
        VarDecl { name: Arc::from(name), lo: None, hi: None }
    }

    pub fn bound_formula(&self) -> Formula {
        let v = Expr::Var(self.name.clone());
        let mut parts = Vec::new();
        if let Some(lo) = self.lo {
            parts.push(Formula::le(lo, v.clone()));
        }
        if let Some(hi) = self.hi {
            parts.push(Formula::le(v, hi));
        }
        Formula::and(parts)
    }
}

#[derive(Clone, Debug)]
pub struct MaxSmtInstance {
    pub decls: Vec<VarDecl>,
    pub hard: Vec<Formula>,
    pub soft: Vec<(Formula, f64)>,
    pub timeout: Duration,
}

impl MaxSmtInstance {
    /// A pure satisfiability query: every free variable is declared unbounded.
    pub fn satisfiability(formula: Formula, timeout: Duration) -> Self {
        let decls = formula.vars().iter().map(|v| VarDecl::free(v)).collect();
        MaxSmtInstance { decls, hard: vec![formula], soft: Vec::new(), timeout }
    }

    pub fn total_soft_weight(&self) -> f64 {
        self.soft.iter().map(|(_, w)| w).sum()
    }

    /// Bound constraints of every declared variable, as one conjunction.
    pub fn bound_constraints(&self) -> Formula {
        Formula::and(self.decls.iter().map(VarDecl::bound_formula).collect()).fold()
    }

    pub fn props(&self) -> Vec<Arc<str>> {
        let mut out = std::collections::BTreeSet::new();
        for f in self.hard.iter().chain(self.soft.iter().map(|(f, _)| f)) {
            out.extend(f.props());
        }
        out.into_iter().collect()
    }

    pub fn validate(&self) -> Result<(), SmtError> {
        if self.timeout.is_zero() {
            return Err(SmtError::Invalid("timeout must be positive".into()));
        }
        if let Some((_, w)) = self.soft.iter().find(|(_, w)| !(*w > 0.0 && w.is_finite())) {
            return Err(SmtError::Invalid(format!("soft weight {w} is not positive")));
        }
        let declared: std::collections::BTreeSet<&str> = self.decls.iter().map(|d| &*d.name).collect();
        for f in self.hard.iter().chain(self.soft.iter().map(|(f, _)| f)) {
            if f.depth() > MAX_DEPTH {
                return Err(SmtError::Invalid(format!("formula depth {} exceeds {MAX_DEPTH}", f.depth())));
            }
            if let Some(v) = f.vars().iter().find(|v| !declared.contains(&***v)) {
                return Err(SmtError::Invalid(format!("undeclared variable `{v}`")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
    Timeout,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Sat => "sat",
            Status::Unsat => "unsat",
            Status::Unknown => "unknown",
            Status::Timeout => "timeout",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub model: Option<Assignment>,
    pub props: BTreeMap<String, bool>,
    pub satisfied_soft_weight: Option<f64>,
    /// Set when the soft objective is best-found rather than proven optimal.
    pub heuristic: bool,
    /// Best model found before a timeout; never satisfies-all-hard-checked.
    pub partial: Option<Assignment>,
}

impl SolveResult {
    pub fn with_status(status: Status) -> Self {
        SolveResult {
            status,
            model: None,
            props: BTreeMap::new(),
            satisfied_soft_weight: None,
            heuristic: false,
            partial: None,
        }
    }

    pub fn sat(model: Assignment, props: BTreeMap<String, bool>, heuristic: bool) -> Self {
        SolveResult { status: Status::Sat, model: Some(model), props, satisfied_soft_weight: None, heuristic, partial: None }
    }

    pub fn is_sat(&self) -> bool {
        self.status == Status::Sat
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("solver process failed: {0}")]
    Process(String),
    #[error("malformed solver output: {0}")]
    Parse(String),
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    /// Solves without post-checking; use [`solve_maxsmt`] instead.
    fn solve_raw(&self, instance: &MaxSmtInstance) -> Result<SolveResult, SmtError>;
}

/// Concrete truth of `f` under a model. Unbound variables or undefined
/// arithmetic count as false.
pub fn holds_under(f: &Formula, model: &Assignment, props: &BTreeMap<String, bool>) -> bool {
    f.eval(&|v| model.get(v).copied(), &|p| props.get(p).copied()).unwrap_or(false)
}

/// Solves a MaxSMT instance and re-validates any model by concrete
/// evaluation. A model that fails a hard constraint or a bound demotes the
/// verdict to `unknown`; the reported soft weight is always recomputed.
pub fn solve_maxsmt(backend: &dyn Backend, instance: &MaxSmtInstance) -> Result<SolveResult, SmtError> {
    instance.validate()?;
    let mut res = backend.solve_raw(instance)?;
    if res.status == Status::Sat {
        let model = res.model.clone().unwrap_or_default();
        let mut full = model.clone();
        for d in &instance.decls {
            full.entry(d.name.to_string()).or_insert_with(|| default_value(d));
        }
        let mut props = res.props.clone();
        for p in instance.props() {
            props.entry(p.to_string()).or_insert(false);
        }
        let in_bounds = instance.decls.iter().all(|d| {
            let v = full[&*d.name];
            d.lo.map_or(true, |lo| v >= lo) && d.hi.map_or(true, |hi| v <= hi)
        });
        if !in_bounds || !instance.hard.iter().all(|h| holds_under(h, &full, &props)) {
            log::warn!("{}: model failed concrete re-check; reporting unknown", backend.name());
            let mut demoted = SolveResult::with_status(Status::Unknown);
            demoted.partial = Some(full);
            return Ok(demoted);
        }
        let weight = instance.soft.iter().filter(|(f, _)| holds_under(f, &full, &props)).map(|(_, w)| w).sum();
        res.satisfied_soft_weight = Some(weight);
        res.model = Some(full);
        res.props = props;
    } else {
        res.model = None;
        res.satisfied_soft_weight = None;
    }
    Ok(res)
}

fn default_value(d: &VarDecl) -> f64 {
    match (d.lo, d.hi) {
        (Some(lo), Some(hi)) => 0.5 * (lo + hi),
        (Some(lo), None) => lo,
        (None, Some(hi)) => hi,
        (None, None) => 0.0,
    }
}

/// Satisfiability of a single formula with all variables unbounded.
pub fn check_sat(backend: &dyn Backend, formula: &Formula, timeout: Duration) -> Result<SolveResult, SmtError> {
    solve_maxsmt(backend, &MaxSmtInstance::satisfiability(formula.clone(), timeout))
}

/// Same as [`check_sat`] but with declared variable bounds.
pub fn check_sat_with(
    backend: &dyn Backend,
    decls: Vec<VarDecl>,
    formula: &Formula,
    timeout: Duration,
) -> Result<SolveResult, SmtError> {
    solve_maxsmt(backend, &MaxSmtInstance { decls, hard: vec![formula.clone()], soft: Vec::new(), timeout })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Acceptability {
    Accepted,
    /// The first example whose check was satisfiable.
    Counterexample { id: String, polarity: Polarity, status: Status },
    /// A check ended in `unknown` or `timeout`.
    Undetermined { id: String, polarity: Polarity, status: Status },
}

/// Checks that `B ∧ h ∧ ¬e` is unsatisfiable for every positive `e` and
/// `B ∧ h ∧ e` is unsatisfiable for every negative `e`.
pub fn acceptability_check(
    backend: &dyn Backend,
    background: &Formula,
    rule: &Formula,
    positives: &[(String, Formula)],
    negatives: &[(String, Formula)],
    timeout: Duration,
) -> Result<Acceptability, SmtError> {
    let checks = positives
        .iter()
        .map(|(id, e)| (id, Polarity::Positive, Formula::not(e.clone())))
        .chain(negatives.iter().map(|(id, e)| (id, Polarity::Negative, e.clone())));
    for (id, polarity, e) in checks {
        let f = Formula::and(vec![background.clone(), rule.clone(), e]);
        let res = check_sat(backend, &f, timeout)?;
        match res.status {
            Status::Unsat => {}
            Status::Sat => return Ok(Acceptability::Counterexample { id: id.clone(), polarity, status: Status::Sat }),
            status => return Ok(Acceptability::Undetermined { id: id.clone(), polarity, status }),
        }
    }
    Ok(Acceptability::Accepted)
}
