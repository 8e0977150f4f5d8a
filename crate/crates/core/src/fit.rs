//! Parameter instantiation by MaxSMT, verification, coverage statistics and
//! scoring, plus direct interval and halfplane fitting.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::logic::{sym, AttrTerm, Clause, ClausePlan, Dataset, Example, Head, Literal, LogicError, Sym};
use crate::smt::{self, Backend, Expr, Formula, MaxSmtInstance, SmtError, Status, VarDecl};
use crate::templates::{ParamAssignment, TemplateId};

pub const SCORE_WEIGHTS: [f64; 4] = [0.4, 0.3, 0.2, 0.1];
/// Weight of a positive example once demoted to a soft constraint.
pub const DEMOTED_WEIGHT: f64 = 10.0;
pub const DEGENERATE_WIDTH: f64 = 1e-9;
/// Attribute values are searched within this box when no example witnesses
/// a body.
pub const VERIFY_BOX: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Arithmetic,
    Structured,
    Other,
}

impl Origin {
    pub fn parse(s: &str) -> Option<Origin> {
        match s {
            "arithmetic" => Some(Origin::Arithmetic),
            "structured" => Some(Origin::Structured),
            "other" => Some(Origin::Other),
            _ => None,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Arithmetic => "arithmetic",
            Origin::Structured => "structured",
            Origin::Other => "other",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub cov_pos: usize,
    pub exc_neg: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: f64,
    pub compression: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl RuleStats {
    pub fn from_counts(cov_pos: usize, n_pos: usize, exc_neg: usize, n_neg: usize, body_len: usize, budget: usize) -> Self {
        let cov_neg = n_neg - exc_neg;
        let precision = ratio(cov_pos, cov_pos + cov_neg);
        let recall = ratio(cov_pos, n_pos);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        let compression = if budget == 0 { 0.0 } else { (1.0 - body_len as f64 / budget as f64).max(0.0) };
        RuleStats { cov_pos, exc_neg, n_pos, n_neg, precision, recall, f1, support: recall, compression }
    }

    pub fn is_perfect(&self) -> bool {
        self.cov_pos == self.n_pos && self.exc_neg == self.n_neg
    }
}

pub fn score_fn(s: &RuleStats) -> f64 {
    let [w_f1, w_p, w_s, w_c] = SCORE_WEIGHTS;
    w_f1 * s.f1 + w_p * s.precision + w_s * s.support + w_c * s.compression
}

/// Which training examples a rule covers, by position in the dataset lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coverage {
    pub pos: Vec<bool>,
    pub neg: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRule {
    pub clause: Clause,
    pub params: ParamAssignment,
    pub stats: RuleStats,
    pub score: f64,
    pub origin: Origin,
    pub iteration: usize,
    /// Positives were demoted to soft constraints after the hard set failed.
    pub demoted: bool,
    /// The backend's optimum is best-found rather than proven.
    pub heuristic: bool,
    pub degenerate: bool,
    pub coverage: Coverage,
}

impl ScoredRule {
    pub fn ids_covered(&self, ds: &Dataset) -> BTreeSet<Sym> {
        let p = ds.positives.iter().zip(&self.coverage.pos).filter(|(_, c)| **c).map(|(e, _)| e.id.clone());
        let n = ds.negatives.iter().zip(&self.coverage.neg).filter(|(_, c)| **c).map(|(e, _)| e.id.clone());
        p.chain(n).collect()
    }
}

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

impl fmt::Display for ScoredRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {} {}: {} {{", round12(self.score), self.origin, self.clause)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={}", round12(*v))?;
        }
        f.write_str("}")
    }
}

/// A parsed `rule` line: the clause, parameters, score and origin.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleLine {
    pub score: f64,
    pub origin: Origin,
    pub clause: Clause,
    pub params: ParamAssignment,
}

pub fn parse_rule(line: &str) -> Result<RuleLine, LogicError> {
    let bad = |m: &str| LogicError::Parse { line: 0, msg: format!("{m}: `{line}`") };
    let rest = line.trim().strip_prefix("rule ").ok_or_else(|| bad("expected `rule`"))?;
    let (meta, body) = rest.split_once(':').ok_or_else(|| bad("missing `:`"))?;
    let mut m = meta.split_whitespace();
    let score: f64 = m.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad score"))?;
    let origin = m.next().and_then(Origin::parse).ok_or_else(|| bad("bad origin"))?;
    let open = body.rfind('{').ok_or_else(|| bad("missing parameters"))?;
    let clause = crate::logic::parse_clause(body[..open].trim())?;
    let inner = body[open + 1..].trim().strip_suffix('}').ok_or_else(|| bad("unclosed parameters"))?;
    let mut params = ParamAssignment::new();
    for kv in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad("bad parameter"))?;
        params.insert(k.trim().to_string(), v.trim().parse().map_err(|_| bad("bad parameter value"))?);
    }
    Ok(RuleLine { score, origin, clause, params })
}

#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// Why a clause produced no rule.
#[derive(Clone, Debug, PartialEq)]
pub enum Infeasible {
    Unsat,
    Timeout,
    Unknown,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Infeasible::Unsat => "unsat",
            Infeasible::Timeout => "timeout",
            Infeasible::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamPolicy {
    /// Parameters come from MaxSMT.
    #[default]
    Fit,
    /// Single-parameter thresholds are frozen at the median of the attribute;
    /// other parameters at the midpoint of their bounds. No solving.
    FixedMedian,
    /// Single-parameter thresholds are frozen at this value; other
    /// parameters at the midpoint of their bounds. No solving.
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub timeout: Duration,
    pub noisy_retry: bool,
    pub policy: ParamPolicy,
    pub origin: Origin,
    pub iteration: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            timeout: Duration::from_secs(30),
            noisy_retry: true,
            policy: ParamPolicy::Fit,
            origin: Origin::Structured,
            iteration: 0,
        }
    }
}

/// Slot declarations with their template bounds, in clause order.
pub fn slot_decls(clause: &Clause) -> Vec<VarDecl> {
    let mut out = Vec::new();
    for l in &clause.body {
        if let Literal::Parametric { template, params, .. } = l {
            for (spec, slot) in template.params().iter().zip(params) {
                out.push(VarDecl::bounded(slot, spec.lo, spec.hi));
            }
        }
    }
    out
}

/// A MaxSMT instance and the ids of positives with no symbolic binding,
/// which no parameter choice can cover.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub instance: MaxSmtInstance,
    pub uncoverable: Vec<Sym>,
}

pub fn build_maxsmt(clause: &Clause, ds: &Dataset, timeout: Duration) -> Result<Encoded, FitError> {
    let plan = ClausePlan::new(clause, &ds.background)?;
    let mut hard = Vec::new();
    let mut uncoverable = Vec::new();
    for e in &ds.positives {
        let f = plan.encode(e)?;
        if f == Formula::False && plan.bindings(e).is_empty() {
            uncoverable.push(e.id.clone());
        }
        if f != Formula::True {
            hard.push(f);
        }
    }
    let mut soft = Vec::new();
    for e in &ds.negatives {
        soft.push((Formula::not(plan.encode(e)?).fold(), 1.0));
    }
    Ok(Encoded { instance: MaxSmtInstance { decls: slot_decls(clause), hard, soft, timeout }, uncoverable })
}

/// Coverage counts by concrete evaluation of every example.
pub fn coverage(plan: &ClausePlan, ds: &Dataset, params: &ParamAssignment) -> Coverage {
    Coverage {
        pos: ds.positives.iter().map(|e| plan.covers(e, params)).collect(),
        neg: ds.negatives.iter().map(|e| plan.covers(e, params)).collect(),
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Median of an attribute over the training head objects when the term's
/// variable is a head variable, otherwise over every measured object.
pub fn attribute_median(ds: &Dataset, head: &Head, term: &AttrTerm) -> Option<f64> {
    let bg = &ds.background;
    let vals: Vec<f64> = match head.args.iter().position(|v| *v == term.var) {
        Some(i) => ds.examples().filter_map(|e| bg.measure(e.head.args.get(i)?, &term.attr)).collect(),
        None => bg.measurements().into_iter().filter(|(_, a, _)| *a == term.attr).map(|(_, _, v)| v).collect(),
    };
    median(vals)
}

fn fixed_params(clause: &Clause, ds: &Dataset, value: Option<f64>) -> ParamAssignment {
    let mut out = ParamAssignment::new();
    for l in &clause.body {
        if let Literal::Parametric { template, args, params } = l {
            let specs = template.params();
            for (spec, slot) in specs.iter().zip(params) {
                let mid = 0.5 * (spec.lo + spec.hi);
                let v = if specs.len() == 1 && args.len() == 1 {
                    value.or_else(|| attribute_median(ds, &clause.head, &args[0])).unwrap_or(mid).clamp(spec.lo, spec.hi)
                } else {
                    mid
                };
                out.insert(slot.to_string(), v);
            }
        }
    }
    out
}

/// Interval-like parameter pairs that have collapsed, or parametric
/// literals whose arguments are the same on every example.
fn is_degenerate(clause: &Clause, params: &ParamAssignment, ds: &Dataset) -> bool {
    let width = |a: &Sym, b: &Sym| match (params.get(&**a), params.get(&**b)) {
        (Some(x), Some(y)) => y - x <= DEGENERATE_WIDTH,
        _ => false,
    };
    for l in &clause.body {
        if let Literal::Parametric { template, params: p, .. } = l {
            let collapsed = match template {
                TemplateId::Interval1d | TemplateId::Annulus => width(&p[0], &p[1]),
                TemplateId::Box2d => width(&p[0], &p[1]) || width(&p[2], &p[3]),
                _ => false,
            };
            if collapsed {
                return true;
            }
        }
    }
    // A constant argument carries no information about the label.
    let mut constant = false;
    for l in &clause.body {
        if let Literal::Parametric { args, .. } = l {
            if args.len() == 1 {
                let Some(i) = clause.head.args.iter().position(|v| *v == args[0].var) else { continue };
                let vals: Vec<f64> =
                    ds.examples().filter_map(|e| ds.background.measure(e.head.args.get(i)?, &args[0].attr)).collect();
                if vals.len() == ds.len() && vals.len() > 1 && vals.iter().all(|v| *v == vals[0]) {
                    constant = true;
                }
            }
        }
    }
    constant
}

/// Builds the scored rule for fixed parameters.
pub fn score_rule(
    clause: &Clause,
    params: ParamAssignment,
    ds: &Dataset,
    origin: Origin,
    iteration: usize,
) -> Result<ScoredRule, FitError> {
    let plan = ClausePlan::new(clause, &ds.background)?;
    let cov = coverage(&plan, ds, &params);
    let cov_pos = cov.pos.iter().filter(|c| **c).count();
    let exc_neg = cov.neg.iter().filter(|c| !**c).count();
    let stats =
        RuleStats::from_counts(cov_pos, ds.positives.len(), exc_neg, ds.negatives.len(), clause.body.len(), clause.budget);
    let degenerate = is_degenerate(clause, &params, ds) || cov.pos.iter().chain(&cov.neg).all(|c| !c);
    Ok(ScoredRule {
        clause: clause.clone(),
        params,
        score: score_fn(&stats),
        stats,
        origin,
        iteration,
        demoted: false,
        heuristic: false,
        degenerate,
        coverage: cov,
    })
}

/// Fits the clause's parameters and scores the result on `ds`.
pub fn instantiate(
    clause: &Clause,
    ds: &Dataset,
    backend: &dyn Backend,
    opts: &FitOptions,
) -> Result<Result<ScoredRule, Infeasible>, FitError> {
    let slots = clause.param_slots();
    if slots.is_empty() {
        return Ok(Ok(score_rule(clause, ParamAssignment::new(), ds, opts.origin, opts.iteration)?));
    }
    let fixed = match opts.policy {
        ParamPolicy::Fit => None,
        ParamPolicy::FixedMedian => Some(None),
        ParamPolicy::Fixed(v) => Some(Some(v)),
    };
    if let Some(value) = fixed {
        return Ok(Ok(score_rule(clause, fixed_params(clause, ds, value), ds, opts.origin, opts.iteration)?));
    }
    let enc = build_maxsmt(clause, ds, opts.timeout)?;
    if !enc.uncoverable.is_empty() {
        log::debug!("{clause}: {} positives have no binding", enc.uncoverable.len());
    }
    let mut res = smt::solve_maxsmt(backend, &enc.instance)?;
    let mut demoted = false;
    if res.status == Status::Unsat && opts.noisy_retry && !enc.instance.hard.is_empty() {
        let mut inst = enc.instance.clone();
        let hard = std::mem::take(&mut inst.hard);
        inst.soft.extend(hard.into_iter().map(|f| (f, DEMOTED_WEIGHT)));
        res = smt::solve_maxsmt(backend, &inst)?;
        demoted = true;
    }
    let model = match res.status {
        Status::Sat => res.model.clone().expect("sat carries a model"),
        Status::Unsat => return Ok(Err(Infeasible::Unsat)),
        Status::Timeout => return Ok(Err(Infeasible::Timeout)),
        Status::Unknown => return Ok(Err(Infeasible::Unknown)),
    };
    let decls = slot_decls(clause);
    let params: ParamAssignment = decls
        .iter()
        .map(|d| {
            let mid = 0.5 * (d.lo.unwrap_or(0.0) + d.hi.unwrap_or(0.0));
            (d.name.to_string(), model.get(&*d.name).copied().unwrap_or(mid))
        })
        .collect();
    let mut rule = score_rule(clause, params, ds, opts.origin, opts.iteration)?;
    rule.demoted = demoted;
    rule.heuristic = res.heuristic;
    Ok(Ok(rule))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Keep,
    Prune(String),
}

/// The body's numeric literals with attribute terms as free variables and
/// parameters substituted.
pub fn body_formula(rule: &ScoredRule) -> Formula {
    let var = |a: &AttrTerm| Expr::var(&format!("{}({})", a.attr, a.var));
    let parts = rule
        .clause
        .body
        .iter()
        .filter_map(|l| match l {
            Literal::Comparison { op, lhs, rhs } => Some(Formula::cmp(*op, var(lhs), var(rhs))),
            Literal::Parametric { template, args, params } => {
                let a: Vec<Expr> = args.iter().map(var).collect();
                let q: Vec<Expr> =
                    params.iter().map(|p| Expr::c(rule.params.get(&**p).copied().unwrap_or(f64::NAN))).collect();
                template.form(&a, &q).ok()
            }
            Literal::Symbolic { .. } => None,
        })
        .collect();
    Formula::and(parts).fold()
}

pub fn verify(rule: &ScoredRule, backend: &dyn Backend, theta: f64, timeout: Duration) -> Result<Verdict, FitError> {
    let covered_any = rule.coverage.pos.iter().chain(&rule.coverage.neg).any(|c| *c);
    if !covered_any {
        // A covered example would be a witness; without one, ask the solver.
        let body = body_formula(rule);
        let decls = body.vars().iter().map(|v| VarDecl::bounded(v, -VERIFY_BOX, VERIFY_BOX)).collect();
        let res = smt::check_sat_with(backend, decls, &body, timeout)?;
        match res.status {
            Status::Sat => {}
            Status::Unsat => return Ok(Verdict::Prune("unsat".into())),
            Status::Unknown | Status::Timeout => {
                log::info!("verify: undetermined body satisfiability for {}", rule.clause);
                return Ok(Verdict::Prune("undetermined".into()));
            }
        }
    }
    if rule.stats.cov_pos <= 1 && rule.stats.n_pos >= 10 {
        return Ok(Verdict::Prune("overly specific".into()));
    }
    if rule.score < theta {
        return Ok(Verdict::Prune("score below threshold".into()));
    }
    Ok(Verdict::Keep)
}

fn head_var_attrs(ds: &Dataset) -> Vec<(Sym, Vec<Sym>)> {
    let Some((_, arity)) = ds.target() else { return Vec::new() };
    let vars: Vec<Sym> = (0..arity).map(|i| sym(&((b'P' + i as u8) as char).to_string())).collect();
    vars.into_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut common: Option<BTreeSet<Sym>> = None;
            for e in ds.examples() {
                let a = ds.background.attributes_of(&e.head.args[i]);
                common = Some(match common {
                    None => a,
                    Some(mut c) => {
                        c.retain(|x| a.contains(x));
                        c
                    }
                });
            }
            (v, common.unwrap_or_default().into_iter().collect())
        })
        .collect()
}

fn single_literal(ds: &Dataset, head_vars: &[Sym], lit: Literal) -> Clause {
    let (pred, _) = ds.target().expect("non-empty dataset");
    let (c, _) = Clause::new(Head { pred, args: head_vars.to_vec() }, vec![lit], 1).normalize_slots();
    c
}

fn fit_all(clauses: Vec<Clause>, ds: &Dataset, backend: &dyn Backend, opts: &FitOptions) -> Result<Vec<ScoredRule>, FitError> {
    let opts = FitOptions { origin: Origin::Arithmetic, ..opts.clone() };
    let mut out = Vec::new();
    for c in clauses {
        if let Ok(r) = instantiate(&c, ds, backend, &opts)? {
            out.push(r);
        }
    }
    Ok(out)
}

fn parametric(t: TemplateId, v: &Sym, attrs: &[&Sym]) -> Literal {
    Literal::Parametric {
        template: t,
        args: attrs.iter().map(|a| AttrTerm { attr: (*a).clone(), var: v.clone() }).collect(),
        params: t.params().iter().map(|p| sym(p.name)).collect(),
    }
}

/// `halfplane2d` over every attribute pair of each head object, and
/// `halfplane3d` over every triple when enabled.
pub fn learn_arithmetic_relations(
    ds: &Dataset,
    backend: &dyn Backend,
    opts: &FitOptions,
    triples: bool,
) -> Result<Vec<ScoredRule>, FitError> {
    let heads = head_var_attrs(ds);
    let head_vars: Vec<Sym> = heads.iter().map(|(v, _)| v.clone()).collect();
    let mut clauses = Vec::new();
    for (v, attrs) in &heads {
        for i in 0..attrs.len() {
            for j in i + 1..attrs.len() {
                clauses.push(single_literal(ds, &head_vars, parametric(TemplateId::Halfplane2d, v, &[&attrs[i], &attrs[j]])));
                if triples {
                    for k in j + 1..attrs.len() {
                        let lit = parametric(TemplateId::Halfplane3d, v, &[&attrs[i], &attrs[j], &attrs[k]]);
                        clauses.push(single_literal(ds, &head_vars, lit));
                    }
                }
            }
        }
    }
    fit_all(clauses, ds, backend, opts)
}

/// `interval1d` over every attribute of each head object.
pub fn learn_range_relations(ds: &Dataset, backend: &dyn Backend, opts: &FitOptions) -> Result<Vec<ScoredRule>, FitError> {
    let heads = head_var_attrs(ds);
    let head_vars: Vec<Sym> = heads.iter().map(|(v, _)| v.clone()).collect();
    let clauses = heads
        .iter()
        .flat_map(|(v, attrs)| attrs.iter().map(|a| single_literal(ds, &head_vars, parametric(TemplateId::Interval1d, v, &[a]))))
        .collect();
    fit_all(clauses, ds, backend, opts)
}

/// Positive ids and negative ids a rule covers, for reporting.
pub fn covered_examples<'a>(rule: &ScoredRule, ds: &'a Dataset) -> Vec<&'a Example> {
    ds.positives
        .iter()
        .zip(&rule.coverage.pos)
        .chain(ds.negatives.iter().zip(&rule.coverage.neg))
        .filter(|(_, c)| **c)
        .map(|(e, _)| e)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_of_worked_stats() {
        let s = RuleStats { f1: 0.8, precision: 1.0, support: 0.5, compression: 0.5, ..RuleStats::from_counts(0, 0, 0, 0, 0, 1) };
        assert!((score_fn(&s) - 0.77).abs() < 1e-12);
        let perfect = RuleStats::from_counts(4, 4, 4, 4, 0, 3);
        assert!((score_fn(&perfect) - 1.0).abs() < 1e-12);
        assert_eq!(score_fn(&RuleStats::from_counts(0, 4, 4, 4, 3, 3)), 0.0);
    }

    #[test]
    fn precision_zero_over_zero() {
        let s = RuleStats::from_counts(0, 5, 5, 5, 1, 3);
        assert_eq!(s.precision, 0.0);
        assert_eq!(s.f1, 0.0);
    }

    #[test]
    fn rounding_to_twelve_digits() {
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(1.0 / 3.0).to_string(), "0.333333333333");
        assert_eq!(round12(-123456.7890123456), -123456.789012);
    }

    fn line_data(pos: &[f64], neg: &[f64]) -> Dataset {
        let mut text = String::new();
        for (k, v) in pos.iter().chain(neg).enumerate() {
            text += &format!("measure o{k} x {v}\n");
            let pol = if k < pos.len() { "pos" } else { "neg" };
            text += &format!("example e{k} {pol} target(o{k})\n");
        }
        crate::logic::parse_dataset(&text).unwrap()
    }

    #[test]
    fn interval_fit_separates_line() {
        let ds = line_data(&[1.0, 2.0, 3.0], &[0.0, 5.0]);
        let c = crate::logic::parse_clause("target(P) ← interval1d(x(P) | p0_l, p0_u)").unwrap();
        let backend = crate::smt::BuiltinFitter::default();
        let r = instantiate(&c, &ds, &backend, &FitOptions::default()).unwrap().unwrap();
        let (l, u) = (r.params["p0_l"], r.params["p0_u"]);
        assert!(0.0 < l && l < 1.0 && 3.0 < u && u < 5.0, "{l} {u}");
        assert!(r.stats.is_perfect());
        assert_eq!((r.stats.precision, r.stats.recall, r.stats.f1), (1.0, 1.0, 1.0));
        assert!(!r.demoted && !r.degenerate);
        assert_eq!(verify(&r, &backend, 0.6, Duration::from_secs(5)).unwrap(), Verdict::Keep);
    }

    #[test]
    fn noisy_labels_demote_positives() {
        // A positive without the attribute cannot be covered.
        let mut ds = line_data(&[1.0, 2.0, 3.0], &[0.0, 5.0]);
        let mut bg = (*ds.background).clone();
        bg.intern("o9");
        ds.positives.push(Example::new("e9", crate::logic::Polarity::Positive, crate::logic::Atom::new("target", &["o9"])));
        ds = ds.with_background(bg);
        let c = crate::logic::parse_clause("target(P) ← interval1d(x(P) | p0_l, p0_u)").unwrap();
        let backend = crate::smt::BuiltinFitter::default();
        let r = instantiate(&c, &ds, &backend, &FitOptions::default()).unwrap().unwrap();
        assert!(r.demoted);
        assert!(r.stats.cov_pos >= 3);
        let strict = FitOptions { noisy_retry: false, ..FitOptions::default() };
        let r2 = instantiate(&c, &ds, &backend, &strict).unwrap();
        assert_eq!(r2, Err(Infeasible::Unsat));
    }

    #[test]
    fn contradictory_body_is_pruned() {
        let ds = line_data(&[1.0, 2.0], &[0.0]);
        let c = crate::logic::parse_clause("target(P) ← x(P) < y(P), y(P) < x(P)").unwrap();
        let r = score_rule(&c, ParamAssignment::new(), &ds, Origin::Other, 0).unwrap();
        let backend = crate::smt::BuiltinFitter::default();
        assert_eq!(verify(&r, &backend, 0.6, Duration::from_secs(5)).unwrap(), Verdict::Prune("unsat".into()));
    }

    #[test]
    fn rule_line_round_trip() {
        let ds = line_data(&[1.0, 2.0, 3.0], &[0.0, 5.0]);
        let c = crate::logic::parse_clause("target(P) ← interval1d(x(P) | p0_l, p0_u)").unwrap();
        let params: ParamAssignment = [("p0_l".to_string(), 0.5), ("p0_u".to_string(), 4.0)].into();
        let r = score_rule(&c, params.clone(), &ds, Origin::Arithmetic, 0).unwrap();
        let line = parse_rule(&r.to_string()).unwrap();
        assert_eq!(line.clause, c);
        assert_eq!(line.params, params);
        assert_eq!(line.origin, Origin::Arithmetic);
        assert_eq!(line.score, round12(r.score));
    }

    #[test]
    fn median_policy_uses_head_values() {
        let ds = line_data(&[1.0, 2.0, 3.0], &[10.0]);
        let c = crate::logic::parse_clause("target(P) ← influence_threshold(x(P) | p0_tau)").unwrap();
        let opts = FitOptions { policy: ParamPolicy::FixedMedian, ..FitOptions::default() };
        let backend = crate::smt::BuiltinFitter::default();
        let r = instantiate(&c, &ds, &backend, &opts).unwrap().unwrap();
        assert_eq!(r.params["p0_tau"], 2.5);
    }
}
