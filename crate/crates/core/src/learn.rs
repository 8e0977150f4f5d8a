//! The iterative learning loop: generate, instantiate, verify, accumulate,
//! extend the background, converge, post-process and select.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fit::{
    self, instantiate, verify, FitError, FitOptions, Infeasible, Origin, ParamPolicy, ScoredRule, Verdict,
};
use crate::logic::{sym, Atom, Background, Clause, ClausePlan, Dataset, Derived, Example, Literal, LogicError, Polarity, Sym, Term};
use crate::search::{canonicalize, invent_predicates, ClauseSpace, InventedPredicate, LanguageBias, SearchError};
use crate::smt::Backend;
use crate::templates::ParamAssignment;

pub const BK_PREFIX: &str = "bk_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    TopK(usize),
    GreedyCover,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Minimum score for a rule to be validated.
    pub theta: f64,
    pub theta_conv: f64,
    pub t_max: usize,
    /// Overrides the bias budget when set.
    pub literal_budget: Option<usize>,
    /// Wall-clock limit for one iteration.
    pub timeout: Duration,
    pub predicate_invention: bool,
    pub selection: Selection,
    /// Fit `interval1d` per head attribute before structure search.
    pub range_relations: bool,
    /// Fit `halfplane2d` per head attribute pair before structure search.
    pub arithmetic_relations: bool,
    /// Also fit `halfplane3d` per attribute triple.
    pub halfplane3d: bool,
    pub beam_width: usize,
    /// Parametric clauses instantiated per iteration.
    pub max_fits: usize,
    /// Clauses visited per iteration, parametric or not.
    pub max_visits: usize,
    pub bk_precision: f64,
    /// Background additions happen while t is below this.
    pub bk_iterations: usize,
    pub max_bk_per_iteration: usize,
    pub min_precision: f64,
    pub min_recall: f64,
    /// Kept rules are at most this far below the best training precision.
    pub precision_slack: f64,
    pub param_policy: ParamPolicy,
    pub noisy_retry: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            theta: 0.6,
            theta_conv: 0.01,
            t_max: 10,
            literal_budget: None,
            timeout: Duration::from_secs(60),
            predicate_invention: false,
            selection: Selection::GreedyCover,
            range_relations: false,
            arithmetic_relations: false,
            halfplane3d: false,
            beam_width: 4,
            max_fits: 200,
            max_visits: 5000,
            bk_precision: 0.8,
            bk_iterations: 3,
            max_bk_per_iteration: 5,
            min_precision: 0.8,
            min_recall: 0.5,
            precision_slack: 0.05,
            param_policy: ParamPolicy::Fit,
            noisy_retry: true,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("empty hypothesis space")]
    EmptyHypothesisSpace,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.t_max == 0 {
            return Err(LearnError::Config("t_max must be at least 1".into()));
        }
        if self.theta_conv <= 0.0 {
            return Err(LearnError::Config("theta_conv must be positive".into()));
        }
        if self.beam_width == 0 {
            return Err(LearnError::Config("beam_width must be at least 1".into()));
        }
        if let Selection::TopK(0) = self.selection {
            return Err(LearnError::Config("top_k needs k ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundAddition {
    pub name: String,
    pub iteration: usize,
    pub precision: f64,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub quality: f64,
    pub delta_q: f64,
    pub candidates: usize,
    pub validated: usize,
    pub solver_calls: usize,
    pub background_added: Vec<String>,
    /// Whether the iteration's wall-clock limit cut the search short.
    pub timed_out: bool,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct LearnResult {
    pub rules: Vec<ScoredRule>,
    /// Every validated rule, before post-processing, in insertion order.
    pub hypothesis: Vec<ScoredRule>,
    pub log: Vec<IterationRecord>,
    pub background_additions: Vec<BackgroundAddition>,
    pub invented: Vec<InventedPredicate>,
    /// The training background extended with invented and added predicates.
    pub background: Arc<Background>,
}

/// Mean F1; 0 for no rules.
pub fn quality(rules: &[ScoredRule]) -> f64 {
    if rules.is_empty() {
        0.0
    } else {
        rules.iter().map(|r| r.stats.f1).sum::<f64>() / rules.len() as f64
    }
}

type Fitted = Result<ScoredRule, Infeasible>;

/// Hard coverage failed: no refinement can cover more positives.
fn hard_infeasible(f: &Fitted) -> bool {
    match f {
        Err(_) => true,
        Ok(r) => r.demoted || (r.clause.param_slots().is_empty() && r.stats.cov_pos < r.stats.n_pos),
    }
}

struct Searcher<'a> {
    backend: &'a dyn Backend,
    cfg: &'a LoopConfig,
    cache: HashMap<String, Fitted>,
    solver_calls: usize,
}

struct IterationOutcome {
    visited: Vec<(String, Fitted)>,
    timed_out: bool,
}

impl Searcher<'_> {
    fn fit_opts(&self, t: usize, deadline: Instant) -> FitOptions {
        let remaining = deadline.saturating_duration_since(Instant::now()).max(Duration::from_millis(1));
        FitOptions {
            timeout: remaining,
            noisy_retry: self.cfg.noisy_retry,
            policy: self.cfg.param_policy,
            origin: Origin::Structured,
            iteration: t,
        }
    }

    /// Beam search over refinements. A clause is skipped when removing one
    /// literal gives a clause already known to be perfect or hard-infeasible.
    fn search(&mut self, ds: &Dataset, space: &ClauseSpace, t: usize, deadline: Instant) -> Result<IterationOutcome, LearnError> {
        let mut perfect: HashSet<String> = HashSet::new();
        let mut infeasible: HashSet<String> = HashSet::new();
        let mut visited = Vec::new();
        let (mut fits, mut visits) = (0usize, 0usize);
        let mut level: Vec<Clause> = space.refinements(&space.root());
        let mut timed_out = false;
        while !level.is_empty() {
            let mut cands: Vec<(String, Clause)> = Vec::new();
            for c in level {
                let key = space.canonical(&c).1;
                if c.body.len() > 1 && generalizations(space, &c).iter().any(|g| perfect.contains(g) || infeasible.contains(g)) {
                    continue;
                }
                let parametric = !c.param_slots().is_empty();
                if visits >= self.cfg.max_visits || (parametric && fits >= self.cfg.max_fits && !self.cache.contains_key(&key)) {
                    continue;
                }
                visits += 1;
                if parametric && !self.cache.contains_key(&key) {
                    fits += 1;
                }
                cands.push((key, c));
            }
            if Instant::now() >= deadline {
                timed_out = true;
                break;
            }
            let todo: Vec<&(String, Clause)> = cands.iter().filter(|(k, _)| !self.cache.contains_key(k)).collect();
            let opts = self.fit_opts(t, deadline);
            let backend = self.backend;
            let results: Vec<Result<Fitted, FitError>> =
                todo.par_iter().map(|(_, c)| instantiate(c, ds, backend, &opts)).collect();
            for ((key, c), r) in todo.iter().zip(results) {
                let r = r?;
                if !c.param_slots().is_empty() {
                    self.solver_calls += 1;
                }
                if matches!(r, Err(Infeasible::Timeout)) {
                    // Not cached: a later iteration may have more time.
                    timed_out = true;
                    visited.push((key.clone(), r));
                    continue;
                }
                self.cache.insert(key.clone(), r);
            }
            let mut found_perfect = false;
            let mut scored: Vec<(f64, String, Clause)> = Vec::new();
            for (key, c) in cands {
                let Some(r) = self.cache.get(&key).cloned() else { continue };
                if hard_infeasible(&r) {
                    infeasible.insert(key.clone());
                }
                if let Ok(rule) = &r {
                    if rule.stats.is_perfect() {
                        perfect.insert(key.clone());
                        found_perfect |= space.is_complete(&c);
                    } else if !hard_infeasible(&r) {
                        scored.push((rule.score, key.clone(), c.clone()));
                    }
                }
                visited.push((key, r));
            }
            if found_perfect {
                break;
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            let mut next: BTreeMap<String, Clause> = BTreeMap::new();
            for (_, _, c) in scored.into_iter().take(self.cfg.beam_width) {
                for r in space.refinements(&c) {
                    let key = space.canonical(&r).1;
                    next.entry(key).or_insert(r);
                }
            }
            level = next.into_values().collect();
        }
        Ok(IterationOutcome { visited, timed_out })
    }
}

/// Keys of the clauses obtained by deleting one body literal.
fn generalizations(space: &ClauseSpace, c: &Clause) -> Vec<String> {
    (0..c.body.len())
        .map(|i| {
            let mut body = c.body.clone();
            body.remove(i);
            space.canonical(&Clause::new(c.head.clone(), body, c.budget)).1
        })
        .collect()
}

fn rule_key(r: &ScoredRule) -> String {
    let head: Vec<Sym> = r.clause.head.args.clone();
    let names: Vec<Sym> = (0..32).map(|i| sym(&format!("V{i}"))).collect();
    canonicalize(&r.clause, &head, &names).1
}

/// Adds `bk_<n>` as a predicate whose facts are the tuples the rule covers:
/// every object for unary heads, the example heads otherwise.
fn add_background_rule(bg: &mut Background, name: &str, rule: &ScoredRule, ds: &Dataset) -> Result<(), LearnError> {
    let arity = rule.clause.head.args.len();
    let tuples: Vec<Vec<Sym>> = if arity == 1 {
        bg.objects().iter().map(|o| vec![o.clone()]).collect()
    } else {
        let set: BTreeSet<Vec<Sym>> = ds.examples().map(|e| e.head.args.clone()).collect();
        set.into_iter().collect()
    };
    let covered: Vec<Vec<Sym>> = {
        let plan = ClausePlan::new(&rule.clause, bg)?;
        tuples
            .into_iter()
            .filter(|t| {
                let args: Vec<&str> = t.iter().map(|s| &**s).collect();
                let e = Example::new("bk", Polarity::Positive, Atom::new(&rule.clause.head.pred, &args));
                plan.covers(&e, &rule.params)
            })
            .collect()
    };
    bg.declare(name, arity)?;
    for t in covered {
        let args: Vec<&str> = t.iter().map(|s| &**s).collect();
        bg.add_fact(name, &args)?;
    }
    let mut clause = rule.clause.clone();
    clause.head.pred = sym(name);
    bg.derived.push(Derived { name: sym(name), clause, params: rule.params.clone() });
    Ok(())
}

pub fn run_learning(
    ds: &Dataset,
    bias: &LanguageBias,
    cfg: &LoopConfig,
    backend: &dyn Backend,
) -> Result<LearnResult, LearnError> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut bias = bias.clone();
    if let Some(b) = cfg.literal_budget {
        bias.literal_budget = b;
    }
    bias.predicate_invention = cfg.predicate_invention;
    let mut bg = (*ds.background).clone();
    let invented = invent_predicates(ds, &bias);
    for p in &invented {
        let n = p.materialize(&mut bg)?;
        log::debug!("invented {} with {n} facts", p.name);
        bias = bias.with_predicate(&p.name, 2);
    }
    let mut work = ds.with_background(bg);

    let mut searcher = Searcher { backend, cfg, cache: HashMap::new(), solver_calls: 0 };
    // Step 1a fits on the original measurements only.
    let mut direct = Vec::new();
    {
        let opts = FitOptions {
            timeout: cfg.timeout,
            noisy_retry: cfg.noisy_retry,
            policy: cfg.param_policy,
            origin: Origin::Arithmetic,
            iteration: 0,
        };
        if cfg.range_relations {
            direct.extend(fit::learn_range_relations(ds, backend, &opts)?);
        }
        if cfg.arithmetic_relations {
            direct.extend(fit::learn_arithmetic_relations(ds, backend, &opts, cfg.halfplane3d)?);
        }
        searcher.solver_calls += direct.len();
    }

    let mut hypothesis: Vec<ScoredRule> = Vec::new();
    let mut h_keys: HashSet<String> = HashSet::new();
    let mut log_records = Vec::new();
    let mut additions = Vec::new();
    let mut added_keys: HashSet<String> = HashSet::new();
    let mut prev_q = 0.0;
    let mut delta_q = f64::INFINITY;
    let mut t = 0;
    while delta_q > cfg.theta_conv && t < cfg.t_max {
        let started = Instant::now();
        let deadline = started + cfg.timeout;
        let calls_before = searcher.solver_calls;
        let space = ClauseSpace::new(&work, &bias)?;
        let outcome = searcher.search(&work, &space, t, deadline)?;
        let candidates = outcome.visited.len() + direct.len();
        if t == 0 && candidates == 0 {
            return Err(LearnError::EmptyHypothesisSpace);
        }

        let mut validated: Vec<ScoredRule> = Vec::new();
        let verify_timeout = Duration::from_secs(5).min(cfg.timeout);
        for r in direct.iter().cloned().chain(
            outcome
                .visited
                .iter()
                .filter_map(|(_, r)| r.as_ref().ok().cloned())
                .filter(|r| space.is_complete(&r.clause)),
        ) {
            if verify(&r, backend, cfg.theta, verify_timeout)? == Verdict::Keep {
                validated.push(r);
            }
        }
        for r in &validated {
            if h_keys.insert(format!("{} {:?}", rule_key(r), r.params)) {
                hypothesis.push(r.clone());
            }
        }
        let q = quality(&validated);
        delta_q = q - prev_q;
        prev_q = q;

        let mut added_now = Vec::new();
        if t < cfg.bk_iterations {
            let mut pool: Vec<&ScoredRule> = validated
                .iter()
                .filter(|r| r.stats.precision > cfg.bk_precision && !added_keys.contains(&rule_key(r)))
                .collect();
            pool.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| rule_key(a).cmp(&rule_key(b))));
            let mut bg = (*work.background).clone();
            for r in pool.into_iter().take(cfg.max_bk_per_iteration) {
                let name = format!("{BK_PREFIX}{}", additions.len());
                add_background_rule(&mut bg, &name, r, &work)?;
                added_keys.insert(rule_key(r));
                bias = bias.with_predicate(&name, r.clause.head.args.len());
                additions.push(BackgroundAddition {
                    name: name.clone(),
                    iteration: t,
                    precision: r.stats.precision,
                    rule: r.to_string(),
                });
                added_now.push(name);
            }
            if !added_now.is_empty() {
                work = work.with_background(bg);
            }
        }
        if outcome.timed_out {
            log::warn!("iteration {t} hit its time limit");
        }
        log_records.push(IterationRecord {
            t,
            quality: q,
            delta_q,
            candidates,
            validated: validated.len(),
            solver_calls: searcher.solver_calls - calls_before,
            background_added: added_now,
            timed_out: outcome.timed_out,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
        t += 1;
    }

    let rules = post_process(&hypothesis, &work, cfg)?;
    Ok(LearnResult {
        rules,
        hypothesis,
        log: log_records,
        background_additions: additions,
        invented,
        background: work.background.clone(),
    })
}

/// Replaces `bk_<n>` literals with their definitions, recursively.
pub fn unfold(rule: &ScoredRule, bg: &Background) -> ScoredRule {
    let mut clause = rule.clause.clone();
    let mut params = rule.params.clone();
    let mut fresh = 0usize;
    loop {
        let Some(pos) = clause.body.iter().position(|l| match l {
            Literal::Symbolic { pred, .. } => bg.derived(pred).is_some(),
            _ => false,
        }) else {
            break;
        };
        let Literal::Symbolic { pred, args } = clause.body.remove(pos) else { unreachable!() };
        let def = bg.derived(&pred).expect("checked").clone();
        let mut map: HashMap<Sym, Sym> = HashMap::new();
        for (h, a) in def.clause.head.args.iter().zip(&args) {
            let (Term::Var(v) | Term::Const(v)) = a;
            map.insert(h.clone(), v.clone());
        }
        let tag = fresh;
        fresh += 1;
        let rename = |v: &Sym| map.get(v).cloned().unwrap_or_else(|| sym(&format!("U{tag}_{v}")));
        for l in &def.clause.body {
            let l = l.rename(&rename);
            let l = match l {
                Literal::Parametric { template, args, params: slots } => {
                    let slots: Vec<Sym> = slots.iter().map(|s| sym(&format!("u{tag}_{s}"))).collect();
                    Literal::Parametric { template, args, params: slots }
                }
                other => other,
            };
            clause.body.push(l);
        }
        for (k, v) in &def.params {
            params.insert(format!("u{tag}_{k}"), *v);
        }
    }
    if clause.body.len() == rule.clause.body.len() && fresh == 0 {
        return rule.clone();
    }
    // Rename body variables to single letters where possible.
    let head: Vec<Sym> = clause.head.args.clone();
    let body_vars: Vec<Sym> = clause.vars().into_iter().filter(|v| !head.contains(v)).collect();
    let letters: Vec<Sym> = ('B'..='Z')
        .chain(std::iter::once('A'))
        .map(|c| sym(&c.to_string()))
        .filter(|n| !head.contains(n))
        .collect();
    let vmap: HashMap<Sym, Sym> = body_vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), letters.get(i).cloned().unwrap_or_else(|| sym(&format!("V{i}")))))
        .collect();
    clause.body = clause.body.iter().map(|l| l.rename(&|v| vmap.get(v).cloned().unwrap_or_else(|| v.clone()))).collect();
    clause.budget = clause.budget.max(clause.body.len());
    let (clause, slot_map) = clause.normalize_slots();
    let params: ParamAssignment =
        slot_map.iter().filter_map(|(old, new)| params.get(&**old).map(|v| (new.to_string(), *v))).collect();
    ScoredRule { clause, params, ..rule.clone() }
}

fn same_params(a: &ParamAssignment, b: &ParamAssignment) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|((ka, va), (kb, vb))| ka == kb && (va - vb).abs() <= 1e-9)
}

fn origin_rank(o: Origin) -> u8 {
    match o {
        Origin::Arithmetic => 0,
        Origin::Structured => 1,
        Origin::Other => 2,
    }
}

/// Orders by origin priority, then score, then clause text.
pub fn priority_order(rules: &mut [ScoredRule]) {
    rules.sort_by(|a, b| {
        origin_rank(a.origin)
            .cmp(&origin_rank(b.origin))
            .then_with(|| b.score.total_cmp(&a.score))
            .then_with(|| a.to_string().cmp(&b.to_string()))
    });
}

/// Indices chosen by greedy set cover over the covered positives; ties go
/// to the earlier rule.
pub fn greedy_cover(covers: &[BTreeSet<usize>]) -> Vec<usize> {
    greedy_cover_by(covers, &vec![BTreeSet::new(); covers.len()])
}

/// Greedy set cover over positives. Among rules adding the same number of
/// positives, the one adding the fewest not-yet-covered negatives wins,
/// then the earlier rule.
pub fn greedy_cover_by(pos: &[BTreeSet<usize>], neg: &[BTreeSet<usize>]) -> Vec<usize> {
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut wrong: BTreeSet<usize> = BTreeSet::new();
    let mut chosen = Vec::new();
    loop {
        let best = pos
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, c)| (i, c.difference(&covered).count(), neg[i].difference(&wrong).count()))
            .filter(|&(_, n, _)| n > 0)
            .fold(None, |acc: Option<(usize, usize, usize)>, x| match acc {
                Some(a) if (a.1, std::cmp::Reverse(a.2)) >= (x.1, std::cmp::Reverse(x.2)) => Some(a),
                _ => Some(x),
            });
        let Some((i, _, _)) = best else { break };
        covered.extend(pos[i].iter().copied());
        wrong.extend(neg[i].iter().copied());
        chosen.push(i);
    }
    chosen
}

/// Unfolds added background predicates, removes contradictions,
/// duplicates and degenerate rules, orders by priority, filters by
/// precision and recall, and selects.
pub fn post_process(rules: &[ScoredRule], ds: &Dataset, cfg: &LoopConfig) -> Result<Vec<ScoredRule>, LearnError> {
    let bg = &ds.background;
    let mut rs: Vec<ScoredRule> = Vec::new();
    for r in rules {
        let u = unfold(r, bg);
        let u = if u.clause == r.clause {
            u
        } else {
            let s = fit::score_rule(&u.clause, u.params.clone(), ds, r.origin, r.iteration)?;
            ScoredRule { demoted: r.demoted, heuristic: r.heuristic, ..s }
        };
        if u.degenerate || !u.coverage.pos.iter().chain(&u.coverage.neg).any(|c| *c) {
            continue;
        }
        rs.push(u);
    }
    priority_order(&mut rs);

    let keys: Vec<String> = rs.iter().map(rule_key).collect();
    let mut kept: Vec<usize> = Vec::new();
    'outer: for i in 0..rs.len() {
        for &j in &kept {
            if keys[i] == keys[j] {
                if same_params(&rs[i].params, &rs[j].params) {
                    continue 'outer;
                }
                // The same clause asserted with disjoint training coverage.
                let cov = |r: &ScoredRule| r.ids_covered(ds);
                if cov(&rs[i]).is_disjoint(&cov(&rs[j])) {
                    continue 'outer;
                }
            }
        }
        kept.push(i);
    }
    let rs: Vec<ScoredRule> = kept.into_iter().map(|i| rs[i].clone()).collect();

    let best = rs.iter().map(|r| r.stats.precision).fold(0.0, f64::max);
    let rs: Vec<ScoredRule> = rs
        .into_iter()
        .filter(|r| {
            r.stats.precision >= cfg.min_precision
                && r.stats.recall >= cfg.min_recall
                && r.stats.precision >= best - cfg.precision_slack
        })
        .collect();
    Ok(match cfg.selection {
        Selection::TopK(k) => rs.into_iter().take(k).collect(),
        Selection::GreedyCover => {
            let set = |v: &[bool]| v.iter().enumerate().filter(|(_, c)| **c).map(|(i, _)| i).collect::<BTreeSet<_>>();
            let pos: Vec<BTreeSet<usize>> = rs.iter().map(|r| set(&r.coverage.pos)).collect();
            let neg: Vec<BTreeSet<usize>> = rs.iter().map(|r| set(&r.coverage.neg)).collect();
            greedy_cover_by(&pos, &neg).into_iter().map(|i| rs[i].clone()).collect()
        }
    })
}

/// Positive iff some rule covers the example.
pub fn predict(rules: &[ScoredRule], example: &Example, bg: &Background) -> Result<bool, LogicError> {
    for r in rules {
        if ClausePlan::new(&r.clause, bg)?.covers(example, &r.params) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_is_mean_f1() {
        assert_eq!(quality(&[]), 0.0);
    }

    #[test]
    fn greedy_cover_hand_run() {
        let c = |v: &[usize]| v.iter().copied().collect::<BTreeSet<usize>>();
        assert_eq!(greedy_cover(&[c(&[1, 2]), c(&[2, 3]), c(&[3])]), vec![0, 1]);
        assert_eq!(greedy_cover(&[]), Vec::<usize>::new());
    }

    #[test]
    fn cover_ties_prefer_fewer_negatives() {
        let c = |v: &[usize]| v.iter().copied().collect::<BTreeSet<usize>>();
        let pos = [c(&[1, 2]), c(&[1, 2]), c(&[3])];
        let neg = [c(&[7]), c(&[]), c(&[7, 8])];
        assert_eq!(greedy_cover_by(&pos, &neg), vec![1, 2]);
    }

    #[test]
    fn config_rejects_zero_iterations() {
        let cfg = LoopConfig { t_max: 0, ..LoopConfig::default() };
        assert!(matches!(cfg.validate(), Err(LearnError::Config(_))));
    }
}
