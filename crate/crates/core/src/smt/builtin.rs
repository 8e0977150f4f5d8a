//! Solver-free MaxSMT fitter.
//!
//! Routes by instance shape after pinned equalities are substituted away:
//! direct evaluation (no variables), an exact breakpoint sweep (one
//! variable), vertex enumeration of the hyperplane arrangement (affine, up
//! to three variables), an elastic LP with greedy subsystem pruning (large
//! affine instances) and multi-start coordinate descent with exact line
//! searches otherwise. Unsat verdicts for non-exact routes come from
//! interval branch-and-prune.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::compiled::{atom_breakpoints, Atom, CFormula, Compiler, Constraint};
use super::formula::{Cmp, Expr, Formula};
use super::interval::{Interval, Tri};
use super::lp::{self, Row};
use super::{Assignment, Backend, MaxSmtInstance, SmtError, SolveResult, Status, VarDecl};

#[derive(Clone, Debug)]
pub struct BuiltinFitter {
    pub seed: u64,
    pub starts: usize,
    pub sweeps: usize,
    /// Maximum number of plane subsets examined by vertex enumeration.
    pub vertex_cap: usize,
    /// Grid resolution for roots of non-polynomial gaps.
    pub grid: usize,
    /// Half-width of the search box for undeclared bounds.
    pub free_range: f64,
    pub icp_boxes: usize,
}

impl Default for BuiltinFitter {
    fn default() -> Self {
        BuiltinFitter {
            seed: 0,
            starts: 32,
            sweeps: 200,
            vertex_cap: 20_000,
            grid: 512,
            free_range: 1e4,
            icp_boxes: 20_000,
        }
    }
}

impl BuiltinFitter {
    pub fn with_seed(seed: u64) -> Self {
        BuiltinFitter { seed, ..Default::default() }
    }
}

impl Backend for BuiltinFitter {
    fn name(&self) -> &str {
        "builtin"
    }

    fn solve_raw(&self, inst: &MaxSmtInstance) -> Result<SolveResult, SmtError> {
        let deadline = Instant::now() + inst.timeout;
        let pre = match preprocess(inst) {
            Some(p) => p,
            None => return Ok(SolveResult::with_status(Status::Unsat)),
        };
        if pre.props.len() > 10 {
            return Ok(SolveResult::with_status(Status::Unknown));
        }
        let mut best: Option<(Outcome, BTreeMap<String, bool>)> = None;
        let mut all_unsat_exact = true;
        for mask in 0u32..(1u32 << pre.props.len()) {
            let assign: BTreeMap<String, bool> =
                pre.props.iter().enumerate().map(|(i, p)| (p.to_string(), mask >> i & 1 == 1)).collect();
            let sub = |p: &str| assign.get(p).copied();
            let hard: Vec<Formula> = pre.hard.iter().map(|f| f.substitute_props(&sub).fold()).collect();
            let soft: Vec<(Formula, f64)> = pre.soft.iter().map(|(f, w)| (f.substitute_props(&sub).fold(), *w)).collect();
            let out = self.numeric(&pre.vars, &hard, &soft, deadline);
            match out.status {
                Status::Unsat => {}
                _ => all_unsat_exact = false,
            }
            let better = match &best {
                None => true,
                Some((b, _)) => out.rank() > b.rank(),
            };
            if better {
                let mut props = pre.pinned_props.clone();
                props.extend(assign);
                best = Some((out, props));
            }
            if Instant::now() > deadline {
                break;
            }
        }
        let (out, props) = best.expect("at least one proposition assignment");
        let mut model = pre.pinned.clone();
        let status = if out.status == Status::Unsat && !all_unsat_exact { Status::Unknown } else { out.status };
        match status {
            Status::Sat => {
                let x = out.point.expect("sat outcome carries a point");
                for (d, v) in pre.vars.iter().zip(x) {
                    model.insert(d.name.to_string(), v);
                }
                Ok(SolveResult::sat(model, props, !out.exact))
            }
            other => {
                let mut r = SolveResult::with_status(other);
                if let Some(x) = out.point {
                    for (d, v) in pre.vars.iter().zip(x) {
                        model.insert(d.name.to_string(), v);
                    }
                    r.partial = Some(model);
                }
                Ok(r)
            }
        }
    }
}

struct Pre {
    pinned: Assignment,
    pinned_props: BTreeMap<String, bool>,
    vars: Vec<VarDecl>,
    props: Vec<Arc<str>>,
    hard: Vec<Formula>,
    soft: Vec<(Formula, f64)>,
}

fn flatten_into(f: Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(xs) => xs.into_iter().for_each(|x| flatten_into(x, out)),
        Formula::True => {}
        other => out.push(other),
    }
}

/// Substitutes pinned equalities (`v = c`) and pinned propositions, folds,
/// and repeats until stable. `None` means the hard part folded to false.
fn preprocess(inst: &MaxSmtInstance) -> Option<Pre> {
    let mut hard = Vec::new();
    for h in &inst.hard {
        flatten_into(h.fold(), &mut hard);
    }
    let mut soft: Vec<(Formula, f64)> = inst.soft.iter().map(|(f, w)| (f.fold(), *w)).collect();
    let mut pinned = Assignment::new();
    let mut pinned_props = BTreeMap::new();
    loop {
        let mut new_vals: BTreeMap<Arc<str>, f64> = BTreeMap::new();
        let mut new_props: BTreeMap<Arc<str>, bool> = BTreeMap::new();
        for h in &hard {
            match h {
                Formula::False => return None,
                Formula::Cmp(Cmp::Eq, Expr::Var(v), Expr::Const(c)) | Formula::Cmp(Cmp::Eq, Expr::Const(c), Expr::Var(v)) => {
                    new_vals.entry(v.clone()).or_insert(*c);
                }
                Formula::Prop(p) => {
                    new_props.entry(p.clone()).or_insert(true);
                }
                Formula::Not(inner) => {
                    if let Formula::Prop(p) = &**inner {
                        new_props.entry(p.clone()).or_insert(false);
                    }
                }
                _ => {}
            }
        }
        if new_vals.is_empty() && new_props.is_empty() {
            break;
        }
        let sub = |v: &str| new_vals.get(v).map(|c| Expr::Const(*c));
        let psub = |p: &str| new_props.get(p).copied();
        let mut next = Vec::with_capacity(hard.len());
        for h in hard.drain(..) {
            flatten_into(h.substitute(&sub).substitute_props(&psub).fold(), &mut next);
        }
        hard = next;
        for (f, _) in soft.iter_mut() {
            *f = f.substitute(&sub).substitute_props(&psub).fold();
        }
        pinned.extend(new_vals.into_iter().map(|(k, v)| (k.to_string(), v)));
        pinned_props.extend(new_props.into_iter().map(|(k, v)| (k.to_string(), v)));
    }
    if hard.iter().any(|h| *h == Formula::False) {
        return None;
    }
    for d in &inst.decls {
        if let Some(&v) = pinned.get(&*d.name) {
            if d.lo.is_some_and(|lo| v < lo) || d.hi.is_some_and(|hi| v > hi) {
                return None;
            }
        }
    }
    let vars = inst.decls.iter().filter(|d| !pinned.contains_key(&*d.name)).cloned().collect();
    let mut props = BTreeSet::new();
    for f in hard.iter().chain(soft.iter().map(|(f, _)| f)) {
        props.extend(f.props());
    }
    props.retain(|p| !pinned_props.contains_key(&**p));
    Some(Pre { pinned, pinned_props, vars, props: props.into_iter().collect(), hard, soft })
}

/// Lexicographic cost: violated hard constraints, then lost soft weight.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Cost {
    hard: u32,
    lost: f64,
}

impl Cost {
    const ZERO: Cost = Cost { hard: 0, lost: 0.0 };

    fn better(self, o: Cost) -> bool {
        self.hard < o.hard || (self.hard == o.hard && self.lost < o.lost - 1e-9)
    }

    fn ties(self, o: Cost) -> bool {
        self.hard == o.hard && (self.lost - o.lost).abs() <= 1e-9
    }
}

struct Outcome {
    status: Status,
    point: Option<Vec<f64>>,
    cost: Cost,
    exact: bool,
}

impl Outcome {
    fn rank(&self) -> (u8, i64) {
        let s = match self.status {
            Status::Sat => 3,
            Status::Timeout => 2,
            Status::Unknown => 1,
            Status::Unsat => 0,
        };
        (s, -(self.cost.lost * 1e6).round() as i64)
    }
}

struct Problem {
    hard: Vec<Constraint>,
    soft: Vec<(Constraint, f64)>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    bounded: bool,
}

impl Problem {
    fn cost(&self, x: &[f64]) -> Cost {
        let hard = self.hard.iter().filter(|c| !c.holds(x, &[])).count() as u32;
        let lost = self.soft.iter().filter(|(c, _)| !c.holds(x, &[])).map(|(_, w)| w).sum();
        Cost { hard, lost }
    }

    /// The same problem with hard constraints turned soft at twice the
    /// heaviest soft weight, so descent can cross infeasible stretches.
    fn relaxed(&self) -> Option<Problem> {
        if self.hard.is_empty() || self.soft.is_empty() {
            return None;
        }
        let w = 2.0 * self.soft.iter().map(|(_, w)| *w).fold(0.0, f64::max);
        let soft = self.hard.iter().map(|c| (c.clone(), w)).chain(self.soft.iter().cloned()).collect();
        Some(Problem { hard: Vec::new(), soft, lo: self.lo.clone(), hi: self.hi.clone(), bounded: self.bounded })
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.hard.iter().chain(self.soft.iter().map(|(c, _)| c)).flat_map(|c| c.atoms.iter())
    }

    fn all_low_degree(&self) -> bool {
        self.atoms().all(|a| !a.contains_sin() && (0..self.dim()).all(|v| matches!(a.degree(v), Some(d) if d <= 2)))
    }
}

impl BuiltinFitter {
    fn numeric(&self, vars: &[VarDecl], hard: &[Formula], soft: &[(Formula, f64)], deadline: Instant) -> Outcome {
        if hard.iter().any(|h| *h == Formula::False) {
            return Outcome { status: Status::Unsat, point: None, cost: Cost::ZERO, exact: true };
        }
        let hard: Vec<&Formula> = hard.iter().filter(|h| **h != Formula::True).collect();
        let soft: Vec<&(Formula, f64)> =
            soft.iter().filter(|(f, _)| *f != Formula::True && *f != Formula::False).collect();
        let names: Vec<Arc<str>> = vars.iter().map(|d| d.name.clone()).collect();
        let compiler = Compiler::new(names.iter(), std::iter::empty());
        let compile = |f: &Formula| compiler.compile(f).expect("validated instance");
        let lo: Vec<f64> = vars.iter().map(|d| d.lo.unwrap_or(-self.free_range)).collect();
        let hi: Vec<f64> = vars.iter().map(|d| d.hi.unwrap_or(self.free_range)).collect();
        let mut prob = Problem {
            hard: hard.iter().map(|f| compile(f)).collect(),
            soft: soft.iter().map(|(f, w)| (compile(f), *w)).collect(),
            bounded: vars.iter().all(|d| d.lo.is_some() && d.hi.is_some()),
            lo,
            hi,
        };
        if prob.dim() == 0 {
            let c = prob.cost(&[]);
            let status = if c.hard == 0 { Status::Sat } else { Status::Unsat };
            return Outcome { status, point: Some(Vec::new()), cost: c, exact: true };
        }

        if prob.dim() == 1 && !prob.bounded && prob.all_low_degree() {
            widen_to_roots(&mut prob);
        }
        let linear = hard.iter().all(|f| !f.is_nonlinear()) && soft.iter().all(|(f, _)| !f.is_nonlinear());
        let (point, mut exact, timed_out) = if prob.dim() == 1 {
            let mut x = vec![0.5 * (prob.lo[0] + prob.hi[0])];
            let (v, _) = self.line_search(&prob, &mut x, 0);
            x[0] = v;
            (x, prob.all_low_degree(), false)
        } else if let Some(planes) = linear.then(|| linear_planes(&prob)).flatten().filter(|p| {
            prob.dim() <= 3 && binomial(p.len() + 2 * prob.dim(), prob.dim()) <= self.vertex_cap
        }) {
            match self.vertex_enumeration(&prob, &planes, deadline) {
                Some(x) => (x, true, false),
                None => (self.midpoint(&prob), false, true),
            }
        } else {
            let warm = if linear { self.lp_route(&prob) } else { None };
            let (x, t) = self.descend(&prob, warm, deadline);
            (x, false, t)
        };
        let mut point = point;
        if linear && prob.dim() >= 2 && !timed_out {
            if let Some(p) = margin_polish(&prob, &point) {
                point = p;
            }
        }
        let cost = prob.cost(&point);
        if cost.hard == 0 {
            if cost.lost == 0.0 {
                exact = true;
            }
            return Outcome { status: Status::Sat, point: Some(point), cost, exact };
        }
        if timed_out {
            return Outcome { status: Status::Timeout, point: Some(point), cost, exact: false };
        }
        if exact && prob.bounded {
            return Outcome { status: Status::Unsat, point: None, cost, exact: true };
        }
        // No feasible point found: try to prove infeasibility, or find one.
        match icp(&prob, self.icp_boxes, deadline) {
            Icp::Unsat if prob.bounded => Outcome { status: Status::Unsat, point: None, cost, exact: true },
            Icp::Sat(x) => {
                let (x, _) = self.descend_from(&prob, x, deadline);
                let cost = prob.cost(&x);
                Outcome { status: Status::Sat, point: Some(x), cost, exact: cost.lost == 0.0 }
            }
            _ if Instant::now() > deadline => Outcome { status: Status::Timeout, point: Some(point), cost, exact: false },
            _ => Outcome { status: Status::Unknown, point: Some(point), cost, exact: false },
        }
    }

    fn midpoint(&self, prob: &Problem) -> Vec<f64> {
        prob.lo.iter().zip(&prob.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Exact minimisation of the cost along coordinate `v`, other coordinates
    /// fixed. Ties resolve to the middle of the widest optimal stretch.
    fn line_search(&self, prob: &Problem, x: &mut [f64], v: usize) -> (f64, Cost) {
        let (lo, hi) = (prob.lo[v], prob.hi[v]);
        let saved = x[v];
        let mut base = Cost::ZERO;
        let mut local: Vec<(&Constraint, Option<f64>, Vec<f64>)> = Vec::new();
        let mut all_pts = vec![lo, hi];
        let constraints = prob.hard.iter().map(|c| (c, None)).chain(prob.soft.iter().map(|(c, w)| (c, Some(*w))));
        for (c, w) in constraints {
            if !c.mentions(v) {
                if !c.holds(x, &[]) {
                    match w {
                        None => base.hard += 1,
                        Some(w) => base.lost += w,
                    }
                }
                continue;
            }
            let mut pts = Vec::new();
            for a in c.atoms.iter().filter(|a| a.mentions(v)) {
                atom_breakpoints(a, x, v, lo, hi, self.grid, &mut pts);
            }
            pts.push(lo);
            pts.push(hi);
            pts.retain(|p| p.is_finite() && *p >= lo && *p <= hi);
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            all_pts.extend_from_slice(&pts);
            local.push((c, w, pts));
        }
        all_pts.sort_by(f64::total_cmp);
        all_pts.dedup();
        let m = all_pts.len();
        // slots: 2i = point all_pts[i], 2i+1 = open segment (all_pts[i], all_pts[i+1])
        let slots = 2 * m - 1;
        let mut dh = vec![0i64; slots + 1];
        let mut dl = vec![0f64; slots + 1];
        let idx = |p: f64| all_pts.binary_search_by(|q| q.total_cmp(&p)).expect("breakpoint present");
        let mut add = |from: usize, to: usize, w: Option<f64>| {
            // inclusive slot range
            if from > to {
                return;
            }
            match w {
                None => {
                    dh[from] += 1;
                    dh[to + 1] -= 1;
                }
                Some(w) => {
                    dl[from] += w;
                    dl[to + 1] -= w;
                }
            }
        };
        for (c, w, pts) in &local {
            for (k, &p) in pts.iter().enumerate() {
                x[v] = p;
                let i = idx(p);
                if !c.holds(x, &[]) {
                    add(2 * i, 2 * i, *w);
                }
                if k + 1 < pts.len() {
                    let q = pts[k + 1];
                    x[v] = 0.5 * (p + q);
                    if !c.holds(x, &[]) {
                        let j = idx(q);
                        add(2 * i + 1, 2 * j - 1, *w);
                    }
                }
            }
        }
        let mut costs = Vec::with_capacity(slots);
        let (mut h, mut l) = (0i64, 0f64);
        for s in 0..slots {
            h += dh[s];
            l += dl[s];
            costs.push(Cost { hard: base.hard + h.max(0) as u32, lost: base.lost + l.max(0.0) });
        }
        let best = costs.iter().copied().fold(costs[0], |b, c| if c.better(b) { c } else { b });
        let left = |s: usize| if s % 2 == 0 { all_pts[s / 2] } else { all_pts[(s - 1) / 2] };
        let right = |s: usize| if s % 2 == 0 { all_pts[s / 2] } else { all_pts[(s + 1) / 2] };
        let mut pick: Option<(f64, f64, usize)> = None;
        let mut s = 0;
        while s < slots {
            if !costs[s].ties(best) {
                s += 1;
                continue;
            }
            let start = s;
            while s + 1 < slots && costs[s + 1].ties(best) {
                s += 1;
            }
            let (a, b) = (left(start), right(s));
            let width = b - a;
            let value = if start == s && start % 2 == 0 { a } else { 0.5 * (a + b) };
            if pick.map_or(true, |(w, _, _)| width > w) {
                pick = Some((width, value, start));
            }
            s += 1;
        }
        let (_, mut value, start) = pick.expect("some slot is optimal");
        x[v] = value;
        let mut got = prob.cost(x);
        if best.better(got) {
            // rounding near a breakpoint: fall back to the first optimal slot
            value = if start % 2 == 0 { left(start) } else { 0.5 * (left(start) + right(start)) };
            x[v] = value;
            got = prob.cost(x);
        }
        x[v] = saved;
        (value, got)
    }

    /// Coordinate descent from `x` until a sweep makes no strict progress.
    fn descend_from(&self, prob: &Problem, mut x: Vec<f64>, deadline: Instant) -> (Vec<f64>, bool) {
        let mut cost = prob.cost(&x);
        for _ in 0..self.sweeps {
            let mut improved = false;
            for v in 0..prob.dim() {
                if Instant::now() > deadline {
                    return (x, true);
                }
                let (val, c) = self.line_search(prob, &mut x, v);
                if c.better(cost) {
                    improved = true;
                }
                if c.better(cost) || c.ties(cost) {
                    x[v] = val;
                    cost = c;
                }
            }
            if !improved || cost == Cost::ZERO {
                break;
            }
        }
        (x, false)
    }

    /// Multi-start coordinate descent. Start 0 is `warm` (or the box centre);
    /// the rest alternate between log-scale and uniform draws in the box, and
    /// each first descends with hard constraints relaxed. Returns the best
    /// point and whether the deadline cut the search short.
    fn descend(&self, prob: &Problem, warm: Option<Vec<f64>>, deadline: Instant) -> (Vec<f64>, bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut best = warm.unwrap_or_else(|| self.midpoint(prob));
        let mut best_cost = Cost { hard: u32::MAX, lost: f64::INFINITY };
        let mut stale = 0;
        let relaxed = prob.relaxed();
        for k in 0..self.starts.max(1) {
            let start = if k == 0 {
                best.clone()
            } else {
                (0..prob.dim()).map(|i| log_uniform(&mut rng, prob.lo[i], prob.hi[i], k % 2 == 1)).collect()
            };
            let start = match &relaxed {
                Some(r) if k > 0 => self.descend_from(r, start, deadline).0,
                _ => start,
            };
            let (x, timed_out) = self.descend_from(prob, start, deadline);
            let c = prob.cost(&x);
            if c.better(best_cost) {
                best = x;
                best_cost = c;
                stale = 0;
            } else {
                stale += 1;
            }
            if timed_out {
                return (best, best_cost.hard > 0);
            }
            if best_cost == Cost::ZERO || stale >= 8 {
                break;
            }
        }
        (best, false)
    }

    /// Candidates at every vertex of the arrangement and at points just off
    /// it in each adjacent cell and face.
    fn vertex_enumeration(&self, prob: &Problem, planes: &[(Vec<f64>, f64)], deadline: Instant) -> Option<Vec<f64>> {
        let d = prob.dim();
        let mut all: Vec<(Vec<f64>, f64)> = planes.to_vec();
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            all.push((e.clone(), prob.lo[i]));
            all.push((e, prob.hi[i]));
        }
        let tol = 1e-9;
        let mut best = self.midpoint(prob);
        let mut best_cost = prob.cost(&best);
        let mut signs = Vec::new();
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let s: Vec<f64> = (0..d)
                .map(|_| {
                    let r = (c % 3) as f64 - 1.0;
                    c /= 3;
                    r
                })
                .collect();
            signs.push(s);
        }
        let mut subset: Vec<usize> = (0..d).collect();
        loop {
            if Instant::now() > deadline {
                return None;
            }
            let a: Vec<Vec<f64>> = subset.iter().map(|&i| all[i].0.clone()).collect();
            let b: Vec<f64> = subset.iter().map(|&i| all[i].1).collect();
            if let Some(inv) = invert(&a) {
                let vtx: Vec<f64> = (0..d).map(|r| (0..d).map(|k| inv[r][k] * b[k]).sum()).collect();
                let inside = (0..d).all(|i| vtx[i] >= prob.lo[i] - tol && vtx[i] <= prob.hi[i] + tol);
                if inside {
                    for s in &signs {
                        let dir: Vec<f64> = (0..d).map(|r| (0..d).map(|k| inv[r][k] * s[k]).sum()).collect();
                        let mut t = f64::INFINITY;
                        if s.iter().any(|v| *v != 0.0) {
                            for (n, rhs) in &all {
                                let r = dot(n, &vtx) - rhs;
                                let q = dot(n, &dir);
                                if r.abs() > tol && q != 0.0 && -r / q > 0.0 {
                                    t = t.min(-r / q);
                                }
                            }
                            t = if t.is_finite() { 0.5 * t } else { 1.0 };
                        } else {
                            t = 0.0;
                        }
                        let p: Vec<f64> =
                            (0..d).map(|i| (vtx[i] + t * dir[i]).clamp(prob.lo[i], prob.hi[i])).collect();
                        let c = prob.cost(&p);
                        if c.better(best_cost) {
                            best = p;
                            best_cost = c;
                        }
                    }
                }
            }
            if !next_subset(&mut subset, all.len()) {
                break;
            }
        }
        Some(best)
    }

    /// Elastic LP followed by greedy removal of the worst soft row until the
    /// rest fit with zero slack. Only for hard conjunctions of linear atoms
    /// and single-atom soft constraints.
    fn lp_route(&self, prob: &Problem) -> Option<Vec<f64>> {
        let d = prob.dim();
        let mut hard_rows = Vec::new();
        for c in &prob.hard {
            hard_rows.extend(conjunction_rows(c, d)?);
        }
        let mut soft_rows = Vec::new();
        for (c, w) in &prob.soft {
            let rows = conjunction_rows(c, d)?;
            if rows.len() != 1 {
                return None;
            }
            soft_rows.push((rows.into_iter().next().unwrap(), *w));
        }
        let bounds: Vec<(f64, f64)> = prob.lo.iter().copied().zip(prob.hi.iter().copied()).collect();
        let mut active: Vec<usize> = (0..soft_rows.len()).collect();
        for round in 0..soft_rows.len() + 1 {
            let rows: Vec<(Row, f64)> = active.iter().map(|&i| soft_rows[i].clone()).collect();
            let (x, slack) = lp::elastic(&hard_rows, &rows, &bounds)?;
            let worst = slack.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((k, s)) if s > 1e-9 => {
                    if round >= 50 {
                        let keep: Vec<usize> =
                            active.iter().zip(&slack).filter(|(_, s)| **s <= 1e-9).map(|(i, _)| *i).collect();
                        active = keep;
                    } else {
                        active.remove(k);
                    }
                }
                _ => return Some(x),
            }
        }
        None
    }
}

/// Rows of a constraint that is a conjunction of linear atoms (negated
/// atoms allowed when the negation is itself a comparison).
fn conjunction_rows(c: &Constraint, d: usize) -> Option<Vec<Row>> {
    fn walk(n: &CFormula, neg: bool, out: &mut Vec<(usize, bool)>) -> bool {
        match (n, neg) {
            (CFormula::Atom(i), _) => {
                out.push((*i, neg));
                true
            }
            (CFormula::And(xs), false) => xs.iter().all(|x| walk(x, false, out)),
            (CFormula::Or(xs), true) => xs.iter().all(|x| walk(x, true, out)),
            (CFormula::Not(a), _) => walk(a, !neg, out),
            (CFormula::Const(true), false) | (CFormula::Const(false), true) => true,
            _ => false,
        }
    }
    let mut lits = Vec::new();
    if !walk(&c.root, false, &mut lits) {
        return None;
    }
    lits.into_iter()
        .map(|(i, neg)| {
            let a = &c.atoms[i];
            let op = if neg { a.op.negate()? } else { a.op };
            atom_row(a, op, d)
        })
        .collect()
}

/// For one unbounded variable with polynomial gaps of degree at most two,
/// grows the search box past every real root so the sweep sees every
/// truth region.
fn widen_to_roots(prob: &mut Problem) {
    let mut roots = Vec::new();
    for a in prob.atoms() {
        let (gm, g0, gp) = (a.gap(&[-1.0]), a.gap(&[0.0]), a.gap(&[1.0]));
        let (c2, c1) = (0.5 * (gp + gm) - g0, 0.5 * (gp - gm));
        if c2.abs() > 1e-300 {
            let disc = c1 * c1 - 4.0 * c2 * g0;
            if disc >= 0.0 {
                let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
                roots.push(q / c2);
                if q != 0.0 {
                    roots.push(g0 / q);
                }
            }
        } else if c1 != 0.0 {
            roots.push(-g0 / c1);
        }
    }
    for r in roots.into_iter().filter(|r| r.is_finite()) {
        prob.lo[0] = prob.lo[0].min(r - 1.0 - r.abs() * 1e-6);
        prob.hi[0] = prob.hi[0].max(r + 1.0 + r.abs() * 1e-6);
    }
    prob.bounded = true;
}

/// Affine coefficients of an atom's gap, `coef·x + c0`.
fn affine(a: &Atom, d: usize) -> Option<(Vec<f64>, f64)> {
    let mut x = vec![0.0; d];
    let c0 = a.gap(&x);
    let mut coef = Vec::with_capacity(d);
    for i in 0..d {
        x[i] = 1.0;
        coef.push(a.gap(&x) - c0);
        x[i] = 0.0;
    }
    // spot check at a second point
    let probe: Vec<f64> = (0..d).map(|i| 0.37 + 0.11 * i as f64).collect();
    let want = dot(&coef, &probe) + c0;
    let got = a.gap(&probe);
    let scale = 1.0 + want.abs() + coef.iter().map(|c| c.abs()).sum::<f64>() + c0.abs();
    if !got.is_finite() || (got - want).abs() > 1e-9 * scale {
        return None;
    }
    Some((coef, c0))
}

fn atom_row(a: &Atom, op: Cmp, d: usize) -> Option<Row> {
    let (coef, c0) = affine(a, d)?;
    Some(match op {
        Cmp::Lt | Cmp::Le => Row { coef, rhs: -c0, strict: op == Cmp::Lt, eq: false },
        Cmp::Gt | Cmp::Ge => Row { coef: coef.iter().map(|c| -c).collect(), rhs: c0, strict: op == Cmp::Gt, eq: false },
        Cmp::Eq => Row { coef, rhs: -c0, strict: false, eq: true },
    })
}

/// Distinct normalised hyperplanes of every atom, or `None` if some atom
/// is not affine.
fn linear_planes(prob: &Problem) -> Option<Vec<(Vec<f64>, f64)>> {
    let d = prob.dim();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in prob.atoms() {
        let (coef, c0) = affine(a, d)?;
        let n = coef.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n < 1e-12 {
            continue;
        }
        let mut unit: Vec<f64> = coef.iter().map(|c| c / n).collect();
        let mut rhs = -c0 / n;
        if let Some(first) = unit.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                unit.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
            }
        }
        let key: Vec<i64> = unit.iter().chain(std::iter::once(&rhs)).map(|v| (v * 1e10).round() as i64).collect();
        if seen.insert(key) {
            out.push((unit, rhs));
        }
    }
    Some(out)
}

/// Re-centres an affine solution inside its cell: keeps every atom's truth
/// value and maximises the minimum distance to the atoms' hyperplanes.
fn margin_polish(prob: &Problem, x: &[f64]) -> Option<Vec<f64>> {
    let d = prob.dim();
    let mut rows = Vec::new();
    for a in prob.atoms() {
        let truth = a.eval(x)?;
        let op = if truth { a.op } else { a.op.negate()? };
        rows.push(atom_row(a, op, d)?);
    }
    let bounds: Vec<(f64, f64)> = prob.lo.iter().copied().zip(prob.hi.iter().copied()).collect();
    let (p, _) = lp::max_margin(&rows, &bounds)?;
    let p: Vec<f64> = p.iter().enumerate().map(|(i, v)| v.clamp(prob.lo[i], prob.hi[i])).collect();
    let before = prob.cost(x);
    let after = prob.cost(&p);
    (after.better(before) || after.ties(before)).then_some(p)
}

enum Icp {
    Sat(Vec<f64>),
    Unsat,
    Unknown,
}

/// Branch-and-prune over the variable box with interval evaluation of the
/// hard constraints.
fn icp(prob: &Problem, max_boxes: usize, deadline: Instant) -> Icp {
    let d = prob.dim();
    let root: Vec<Interval> = (0..d).map(|i| Interval::new(prob.lo[i], prob.hi[i])).collect();
    let mut stack = vec![root];
    let mut processed = 0;
    let mut unresolved = false;
    while let Some(b) = stack.pop() {
        processed += 1;
        if processed > max_boxes || Instant::now() > deadline {
            return Icp::Unknown;
        }
        let t = prob.hard.iter().fold(Tri::True, |acc, c| acc.and(c.eval_interval(&b, &[])));
        if t == Tri::False {
            continue;
        }
        let mid: Vec<f64> = b.iter().map(Interval::mid).collect();
        if prob.hard.iter().all(|c| c.holds(&mid, &[])) {
            return Icp::Sat(mid);
        }
        let (k, w) = b.iter().enumerate().map(|(i, iv)| (i, iv.width())).fold((0, -1.0), |a, c| if c.1 > a.1 { c } else { a });
        let scale = 1.0 + b[k].lo.abs().max(b[k].hi.abs());
        if w <= 1e-10 * scale {
            unresolved = true;
            continue;
        }
        let m = b[k].mid();
        let mut l = b.clone();
        let mut r = b;
        l[k].hi = m;
        r[k].lo = m;
        stack.push(r);
        stack.push(l);
    }
    if unresolved {
        Icp::Unknown
    } else {
        Icp::Unsat
    }
}

/// Uniform in `[lo, hi]`, or with `log` set, a magnitude drawn
/// log-uniformly from 0.1 up to the larger bound, with a random sign,
/// clamped into the box.
fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64, log: bool) -> f64 {
    let top = lo.abs().max(hi.abs());
    if !log || top <= 0.1 {
        return rng.gen_range(lo..=hi);
    }
    let mag = 10f64.powf(rng.gen_range(-1.0..=top.log10()));
    let v = if rng.gen_bool(0.5) { mag } else { -mag };
    v.clamp(lo, hi)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn binomial(n: usize, k: usize) -> usize {
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn next_subset(s: &mut [usize], n: usize) -> bool {
    let k = s.len();
    for i in (0..k).rev() {
        if s[i] < n - k + i {
            s[i] += 1;
            for j in i + 1..k {
                s[j] = s[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Inverse by Gauss-Jordan with partial pivoting; `None` when singular.
fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        m[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::{check_sat, solve_maxsmt};
    use std::time::Duration;

    fn x() -> Expr {
        Expr::var("x")
    }

    const T: Duration = Duration::from_secs(10);

    #[test]
    fn open_unit_interval_is_sat() {
        let f = Formula::and(vec![Formula::gt(x(), 0.0), Formula::lt(x(), 1.0)]);
        let r = check_sat(&BuiltinFitter::default(), &f, T).unwrap();
        let v = r.model.unwrap()["x"];
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn crossed_bounds_are_unsat() {
        let f = Formula::and(vec![Formula::gt(x(), 1.0), Formula::lt(x(), 0.0)]);
        let r = check_sat(&BuiltinFitter::default(), &f, T).unwrap();
        assert_eq!(r.status, Status::Unsat);
    }

    #[test]
    fn conflicting_squares_are_unsat() {
        let r = Expr::var("r");
        let f = Formula::and(vec![Formula::ge(r.clone() * r.clone(), 25.0), Formula::le(r.clone() * r, 24.0)]);
        let inst = MaxSmtInstance {
            decls: vec![VarDecl::bounded("r", 0.0, 100.0)],
            hard: vec![f],
            soft: vec![],
            timeout: T,
        };
        assert_eq!(solve_maxsmt(&BuiltinFitter::default(), &inst).unwrap().status, Status::Unsat);
    }

    #[test]
    fn two_dimensional_nonlinear_unsat_by_branch_and_prune() {
        let (a, b) = (Expr::var("a"), Expr::var("b"));
        let f = Formula::and(vec![
            Formula::ge(a.clone() * a.clone() + b.clone() * b.clone(), 4.0),
            Formula::le(a.clone().abs(), 1.0),
            Formula::le(b.abs(), 1.0),
        ]);
        let inst = MaxSmtInstance {
            decls: vec![VarDecl::bounded("a", -5.0, 5.0), VarDecl::bounded("b", -5.0, 5.0)],
            hard: vec![f],
            soft: vec![],
            timeout: T,
        };
        assert_eq!(solve_maxsmt(&BuiltinFitter::default(), &inst).unwrap().status, Status::Unsat);
    }

    #[test]
    fn pinned_equalities_are_substituted() {
        let f = Formula::and(vec![Formula::eq(Expr::var("m"), 3.0), Formula::lt(Expr::var("m"), x())]);
        let inst = MaxSmtInstance {
            decls: vec![VarDecl::free("m"), VarDecl::bounded("x", -100.0, 100.0)],
            hard: vec![f],
            soft: vec![(Formula::lt(x(), 3.5), 1.0)],
            timeout: T,
        };
        let r = solve_maxsmt(&BuiltinFitter::default(), &inst).unwrap();
        let m = r.model.unwrap();
        assert_eq!(m["m"], 3.0);
        assert!(m["x"] > 3.0 && m["x"] < 3.5);
        assert_eq!(r.satisfied_soft_weight, Some(1.0));
        assert!(!r.heuristic);
    }

    #[test]
    fn halfplane_vertex_route_is_exact() {
        // a·px + b·py ≤ t, positives hard, one negative soft
        let pts = [((0.0, 0.0), true), ((1.0, 0.0), true), ((3.0, 3.0), false), ((0.5, 0.2), false)];
        let (a, b, t) = (Expr::var("a"), Expr::var("b"), Expr::var("t"));
        let enc = |px: f64, py: f64| Formula::le(a.clone() * Expr::c(px) + b.clone() * Expr::c(py), t.clone());
        let mut hard = Vec::new();
        let mut soft = Vec::new();
        for ((px, py), pos) in pts {
            if pos {
                hard.push(enc(px, py));
            } else {
                soft.push((Formula::not(enc(px, py)), 1.0));
            }
        }
        let inst = MaxSmtInstance {
            decls: ["a", "b", "t"].iter().map(|n| VarDecl::bounded(n, -100.0, 100.0)).collect(),
            hard,
            soft,
            timeout: T,
        };
        let r = solve_maxsmt(&BuiltinFitter::default(), &inst).unwrap();
        assert_eq!(r.status, Status::Sat);
        // (0.5, 0.2) lies in the hull's neighbourhood but off the segment, so both negatives can go
        assert_eq!(r.satisfied_soft_weight, Some(2.0));
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut s = vec![0, 1, 2];
        let mut n = 1;
        while next_subset(&mut s, 6) {
            n += 1;
        }
        assert_eq!(n, binomial(6, 3));
        assert_eq!(binomial(6, 3), 20);
    }
}
