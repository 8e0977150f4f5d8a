//! Index-addressed formulas for the numeric search routines.

use std::collections::HashMap;
use std::sync::Arc;

use super::formula::{Cmp, Expr, Formula};
use super::interval::{Interval, Tri};

#[derive(Clone, Debug)]
pub enum CExpr {
    Const(f64),
    Var(usize),
    Add(Vec<CExpr>),
    Sub(Box<CExpr>, Box<CExpr>),
    Mul(Box<CExpr>, Box<CExpr>),
    Div(Box<CExpr>, Box<CExpr>),
    Neg(Box<CExpr>),
    Abs(Box<CExpr>),
    Sin(Box<CExpr>),
}

/// Polynomial degree of a term in one variable, or `None` when the term is
/// not a polynomial in it.
pub type Degree = Option<u32>;

impl CExpr {
    /// Evaluates; division by zero yields NaN.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            CExpr::Const(v) => *v,
            CExpr::Var(i) => x[*i],
            CExpr::Add(xs) => xs.iter().map(|e| e.eval(x)).sum(),
            CExpr::Sub(a, b) => a.eval(x) - b.eval(x),
            CExpr::Mul(a, b) => a.eval(x) * b.eval(x),
            CExpr::Div(a, b) => {
                let d = b.eval(x);
                if d == 0.0 {
                    f64::NAN
                } else {
                    a.eval(x) / d
                }
            }
            CExpr::Neg(a) => -a.eval(x),
            CExpr::Abs(a) => a.eval(x).abs(),
            CExpr::Sin(a) => a.eval(x).sin(),
        }
    }

    pub fn eval_interval(&self, b: &[Interval]) -> Interval {
        match self {
            CExpr::Const(v) => Interval::point(*v),
            CExpr::Var(i) => b[*i],
            CExpr::Add(xs) => xs.iter().fold(Interval::point(0.0), |acc, e| acc + e.eval_interval(b)),
            CExpr::Sub(x, y) => x.eval_interval(b) - y.eval_interval(b),
            CExpr::Mul(x, y) => {
                if same_expr(x, y) {
                    x.eval_interval(b).square()
                } else {
                    x.eval_interval(b) * y.eval_interval(b)
                }
            }
            CExpr::Div(x, y) => x.eval_interval(b) / y.eval_interval(b),
            CExpr::Neg(x) => -x.eval_interval(b),
            CExpr::Abs(x) => x.eval_interval(b).abs(),
            CExpr::Sin(x) => x.eval_interval(b).sin(),
        }
    }

    pub fn degree(&self, v: usize) -> Degree {
        match self {
            CExpr::Const(_) => Some(0),
            CExpr::Var(i) => Some(u32::from(*i == v)),
            CExpr::Add(xs) => xs.iter().try_fold(0, |acc, e| e.degree(v).map(|d| acc.max(d))),
            CExpr::Sub(a, b) => Some(a.degree(v)?.max(b.degree(v)?)),
            CExpr::Mul(a, b) => Some(a.degree(v)? + b.degree(v)?),
            CExpr::Div(a, b) => match b.degree(v)? {
                0 => a.degree(v),
                _ => None,
            },
            CExpr::Neg(a) => a.degree(v),
            CExpr::Abs(a) | CExpr::Sin(a) => match a.degree(v)? {
                0 => Some(0),
                _ => None,
            },
        }
    }

    pub fn mentions(&self, v: usize) -> bool {
        match self {
            CExpr::Const(_) => false,
            CExpr::Var(i) => *i == v,
            CExpr::Add(xs) => xs.iter().any(|e| e.mentions(v)),
            CExpr::Sub(a, b) | CExpr::Mul(a, b) | CExpr::Div(a, b) => a.mentions(v) || b.mentions(v),
            CExpr::Neg(a) | CExpr::Abs(a) | CExpr::Sin(a) => a.mentions(v),
        }
    }

    fn contains_sin(&self) -> bool {
        match self {
            CExpr::Const(_) | CExpr::Var(_) => false,
            CExpr::Sin(_) => true,
            CExpr::Add(xs) => xs.iter().any(CExpr::contains_sin),
            CExpr::Sub(a, b) | CExpr::Mul(a, b) | CExpr::Div(a, b) => a.contains_sin() || b.contains_sin(),
            CExpr::Neg(a) | CExpr::Abs(a) => a.contains_sin(),
        }
    }
}

fn same_expr(a: &CExpr, b: &CExpr) -> bool {
    match (a, b) {
        (CExpr::Var(i), CExpr::Var(j)) => i == j,
        (CExpr::Const(x), CExpr::Const(y)) => x == y,
        (CExpr::Sub(a1, a2), CExpr::Sub(b1, b2)) => same_expr(a1, b1) && same_expr(a2, b2),
        (CExpr::Div(a1, a2), CExpr::Div(b1, b2)) => same_expr(a1, b1) && same_expr(a2, b2),
        (CExpr::Neg(a1), CExpr::Neg(b1)) => same_expr(a1, b1),
        _ => false,
    }
}

/// A comparison `lhs op rhs`.
#[derive(Clone, Debug)]
pub struct Atom {
    pub op: Cmp,
    pub lhs: CExpr,
    pub rhs: CExpr,
}

impl Atom {
    pub fn eval(&self, x: &[f64]) -> Option<bool> {
        let (l, r) = (self.lhs.eval(x), self.rhs.eval(x));
        if l.is_finite() && r.is_finite() {
            Some(self.op.holds(l, r))
        } else {
            None
        }
    }

    /// `lhs - rhs`, the function whose zeros bound the atom's truth regions.
    pub fn gap(&self, x: &[f64]) -> f64 {
        self.lhs.eval(x) - self.rhs.eval(x)
    }

    pub fn eval_interval(&self, b: &[Interval]) -> Tri {
        let d = self.lhs.eval_interval(b) - self.rhs.eval_interval(b);
        if d.is_empty_or_nan() {
            return Tri::Unknown;
        }
        let t = |c: bool| if c { Tri::True } else { Tri::Unknown };
        let f = |c: bool| if c { Tri::False } else { Tri::Unknown };
        match self.op {
            Cmp::Lt => {
                if d.hi < 0.0 {
                    Tri::True
                } else {
                    f(d.lo >= 0.0)
                }
            }
            Cmp::Le => {
                if d.hi <= 0.0 {
                    Tri::True
                } else {
                    f(d.lo > 0.0)
                }
            }
            Cmp::Ge => {
                if d.lo >= 0.0 {
                    Tri::True
                } else {
                    f(d.hi < 0.0)
                }
            }
            Cmp::Gt => {
                if d.lo > 0.0 {
                    Tri::True
                } else {
                    f(d.hi <= 0.0)
                }
            }
            Cmp::Eq => {
                if d.lo > 0.0 || d.hi < 0.0 {
                    Tri::False
                } else {
                    t(d.lo == 0.0 && d.hi == 0.0)
                }
            }
        }
    }

    pub fn degree(&self, v: usize) -> Degree {
        Some(self.lhs.degree(v)?.max(self.rhs.degree(v)?))
    }

    pub fn mentions(&self, v: usize) -> bool {
        self.lhs.mentions(v) || self.rhs.mentions(v)
    }

    pub fn contains_sin(&self) -> bool {
        self.lhs.contains_sin() || self.rhs.contains_sin()
    }
}

#[derive(Clone, Debug)]
pub enum CFormula {
    Const(bool),
    Prop(usize),
    Atom(usize),
    And(Vec<CFormula>),
    Or(Vec<CFormula>),
    Not(Box<CFormula>),
}

/// A compiled boolean combination of atoms. Atoms are stored once per
/// constraint so callers can analyse them individually.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub root: CFormula,
    pub atoms: Vec<Atom>,
}

impl Constraint {
    /// Three-valued evaluation; `None` when an atom is undefined.
    pub fn eval(&self, x: &[f64], props: &[bool]) -> Option<bool> {
        eval_node(&self.root, &self.atoms, x, props)
    }

    pub fn holds(&self, x: &[f64], props: &[bool]) -> bool {
        self.eval(x, props) == Some(true)
    }

    pub fn eval_interval(&self, b: &[Interval], props: &[bool]) -> Tri {
        tri_node(&self.root, &self.atoms, b, props)
    }

    pub fn mentions(&self, v: usize) -> bool {
        self.atoms.iter().any(|a| a.mentions(v))
    }
}

fn eval_node(n: &CFormula, atoms: &[Atom], x: &[f64], props: &[bool]) -> Option<bool> {
    match n {
        CFormula::Const(b) => Some(*b),
        CFormula::Prop(i) => Some(props[*i]),
        CFormula::Atom(i) => atoms[*i].eval(x),
        CFormula::And(xs) => {
            let mut undefined = false;
            for c in xs {
                match eval_node(c, atoms, x, props) {
                    Some(false) => return Some(false),
                    None => undefined = true,
                    Some(true) => {}
                }
            }
            if undefined {
                None
            } else {
                Some(true)
            }
        }
        CFormula::Or(xs) => {
            let mut undefined = false;
            for c in xs {
                match eval_node(c, atoms, x, props) {
                    Some(true) => return Some(true),
                    None => undefined = true,
                    Some(false) => {}
                }
            }
            if undefined {
                None
            } else {
                Some(false)
            }
        }
        CFormula::Not(a) => eval_node(a, atoms, x, props).map(|b| !b),
    }
}

fn tri_node(n: &CFormula, atoms: &[Atom], b: &[Interval], props: &[bool]) -> Tri {
    match n {
        CFormula::Const(v) => Tri::from(*v),
        CFormula::Prop(i) => Tri::from(props[*i]),
        CFormula::Atom(i) => atoms[*i].eval_interval(b),
        CFormula::And(xs) => xs.iter().fold(Tri::True, |acc, c| acc.and(tri_node(c, atoms, b, props))),
        CFormula::Or(xs) => xs.iter().fold(Tri::False, |acc, c| acc.or(tri_node(c, atoms, b, props))),
        CFormula::Not(a) => tri_node(a, atoms, b, props).not(),
    }
}

/// Maps variable and proposition names to dense indices.
#[derive(Clone, Debug, Default)]
pub struct Compiler {
    vars: HashMap<Arc<str>, usize>,
    props: HashMap<Arc<str>, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("undeclared variable `{0}`")]
pub struct Undeclared(pub String);

impl Compiler {
    pub fn new<'a>(vars: impl IntoIterator<Item = &'a Arc<str>>, props: impl IntoIterator<Item = &'a Arc<str>>) -> Self {
        Compiler {
            vars: vars.into_iter().enumerate().map(|(i, v)| (v.clone(), i)).collect(),
            props: props.into_iter().enumerate().map(|(i, v)| (v.clone(), i)).collect(),
        }
    }

    pub fn compile(&self, f: &Formula) -> Result<Constraint, Undeclared> {
        let mut atoms = Vec::new();
        let root = self.node(f, &mut atoms)?;
        Ok(Constraint { root, atoms })
    }

    fn node(&self, f: &Formula, atoms: &mut Vec<Atom>) -> Result<CFormula, Undeclared> {
        Ok(match f {
            Formula::True => CFormula::Const(true),
            Formula::False => CFormula::Const(false),
            Formula::Prop(p) => CFormula::Prop(*self.props.get(p).ok_or_else(|| Undeclared(p.to_string()))?),
            Formula::Cmp(op, a, b) => {
                atoms.push(Atom { op: *op, lhs: self.expr(a)?, rhs: self.expr(b)? });
                CFormula::Atom(atoms.len() - 1)
            }
            Formula::And(xs) => CFormula::And(xs.iter().map(|x| self.node(x, atoms)).collect::<Result<_, _>>()?),
            Formula::Or(xs) => CFormula::Or(xs.iter().map(|x| self.node(x, atoms)).collect::<Result<_, _>>()?),
            Formula::Not(a) => CFormula::Not(Box::new(self.node(a, atoms)?)),
        })
    }

    fn expr(&self, e: &Expr) -> Result<CExpr, Undeclared> {
        let b = |e: &Expr| self.expr(e).map(Box::new);
        Ok(match e {
            Expr::Const(v) => CExpr::Const(*v),
            Expr::Var(v) => CExpr::Var(*self.vars.get(v).ok_or_else(|| Undeclared(v.to_string()))?),
            Expr::Add(xs) => CExpr::Add(xs.iter().map(|x| self.expr(x)).collect::<Result<_, _>>()?),
            Expr::Sub(x, y) => CExpr::Sub(b(x)?, b(y)?),
            Expr::Mul(x, y) => CExpr::Mul(b(x)?, b(y)?),
            Expr::Div(x, y) => CExpr::Div(b(x)?, b(y)?),
            Expr::Neg(x) => CExpr::Neg(b(x)?),
            Expr::Abs(x) => CExpr::Abs(b(x)?),
            Expr::Sin(x) => CExpr::Sin(b(x)?),
        })
    }
}

/// Zeros of an atom's gap along coordinate `v` inside `[lo, hi]`, with the
/// other coordinates fixed at `x`. Exact (up to rounding) for gaps of degree
/// at most two; otherwise a sign-change scan on `grid` points refined by
/// bisection.
pub fn atom_breakpoints(atom: &Atom, x: &mut [f64], v: usize, lo: f64, hi: f64, grid: usize, out: &mut Vec<f64>) {
    let saved = x[v];
    let at = |x: &mut [f64], t: f64| {
        x[v] = t;
        atom.gap(x)
    };
    match atom.degree(v) {
        Some(0) => {}
        Some(1) => {
            let (fl, fh) = (at(x, lo), at(x, hi));
            if fl.is_finite() && fh.is_finite() && fl != fh {
                let t = lo + (hi - lo) * fl / (fl - fh);
                if t >= lo && t <= hi {
                    out.push(t);
                }
            }
        }
        Some(2) => {
            let mid = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            let (fl, fm, fh) = (at(x, lo), at(x, mid), at(x, hi));
            if fl.is_finite() && fm.is_finite() && fh.is_finite() && h > 0.0 {
                let a = (fl + fh - 2.0 * fm) / (2.0 * h * h);
                let b = (fh - fl) / (2.0 * h);
                let c = fm;
                let scale = a.abs() * h * h + b.abs() * h + c.abs();
                let mut push = |t: f64| {
                    let v = mid + t;
                    if v >= lo && v <= hi {
                        out.push(v);
                    }
                };
                if a.abs() * h * h <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
                    if b != 0.0 {
                        push(-c / b);
                    }
                } else {
                    let disc = b * b - 4.0 * a * c;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        let q = -0.5 * (b + b.signum() * sq);
                        if q != 0.0 {
                            push(q / a);
                            push(c / q);
                        } else {
                            push(0.0);
                        }
                    }
                }
            }
        }
        _ => {
            let n = grid.max(2);
            let step = (hi - lo) / (n - 1) as f64;
            let mut prev_t = lo;
            let mut prev = at(x, lo);
            if prev == 0.0 {
                out.push(lo);
            }
            for i in 1..n {
                let t = if i == n - 1 { hi } else { lo + step * i as f64 };
                let cur = at(x, t);
                if cur == 0.0 {
                    out.push(t);
                } else if prev.is_finite() && cur.is_finite() && prev != 0.0 && (prev < 0.0) != (cur < 0.0) {
                    let (mut a, mut b, fa) = (prev_t, t, prev);
                    for _ in 0..80 {
                        let m = 0.5 * (a + b);
                        if m <= a || m >= b {
                            break;
                        }
                        let fm = at(x, m);
                        if fm == 0.0 {
                            a = m;
                            b = m;
                            break;
                        }
                        if (fm < 0.0) == (fa < 0.0) {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    out.push(a);
                    if b != a {
                        out.push(b);
                    }
                }
                prev = cur;
                prev_t = t;
            }
        }
    }
    x[v] = saved;
}
