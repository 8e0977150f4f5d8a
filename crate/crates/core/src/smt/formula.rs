//! Quantifier-free real-arithmetic formulas.

use std::collections::BTreeSet;
use std::fmt;
use std::ops;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Default bound on formula tree depth.
pub const MAX_DEPTH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

/// Relative tolerance under which two operands count as equal.
pub const NOISE: f64 = 1e-12;

impl Cmp {
    pub const ALL: [Cmp; 5] = [Cmp::Lt, Cmp::Le, Cmp::Eq, Cmp::Ge, Cmp::Gt];

    /// Truth of `lhs op rhs`. Operands within rounding noise of each other
    /// compare as equal, so a model sitting on a vertex is judged as the
    /// exact vertex would be, under either polarity.
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        let (lhs, rhs) = if (lhs - rhs).abs() <= NOISE * (1.0 + lhs.abs() + rhs.abs()) { (rhs, rhs) } else { (lhs, rhs) };
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
        }
    }

    /// The comparator obtained by swapping operands.
    pub fn flip(self) -> Cmp {
        match self {
            Cmp::Lt => Cmp::Gt,
            Cmp::Le => Cmp::Ge,
            Cmp::Eq => Cmp::Eq,
            Cmp::Ge => Cmp::Le,
            Cmp::Gt => Cmp::Lt,
        }
    }

    /// Logical complement: `!(a op b)` is `a op.negate() b`.
    pub fn negate(self) -> Option<Cmp> {
        match self {
            Cmp::Lt => Some(Cmp::Ge),
            Cmp::Le => Some(Cmp::Gt),
            Cmp::Ge => Some(Cmp::Lt),
            Cmp::Gt => Some(Cmp::Le),
            Cmp::Eq => None,
        }
    }

    pub fn is_strict(self) -> bool {
        matches!(self, Cmp::Lt | Cmp::Gt)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Option<Cmp> {
        Some(match s {
            "<" => Cmp::Lt,
            "<=" | "≤" => Cmp::Le,
            "=" => Cmp::Eq,
            ">=" | "≥" => Cmp::Ge,
            ">" => Cmp::Gt,
            _ => return None,
        })
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Real-valued term.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Arc<str>),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Sin(Box<Expr>),
}

impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Arc::from(name))
    }

    pub fn sq(self) -> Expr {
        Expr::Mul(Box::new(self.clone()), Box::new(self))
    }

    pub fn abs(self) -> Expr {
        Expr::Abs(Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Add(xs) => xs.iter().map(Expr::depth).max().unwrap_or(0),
            Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.depth().max(b.depth()),
            Expr::Neg(a) | Expr::Abs(a) | Expr::Sin(a) => a.depth(),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Add(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Neg(a) | Expr::Abs(a) | Expr::Sin(a) => a.collect_vars(out),
        }
    }

    pub fn contains_sin(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Sin(_) => true,
            Expr::Add(xs) => xs.iter().any(Expr::contains_sin),
            Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.contains_sin() || b.contains_sin(),
            Expr::Neg(a) | Expr::Abs(a) => a.contains_sin(),
        }
    }

    /// Whether the term is nonlinear in its variables: a product or
    /// quotient of two non-constant subterms, `abs`, or `sin` of a
    /// non-constant subterm.
    pub fn is_nonlinear(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Add(xs) => xs.iter().any(Expr::is_nonlinear),
            Expr::Sub(a, b) => a.is_nonlinear() || b.is_nonlinear(),
            Expr::Mul(a, b) => {
                (!a.is_ground() && !b.is_ground()) || a.is_nonlinear() || b.is_nonlinear()
            }
            Expr::Div(a, b) => !b.is_ground() || a.is_nonlinear(),
            Expr::Neg(a) => a.is_nonlinear(),
            Expr::Abs(a) | Expr::Sin(a) => !a.is_ground(),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Add(xs) => xs.iter().all(Expr::is_ground),
            Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.is_ground() && b.is_ground(),
            Expr::Neg(a) | Expr::Abs(a) | Expr::Sin(a) => a.is_ground(),
        }
    }

    /// Evaluates under `env`. Division by zero and non-finite results are errors.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(v) => *v,
            Expr::Var(name) => env(name).ok_or_else(|| EvalError::Unbound(name.to_string()))?,
            Expr::Add(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += x.eval(env)?;
                }
                acc
            }
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let d = b.eval(env)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval(env)? / d
            }
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Abs(a) => a.eval(env)?.abs(),
            Expr::Sin(a) => a.eval(env)?.sin(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Constant folding. Folds only subterms whose evaluation succeeds.
    pub fn fold(&self) -> Expr {
        let folded = match self {
            Expr::Const(_) | Expr::Var(_) => return self.clone(),
            Expr::Add(xs) => {
                let mut konst = 0.0;
                let mut rest = Vec::new();
                for x in xs {
                    match x.fold() {
                        Expr::Const(v) => konst += v,
                        other => rest.push(other),
                    }
                }
                if rest.is_empty() {
                    Expr::Const(konst)
                } else {
                    if konst != 0.0 {
                        rest.push(Expr::Const(konst));
                    }
                    if rest.len() == 1 {
                        rest.pop().unwrap()
                    } else {
                        Expr::Add(rest)
                    }
                }
            }
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.fold()), Box::new(b.fold())),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.fold()), Box::new(b.fold())),
            Expr::Div(a, b) => Expr::Div(Box::new(a.fold()), Box::new(b.fold())),
            Expr::Neg(a) => Expr::Neg(Box::new(a.fold())),
            Expr::Abs(a) => Expr::Abs(Box::new(a.fold())),
            Expr::Sin(a) => Expr::Sin(Box::new(a.fold())),
        };
        if folded.is_ground() {
            if let Ok(v) = folded.eval(&|_| None) {
                return Expr::Const(v);
            }
        }
        folded
    }

    pub fn substitute(&self, sub: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => sub(v).unwrap_or_else(|| self.clone()),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|x| x.substitute(sub)).collect()),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.substitute(sub)), Box::new(b.substitute(sub))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.substitute(sub)), Box::new(b.substitute(sub))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.substitute(sub)), Box::new(b.substitute(sub))),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(sub))),
            Expr::Abs(a) => Expr::Abs(Box::new(a.substitute(sub))),
            Expr::Sin(a) => Expr::Sin(Box::new(a.substitute(sub))),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Const(v)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match self {
            Expr::Add(mut xs) => {
                xs.push(rhs);
                Expr::Add(xs)
            }
            lhs => Expr::Add(vec![lhs, rhs]),
        }
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Add(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/{b}"),
            Expr::Neg(a) => write!(f, "-{a}"),
            Expr::Abs(a) => write!(f, "|{a}|"),
            Expr::Sin(a) => write!(f, "sin({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite value")]
    NonFinite,
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    True,
    False,
    /// Boolean constant, used for head atoms in acceptability checks.
    Prop(Arc<str>),
    Cmp(Cmp, Expr, Expr),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn cmp(op: Cmp, lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Formula {
        Formula::Cmp(op, lhs.into(), rhs.into())
    }

    pub fn lt(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Formula {
        Formula::cmp(Cmp::Lt, lhs, rhs)
    }

    pub fn le(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Formula {
        Formula::cmp(Cmp::Le, lhs, rhs)
    }

    pub fn ge(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Formula {
        Formula::cmp(Cmp::Ge, lhs, rhs)
    }

    pub fn gt(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Formula {
        Formula::cmp(Cmp::Gt, lhs, rhs)
    }

    pub fn eq(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Formula {
        Formula::cmp(Cmp::Eq, lhs, rhs)
    }

    pub fn prop(name: &str) -> Formula {
        Formula::Prop(Arc::from(name))
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        Formula::Or(parts)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Or(vec![
            Formula::And(vec![a.clone(), b.clone()]),
            Formula::And(vec![Formula::not(a), Formula::not(b)]),
        ])
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => 1,
            Formula::Cmp(_, a, b) => 1 + a.depth().max(b.depth()),
            Formula::And(xs) | Formula::Or(xs) => 1 + xs.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Not(a) => 1 + a.depth(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => {}
            Formula::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Formula::Not(a) => a.collect_vars(out),
        }
    }

    pub fn props(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Formula::Prop(p) => {
                out.insert(p.clone());
            }
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.collect_props(out)),
            Formula::Not(a) => a.collect_props(out),
            _ => {}
        }
    }

    pub fn is_nonlinear(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => false,
            Formula::Cmp(_, a, b) => a.is_nonlinear() || b.is_nonlinear(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().any(Formula::is_nonlinear),
            Formula::Not(a) => a.is_nonlinear(),
        }
    }

    pub fn contains_sin(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => false,
            Formula::Cmp(_, a, b) => a.contains_sin() || b.contains_sin(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().any(Formula::contains_sin),
            Formula::Not(a) => a.contains_sin(),
        }
    }

    /// Concrete evaluation. Every variable and proposition must be bound.
    pub fn eval(
        &self,
        env: &dyn Fn(&str) -> Option<f64>,
        props: &dyn Fn(&str) -> Option<bool>,
    ) -> Result<bool, EvalError> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Prop(p) => props(p).ok_or_else(|| EvalError::Unbound(p.to_string()))?,
            Formula::Cmp(op, a, b) => op.holds(a.eval(env)?, b.eval(env)?),
            Formula::And(xs) => {
                for x in xs {
                    if !x.eval(env, props)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(xs) => {
                for x in xs {
                    if x.eval(env, props)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Not(a) => !a.eval(env, props)?,
        })
    }

    /// Constant folding and boolean simplification. Never changes the set
    /// of satisfying assignments.
    pub fn fold(&self) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => self.clone(),
            Formula::Cmp(op, a, b) => {
                let (a, b) = (a.fold(), b.fold());
                match (a.as_const(), b.as_const()) {
                    (Some(x), Some(y)) => {
                        if op.holds(x, y) {
                            Formula::True
                        } else {
                            Formula::False
                        }
                    }
                    _ => Formula::Cmp(*op, a, b),
                }
            }
            Formula::And(xs) => {
                let mut out = Vec::with_capacity(xs.len());
                for x in xs {
                    match x.fold() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        Formula::And(inner) => out.extend(inner),
                        other => out.push(other),
                    }
                }
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(xs) => {
                let mut out = Vec::with_capacity(xs.len());
                for x in xs {
                    match x.fold() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        Formula::Or(inner) => out.extend(inner),
                        other => out.push(other),
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
            Formula::Not(a) => match a.fold() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Not(inner) => *inner,
                other => Formula::Not(Box::new(other)),
            },
        }
    }

    pub fn substitute(&self, sub: &dyn Fn(&str) -> Option<Expr>) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => self.clone(),
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.substitute(sub), b.substitute(sub)),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.substitute(sub)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.substitute(sub)).collect()),
            Formula::Not(a) => Formula::Not(Box::new(a.substitute(sub))),
        }
    }

    pub fn substitute_props(&self, sub: &dyn Fn(&str) -> Option<bool>) -> Formula {
        match self {
            Formula::Prop(p) => match sub(p) {
                Some(true) => Formula::True,
                Some(false) => Formula::False,
                None => self.clone(),
            },
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.substitute_props(sub)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.substitute_props(sub)).collect()),
            Formula::Not(a) => Formula::Not(Box::new(a.substitute_props(sub))),
            _ => self.clone(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[Formula], sep: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Prop(p) => f.write_str(p),
            Formula::Cmp(op, a, b) => write!(f, "{a} {op} {b}"),
            Formula::And(xs) => join(f, xs, " & "),
            Formula::Or(xs) => join(f, xs, " | "),
            Formula::Not(a) => write!(f, "!{a}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_vars(_: &str) -> Option<f64> {
        None
    }

    #[test]
    fn fold_ground_comparison() {
        let f = Formula::le(Expr::c(0.0).sq() + Expr::c(0.0).sq(), Expr::c(1.0).sq());
        assert_eq!(f.fold(), Formula::True);
    }

    #[test]
    fn fold_keeps_division_by_zero() {
        let e = Expr::c(1.0) / Expr::c(0.0);
        assert!(matches!(e.fold(), Expr::Div(..)));
        assert_eq!(e.eval(&no_vars), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn linearity() {
        let x = Expr::var("x");
        assert!(!(Expr::c(2.0) * x.clone()).is_nonlinear());
        assert!((x.clone() * x.clone()).is_nonlinear());
        assert!(x.clone().abs().is_nonlinear());
        assert!(!(Expr::c(3.0).sin() * x).is_nonlinear());
    }

    #[test]
    fn negation_table() {
        for op in [Cmp::Lt, Cmp::Le, Cmp::Ge, Cmp::Gt] {
            let n = op.negate().unwrap();
            for (a, b) in [(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)] {
                assert_eq!(op.holds(a, b), !n.holds(a, b));
                assert_eq!(op.holds(a, b), op.flip().holds(b, a));
            }
        }
    }
}
