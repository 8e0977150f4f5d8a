//! Parametric numeric-constraint families.
//!
//! Each template has a direct evaluator and a symbolic form. The two are
//! written with the same operation order so that a fully concrete encoding
//! folds to exactly the value `evaluate` computes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::smt::{Assignment, Cmp, Expr, Formula};

/// Values for a template's parameters, keyed by parameter name.
pub type ParamAssignment = Assignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Theory {
    Lra,
    Nra,
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theory::Lra => "LRA",
            Theory::Nra => "NRA",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    Interval1d,
    Halfplane2d,
    Halfplane3d,
    VarCmp(Cmp),
    Box2d,
    Collinear3pt,
    Between3pt,
    DistanceThreshold,
    Circle,
    OutsideCircle,
    Annulus,
    Ellipse,
    HyperbolaSide,
    ProductThreshold,
    QuadStrip,
    Parabola,
    AbsBox,
    Sinusoid,
    InfluenceThreshold,
    AbsDiff,
    DiffThreshold,
    OutsideDisc,
}

/// How a template's arguments are drawn from object attributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgShape {
    /// `objects` objects, each contributing the same `attrs` attributes, laid
    /// out object-major: `a1(O1), a2(O1), a1(O2), ...`.
    Grouped { objects: usize, attrs: usize },
    /// Any `n` attribute terms.
    Free(usize),
}

impl ArgShape {
    pub fn arity(self) -> usize {
        match self {
            ArgShape::Grouped { objects, attrs } => objects * attrs,
            ArgShape::Free(n) => n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
}

const fn p(name: &'static str, lo: f64, hi: f64) -> ParamSpec {
    ParamSpec { name, lo, hi }
}

const COEF: f64 = 100.0;

macro_rules! ps {
    ($($e:expr),* $(,)?) => {{
        const P: &[ParamSpec] = &[$($e),*];
        P
    }};
}
/// Lower end of the collinearity tolerance, standing in for the open bound.
pub const EPS_MIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemplateError {
    #[error("{template}: expected {expected} arguments, got {got}")]
    Arity { template: TemplateId, expected: usize, got: usize },
    #[error("{template}: expected {expected} parameters, got {got}")]
    ParamArity { template: TemplateId, expected: usize, got: usize },
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("parameter `{name}` = {value} outside [{lo}, {hi}]")]
    OutOfBounds { name: String, value: f64, lo: f64, hi: f64 },
    #[error("non-finite input")]
    NonFinite,
    #[error("division by zero")]
    DivisionByZero,
    #[error("unknown template `{0}`")]
    Unknown(String),
}

impl TemplateId {
    /// Every template, with `VarCmp` once per comparator.
    pub fn all() -> Vec<TemplateId> {
        use TemplateId::*;
        let mut v = vec![Interval1d, Halfplane2d, Halfplane3d];
        v.extend(Cmp::ALL.iter().map(|c| VarCmp(*c)));
        v.extend([
            Box2d,
            Collinear3pt,
            Between3pt,
            DistanceThreshold,
            Circle,
            OutsideCircle,
            Annulus,
            Ellipse,
            HyperbolaSide,
            ProductThreshold,
            QuadStrip,
            Parabola,
            AbsBox,
            Sinusoid,
            InfluenceThreshold,
            AbsDiff,
            DiffThreshold,
            OutsideDisc,
        ]);
        v
    }

    pub fn name(self) -> String {
        use TemplateId::*;
        let s = match self {
            Interval1d => "interval1d",
            Halfplane2d => "halfplane2d",
            Halfplane3d => "halfplane3d",
            VarCmp(c) => {
                return format!(
                    "varcmp_{}",
                    match c {
                        Cmp::Lt => "lt",
                        Cmp::Le => "le",
                        Cmp::Eq => "eq",
                        Cmp::Ge => "ge",
                        Cmp::Gt => "gt",
                    }
                )
            }
            Box2d => "box2d",
            Collinear3pt => "collinear3pt",
            Between3pt => "between3pt",
            DistanceThreshold => "distance_threshold",
            Circle => "circle",
            OutsideCircle => "outside_circle",
            Annulus => "annulus",
            Ellipse => "ellipse",
            HyperbolaSide => "hyperbola_side",
            ProductThreshold => "product_threshold",
            QuadStrip => "quad_strip",
            Parabola => "parabola",
            AbsBox => "abs_box",
            Sinusoid => "sinusoid",
            InfluenceThreshold => "influence_threshold",
            AbsDiff => "abs_diff",
            DiffThreshold => "diff_threshold",
            OutsideDisc => "outside_disc",
        };
        s.to_string()
    }

    pub fn parse(s: &str) -> Result<TemplateId, TemplateError> {
        TemplateId::all().into_iter().find(|t| t.name() == s).ok_or_else(|| TemplateError::Unknown(s.to_string()))
    }

    pub fn shape(self) -> ArgShape {
        use TemplateId::*;
        let g = |objects, attrs| ArgShape::Grouped { objects, attrs };
        match self {
            Interval1d | InfluenceThreshold => g(1, 1),
            Halfplane3d => g(1, 3),
            Collinear3pt | Between3pt => g(3, 2),
            DistanceThreshold => g(2, 2),
            VarCmp(_) | AbsDiff | DiffThreshold => ArgShape::Free(2),
            _ => g(1, 2),
        }
    }

    pub fn arity(self) -> usize {
        self.shape().arity()
    }

    pub fn params(self) -> &'static [ParamSpec] {
        use TemplateId::*;
        match self {
            Interval1d => ps![p("l", -COEF, COEF), p("u", -COEF, COEF)],
            Halfplane2d => ps![p("a", -COEF, COEF), p("b", -COEF, COEF), p("t", -COEF, COEF)],
            Halfplane3d => ps![p("a", -COEF, COEF), p("b", -COEF, COEF), p("c", -COEF, COEF), p("d", -COEF, COEF)],
            VarCmp(_) | Between3pt => &[],
            Box2d => ps![p("xmin", -COEF, COEF), p("xmax", -COEF, COEF), p("ymin", -COEF, COEF), p("ymax", -COEF, COEF)],
            Collinear3pt => ps![p("eps", EPS_MIN, 0.5)],
            DistanceThreshold => ps![p("d", 0.0, COEF)],
            Circle | OutsideCircle => ps![p("r", 0.0, COEF)],
            Annulus => ps![p("rmin", 0.0, COEF), p("rmax", 0.0, COEF)],
            Ellipse | HyperbolaSide => ps![p("a", 0.1, COEF), p("b", 0.1, COEF)],
            ProductThreshold => ps![p("c", -COEF, COEF)],
            QuadStrip => ps![p("a", -COEF, COEF), p("w", 0.0, COEF)],
            Parabola => ps![p("a", -COEF, COEF), p("b", -COEF, COEF), p("c", -COEF, COEF)],
            AbsBox => ps![p("s", 0.0, COEF)],
            Sinusoid => ps![p("w", 0.1, 10.0), p("phi", -COEF, COEF)],
            InfluenceThreshold => ps![p("tau", -COEF, COEF)],
            AbsDiff => ps![p("delta", 0.0, COEF)],
            DiffThreshold => ps![p("delta", -COEF, COEF)],
            OutsideDisc => ps![p("h", -COEF, COEF), p("k", -COEF, COEF), p("r", 0.0, COEF)],
        }
    }

    /// Symbolic form over the given argument and parameter terms, unfolded.
    pub fn form(self, args: &[Expr], params: &[Expr]) -> Result<Formula, TemplateError> {
        self.check_arity(args.len(), params.len())?;
        let a = |i: usize| args[i].clone();
        let q = |i: usize| params[i].clone();
        let sq = |e: Expr| e.sq();
        use TemplateId::*;
        Ok(match self {
            Interval1d => Formula::and(vec![Formula::lt(q(0), a(0)), Formula::lt(a(0), q(1))]),
            Halfplane2d => Formula::le(q(0) * a(0) + q(1) * a(1), q(2)),
            Halfplane3d => Formula::le(q(0) * a(0) + q(1) * a(1) + q(2) * a(2), q(3)),
            VarCmp(c) => Formula::cmp(c, a(0), a(1)),
            Box2d => Formula::and(vec![
                Formula::le(q(0), a(0)),
                Formula::le(a(0), q(1)),
                Formula::le(q(2), a(1)),
                Formula::le(a(1), q(3)),
            ]),
            Collinear3pt => Formula::le(cross(args).abs(), q(0)),
            Between3pt => Formula::ge((a(0) - a(2)) * (a(4) - a(0)) + (a(1) - a(3)) * (a(5) - a(1)), 0.0),
            DistanceThreshold => Formula::le(sq(a(0) - a(2)) + sq(a(1) - a(3)), sq(q(0))),
            Circle => Formula::le(sq(a(0)) + sq(a(1)), sq(q(0))),
            OutsideCircle => Formula::ge(sq(a(0)) + sq(a(1)), sq(q(0))),
            Annulus => Formula::and(vec![
                Formula::le(sq(q(0)), sq(a(0)) + sq(a(1))),
                Formula::le(sq(a(0)) + sq(a(1)), sq(q(1))),
            ]),
            Ellipse => Formula::le(sq(a(0)) / sq(q(0)) + sq(a(1)) / sq(q(1)), 1.0),
            HyperbolaSide => Formula::le(sq(a(0)) / sq(q(0)) - sq(a(1)) / sq(q(1)), 1.0),
            ProductThreshold => Formula::lt(a(0) * a(1), q(0)),
            QuadStrip => Formula::le((a(1) - q(0) * sq(a(0))).abs(), q(1)),
            Parabola => Formula::ge(a(1), q(0) * sq(a(0)) + q(1) * a(0) + q(2)),
            AbsBox => Formula::and(vec![Formula::le(a(0).abs(), q(0)), Formula::le(a(1).abs(), q(0))]),
            Sinusoid => Formula::ge(a(1), (q(0) * a(0)).sin() + q(1)),
            InfluenceThreshold => Formula::gt(a(0), q(0)),
            AbsDiff => Formula::le((a(0) - a(1)).abs(), q(0)),
            DiffThreshold => Formula::le(a(1) - a(0), q(0)),
            OutsideDisc => Formula::ge(sq(a(0) - q(0)) + sq(a(1) - q(1)), sq(q(2))),
        })
    }

    /// Theory of the form read as a constraint on its arguments with the
    /// parameters fixed.
    pub fn theory(self) -> Theory {
        let args: Vec<Expr> = (0..self.arity()).map(|i| Expr::var(&format!("arg{i}"))).collect();
        let params: Vec<Expr> = self.params().iter().map(|p| Expr::c(0.5 * (p.lo + p.hi))).collect();
        let f = self.form(&args, &params).expect("arity matches by construction");
        if f.is_nonlinear() {
            Theory::Nra
        } else {
            Theory::Lra
        }
    }

    fn check_arity(self, args: usize, params: usize) -> Result<(), TemplateError> {
        if args != self.arity() {
            return Err(TemplateError::Arity { template: self, expected: self.arity(), got: args });
        }
        if params != self.params().len() {
            return Err(TemplateError::ParamArity { template: self, expected: self.params().len(), got: params });
        }
        Ok(())
    }

    /// Concrete truth value. Arithmetic follows the symbolic form step for step.
    pub fn evaluate(self, params: &ParamAssignment, args: &[f64]) -> Result<bool, TemplateError> {
        self.check_arity(args.len(), self.params().len())?;
        if args.iter().any(|v| !v.is_finite()) {
            return Err(TemplateError::NonFinite);
        }
        let mut q = Vec::with_capacity(self.params().len());
        for spec in self.params() {
            let v = *params.get(spec.name).ok_or_else(|| TemplateError::MissingParam(spec.name.to_string()))?;
            if !v.is_finite() {
                return Err(TemplateError::NonFinite);
            }
            if v < spec.lo || v > spec.hi {
                return Err(TemplateError::OutOfBounds { name: spec.name.to_string(), value: v, lo: spec.lo, hi: spec.hi });
            }
            q.push(v);
        }
        self.evaluate_raw(&q, args)
    }

    /// Evaluation with positional parameters and no bound checks.
    pub fn evaluate_raw(self, q: &[f64], a: &[f64]) -> Result<bool, TemplateError> {
        let sq = |v: f64| v * v;
        let div = |n: f64, d: f64| if d == 0.0 { Err(TemplateError::DivisionByZero) } else { Ok(n / d) };
        use TemplateId::*;
        let b = match self {
            Interval1d => q[0] < a[0] && a[0] < q[1],
            Halfplane2d => q[0] * a[0] + q[1] * a[1] <= q[2],
            Halfplane3d => q[0] * a[0] + q[1] * a[1] + q[2] * a[2] <= q[3],
            VarCmp(c) => c.holds(a[0], a[1]),
            Box2d => q[0] <= a[0] && a[0] <= q[1] && q[2] <= a[1] && a[1] <= q[3],
            Collinear3pt => ((a[0] - a[2]) * (a[5] - a[3]) - (a[1] - a[3]) * (a[4] - a[2])).abs() <= q[0],
            Between3pt => (a[0] - a[2]) * (a[4] - a[0]) + (a[1] - a[3]) * (a[5] - a[1]) >= 0.0,
            DistanceThreshold => sq(a[0] - a[2]) + sq(a[1] - a[3]) <= sq(q[0]),
            Circle => sq(a[0]) + sq(a[1]) <= sq(q[0]),
            OutsideCircle => sq(a[0]) + sq(a[1]) >= sq(q[0]),
            Annulus => sq(q[0]) <= sq(a[0]) + sq(a[1]) && sq(a[0]) + sq(a[1]) <= sq(q[1]),
            Ellipse => div(sq(a[0]), sq(q[0]))? + div(sq(a[1]), sq(q[1]))? <= 1.0,
            HyperbolaSide => div(sq(a[0]), sq(q[0]))? - div(sq(a[1]), sq(q[1]))? <= 1.0,
            ProductThreshold => a[0] * a[1] < q[0],
            QuadStrip => (a[1] - q[0] * sq(a[0])).abs() <= q[1],
            Parabola => a[1] >= q[0] * sq(a[0]) + q[1] * a[0] + q[2],
            AbsBox => a[0].abs() <= q[0] && a[1].abs() <= q[0],
            Sinusoid => a[1] >= (q[0] * a[0]).sin() + q[1],
            InfluenceThreshold => a[0] > q[0],
            AbsDiff => (a[0] - a[1]).abs() <= q[0],
            DiffThreshold => a[1] - a[0] <= q[0],
            OutsideDisc => sq(a[0] - q[0]) + sq(a[1] - q[1]) >= sq(q[2]),
        };
        Ok(b)
    }

    /// Folded form conjoined with the bound constraints of every symbolic
    /// parameter.
    pub fn encode(self, args: &[Expr], params: &[Expr]) -> Result<Formula, TemplateError> {
        let mut parts = vec![self.form(args, params)?];
        for (spec, e) in self.params().iter().zip(params) {
            if !e.is_ground() {
                parts.push(Formula::le(spec.lo, e.clone()));
                parts.push(Formula::le(e.clone(), spec.hi));
            }
        }
        Ok(Formula::and(parts).fold())
    }

    pub fn is_parametric(self) -> bool {
        !self.params().is_empty()
    }
}

fn cross(a: &[Expr]) -> Expr {
    let c = |i: usize| a[i].clone();
    (c(0) - c(2)) * (c(5) - c(3)) - (c(1) - c(3)) * (c(4) - c(2))
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> ParamAssignment {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn circle_contains_point() {
        assert!(TemplateId::Circle.evaluate(&params(&[("r", 2.0)]), &[1.0, 1.0]).unwrap());
    }

    #[test]
    fn strict_varcmp_on_equal_args() {
        assert!(!TemplateId::VarCmp(Cmp::Lt).evaluate(&params(&[]), &[3.0, 3.0]).unwrap());
    }

    #[test]
    fn between_by_dot_product() {
        let t = TemplateId::Between3pt;
        assert!(t.evaluate(&params(&[]), &[2.0, 0.0, 0.0, 0.0, 4.0, 0.0]).unwrap());
        assert!(!t.evaluate(&params(&[]), &[5.0, 0.0, 0.0, 0.0, 4.0, 0.0]).unwrap());
    }

    #[test]
    fn interval_encoding_on_a_concrete_point() {
        let f = TemplateId::Interval1d.encode(&[Expr::c(3.2)], &[Expr::var("l"), Expr::var("u")]).unwrap();
        let want = Formula::and(vec![
            Formula::lt(Expr::var("l"), 3.2),
            Formula::lt(3.2, Expr::var("u")),
            Formula::le(-100.0, Expr::var("l")),
            Formula::le(Expr::var("l"), 100.0),
            Formula::le(-100.0, Expr::var("u")),
            Formula::le(Expr::var("u"), 100.0),
        ]);
        assert_eq!(f, want);
    }

    #[test]
    fn concrete_circle_folds_to_true() {
        let f = TemplateId::Circle.encode(&[Expr::c(0.0), Expr::c(0.0)], &[Expr::c(1.0)]).unwrap();
        assert_eq!(f, Formula::True);
    }

    #[test]
    fn sinusoid_at_origin_bounds_phase() {
        let w = Expr::var("w");
        let phi = Expr::var("phi");
        let f = TemplateId::Sinusoid.form(&[Expr::c(0.0), Expr::c(0.5)], &[w, phi]).unwrap();
        let env = |w: f64, phi: f64| {
            f.eval(&|v| Some(if v == "w" { w } else { phi }), &|_| None).unwrap()
        };
        for w in [0.1, 3.0, 10.0] {
            assert!(env(w, 0.5));
            assert!(env(w, -1.0));
            assert!(!env(w, 0.51));
        }
    }

    #[test]
    fn theories() {
        assert_eq!(TemplateId::Halfplane2d.theory(), Theory::Lra);
        assert_eq!(TemplateId::Interval1d.theory(), Theory::Lra);
        assert_eq!(TemplateId::Box2d.theory(), Theory::Lra);
        assert_eq!(TemplateId::Circle.theory(), Theory::Nra);
        assert_eq!(TemplateId::Sinusoid.theory(), Theory::Nra);
        assert_eq!(TemplateId::AbsDiff.theory(), Theory::Nra);
        assert_eq!(TemplateId::DiffThreshold.theory(), Theory::Lra);
    }

    #[test]
    fn names_round_trip_and_bounds_fit_the_coefficient_box() {
        for t in TemplateId::all() {
            assert_eq!(TemplateId::parse(&t.name()).unwrap(), t);
            for p in t.params() {
                assert!(p.lo >= -100.0 && p.hi <= 100.0 && p.lo < p.hi);
            }
        }
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        assert!(matches!(
            TemplateId::Circle.encode(&[Expr::c(1.0)], &[Expr::var("r")]),
            Err(TemplateError::Arity { .. })
        ));
    }
}
