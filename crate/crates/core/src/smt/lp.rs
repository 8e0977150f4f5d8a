//! Small linear programs over the fitter's affine instances.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

/// `coef · x ≤ rhs` (strict when `strict`), or `coef · x = rhs` when `eq`.
#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub coef: Vec<f64>,
    pub rhs: f64,
    pub strict: bool,
    pub eq: bool,
}

impl Row {
    fn norm(&self) -> f64 {
        self.coef.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Margin for strict rows in feasibility LPs.
const STRICT_EPS: f64 = 1e-9;
const MAX_MARGIN: f64 = 1e3;

fn add_vars(p: &mut Problem, bounds: &[(f64, f64)]) -> Vec<Variable> {
    bounds.iter().map(|&b| p.add_var(0.0, b)).collect()
}

fn add_row(p: &mut Problem, xs: &[Variable], row: &Row, extra: &[(Variable, f64)], rhs: f64) {
    let mut terms: Vec<(Variable, f64)> = xs.iter().zip(&row.coef).filter(|(_, c)| **c != 0.0).map(|(v, c)| (*v, *c)).collect();
    terms.extend_from_slice(extra);
    let op = if row.eq { ComparisonOp::Eq } else { ComparisonOp::Le };
    p.add_constraint(terms, op, rhs);
}

/// Point maximising the minimum normalised slack of the inequality rows
/// (a Chebyshev centre of the feasible cell), or `None` if infeasible.
pub(crate) fn max_margin(rows: &[Row], bounds: &[(f64, f64)]) -> Option<(Vec<f64>, f64)> {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let xs = add_vars(&mut p, bounds);
    let m = p.add_var(1.0, (0.0, MAX_MARGIN));
    for row in rows {
        if row.eq {
            add_row(&mut p, &xs, row, &[], row.rhs);
        } else {
            let n = row.norm();
            if n == 0.0 {
                if row.rhs < 0.0 || (row.strict && row.rhs <= 0.0) {
                    return None;
                }
                continue;
            }
            add_row(&mut p, &xs, row, &[(m, n)], row.rhs);
        }
    }
    let sol = p.solve().ok()?;
    let x = xs.iter().map(|v| sol[*v]).collect();
    Some((x, sol[m]))
}

/// Minimises the weighted slack needed to satisfy the soft rows while
/// keeping the hard rows. Returns the point and each soft row's slack.
pub(crate) fn elastic(hard: &[Row], soft: &[(Row, f64)], bounds: &[(f64, f64)]) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let xs = add_vars(&mut p, bounds);
    for row in hard {
        let rhs = if row.strict { row.rhs - STRICT_EPS } else { row.rhs };
        add_row(&mut p, &xs, row, &[], rhs);
    }
    let mut slacks = Vec::with_capacity(soft.len());
    for (row, w) in soft {
        let n = row.norm().max(1e-12);
        let s = p.add_var(*w, (0.0, f64::INFINITY));
        let rhs = if row.strict { row.rhs - STRICT_EPS } else { row.rhs };
        if row.eq {
            // |coef·x - rhs| ≤ s·n
            let mut up = row.clone();
            up.eq = false;
            add_row(&mut p, &xs, &up, &[(s, -n)], rhs);
            let down = Row { coef: row.coef.iter().map(|c| -c).collect(), rhs: -row.rhs, strict: false, eq: false };
            add_row(&mut p, &xs, &down, &[(s, -n)], -rhs);
        } else {
            add_row(&mut p, &xs, row, &[(s, -n)], rhs);
        }
        slacks.push(s);
    }
    let sol = p.solve().ok()?;
    Some((xs.iter().map(|v| sol[*v]).collect(), slacks.iter().map(|s| sol[*s]).collect()))
}
