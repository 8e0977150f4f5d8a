//! Closed-interval arithmetic with outward rounding, and three-valued truth.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(v: f64) -> f64 {
    if v.is_finite() {
        v - v.abs() * 4.0 * f64::EPSILON - f64::MIN_POSITIVE
    } else {
        v
    }
}

fn up(v: f64) -> f64 {
    if v.is_finite() {
        v + v.abs() * 4.0 * f64::EPSILON + f64::MIN_POSITIVE
    } else {
        v
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn entire() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    fn widened(lo: f64, hi: f64) -> Self {
        Interval { lo: down(lo), hi: up(hi) }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_empty_or_nan(&self) -> bool {
        self.lo.is_nan() || self.hi.is_nan() || self.lo > self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn square(self) -> Self {
        if self.lo >= 0.0 {
            Interval::widened(self.lo * self.lo, self.hi * self.hi)
        } else if self.hi <= 0.0 {
            Interval::widened(self.hi * self.hi, self.lo * self.lo)
        } else {
            let m = (self.lo * self.lo).max(self.hi * self.hi);
            Interval { lo: 0.0, hi: up(m) }
        }
    }

    pub fn abs(self) -> Self {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            Interval { lo: -self.hi, hi: -self.lo }
        } else {
            Interval { lo: 0.0, hi: (-self.lo).max(self.hi) }
        }
    }

    pub fn sin(self) -> Self {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.width() >= 2.0 * PI {
            return Interval::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        // crest at pi/2 + 2k*pi, trough at -pi/2 + 2k*pi
        let k = ((self.lo - FRAC_PI_2) / (2.0 * PI)).ceil();
        if FRAC_PI_2 + 2.0 * PI * k <= self.hi {
            hi = 1.0;
        }
        let k = ((self.lo + FRAC_PI_2) / (2.0 * PI)).ceil();
        if -FRAC_PI_2 + 2.0 * PI * k <= self.hi {
            lo = -1.0;
        }
        Interval { lo: down(lo).max(-1.0), hi: up(hi).min(1.0) }
    }
}

impl ops::Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::widened(self.lo + o.lo, self.hi + o.hi)
    }
}

impl ops::Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::widened(self.lo - o.hi, self.hi - o.lo)
    }
}

impl ops::Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl ops::Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        if c.iter().any(|v| v.is_nan()) {
            return Interval::entire();
        }
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::widened(lo, hi)
    }
}

impl ops::Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        if o.contains(0.0) {
            return Interval::entire();
        }
        self * Interval::widened(1.0 / o.hi, 1.0 / o.lo)
    }
}

/// Three-valued truth for interval evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl From<bool> for Tri {
    fn from(b: bool) -> Self {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }
}

impl Tri {
    pub fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::True, Tri::True) => Tri::True,
            _ => Tri::Unknown,
        }
    }

    pub fn or(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::True, _) | (_, Tri::True) => Tri::True,
            (Tri::False, Tri::False) => Tri::False,
            _ => Tri::Unknown,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Tri {
        match self {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Unknown => Tri::Unknown,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn enclosures_contain_pointwise_results(a in -50.0f64..50.0, w1 in 0.0f64..5.0, b in -50.0f64..50.0, w2 in 0.0f64..5.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
            let x = Interval::new(a, a + w1);
            let y = Interval::new(b, b + w2);
            let (px, py) = (a + s * w1, b + t * w2);
            prop_assert!((x + y).contains(px + py));
            prop_assert!((x - y).contains(px - py));
            prop_assert!((x * y).contains(px * py));
            prop_assert!(x.square().contains(px * px));
            prop_assert!(x.abs().contains(px.abs()));
            prop_assert!(x.sin().contains(px.sin()));
            if !y.contains(0.0) {
                prop_assert!((x / y).contains(px / py));
            }
        }
    }

    #[test]
    fn sin_of_crest() {
        let s = Interval::new(1.0, 2.0).sin();
        assert_eq!(s.hi, 1.0);
        assert!(s.lo <= 1.0f64.sin());
    }
}
