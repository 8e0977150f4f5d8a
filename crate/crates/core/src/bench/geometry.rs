//! Geometry task definitions: object kinds, ground-truth labels, boundary
//! distances for the margin band, and proposal samplers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Family;

pub const DOMAIN: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Point2,
    Point3,
    Rect,
}

impl Kind {
    pub fn attrs(self) -> &'static [&'static str] {
        match self {
            Kind::Point2 => &["x", "y"],
            Kind::Point3 => &["x", "y", "z"],
            Kind::Rect => &["x_min", "x_max", "y_min", "y_max"],
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GeoTask {
    pub name: &'static str,
    pub family: Family,
    pub kinds: &'static [Kind],
    /// Ground-truth constants, for the manifest.
    pub params: &'static [(&'static str, f64)],
    /// The truth is a single conjunctive clause in the family's language.
    pub conjunctive: bool,
}

use Kind::*;

const P2: &[Kind] = &[Point2];
const P3: &[Kind] = &[Point3];

macro_rules! task {
    ($name:literal, $fam:ident, $kinds:expr, [$(($k:literal, $v:expr)),*], $conj:literal) => {
        GeoTask { name: $name, family: Family::$fam, kinds: $kinds, params: &[$(($k, $v)),*], conjunctive: $conj }
    };
}

pub const TASKS: &[GeoTask] = &[
    task!("interval", Geometry0, P2, [("l", -3.0), ("u", 4.0)], true),
    task!("halfplane", Geometry0, P2, [("a", 1.0), ("b", 2.0), ("t", 3.0)], true),
    task!("halfplane3d", Geometry1, P3, [("a", 1.0), ("b", 2.0), ("c", -1.0), ("d", 3.0)], true),
    task!("conjunction", Geometry1, P3, [("a", 1.0), ("b", 1.0), ("t", 3.0), ("z_l", -2.0), ("z_u", 5.0)], true),
    task!("interval3d", Geometry1, P3, [("x_l", -4.0), ("x_u", 5.0), ("y_l", -6.0), ("y_u", 3.0), ("z_l", -5.0), ("z_u", 5.0)], true),
    task!("multiple_halfplanes", Geometry1, P3, [("t1", 4.0), ("t2", 2.0)], true),
    task!("left_of", Geometry2, &[Point2, Point2], [], true),
    task!("closer_than", Geometry2, &[Point2, Point2], [("d", 5.0)], true),
    task!("touching", Geometry2, &[Point2, Point2], [("delta", 1.0)], true),
    task!("inside", Geometry2, &[Point2, Rect], [], true),
    task!("overlapping", Geometry2, &[Rect, Rect], [], true),
    task!("between", Geometry2, &[Point2, Point2, Point2], [("perp", 0.3)], true),
    task!("adjacent", Geometry2, &[Rect, Rect], [("gap", 1.0)], true),
    task!("aligned", Geometry2, &[Point2, Point2], [("delta", 0.5)], true),
    task!("surrounds", Geometry2, &[Rect, Rect], [], true),
    task!("near_corner", Geometry2, P2, [("xmin", 6.0), ("xmax", 10.0), ("ymin", 6.0), ("ymax", 10.0)], true),
    task!("in_circle", Geometry3, P2, [("r", 5.0)], true),
    task!("in_ellipse", Geometry3, P2, [("a", 7.0), ("b", 4.0)], true),
    task!("hyperbola_side", Geometry3, P2, [("a", 3.0), ("b", 2.0)], true),
    task!("xy_less_than", Geometry3, P2, [("c", 6.0)], true),
    task!("quad_strip", Geometry3, P2, [("a", 0.1), ("w", 2.0)], true),
    task!("union_halfplanes", Geometry3, P2, [("t1", -2.0), ("t2", 3.0)], false),
    task!("circle_or_box", Geometry3, P2, [("r", 4.0), ("s", 3.5)], false),
    task!("piecewise", Geometry3, P2, [("c", 2.0)], false),
    task!("fallback_region", Geometry3, P2, [("a", 6.0), ("b", 3.0), ("t", 10.0)], false),
    task!("donut", Geometry3, P2, [("rmin", 3.0), ("rmax", 6.0)], true),
    task!("lshape", Geometry3, P2, [], false),
    task!("above_parabola", Geometry3, P2, [("a", 0.2), ("b", 0.0), ("c", -3.0)], true),
    task!("sinusoidal", Geometry3, P2, [("w", 1.0), ("phi", 0.0)], true),
    task!("crescent", Geometry3, P2, [("r", 7.0), ("h", 3.0), ("k", 0.0), ("r2", 5.0)], true),
];

pub fn task(name: &str) -> Option<&'static GeoTask> {
    TASKS.iter().find(|t| t.name == name)
}

/// Object values, each in the attribute order of its kind.
pub type Objs = [Vec<f64>];

fn sq(v: f64) -> f64 {
    v * v
}

/// Ground truth. Boundaries are inclusive on the positive side of ≤ forms.
pub fn label(name: &str, o: &Objs) -> bool {
    let p = &o[0];
    let (x, y) = (p[0], p.get(1).copied().unwrap_or(0.0));
    let z = p.get(2).copied().unwrap_or(0.0);
    let r2 = sq(x) + sq(y);
    let in_box = |v: &[f64], x0: f64, x1: f64, y0: f64, y1: f64| x0 <= v[0] && v[0] <= x1 && y0 <= v[1] && v[1] <= y1;
    match name {
        "interval" => -3.0 < x && x < 4.0,
        "halfplane" => x + 2.0 * y <= 3.0,
        "halfplane3d" => x + 2.0 * y - z <= 3.0,
        "conjunction" => x + y <= 3.0 && -2.0 < z && z < 5.0,
        "interval3d" => -4.0 < x && x < 5.0 && -6.0 < y && y < 3.0 && -5.0 < z && z < 5.0,
        "multiple_halfplanes" => x + y <= 4.0 && x - y <= 2.0,
        "left_of" => x < o[1][0],
        "closer_than" => sq(x - o[1][0]) + sq(y - o[1][1]) <= 25.0,
        "touching" => (x - o[1][0]).abs() <= 1.0 && (y - o[1][1]).abs() <= 1.0,
        "inside" => {
            let r = &o[1];
            r[0] <= x && x <= r[1] && r[2] <= y && y <= r[3]
        }
        "overlapping" => {
            let (r, s) = (&o[0], &o[1]);
            r[0] <= s[1] && s[0] <= r[1] && r[2] <= s[3] && s[2] <= r[3]
        }
        "between" => {
            let (d, s, _) = segment_coords(o);
            d <= 0.3 && (0.0..=1.0).contains(&s)
        }
        "adjacent" => {
            let (r, s) = (&o[0], &o[1]);
            r[1] <= s[0] && s[0] - r[1] <= 1.0 && r[2] <= s[3] && s[2] <= r[3]
        }
        "aligned" => (y - o[1][1]).abs() <= 0.5,
        "surrounds" => {
            let (r, s) = (&o[0], &o[1]);
            r[0] <= s[0] && s[1] <= r[1] && r[2] <= s[2] && s[3] <= r[3]
        }
        "near_corner" => in_box(p, 6.0, 10.0, 6.0, 10.0),
        "in_circle" => r2 <= 25.0,
        "in_ellipse" => sq(x) / 49.0 + sq(y) / 16.0 <= 1.0,
        "hyperbola_side" => sq(x) / 9.0 - sq(y) / 4.0 <= 1.0,
        "xy_less_than" => x * y < 6.0,
        "quad_strip" => (y - 0.1 * sq(x)).abs() <= 2.0,
        "union_halfplanes" => x + y <= -2.0 || x - y >= 3.0,
        "circle_or_box" => r2 <= 16.0 || (x.abs() <= 3.5 && y.abs() <= 3.5),
        "piecewise" => (x <= 0.0 && y >= 2.0) || (x > 0.0 && y >= x + 2.0),
        "fallback_region" => sq(x) / 36.0 + sq(y) / 9.0 <= 1.0 || x + y >= 10.0,
        "donut" => 9.0 <= r2 && r2 <= 36.0,
        "lshape" => in_box(p, -8.0, 0.0, -8.0, 8.0) || in_box(p, 0.0, 8.0, -8.0, -2.0),
        "above_parabola" => y >= 0.2 * sq(x) - 3.0,
        "sinusoidal" => y >= x.sin(),
        "crescent" => r2 <= 49.0 && sq(x - 3.0) + sq(y) >= 25.0,
        other => panic!("unknown geometry task `{other}`"),
    }
}

/// Perpendicular distance of P from line AB, position of P's projection
/// along AB (0 at A, 1 at B), and |AB|.
fn segment_coords(o: &Objs) -> (f64, f64, f64) {
    let (p, a, b) = (&o[0], &o[1], &o[2]);
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = (sq(dx) + sq(dy)).sqrt().max(1e-12);
    let cross = (p[0] - a[0]) * dy - (p[1] - a[1]) * dx;
    let s = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / sq(len);
    (cross.abs() / len, s, len)
}

/// |g| / ‖∇g‖ over all coordinates, by central differences.
fn normalized(g: &dyn Fn(&[f64]) -> f64, v: &[f64]) -> f64 {
    let h = 1e-6;
    let mut grad2 = 0.0;
    let mut w = v.to_vec();
    for i in 0..v.len() {
        w[i] = v[i] + h;
        let up = g(&w);
        w[i] = v[i] - h;
        let down = g(&w);
        w[i] = v[i];
        grad2 += sq((up - down) / (2.0 * h));
    }
    let gv = g(v).abs();
    if grad2 == 0.0 {
        return if gv == 0.0 { 0.0 } else { f64::INFINITY };
    }
    gv / grad2.sqrt()
}

/// Smallest first-order distance from the values to any atom boundary of
/// the task's formula. The boundary of the labelled region lies within
/// the union of atom boundaries.
pub fn boundary_distance(name: &str, o: &Objs) -> f64 {
    let flat: Vec<f64> = o.iter().flatten().copied().collect();
    type G = Box<dyn Fn(&[f64]) -> f64>;
    let atoms: Vec<G> = match name {
        "interval" => vec![Box::new(|v| v[0] + 3.0), Box::new(|v| v[0] - 4.0)],
        "halfplane" => vec![Box::new(|v| v[0] + 2.0 * v[1] - 3.0)],
        "halfplane3d" => vec![Box::new(|v| v[0] + 2.0 * v[1] - v[2] - 3.0)],
        "conjunction" => {
            vec![Box::new(|v| v[0] + v[1] - 3.0), Box::new(|v| v[2] + 2.0), Box::new(|v| v[2] - 5.0)]
        }
        "interval3d" => vec![
            Box::new(|v| v[0] + 4.0),
            Box::new(|v| v[0] - 5.0),
            Box::new(|v| v[1] + 6.0),
            Box::new(|v| v[1] - 3.0),
            Box::new(|v| v[2] + 5.0),
            Box::new(|v| v[2] - 5.0),
        ],
        "multiple_halfplanes" => vec![Box::new(|v| v[0] + v[1] - 4.0), Box::new(|v| v[0] - v[1] - 2.0)],
        "left_of" => vec![Box::new(|v| v[0] - v[2])],
        "closer_than" => vec![Box::new(|v| sq(v[0] - v[2]) + sq(v[1] - v[3]) - 25.0)],
        "touching" => vec![Box::new(|v| (v[0] - v[2]).abs() - 1.0), Box::new(|v| (v[1] - v[3]).abs() - 1.0)],
        // point (0,1), box (2..5)
        "inside" => vec![
            Box::new(|v| v[2] - v[0]),
            Box::new(|v| v[0] - v[3]),
            Box::new(|v| v[4] - v[1]),
            Box::new(|v| v[1] - v[5]),
        ],
        // boxes (0..3) and (4..7)
        "overlapping" => vec![
            Box::new(|v| v[0] - v[5]),
            Box::new(|v| v[4] - v[1]),
            Box::new(|v| v[2] - v[7]),
            Box::new(|v| v[6] - v[3]),
        ],
        "between" => {
            let (d, s, len) = segment_coords(o);
            return (d - 0.3).abs().min(s.abs() * len).min((s - 1.0).abs() * len);
        }
        "adjacent" => vec![
            Box::new(|v| v[1] - v[4]),
            Box::new(|v| v[4] - v[1] - 1.0),
            Box::new(|v| v[2] - v[7]),
            Box::new(|v| v[6] - v[3]),
        ],
        "aligned" => vec![Box::new(|v| (v[1] - v[3]).abs() - 0.5)],
        "surrounds" => vec![
            Box::new(|v| v[0] - v[4]),
            Box::new(|v| v[5] - v[1]),
            Box::new(|v| v[2] - v[6]),
            Box::new(|v| v[7] - v[3]),
        ],
        "near_corner" => vec![
            Box::new(|v| v[0] - 6.0),
            Box::new(|v| v[0] - 10.0),
            Box::new(|v| v[1] - 6.0),
            Box::new(|v| v[1] - 10.0),
        ],
        "in_circle" => vec![Box::new(|v| sq(v[0]) + sq(v[1]) - 25.0)],
        "in_ellipse" => vec![Box::new(|v| sq(v[0]) / 49.0 + sq(v[1]) / 16.0 - 1.0)],
        "hyperbola_side" => vec![Box::new(|v| sq(v[0]) / 9.0 - sq(v[1]) / 4.0 - 1.0)],
        "xy_less_than" => vec![Box::new(|v| v[0] * v[1] - 6.0)],
        "quad_strip" => vec![Box::new(|v| (v[1] - 0.1 * sq(v[0])).abs() - 2.0)],
        "union_halfplanes" => vec![Box::new(|v| v[0] + v[1] + 2.0), Box::new(|v| v[0] - v[1] - 3.0)],
        "circle_or_box" => vec![
            Box::new(|v| sq(v[0]) + sq(v[1]) - 16.0),
            Box::new(|v| v[0].abs() - 3.5),
            Box::new(|v| v[1].abs() - 3.5),
        ],
        "piecewise" => vec![Box::new(|v| v[0]), Box::new(|v| v[1] - 2.0), Box::new(|v| v[1] - v[0] - 2.0)],
        "fallback_region" => {
            vec![Box::new(|v| sq(v[0]) / 36.0 + sq(v[1]) / 9.0 - 1.0), Box::new(|v| v[0] + v[1] - 10.0)]
        }
        "donut" => vec![Box::new(|v| sq(v[0]) + sq(v[1]) - 9.0), Box::new(|v| sq(v[0]) + sq(v[1]) - 36.0)],
        "lshape" => vec![
            Box::new(|v| v[0] + 8.0),
            Box::new(|v| v[0]),
            Box::new(|v| v[0] - 8.0),
            Box::new(|v| v[1] + 8.0),
            Box::new(|v| v[1] - 8.0),
            Box::new(|v| v[1] + 2.0),
        ],
        "above_parabola" => vec![Box::new(|v| v[1] - 0.2 * sq(v[0]) + 3.0)],
        "sinusoidal" => vec![Box::new(|v| v[1] - v[0].sin())],
        "crescent" => {
            vec![Box::new(|v| sq(v[0]) + sq(v[1]) - 49.0), Box::new(|v| sq(v[0] - 3.0) + sq(v[1]) - 25.0)]
        }
        other => panic!("unknown geometry task `{other}`"),
    };
    atoms.iter().map(|g| normalized(g.as_ref(), &flat)).fold(f64::INFINITY, f64::min)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

fn point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| uniform(rng, -DOMAIN, DOMAIN)).collect()
}

fn boxed(cx: f64, cy: f64, hx: f64, hy: f64) -> Vec<f64> {
    vec![cx - hx, cx + hx, cy - hy, cy + hy]
}

fn random_box(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (cx, cy) = (uniform(rng, -8.0, 8.0), uniform(rng, -8.0, 8.0));
    boxed(cx, cy, uniform(rng, 0.5, 4.0), uniform(rng, 0.5, 4.0))
}

fn center(b: &[f64]) -> (f64, f64) {
    (0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3]))
}

/// One candidate object tuple. Relational tasks with rare positives mix
/// uniform draws with draws near the positive region.
pub fn propose(t: &GeoTask, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let near = rng.gen_bool(0.5);
    match t.name {
        "touching" | "closer_than" | "aligned" => {
            let p = point(rng, 2);
            let q = if near {
                let w = if t.name == "closer_than" { 7.0 } else { 2.5 };
                let dy = if t.name == "aligned" { 2.0 } else { w };
                vec![p[0] + uniform(rng, -w, w), p[1] + uniform(rng, -dy, dy)]
            } else {
                point(rng, 2)
            };
            vec![p, q]
        }
        "inside" => {
            let r = random_box(rng);
            let p = if near {
                let (cx, cy) = center(&r);
                let (hx, hy) = (0.5 * (r[1] - r[0]) + 1.5, 0.5 * (r[3] - r[2]) + 1.5);
                vec![cx + uniform(rng, -hx, hx), cy + uniform(rng, -hy, hy)]
            } else {
                point(rng, 2)
            };
            vec![p, r]
        }
        "overlapping" => {
            let r = random_box(rng);
            let s = if near {
                let (cx, cy) = center(&r);
                boxed(cx + uniform(rng, -6.0, 6.0), cy + uniform(rng, -6.0, 6.0), uniform(rng, 0.5, 4.0), uniform(rng, 0.5, 4.0))
            } else {
                random_box(rng)
            };
            vec![r, s]
        }
        "surrounds" => {
            let r = random_box(rng);
            let s = if near {
                let (cx, cy) = center(&r);
                let (hx, hy) = (0.5 * (r[1] - r[0]), 0.5 * (r[3] - r[2]));
                boxed(cx + uniform(rng, -hx, hx), cy + uniform(rng, -hy, hy), uniform(rng, 0.2, hx.max(0.3)), uniform(rng, 0.2, hy.max(0.3)))
            } else {
                random_box(rng)
            };
            vec![r, s]
        }
        "adjacent" => {
            let r = random_box(rng);
            let s = if near {
                let (_, cy) = center(&r);
                let x0 = r[1] + uniform(rng, -1.5, 2.5);
                let (hx, hy) = (uniform(rng, 0.5, 4.0), uniform(rng, 0.5, 4.0));
                let cy = cy + uniform(rng, -6.0, 6.0);
                vec![x0, x0 + 2.0 * hx, cy - hy, cy + hy]
            } else {
                random_box(rng)
            };
            vec![r, s]
        }
        "between" => {
            let (a, b) = loop {
                let (a, b) = (point(rng, 2), point(rng, 2));
                if (sq(a[0] - b[0]) + sq(a[1] - b[1])).sqrt() >= 4.0 {
                    break (a, b);
                }
            };
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = (sq(dx) + sq(dy)).sqrt();
            let (nx, ny) = (-dy / len, dx / len);
            let p = match rng.gen_range(0..3) {
                0 => {
                    let s = uniform(rng, -0.5, 1.5);
                    vec![a[0] + s * dx, a[1] + s * dy]
                }
                1 => {
                    let s = uniform(rng, 0.0, 1.0);
                    let off = uniform(rng, 0.55, 3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    vec![a[0] + s * dx + off * nx, a[1] + s * dy + off * ny]
                }
                _ => point(rng, 2),
            };
            vec![p, a, b]
        }
        "near_corner" => {
            if near {
                vec![vec![uniform(rng, 3.0, DOMAIN), uniform(rng, 3.0, DOMAIN)]]
            } else {
                vec![point(rng, 2)]
            }
        }
        _ => t
            .kinds
            .iter()
            .map(|k| match k {
                Point2 => point(rng, 2),
                Point3 => point(rng, 3),
                Rect => random_box(rng),
            })
            .collect(),
    }
}

/// Rounds to four decimals so dataset files stay readable.
pub fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn donut_radii() {
        assert!(label("donut", &[vec![4.5, 0.0]]));
        assert!(!label("donut", &[vec![1.0, 0.0]]));
    }

    #[test]
    fn circle_boundary_inclusive() {
        assert!(label("in_circle", &[vec![3.0, 4.0]]));
        assert!(!label("sinusoidal", &[vec![0.0, -0.1]]));
        assert!(label("left_of", &[vec![1.0, 0.0], vec![2.0, 0.0]]));
    }

    #[test]
    fn circle_distance_is_radial() {
        // (25 - 9) / |(6, 0)|
        let d = boundary_distance("in_circle", &[vec![3.0, 0.0]]);
        assert!((d - 16.0 / 6.0).abs() < 1e-6, "{d}");
        let d = boundary_distance("halfplane", &[vec![3.0, 0.0]]);
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn between_uses_segment_geometry() {
        let a = vec![0.0, 0.0];
        let b = vec![4.0, 0.0];
        assert!(label("between", &[vec![2.0, 0.0], a.clone(), b.clone()]));
        assert!(!label("between", &[vec![5.0, 0.0], a.clone(), b.clone()]));
        assert!(!label("between", &[vec![2.0, 1.0], a.clone(), b.clone()]));
        assert!((boundary_distance("between", &[vec![2.0, 0.0], a, b]) - 0.3).abs() < 1e-12);
    }
}
