//! Influence-propagation graphs and the ip task ladder.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const NODES_PER_GRAPH: usize = 60;
pub const MEAN_OUT_DEGREE: f64 = 3.5;
pub const SEED_FRACTION: f64 = 0.1;
/// Threshold on max_influence and on score.
pub const TAU: f64 = 0.5;
/// Examples whose deciding value lies this close to τ are discarded.
pub const IP_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug)]
pub struct IpTask {
    pub name: &'static str,
    /// Per-iteration timeout in seconds.
    pub timeout_s: u64,
    pub threshold: Option<Threshold>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threshold {
    /// max_influence(A) > τ on the head node.
    Influence,
    /// score(C) > τ on some triangle partner C.
    PartnerScore,
}

pub const TASKS: &[IpTask] = &[
    IpTask { name: "ip1_active", timeout_s: 30, threshold: None },
    IpTask { name: "ip2_active", timeout_s: 60, threshold: Some(Threshold::Influence) },
    IpTask { name: "ip3_active", timeout_s: 120, threshold: None },
    IpTask { name: "ip3_threshold", timeout_s: 120, threshold: Some(Threshold::Influence) },
    IpTask { name: "ip4_high_score", timeout_s: 180, threshold: Some(Threshold::PartnerScore) },
];

pub fn task(name: &str) -> Option<&'static IpTask> {
    TASKS.iter().find(|t| t.name == name)
}

/// A directed graph with node scores, weighted `propagates` edges and seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct IpGraph {
    pub nodes: Vec<String>,
    pub score: Vec<f64>,
    pub seed: Vec<bool>,
    /// (from, to, weight)
    pub edges: Vec<(usize, usize, f64)>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    edge_set: HashSet<(usize, usize)>,
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

impl IpGraph {
    pub fn new(nodes: Vec<String>, score: Vec<f64>, seed: Vec<bool>, edges: Vec<(usize, usize, f64)>) -> Self {
        let n = nodes.len();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        let mut edge_set = HashSet::new();
        for &(a, b, _) in &edges {
            succ[a].push(b);
            pred[b].push(a);
            edge_set.insert((a, b));
        }
        IpGraph { nodes, score, seed, edges, succ, pred, edge_set }
    }

    /// Erdős–Rényi digraph without self-loops.
    pub fn random(prefix: &str, rng: &mut ChaCha8Rng) -> Self {
        let n = NODES_PER_GRAPH;
        let p = MEAN_OUT_DEGREE / (n - 1) as f64;
        let nodes = (0..n).map(|i| format!("{prefix}_n{i}")).collect();
        let score = (0..n).map(|_| round4(rng.gen_range(0.0..1.0))).collect();
        let seed = (0..n).map(|_| rng.gen_bool(SEED_FRACTION)).collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && rng.gen_bool(p) {
                    edges.push((a, b, round4(rng.gen_range(0.0..1.0))));
                }
            }
        }
        IpGraph::new(nodes, score, seed, edges)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_set.contains(&(a, b))
    }

    /// Largest incoming edge weight; 0 for sources.
    pub fn max_influence(&self, a: usize) -> f64 {
        self.edges.iter().filter(|e| e.1 == a).map(|e| e.2).fold(0.0, f64::max)
    }

    /// Some in-neighbour is a seed.
    pub fn seeded_1hop(&self, a: usize) -> bool {
        self.pred[a].iter().any(|&b| self.seed[b])
    }

    /// Some seed reaches `a` in exactly two steps.
    pub fn seeded_2hop(&self, a: usize) -> bool {
        self.pred[a].iter().any(|&c| self.pred[c].iter().any(|&b| self.seed[b]))
    }

    /// Nodes C closing a directed triangle A→B→C→A.
    pub fn triangle_partners(&self, a: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.succ[a]
            .iter()
            .flat_map(|&b| self.succ[b].iter().copied())
            .filter(|&c| c != a && self.has_edge(c, a))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn on_triangle(&self, a: usize) -> bool {
        !self.triangle_partners(a).is_empty()
    }
}

/// Whether the structural part of the task holds at `a`.
pub fn structure(task: &IpTask, g: &IpGraph, a: usize) -> bool {
    match task.name {
        "ip1_active" => g.seeded_1hop(a),
        "ip2_active" => g.seeded_2hop(a),
        _ => g.on_triangle(a),
    }
}

/// The value compared with τ when the structure holds.
pub fn deciding_value(task: &IpTask, g: &IpGraph, a: usize) -> Option<f64> {
    match task.threshold? {
        Threshold::Influence => Some(g.max_influence(a)),
        Threshold::PartnerScore => g.triangle_partners(a).iter().map(|&c| g.score[c]).reduce(f64::max),
    }
}

pub fn label(task: &IpTask, g: &IpGraph, a: usize) -> bool {
    structure(task, g, a) && deciding_value(task, g, a).is_none_or(|v| v > TAU)
}

/// Negative strata: structure holds but the threshold fails, or the
/// structure fails. Threshold-on-head tasks draw structure failures from
/// nodes above τ so the threshold alone does not separate the classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stratum {
    Positive,
    BelowThreshold,
    NoStructure,
}

/// The stratum of node `a`, or `None` when it falls in the margin band or
/// belongs to no stratum.
pub fn stratum(task: &IpTask, g: &IpGraph, a: usize) -> Option<Stratum> {
    let s = structure(task, g, a);
    let v = deciding_value(task, g, a);
    if s {
        if let Some(v) = v {
            if (v - TAU).abs() < IP_MARGIN {
                return None;
            }
            return Some(if v > TAU { Stratum::Positive } else { Stratum::BelowThreshold });
        }
        return Some(Stratum::Positive);
    }
    if task.threshold == Some(Threshold::Influence) {
        let m = g.max_influence(a);
        if m <= TAU + IP_MARGIN {
            return None;
        }
    }
    Some(Stratum::NoStructure)
}

/// Node visiting order for one graph.
pub fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> IpGraph {
        let nodes = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        IpGraph::new(nodes, vec![0.2, 0.4, 0.8], vec![false; 3], vec![(0, 1, 0.3), (1, 2, 0.6), (2, 0, 0.9)])
    }

    #[test]
    fn three_cycle_with_high_influence_is_active() {
        let g = triangle();
        assert_eq!(g.max_influence(0), 0.9);
        assert_eq!(g.triangle_partners(0), vec![2]);
        assert!(label(task("ip3_threshold").unwrap(), &g, 0));
        // b's in-edge has weight 0.3
        assert!(!label(task("ip3_threshold").unwrap(), &g, 1));
        assert!(label(task("ip3_active").unwrap(), &g, 1));
    }

    #[test]
    fn partner_score_threshold() {
        let g = triangle();
        let t = task("ip4_high_score").unwrap();
        // partner of a is c (0.8), of b is a (0.2)
        assert!(label(t, &g, 0));
        assert!(!label(t, &g, 1));
    }

    #[test]
    fn sources_have_zero_influence() {
        let g = IpGraph::new(vec!["a".into(), "b".into()], vec![0.0, 0.0], vec![true, false], vec![(0, 1, 0.7)]);
        assert_eq!(g.max_influence(0), 0.0);
        assert!(g.seeded_1hop(1));
        assert!(!g.seeded_2hop(1));
    }
}
