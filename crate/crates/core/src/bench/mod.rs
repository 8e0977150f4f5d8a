//! Deterministic task generators for the geometry families and the IP
//! graphs, with ground-truth labels and the train/test split.

pub mod geometry;
pub mod ip;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::logic::serialize_dataset;
use crate::logic::{sym, Atom, Background, Dataset, Example, LogicError, Polarity, Sym};
use crate::templates::Theory;

pub const GEOMETRY_N: usize = 200;
pub const IP_N: usize = 300;
/// Margin band half-width, in first-order normalized units.
pub const MARGIN: f64 = 0.25;
pub const SPLIT_RATIO: f64 = 0.7;
pub const MAX_DRAWS: usize = 1_000_000;
pub const IP_HEAD: &str = "active";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Geometry0,
    Geometry1,
    Geometry2,
    Geometry3,
    Ip,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Geometry0, Family::Geometry1, Family::Geometry2, Family::Geometry3, Family::Ip];

    pub fn name(self) -> &'static str {
        match self {
            Family::Geometry0 => "geometry0",
            Family::Geometry1 => "geometry1",
            Family::Geometry2 => "geometry2",
            Family::Geometry3 => "geometry3",
            Family::Ip => "ip",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s.to_ascii_lowercase())
    }

    pub fn tasks(self) -> Vec<&'static str> {
        match self {
            Family::Ip => ip::TASKS.iter().map(|t| t.name).collect(),
            f => geometry::TASKS.iter().filter(|t| t.family == f).map(|t| t.name).collect(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn family_of(task: &str) -> Option<Family> {
    if let Some(t) = geometry::task(task) {
        return Some(t.family);
    }
    ip::task(task).map(|_| Family::Ip)
}

pub fn all_tasks() -> Vec<(Family, &'static str)> {
    Family::ALL.into_iter().flat_map(|f| f.tasks().into_iter().map(move |t| (f, t))).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("missing attribute {attr} of {obj}")]
    MissingAttribute { obj: String, attr: String },
    #[error("`{task}` needed more than {draws} draws to fill its class quotas")]
    TooManyDraws { task: String, draws: usize },
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub family: Family,
    pub task_name: String,
    pub n_examples: usize,
    pub seed: u64,
    pub split_ratio: f64,
}

impl TaskSpec {
    pub fn new(task: &str, seed: u64) -> Result<Self, BenchError> {
        let family = family_of(task).ok_or_else(|| BenchError::UnknownTask(task.to_string()))?;
        let n_examples = if family == Family::Ip { IP_N } else { GEOMETRY_N };
        Ok(TaskSpec { family, task_name: task.to_string(), n_examples, seed, split_ratio: SPLIT_RATIO })
    }

    /// The target is one conjunctive clause of the family's language.
    pub fn is_conjunctive(&self) -> bool {
        geometry::task(&self.task_name).is_none_or(|t| t.conjunctive)
    }

    pub fn head_predicate(&self) -> &str {
        if self.family == Family::Ip {
            IP_HEAD
        } else {
            &self.task_name
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        // FNV-1a, so every task draws from its own sequence
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.task_name.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ h);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: String,
    pub family: Family,
    pub seed: u64,
    pub n: usize,
    pub n_train: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub true_params: BTreeMap<String, f64>,
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub spec: TaskSpec,
    pub dataset: Dataset,
    pub manifest: Manifest,
}

impl Generated {
    pub fn train(&self) -> Dataset {
        self.dataset.subset(&ids(&self.manifest.train))
    }

    pub fn test(&self) -> Dataset {
        self.dataset.subset(&ids(&self.manifest.test))
    }

    /// Writes `<task>.facts` and `<task>.manifest.json`; returns both paths.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), BenchError> {
        std::fs::create_dir_all(dir)?;
        let data = dir.join(format!("{}.facts", self.spec.task_name));
        let man = dir.join(format!("{}.manifest.json", self.spec.task_name));
        std::fs::write(&data, serialize_dataset(&self.dataset))?;
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&man, json + "\n")?;
        Ok((data, man))
    }
}

fn ids(v: &[String]) -> Vec<Sym> {
    v.iter().map(|s| sym(s)).collect()
}

/// Shuffled split with `floor(ratio·n)` training ids.
pub fn split(ids: &[Sym], ratio: f64, rng: &mut ChaCha8Rng) -> (Vec<Sym>, Vec<Sym>) {
    let mut v = ids.to_vec();
    v.shuffle(rng);
    let n_train = ((ratio * v.len() as f64) + 1e-9).floor() as usize;
    let test = v.split_off(n_train.min(v.len()));
    (v, test)
}

pub fn generate(spec: &TaskSpec) -> Result<Generated, BenchError> {
    let (bg, examples, true_params) = match spec.family {
        Family::Ip => generate_ip(spec)?,
        _ => generate_geometry(spec)?,
    };
    let theory = if spec.family == Family::Geometry3 { Theory::Nra } else { Theory::Lra };
    let all: Vec<Sym> = examples.iter().map(|e| e.id.clone()).collect();
    let dataset = Dataset::new(bg, examples, theory)?;
    let (train, test) = split(&all, spec.split_ratio, &mut spec.rng(1));
    let manifest = Manifest {
        task: spec.task_name.clone(),
        family: spec.family,
        seed: spec.seed,
        n: all.len(),
        n_train: train.len(),
        train: train.iter().map(|s| s.to_string()).collect(),
        test: test.iter().map(|s| s.to_string()).collect(),
        true_params,
        margin: if spec.family == Family::Ip { ip::IP_MARGIN } else { MARGIN },
    };
    Ok(Generated { spec: spec.clone(), dataset, manifest })
}

type Parts = (Background, Vec<Example>, BTreeMap<String, f64>);

fn object_names(i: usize, count: usize) -> Vec<String> {
    if count == 1 {
        vec![format!("o{i}")]
    } else {
        (0..count).map(|j| format!("o{i}_{j}")).collect()
    }
}

fn generate_geometry(spec: &TaskSpec) -> Result<Parts, BenchError> {
    let t = geometry::task(&spec.task_name).ok_or_else(|| BenchError::UnknownTask(spec.task_name.clone()))?;
    let mut rng = spec.rng(0);
    let quota = [spec.n_examples / 2, spec.n_examples - spec.n_examples / 2];
    let mut filled = [0usize; 2];
    let mut bg = Background::new();
    let mut examples = Vec::with_capacity(spec.n_examples);
    let mut draws = 0;
    while filled != quota {
        draws += 1;
        if draws > MAX_DRAWS {
            return Err(BenchError::TooManyDraws { task: spec.task_name.clone(), draws: MAX_DRAWS });
        }
        let objs: Vec<Vec<f64>> =
            geometry::propose(t, &mut rng).into_iter().map(|o| o.into_iter().map(geometry::round4).collect()).collect();
        if geometry::boundary_distance(t.name, &objs) < MARGIN {
            continue;
        }
        let pos = geometry::label(t.name, &objs);
        let class = usize::from(!pos);
        if filled[class] == quota[class] {
            continue;
        }
        filled[class] += 1;
        let i = examples.len();
        let names = object_names(i, objs.len());
        for ((name, kind), vals) in names.iter().zip(t.kinds).zip(&objs) {
            for (attr, v) in kind.attrs().iter().zip(vals) {
                bg.set_measure(name, attr, *v)?;
            }
        }
        let args: Vec<&str> = names.iter().map(String::as_str).collect();
        let polarity = if pos { Polarity::Positive } else { Polarity::Negative };
        examples.push(Example::new(&format!("e{i}"), polarity, Atom::new(t.name, &args)));
    }
    let params = t.params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Ok((bg, examples, params))
}

fn generate_ip(spec: &TaskSpec) -> Result<Parts, BenchError> {
    use ip::Stratum;
    let t = ip::task(&spec.task_name).ok_or_else(|| BenchError::UnknownTask(spec.task_name.clone()))?;
    let mut rng = spec.rng(0);
    let n_pos = spec.n_examples / 2;
    let n_neg = spec.n_examples - n_pos;
    // Threshold tasks split negatives between the two failure modes.
    let mut quota: HashMap<Stratum, usize> = HashMap::from([(Stratum::Positive, n_pos)]);
    if t.threshold.is_some() {
        quota.insert(Stratum::BelowThreshold, n_neg / 2);
        quota.insert(Stratum::NoStructure, n_neg - n_neg / 2);
    } else {
        quota.insert(Stratum::NoStructure, n_neg);
    }
    let mut bg = Background::new();
    bg.declare("propagates", 2)?;
    bg.declare("seed", 1)?;
    let mut examples = Vec::with_capacity(spec.n_examples);
    let mut draws = 0;
    let mut k = 0;
    while quota.values().any(|&q| q > 0) {
        let g = ip::IpGraph::random(&format!("g{k}"), &mut rng);
        k += 1;
        let mut chosen = Vec::new();
        for a in ip::shuffled(g.len(), &mut rng) {
            draws += 1;
            if draws > MAX_DRAWS {
                return Err(BenchError::TooManyDraws { task: spec.task_name.clone(), draws: MAX_DRAWS });
            }
            let Some(s) = ip::stratum(t, &g, a) else { continue };
            let q = quota.get_mut(&s).expect("every stratum has a quota");
            if *q > 0 {
                *q -= 1;
                chosen.push((a, s == Stratum::Positive));
            }
        }
        if chosen.is_empty() {
            continue;
        }
        for &(a, b, _) in &g.edges {
            bg.add_fact("propagates", &[&g.nodes[a], &g.nodes[b]])?;
        }
        for (i, name) in g.nodes.iter().enumerate() {
            if g.seed[i] {
                bg.add_fact("seed", &[name])?;
            }
            bg.set_measure(name, "score", g.score[i])?;
            bg.set_measure(name, "max_influence", g.max_influence(i))?;
        }
        for (a, pos) in chosen {
            let i = examples.len();
            let polarity = if pos { Polarity::Positive } else { Polarity::Negative };
            examples.push(Example::new(&format!("e{i}"), polarity, Atom::new(IP_HEAD, &[&g.nodes[a]])));
        }
    }
    let mut params = BTreeMap::from([("tau".to_string(), ip::TAU)]);
    params.insert("nodes_per_graph".into(), ip::NODES_PER_GRAPH as f64);
    params.insert("mean_out_degree".into(), ip::MEAN_OUT_DEGREE);
    Ok((bg, examples, params))
}

fn value(bg: &Background, obj: &str, attr: &str) -> Result<f64, BenchError> {
    bg.measure(obj, attr).ok_or_else(|| BenchError::MissingAttribute { obj: obj.to_string(), attr: attr.to_string() })
}

/// Ground truth for `head` computed from the background alone.
pub fn true_label(task: &str, bg: &Background, head: &Atom) -> Result<bool, BenchError> {
    if let Some(t) = geometry::task(task) {
        let mut objs = Vec::with_capacity(t.kinds.len());
        for (obj, kind) in head.args.iter().zip(t.kinds) {
            let vals = kind.attrs().iter().map(|a| value(bg, obj, a)).collect::<Result<Vec<_>, _>>()?;
            objs.push(vals);
        }
        if objs.len() != t.kinds.len() {
            return Err(LogicError::PredicateArity { pred: task.into(), expected: t.kinds.len(), got: objs.len() }.into());
        }
        return Ok(geometry::label(task, &objs));
    }
    let t = ip::task(task).ok_or_else(|| BenchError::UnknownTask(task.to_string()))?;
    let a = &head.args[0];
    let edges = bg.facts("propagates");
    let preds_of = |n: &Sym| edges.iter().filter(|e| &e[1] == n).map(|e| e[0].clone()).collect::<Vec<_>>();
    let succs_of = |n: &Sym| edges.iter().filter(|e| &e[0] == n).map(|e| e[1].clone()).collect::<HashSet<_>>();
    let is_seed = |n: &Sym| bg.holds(&Atom::new("seed", &[n]));
    let structure_partners: Vec<Sym> = match t.name {
        "ip1_active" => preds_of(a).into_iter().filter(|b| is_seed(b)).collect(),
        "ip2_active" => preds_of(a).into_iter().filter(|c| preds_of(c).iter().any(|b| is_seed(b))).collect(),
        _ => {
            // closing nodes C of a→B→C→a
            let into_a: HashSet<Sym> = preds_of(a).into_iter().collect();
            let mut cs: Vec<Sym> = succs_of(a)
                .iter()
                .flat_map(|b| succs_of(b))
                .filter(|c| c != a && into_a.contains(c))
                .collect();
            cs.sort();
            cs.dedup();
            cs
        }
    };
    if structure_partners.is_empty() {
        return Ok(false);
    }
    match t.threshold {
        None => Ok(true),
        Some(ip::Threshold::Influence) => Ok(value(bg, a, "max_influence")? > ip::TAU),
        Some(ip::Threshold::PartnerScore) => {
            for c in &structure_partners {
                if value(bg, c, "score")? > ip::TAU {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_inventory() {
        let counts: Vec<usize> = Family::ALL.iter().map(|f| f.tasks().len()).collect();
        assert_eq!(counts, vec![2, 4, 10, 14, 5]);
    }

    #[test]
    fn hundred_examples_split_seventy_thirty() {
        let ids: Vec<Sym> = (0..100).map(|i| sym(&format!("e{i}"))).collect();
        let (tr, te) = split(&ids, 0.7, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!((tr.len(), te.len()), (70, 30));
        let mut all: Vec<Sym> = tr.into_iter().chain(te).collect();
        all.sort();
        let mut expect = ids.clone();
        expect.sort();
        assert_eq!(all, expect);
    }

    #[test]
    fn thirty_splits_to_twenty_one() {
        let ids: Vec<Sym> = (0..30).map(|i| sym(&format!("e{i}"))).collect();
        let (tr, _) = split(&ids, 0.7, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(tr.len(), 21);
    }

    #[test]
    fn geometry_generation_is_balanced_and_consistent() {
        let g = generate(&TaskSpec::new("donut", 7).unwrap()).unwrap();
        assert_eq!(g.dataset.positives.len(), 100);
        assert_eq!(g.dataset.negatives.len(), 100);
        for e in g.dataset.examples() {
            assert_eq!(true_label("donut", &g.dataset.background, &e.head).unwrap(), e.is_positive());
        }
        assert_eq!(g.manifest.n_train, 140);
    }

    #[test]
    fn ip_generation_is_consistent() {
        let g = generate(&TaskSpec::new("ip3_threshold", 1).unwrap()).unwrap();
        assert_eq!(g.dataset.len(), IP_N);
        for e in g.dataset.examples() {
            assert_eq!(true_label("ip3_threshold", &g.dataset.background, &e.head).unwrap(), e.is_positive());
        }
    }

    #[test]
    fn missing_attribute_is_an_error() {
        let bg = Background::new();
        let r = true_label("in_circle", &bg, &Atom::new("in_circle", &["p"]));
        assert!(matches!(r, Err(BenchError::MissingAttribute { .. })));
    }
}
