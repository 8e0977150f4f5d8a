//! Suite runner: per-family biases and budgets, trials, result files,
//! summary tables and the IP ablation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{self, geometry, Family, Generated, TaskSpec};
use crate::fit::{self, ParamPolicy, RuleLine, ScoredRule};
use crate::learn::{run_learning, LearnResult, LoopConfig};
use crate::logic::{parse_clause, parse_dataset, Background, ClausePlan, Dataset, Head, LogicError};
use crate::search::{InventedPredicate, LanguageBias, TemplateUse};
use crate::smt::{acceptability_check, Acceptability, Backend, BuiltinFitter, Cmp, Expr, Formula, SmtLibProcess};
use crate::templates::TemplateId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Builtin,
    External,
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<BackendKind> {
        match s {
            "builtin" => Some(BackendKind::Builtin),
            "external" => Some(BackendKind::External),
            _ => None,
        }
    }
}

/// Ablation configuration. `Full` is the default pipeline for every family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    NoPi,
    PiOnly,
    Full,
}

impl Mode {
    pub const ABLATION: [Mode; 3] = [Mode::NoPi, Mode::PiOnly, Mode::Full];

    pub fn name(self) -> &'static str {
        match self {
            Mode::NoPi => "no_pi",
            Mode::PiOnly => "pi_only",
            Mode::Full => "full",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySettings {
    pub literal_budget: usize,
    /// Per-iteration wall-clock limit.
    pub timeout_s: u64,
    pub trials: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub base_seed: u64,
    pub backend: BackendKind,
    /// Overrides `SMTILP_SOLVER_CMD` for the external backend.
    pub solver_cmd: Option<String>,
    pub out_dir: PathBuf,
    /// Trials run in parallel up to this many at once.
    pub workers: usize,
    pub geometry0: FamilySettings,
    pub geometry1: FamilySettings,
    pub geometry2: FamilySettings,
    pub geometry3: FamilySettings,
    pub ip: FamilySettings,
    /// Per-task timeouts for the IP ladder, overriding `ip.timeout_s`.
    pub ip_timeouts_s: BTreeMap<String, u64>,
    /// Loop settings shared by every task; budget, timeout and invention
    /// are set per family and mode.
    pub learner: LoopConfig,
}

fn settings(literal_budget: usize, timeout_s: u64, trials: usize) -> FamilySettings {
    FamilySettings { literal_budget, timeout_s, trials }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            base_seed: 0,
            backend: BackendKind::Builtin,
            solver_cmd: None,
            out_dir: PathBuf::from("results"),
            workers: 1,
            geometry0: settings(3, 45, 10),
            geometry1: settings(6, 120, 10),
            geometry2: settings(5, 30, 5),
            geometry3: settings(6, 60, 5),
            ip: settings(4, 60, 5),
            ip_timeouts_s: bench::ip::TASKS.iter().map(|t| (t.name.to_string(), t.timeout_s)).collect(),
            learner: LoopConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Smt(#[from] crate::smt::SmtError),
    #[error("external solver `{0}` is not available")]
    SolverUnavailable(String),
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let err = |e: &dyn std::fmt::Display| HarnessError::Config(e.to_string());
        let mut table: toml::Table = toml::from_str(text).map_err(|e| err(&e))?;
        // Family tables may be partial; missing keys keep that family's defaults.
        let defaults = toml::Table::try_from(SuiteConfig::default()).map_err(|e| err(&e))?;
        for f in Family::ALL {
            let key = f.to_string();
            if let (Some(toml::Value::Table(given)), Some(toml::Value::Table(def))) =
                (table.get_mut(&key), defaults.get(&key))
            {
                for (k, v) in def {
                    given.entry(k.clone()).or_insert_with(|| v.clone());
                }
            }
        }
        let cfg: SuiteConfig = toml::Value::Table(table).try_into().map_err(|e| err(&e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        SuiteConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.learner.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        for f in Family::ALL {
            let s = self.family(f);
            if s.literal_budget == 0 {
                return Err(HarnessError::Config(format!("{f}: literal_budget must be at least 1")));
            }
            if s.timeout_s == 0 {
                return Err(HarnessError::Config(format!("{f}: timeout_s must be positive")));
            }
        }
        Ok(())
    }

    pub fn family(&self, f: Family) -> &FamilySettings {
        match f {
            Family::Geometry0 => &self.geometry0,
            Family::Geometry1 => &self.geometry1,
            Family::Geometry2 => &self.geometry2,
            Family::Geometry3 => &self.geometry3,
            Family::Ip => &self.ip,
        }
    }

    pub fn family_mut(&mut self, f: Family) -> &mut FamilySettings {
        match f {
            Family::Geometry0 => &mut self.geometry0,
            Family::Geometry1 => &mut self.geometry1,
            Family::Geometry2 => &mut self.geometry2,
            Family::Geometry3 => &mut self.geometry3,
            Family::Ip => &mut self.ip,
        }
    }

    pub fn timeout(&self, task: &str) -> Duration {
        let family = bench::family_of(task).unwrap_or(Family::Geometry0);
        let s = match family {
            Family::Ip => self.ip_timeouts_s.get(task).copied().unwrap_or(self.ip.timeout_s),
            f => self.family(f).timeout_s,
        };
        Duration::from_secs(s)
    }

    /// A fresh backend for one trial.
    pub fn backend(&self, seed: u64) -> Box<dyn Backend> {
        match self.backend {
            BackendKind::Builtin => Box::new(BuiltinFitter::with_seed(seed)),
            BackendKind::External => Box::new(match &self.solver_cmd {
                Some(c) => SmtLibProcess::new(c),
                None => SmtLibProcess::from_env(),
            }),
        }
    }

    pub fn check_backend(&self) -> Result<(), HarnessError> {
        if self.backend == BackendKind::External {
            let p = match &self.solver_cmd {
                Some(c) => SmtLibProcess::new(c),
                None => SmtLibProcess::from_env(),
            };
            if !p.available() {
                return Err(HarnessError::SolverUnavailable(p.command.join(" ")));
            }
        }
        Ok(())
    }
}

fn head_vars(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'P' + i as u8) as char).to_string()).collect()
}

fn uses(t: TemplateId, attrs: &[&str]) -> TemplateUse {
    TemplateUse::new(t, attrs)
}

/// The language bias of a task's family.
pub fn bias_for(task: &str, literal_budget: usize) -> Result<LanguageBias, HarnessError> {
    use TemplateId::*;
    let family = bench::family_of(task).ok_or_else(|| bench::BenchError::UnknownTask(task.to_string()))?;
    let mut bias = LanguageBias { literal_budget, ..LanguageBias::default() };
    match family {
        Family::Ip => {
            bias.head = Head::new(bench::IP_HEAD, &["A"]);
            bias.predicates = vec![("propagates".into(), 2), ("seed".into(), 1)];
            bias.templates = vec![uses(InfluenceThreshold, &["max_influence"]), uses(InfluenceThreshold, &["score"])];
            bias.max_invented = 4;
            bias.max_body_vars = 4;
            return Ok(bias);
        }
        _ => {
            let t = geometry::task(task).expect("geometry family");
            let vars = head_vars(t.kinds.len());
            let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
            bias.head = Head::new(task, &refs);
            bias.max_body_vars = 0;
        }
    }
    bias.templates = match family {
        Family::Geometry0 => vec![uses(Interval1d, &["x"]), uses(Interval1d, &["y"]), uses(Halfplane2d, &["x", "y"])],
        Family::Geometry1 => vec![
            uses(Interval1d, &["x"]),
            uses(Interval1d, &["y"]),
            uses(Interval1d, &["z"]),
            uses(Halfplane2d, &["x", "y"]),
            uses(Halfplane2d, &["x", "z"]),
            uses(Halfplane2d, &["y", "z"]),
            uses(Halfplane3d, &["x", "y", "z"]),
        ],
        Family::Geometry2 => {
            bias.attr_groups = vec![
                vec!["x".into(), "x_min".into(), "x_max".into()],
                vec!["y".into(), "y_min".into(), "y_max".into()],
            ];
            vec![
                TemplateUse::free(VarCmp(Cmp::Lt)),
                TemplateUse::free(AbsDiff),
                TemplateUse::free(DiffThreshold),
                uses(DistanceThreshold, &["x", "y"]),
                uses(Box2d, &["x", "y"]),
                uses(Collinear3pt, &["x", "y"]),
                uses(Between3pt, &["x", "y"]),
            ]
        }
        _ => [
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
            Box2d,
            Halfplane2d,
            OutsideDisc,
        ]
        .into_iter()
        .map(|t| uses(t, &["x", "y"]))
        .chain([uses(Interval1d, &["x"]), uses(Interval1d, &["y"])])
        .collect(),
    };
    Ok(bias)
}

/// Loop settings for one task, mode and training split.
pub fn loop_config(cfg: &SuiteConfig, task: &str, mode: Mode, train: &Dataset) -> LoopConfig {
    let family = bench::family_of(task).unwrap_or(Family::Geometry0);
    let mut lc = cfg.learner.clone();
    lc.literal_budget = Some(cfg.family(family).literal_budget);
    lc.timeout = cfg.timeout(task);
    lc.range_relations = matches!(family, Family::Geometry0 | Family::Geometry1);
    lc.arithmetic_relations = lc.range_relations;
    lc.halfplane3d = family == Family::Geometry1;
    lc.predicate_invention = family == Family::Ip && mode != Mode::NoPi;
    if mode == Mode::PiOnly {
        lc.param_policy = ParamPolicy::Fixed(pi_only_threshold(train));
    }
    lc
}

/// Median `max_influence` over the training head objects.
pub fn pi_only_threshold(train: &Dataset) -> f64 {
    let head = Head::new(bench::IP_HEAD, &["A"]);
    fit::attribute_median(train, &head, &crate::logic::AttrTerm::new("max_influence", "A")).unwrap_or(bench::ip::TAU)
}

/// One record per (task, mode, trial). Timing lives in [`TimingRecord`]
/// so that this file is reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub task: String,
    pub family: Family,
    pub mode: Mode,
    pub trial: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub n_test: usize,
    pub n_rules: usize,
    pub iterations: usize,
    pub timed_out: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub task: String,
    pub mode: Mode,
    pub trial: usize,
    pub generate_s: f64,
    pub learn_s: f64,
    pub evaluate_s: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub task: String,
    pub mode: Mode,
    pub trial: usize,
    pub id: String,
    pub label: bool,
    pub predicted: bool,
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub record: ResultRecord,
    pub timing: TimingRecord,
    pub predictions: Vec<Prediction>,
    /// Rules file contents; empty when learning failed.
    pub rules: String,
}

/// Rules file: `define` lines for invented predicates, then one rule per line.
pub fn rules_file(result: &LearnResult) -> String {
    let mut out = String::new();
    for p in &result.invented {
        let _ = writeln!(out, "define {}", p.definition);
    }
    for r in &result.rules {
        let _ = writeln!(out, "{r}");
    }
    out
}

pub struct RuleSet {
    pub defines: Vec<InventedPredicate>,
    pub rules: Vec<RuleLine>,
}

pub fn parse_rules_file(text: &str) -> Result<RuleSet, LogicError> {
    let mut set = RuleSet { defines: Vec::new(), rules: Vec::new() };
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        let at = |e: LogicError| match e {
            LogicError::Parse { msg, .. } => LogicError::Parse { line: i + 1, msg },
            e => e,
        };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(d) = line.strip_prefix("define ") {
            let definition = parse_clause(d).map_err(at)?;
            set.defines.push(InventedPredicate { name: definition.head.pred.clone(), definition });
        } else {
            set.rules.push(fit::parse_rule(line).map_err(at)?);
        }
    }
    Ok(set)
}

pub fn predict_lines(rules: &[RuleLine], bg: &Background, example: &crate::logic::Example) -> Result<bool, LogicError> {
    for r in rules {
        if ClausePlan::new(&r.clause, bg)?.covers(example, &r.params) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Accuracy of a rules file on every example of a dataset.
pub fn evaluate_rules(rules_text: &str, dataset_text: &str) -> Result<EvalReport, LogicError> {
    let set = parse_rules_file(rules_text)?;
    let ds = parse_dataset(dataset_text)?;
    let mut bg = (*ds.background).clone();
    for d in &set.defines {
        d.materialize(&mut bg)?;
    }
    let mut correct = 0;
    for e in ds.examples() {
        if predict_lines(&set.rules, &bg, e)? == e.is_positive() {
            correct += 1;
        }
    }
    let n = ds.len();
    Ok(EvalReport { n, correct, accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 } })
}

/// The acceptability conditions for a rule set on a dataset: with the
/// fitted parameters asserted, `h ∧ ¬e` is unsatisfiable for every
/// positive and `h ∧ e` for every negative. Slots are renamed per rule so
/// the rules do not share parameters.
pub fn check_acceptability(
    rules: &[ScoredRule],
    ds: &Dataset,
    bg: &Background,
    backend: &dyn Backend,
    timeout: Duration,
) -> Result<Acceptability, HarnessError> {
    let mut h = Vec::new();
    let mut plans = Vec::new();
    for (i, r) in rules.iter().enumerate() {
        for (k, v) in &r.params {
            h.push(Formula::eq(Expr::var(&format!("r{i}_{k}")), Expr::c(*v)));
        }
        plans.push((i, ClausePlan::new(&r.clause, bg)?));
    }
    let encode = |e: &crate::logic::Example| -> Result<(String, Formula), LogicError> {
        let mut parts = Vec::new();
        for (i, plan) in &plans {
            let f = plan.encode(e)?;
            parts.push(f.substitute(&|v| Some(Expr::var(&format!("r{i}_{v}")))));
        }
        Ok((e.id.to_string(), Formula::or(parts)))
    };
    let pos = ds.positives.iter().map(encode).collect::<Result<Vec<_>, _>>()?;
    let neg = ds.negatives.iter().map(encode).collect::<Result<Vec<_>, _>>()?;
    acceptability_check(backend, &Formula::True, &Formula::and(h), &pos, &neg, timeout)
        .map_err(HarnessError::from)
}

pub fn trial_seed(cfg: &SuiteConfig, trial: usize) -> u64 {
    cfg.base_seed + trial as u64
}

/// Generates, learns on the training split and evaluates on the test split.
pub fn run_task(cfg: &SuiteConfig, task: &str, mode: Mode, trial: usize) -> Result<TrialOutcome, HarnessError> {
    let started = Instant::now();
    let seed = trial_seed(cfg, trial);
    let spec = TaskSpec::new(task, seed)?;
    let gen: Generated = bench::generate(&spec)?;
    let (train, test) = (gen.train(), gen.test());
    let generate_s = started.elapsed().as_secs_f64();

    let bias = bias_for(task, cfg.family(spec.family).literal_budget)?;
    let lc = loop_config(cfg, task, mode, &train);
    let backend = cfg.backend(seed);
    let t_learn = Instant::now();
    let learned = run_learning(&train, &bias, &lc, backend.as_ref());
    let learn_s = t_learn.elapsed().as_secs_f64();

    let mut record = ResultRecord {
        task: task.to_string(),
        family: spec.family,
        mode,
        trial,
        seed,
        accuracy: None,
        n_test: test.len(),
        n_rules: 0,
        iterations: 0,
        timed_out: false,
        error: None,
    };
    let t_eval = Instant::now();
    let mut predictions = Vec::new();
    let mut rules = String::new();
    match learned {
        Err(e) => {
            log::warn!("{task} trial {trial} ({}): {e}", mode.name());
            record.error = Some(e.to_string());
        }
        Ok(res) => {
            record.n_rules = res.rules.len();
            record.iterations = res.log.len();
            record.timed_out = res.log.iter().any(|r| r.timed_out);
            let mut correct = 0;
            for e in test.examples() {
                let predicted = crate::learn::predict(&res.rules, e, &res.background)?;
                correct += usize::from(predicted == e.is_positive());
                predictions.push(Prediction {
                    task: task.to_string(),
                    mode,
                    trial,
                    id: e.id.to_string(),
                    label: e.is_positive(),
                    predicted,
                });
            }
            record.accuracy = Some(if test.is_empty() { 0.0 } else { correct as f64 / test.len() as f64 });
            rules = rules_file(&res);
        }
    }
    let evaluate_s = t_eval.elapsed().as_secs_f64();
    let timing = TimingRecord {
        task: task.to_string(),
        mode,
        trial,
        generate_s,
        learn_s,
        evaluate_s,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(TrialOutcome { record, timing, predictions, rules })
}

/// All trials of one task, in trial order.
pub fn run_trials(cfg: &SuiteConfig, task: &str, mode: Mode, trials: usize) -> Vec<TrialOutcome> {
    let run = || {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                run_task(cfg, task, mode, t).unwrap_or_else(|e| {
                    log::warn!("{task} trial {t}: {e}");
                    failed(cfg, task, mode, t, e.to_string())
                })
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(cfg.workers.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

fn failed(cfg: &SuiteConfig, task: &str, mode: Mode, trial: usize, error: String) -> TrialOutcome {
    TrialOutcome {
        record: ResultRecord {
            task: task.to_string(),
            family: bench::family_of(task).unwrap_or(Family::Geometry0),
            mode,
            trial,
            seed: trial_seed(cfg, trial),
            accuracy: None,
            n_test: 0,
            n_rules: 0,
            iterations: 0,
            timed_out: false,
            error: Some(error),
        },
        timing: TimingRecord {
            task: task.to_string(),
            mode,
            trial,
            generate_s: 0.0,
            learn_s: 0.0,
            evaluate_s: 0.0,
            wall_time_s: 0.0,
        },
        predictions: Vec::new(),
        rules: String::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task: String,
    pub mode: Mode,
    pub trials: usize,
    pub failed: usize,
    /// Percent, over successful trials.
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_time_s: f64,
    pub std_time_s: f64,
}

/// Mean and sample standard deviation; 0 deviation for fewer than two values.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(outcomes: &[TrialOutcome]) -> Vec<Summary> {
    let mut groups: Vec<((String, Mode), Vec<&TrialOutcome>)> = Vec::new();
    for o in outcomes {
        let key = (o.record.task.clone(), o.record.mode);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(o),
            None => groups.push((key, vec![o])),
        }
    }
    groups
        .into_iter()
        .map(|((task, mode), v)| {
            let acc: Vec<f64> = v.iter().filter_map(|o| o.record.accuracy).map(|a| 100.0 * a).collect();
            let time: Vec<f64> = v.iter().map(|o| o.timing.wall_time_s).collect();
            let (mean_accuracy, std_accuracy) = mean_std(&acc);
            let (mean_time_s, std_time_s) = mean_std(&time);
            Summary {
                task,
                mode,
                trials: v.len(),
                failed: v.len() - acc.len(),
                mean_accuracy,
                std_accuracy,
                mean_time_s,
                std_time_s,
            }
        })
        .collect()
}

pub fn render_table(title: &str, rows: &[Summary]) -> String {
    let mut out = format!("{title}\n");
    let _ = writeln!(out, "{:<22} {:>14} {:>16} {:>7}", "Task", "Accuracy (%)", "Time (s)", "Failed");
    for s in rows {
        let _ = writeln!(
            out,
            "{:<22} {:>14} {:>16} {:>7}",
            s.task,
            format!("{:.0} ± {:.0}", s.mean_accuracy, s.std_accuracy),
            format!("{:.2} ± {:.2}", s.mean_time_s, s.std_time_s),
            s.failed
        );
    }
    out
}

/// Accuracy per mode side by side; `N/A` where every trial failed.
pub fn render_ablation_table(rows: &[Summary]) -> String {
    let mut out = String::from("IP ablation\n");
    let _ = writeln!(out, "{:<18} {:>10} {:>10} {:>10}", "Task", "No PI", "PI Only", "PI+SMT");
    let mut tasks: Vec<&str> = Vec::new();
    for s in rows {
        if !tasks.contains(&s.task.as_str()) {
            tasks.push(&s.task);
        }
    }
    for t in tasks {
        let cell = |m: Mode| match rows.iter().find(|s| s.task == t && s.mode == m) {
            Some(s) if s.failed < s.trials => format!("{:.0} ± {:.0}", s.mean_accuracy, s.std_accuracy),
            _ => "N/A".to_string(),
        };
        let _ = writeln!(out, "{:<18} {:>10} {:>10} {:>10}", t, cell(Mode::NoPi), cell(Mode::PiOnly), cell(Mode::Full));
    }
    out
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub outcomes: Vec<TrialOutcome>,
    pub summaries: Vec<Summary>,
    pub table: String,
}

fn jsonl<T: Serialize>(items: impl Iterator<Item = T>) -> String {
    items.map(|i| serde_json::to_string(&i).expect("records serialize") + "\n").collect()
}

/// Writes results.jsonl, timings.jsonl, predictions.jsonl, table.txt and
/// one rules file per trial under `dir`.
pub fn write_report(dir: &Path, report: &SuiteReport) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir.join("rules"))?;
    std::fs::write(dir.join("results.jsonl"), jsonl(report.outcomes.iter().map(|o| &o.record)))?;
    std::fs::write(dir.join("timings.jsonl"), jsonl(report.outcomes.iter().map(|o| &o.timing)))?;
    std::fs::write(dir.join("predictions.jsonl"), jsonl(report.outcomes.iter().flat_map(|o| &o.predictions)))?;
    std::fs::write(dir.join("table.txt"), &report.table)?;
    for o in &report.outcomes {
        let r = &o.record;
        let name = format!("{}.{}.t{}.rules", r.task, r.mode.name(), r.trial);
        std::fs::write(dir.join("rules").join(name), &o.rules)?;
    }
    Ok(())
}

/// Every task of the given families, `Full` mode, with per-family trials.
pub fn run_suite(cfg: &SuiteConfig, families: &[Family]) -> Result<SuiteReport, HarnessError> {
    cfg.validate()?;
    cfg.check_backend()?;
    let mut outcomes = Vec::new();
    let mut table = String::new();
    for &f in families {
        let mut fam = Vec::new();
        for task in f.tasks() {
            log::info!("{f}/{task}");
            fam.extend(run_trials(cfg, task, Mode::Full, cfg.family(f).trials));
        }
        table += &render_table(f.name(), &summarize(&fam));
        table.push('\n');
        outcomes.extend(fam);
    }
    let summaries = summarize(&outcomes);
    let report = SuiteReport { outcomes, summaries, table };
    write_report(&cfg.out_dir, &report)?;
    Ok(report)
}

/// The three ablation modes on every IP task, budget fixed by `cfg.ip`.
pub fn run_ablation_ip(cfg: &SuiteConfig) -> Result<SuiteReport, HarnessError> {
    run_ablation_tasks(cfg, &Family::Ip.tasks())
}

pub fn run_ablation_tasks(cfg: &SuiteConfig, tasks: &[&str]) -> Result<SuiteReport, HarnessError> {
    cfg.validate()?;
    cfg.check_backend()?;
    let mut outcomes = Vec::new();
    for task in tasks {
        for mode in Mode::ABLATION {
            log::info!("{task} ({})", mode.name());
            outcomes.extend(run_trials(cfg, task, mode, cfg.ip.trials));
        }
    }
    let summaries = summarize(&outcomes);
    let table = render_ablation_table(&summaries);
    let report = SuiteReport { outcomes, summaries, table };
    write_report(&cfg.out_dir.join("ablation"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_family_settings() {
        let c = SuiteConfig::default();
        assert_eq!(c.family(Family::Geometry0).literal_budget, 3);
        assert_eq!(c.timeout("interval"), Duration::from_secs(45));
        assert_eq!(c.timeout("ip4_high_score"), Duration::from_secs(180));
        assert_eq!(c.timeout("ip1_active"), Duration::from_secs(30));
        assert_eq!(c.family(Family::Geometry2).trials, 5);
    }

    #[test]
    fn toml_overrides() {
        let c = SuiteConfig::from_toml("base_seed = 7\n[geometry0]\nliteral_budget = 2\ntimeout_s = 5\ntrials = 1\n").unwrap();
        assert_eq!(c.base_seed, 7);
        assert_eq!(c.geometry0.literal_budget, 2);
        assert_eq!(c.geometry3.literal_budget, 6);
    }

    #[test]
    fn zero_t_max_is_rejected() {
        let r = SuiteConfig::from_toml("[learner]\nt_max = 0\n");
        assert!(matches!(r, Err(HarnessError::Config(_))));
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[90.0, 92.0, 94.0]);
        assert_eq!(m, 92.0);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn every_task_has_a_valid_bias() {
        for (_, task) in bench::all_tasks() {
            let g = bench::generate(&TaskSpec::new(task, 0).unwrap()).unwrap();
            let b = bias_for(task, 3).unwrap();
            b.validate(&g.dataset.background).unwrap_or_else(|e| panic!("{task}: {e}"));
        }
    }
}
