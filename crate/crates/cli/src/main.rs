use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use smtilp::bench::{self, Family, TaskSpec};
use smtilp::harness::{self, BackendKind, Mode, SuiteConfig, SuiteReport};

#[derive(Parser)]
#[command(name = "smtilp", version, about = "Rule learning with solver-fitted numeric constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML suite configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `builtin` or `external` (an SMT-LIB solver, `SMTILP_SOLVER_CMD` or `z3 -in`).
    #[arg(long)]
    backend: Option<String>,
    /// Output directory for results, timings, predictions and rules.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per task, overriding the family setting.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel trials.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a task's dataset and manifest.
    Gen {
        task: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run one task over several trials.
    Learn {
        task: String,
        /// `full`, `no_pi` or `pi_only`.
        #[arg(long, default_value = "full")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run every task of the given families.
    Suite {
        families: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// IP ablation: no invention, invention with frozen thresholds, full pipeline.
    AblateIp {
        /// Restrict to these tasks.
        #[arg(long)]
        tasks: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Accuracy of a rules file on a dataset file.
    Eval { rules: PathBuf, dataset: PathBuf },
    /// List the tasks of every family.
    Tasks,
}

fn config(c: &Common, families: &[Family]) -> Result<SuiteConfig> {
    let mut cfg = match &c.config {
        Some(p) => SuiteConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => SuiteConfig::default(),
    };
    if let Some(b) = &c.backend {
        cfg.backend = BackendKind::parse(b).with_context(|| format!("unknown backend `{b}`"))?;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.base_seed = s;
    }
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(t) = c.trials {
        for &f in families {
            cfg.family_mut(f).trials = t;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print(report: &SuiteReport, cfg: &SuiteConfig) {
    print!("{}", report.table);
    for o in &report.outcomes {
        if let Some(e) = &o.record.error {
            eprintln!("{} trial {}: {e}", o.record.task, o.record.trial);
        }
    }
    eprintln!("results written to {}", cfg.out_dir.display());
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Gen { task, seed, out } => {
            let g = bench::generate(&TaskSpec::new(&task, seed)?)?;
            let (d, m) = g.write(&out)?;
            println!("{}\n{}", d.display(), m.display());
        }
        Command::Learn { task, mode, common } => {
            let family = bench::family_of(&task).with_context(|| format!("unknown task `{task}`"))?;
            let mode = match mode.as_str() {
                "full" => Mode::Full,
                "no_pi" => Mode::NoPi,
                "pi_only" => Mode::PiOnly,
                m => bail!("unknown mode `{m}`"),
            };
            let cfg = config(&common, &[family])?;
            cfg.check_backend()?;
            let outcomes = harness::run_trials(&cfg, &task, mode, cfg.family(family).trials);
            let summaries = harness::summarize(&outcomes);
            let table = harness::render_table(&format!("{task} ({})", mode.name()), &summaries);
            let report = SuiteReport { outcomes, summaries, table };
            harness::write_report(&cfg.out_dir, &report)?;
            print(&report, &cfg);
        }
        Command::Suite { families, common } => {
            let fams = families
                .iter()
                .map(|f| Family::parse(f).with_context(|| format!("unknown family `{f}`")))
                .collect::<Result<Vec<_>>>()?;
            let cfg = config(&common, &fams)?;
            let report = harness::run_suite(&cfg, &fams)?;
            print(&report, &cfg);
        }
        Command::AblateIp { tasks, common } => {
            let cfg = config(&common, &[Family::Ip])?;
            let report = if tasks.is_empty() {
                harness::run_ablation_ip(&cfg)?
            } else {
                let refs: Vec<&str> = tasks.iter().map(String::as_str).collect();
                harness::run_ablation_tasks(&cfg, &refs)?
            };
            print(&report, &cfg);
        }
        Command::Eval { rules, dataset } => {
            let r = std::fs::read_to_string(&rules).with_context(|| format!("reading {}", rules.display()))?;
            let d = std::fs::read_to_string(&dataset).with_context(|| format!("reading {}", dataset.display()))?;
            let rep = harness::evaluate_rules(&r, &d)?;
            println!("accuracy {:.4} ({}/{})", rep.accuracy, rep.correct, rep.n);
        }
        Command::Tasks => {
            for f in Family::ALL {
                println!("{f}: {}", f.tasks().join(" "));
            }
        }
    }
    Ok(())
}
