//! `regionmap` — discover insensitivity regions of benchmark objectives and
//! approximate them with local surrogates.
//!
//! Subcommands: `run` executes one experiment cell, `sweep` scans a budget
//! range for one or both strategies, `verify` replays the self-check suite.
//! Exit codes: 0 success, 1 at least one failed verification check,
//! 2 configuration or execution error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use regionmap::harness::{run_experiment, run_sweep, Algorithm, ExperimentConfig};
use regionmap::problems::Case;
use regionmap::surrogates::Method;
use regionmap::verify;
use regionmap::{Error, Result};

#[derive(Parser)]
#[command(name = "regionmap", version, about = "Insensitivity-region discovery and approximation")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Run one experiment: repeated pipelines on a (case, strategy, budget) cell.
    Run(RunArgs),
    /// Run experiments across a budget range for one or both strategies.
    Sweep(SweepArgs),
    /// Run the self-verification checks and print a pass/fail table.
    Verify(VerifyArgs),
}

/// Experiment settings shared by `run` and `sweep`. Every flag is optional:
/// flags override the config file, the file overrides built-in defaults.
#[derive(Args)]
struct ConfigArgs {
    /// Benchmark case: I, II or III.
    #[arg(long)]
    case: Option<Case>,
    /// Global strategy: hms or nea2.
    #[arg(long)]
    algo: Option<Algorithm>,
    /// Global-phase evaluation budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Independent repeats per cell.
    #[arg(long)]
    repeats: Option<usize>,
    /// Base seed; repeat i runs with seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated approximation methods (l2, h1, kriging).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Sublevel offset defining an approximated region.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Concurrent runs (default: REGIONMAP_JOBS, then machine parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON configuration file; flags given here override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(case) = self.case {
            config.case = case;
        }
        if let Some(algo) = self.algo {
            config.algorithm = algo;
        }
        if let Some(budget) = self.budget {
            config.budget = budget;
        }
        if let Some(repeats) = self.repeats {
            config.repeats = repeats;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if !self.methods.is_empty() {
            config.methods = self.methods.clone();
        }
        if let Some(epsilon) = self.epsilon {
            config.epsilon = epsilon;
        }
        if let Some(jobs) = self.jobs {
            config.jobs = Some(jobs);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    settings: ConfigArgs,
    /// Output directory for the report and data files.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    settings: ConfigArgs,
    /// Budget range as start:stop:step (inclusive), e.g. 2000:10000:2000.
    #[arg(long, value_name = "START:STOP:STEP")]
    budgets: String,
    /// Strategies to sweep (default: both).
    #[arg(long, value_delimiter = ',', default_values = ["hms", "nea2"])]
    algos: Vec<Algorithm>,
    /// Output root; each cell writes into its own subdirectory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check numbers to run (default: all twelve).
    #[arg(long, value_delimiter = ',')]
    only: Vec<usize>,
}

fn parse_budget_range(text: &str) -> Result<Vec<u64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(Error::Config(format!(
            "budget range {text:?} must look like start:stop:step"
        )));
    };
    let parse = |part: &str| {
        part.trim()
            .parse::<u64>()
            .map_err(|e| Error::Config(format!("budget range {text:?}: {e}")))
    };
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if step == 0 || stop < start {
        return Err(Error::Config(format!(
            "budget range {text:?} must move forward with a positive step"
        )));
    }
    Ok((start..=stop).step_by(step as usize).collect())
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let config = args.settings.resolve()?;
    let report = run_experiment(&config, &args.out)?;
    println!(
        "case {} / {} / budget {}: {} runs ({} excluded) -> {}",
        config.case,
        config.algorithm,
        config.budget,
        report.runs.len(),
        report.excluded,
        args.out.display()
    );
    for (metric, stat) in &report.aggregate {
        println!("  {metric:<24} {:>10.4} +/- {:.4}", stat.mean, stat.std);
    }
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let base = args.settings.resolve()?;
    let budgets = parse_budget_range(&args.budgets)?;
    let mut algos = args.algos.clone();
    algos.dedup();
    let cells = run_sweep(&base, &algos, &budgets, &args.out)?;
    println!(
        "swept {} cells into {} (summary.csv at the root)",
        cells.len(),
        args.out.display()
    );
    for (algorithm, budget, report) in &cells {
        let note = report
            .aggregate
            .iter()
            .filter(|(metric, _)| metric.starts_with("hausdorff") || *metric == "coverage")
            .map(|(metric, stat)| format!("{metric} {:.3}", stat.mean))
            .collect::<Vec<_>>()
            .join(", ");
        println!("  {algorithm} budget {budget}: {note}");
    }
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let ids: Vec<usize> = if args.only.is_empty() {
        (1..=verify::CHECK_COUNT).collect()
    } else {
        args.only.clone()
    };
    for &id in &ids {
        if !(1..=verify::CHECK_COUNT).contains(&id) {
            return Err(Error::Config(format!(
                "check {id} does not exist (valid: 1..={})",
                verify::CHECK_COUNT
            )));
        }
    }
    let binary = std::env::current_exe().ok();
    let mut failures = 0;
    for id in ids {
        let outcome = verify::run_check(id, binary.as_deref());
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{:>2} {verdict} {:<46} {}", outcome.id, outcome.name, outcome.details);
        if !outcome.passed {
            failures += 1;
        }
    }
    Ok(if failures == 0 { 0 } else { 1 })
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        CliCommand::Run(args) => cmd_run(args),
        CliCommand::Sweep(args) => cmd_sweep(args),
        CliCommand::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(2);
        }
    }
}
