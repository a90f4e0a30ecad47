//! `olt` command line: optimize, sweep, rollout and verify.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::artifacts::{self, ArtifactWriter};
use crate::config::{ExperimentConfig, LoadedConfig};
use crate::error::{Error, Result};
use crate::harness::{budget_sweep, rollout, run_campaign, ThetaArtifact};
use crate::mdp::GenerativeModel;
use crate::tree::{baseline_scorer, BaselineKind, Scorer};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
const DEFAULT_OUT: &str = "olt-out";

#[derive(Debug, Parser)]
#[command(name = "olt", version, about = "Optimized look-ahead tree policies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tune θ with the configured optimizer and evaluate it on held-out states.
    Optimize(CommonArgs),
    /// Run one campaign per budget listed under `sweep.budgets`.
    Sweep(CommonArgs),
    /// Roll out a fixed scorer from every training initial state.
    Rollout(RolloutArgs),
    /// Check the artifacts of an output directory against the config.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory [default: config output.dir, then $OLT_OUT, then ./olt-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum concurrent objective evaluations.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("scorer").required(true).args(["theta", "preset"]))]
pub struct RolloutArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// θ file: a `best_theta.json` artifact or a bare JSON array.
    #[arg(long)]
    pub theta: Option<PathBuf>,
    /// uniform, greedy or optimistic.
    #[arg(long)]
    pub preset: Option<String>,
}

struct Prepared {
    loaded: LoadedConfig,
    out_dir: PathBuf,
    hash: String,
}

impl Prepared {
    fn config(&self) -> &ExperimentConfig {
        &self.loaded.config
    }

    fn writer(&self) -> Result<ArtifactWriter<'_>> {
        ArtifactWriter::new(&self.out_dir, self.hash.clone(), self.config().record_wallclock())
    }
}

fn prepare(args: &CommonArgs) -> Result<Prepared> {
    let mut loaded = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        loaded.config.seed = seed;
    }
    loaded.validate()?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| loaded.config.output.as_ref().and_then(|o| o.dir.clone()))
        .or_else(|| std::env::var_os("OLT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let hash = loaded.config.hash();
    Ok(Prepared { loaded, out_dir, hash })
}

fn cmd_optimize(args: &CommonArgs) -> Result<()> {
    let p = prepare(args)?;
    let c = p.config();
    let space = c.theta_space()?;
    let mut writer = p.writer()?;
    match run_campaign(&c.spec(), &c.optimizer, &space, c.seed, args.workers) {
        Ok(campaign) => {
            writer.trace_csv(&campaign.run)?;
            writer.run_json(&campaign.run)?;
            writer.json(artifacts::BEST_THETA_JSON, &campaign.best_theta)?;
            writer.json(artifacts::HOLDOUT_JSON, &campaign.holdout)?;
            println!(
                "best J = {} after {} evaluations; held-out J = {}",
                campaign.run.best_value, campaign.run.evaluations, campaign.holdout.best_theta
            );
            Ok(())
        }
        Err(e) => {
            if let Some(partial) = e.partial_run() {
                writer.trace_csv(partial)?;
                writer.run_json(partial)?;
            }
            Err(e)
        }
    }
}

fn cmd_sweep(args: &CommonArgs) -> Result<()> {
    let p = prepare(args)?;
    let c = p.config();
    let Some(sweep) = &c.sweep else {
        return Err(p.loaded.error_at("sweep", "sweep command needs a `sweep` section with `budgets`"));
    };
    let space = c.theta_space()?;
    let rows = budget_sweep(&c.spec(), &sweep.budgets, &c.optimizer, &space, c.seed, args.workers)?;
    let mut writer = p.writer()?;
    writer.sweep_csv(&rows)?;
    writer.sweep_json(&rows)?;
    for row in &rows {
        println!("B = {:>5}: J_optimized = {} (uniform {}, greedy {})", row.budget, row.j_optimized, row.j_uniform, row.j_greedy);
    }
    Ok(())
}

fn read_theta(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: cannot read θ file: {e}", path.display())))?;
    if let Ok(weights) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(weights);
    }
    serde_json::from_str::<ThetaArtifact>(&text)
        .map(|a| a.weights)
        .map_err(|e| Error::Config(format!("{}:{}: not a θ artifact: {e}", path.display(), e.line())))
}

fn cmd_rollout(args: &RolloutArgs) -> Result<()> {
    let p = prepare(&args.common)?;
    let c = p.config();
    let scorer = match (&args.theta, &args.preset) {
        (Some(path), _) => {
            let weights = read_theta(path)?;
            if weights.len() != c.domain.feature_dimension() {
                return Err(Error::Config(format!(
                    "θ has {} weights but {} has {} features",
                    weights.len(),
                    c.domain.key(),
                    c.domain.feature_dimension()
                )));
            }
            Scorer::linear(weights).map_err(|e| Error::Config(e.to_string()))?
        }
        (None, Some(name)) => baseline_scorer(name.parse::<BaselineKind>()?, &c.domain),
        (None, None) => unreachable!("clap requires --theta or --preset"),
    };
    let spec = c.spec();
    let records = spec
        .training_states()?
        .iter()
        .map(|s| rollout(&spec.domain, s, &scorer, spec.budget, spec.horizon))
        .collect::<Result<Vec<_>>>()?;
    p.writer()?.rollout_jsonl(&records, spec.domain.discount())?;
    for (i, r) in records.iter().enumerate() {
        println!("episode {i}: return {}", r.discounted_return);
    }
    Ok(())
}

fn cmd_verify(args: &CommonArgs) -> Result<bool> {
    let p = prepare(args)?;
    let report = artifacts::verify_dir(&p.out_dir, &p.hash)?;
    for name in &report.checked {
        println!("checked {name}");
    }
    for problem in &report.problems {
        eprintln!("mismatch: {problem}");
    }
    Ok(report.ok())
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

/// Runs a parsed command line and maps the outcome onto the exit-code contract.
pub fn run(cli: Cli) -> ExitCode {
    let outcome = match &cli.command {
        Command::Optimize(a) => cmd_optimize(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Rollout(a) => cmd_rollout(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RUNTIME),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
