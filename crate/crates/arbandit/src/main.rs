//! Command-line front end: run config-driven experiments, the built-in
//! presets, the equivalence battery, or a Bayesian-prior experiment, and
//! write the results as CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use arbandit::harness::{
    emit_bayes_csv, emit_csv, emit_test_reports_csv, preset, run_bayes, run_experiment,
    ExperimentConfig,
};

const SEED_ENV: &str = "ARBANDIT_SEED";
const WORKERS_ENV: &str = "ARBANDIT_WORKERS";
const EQUIV_FAMILY_LEVEL: f64 = 0.01;

#[derive(Parser)]
#[command(
    name = "arbandit",
    version,
    about = "Compare two bandit policies with independent or replay-coupled experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override (also settable via ARBANDIT_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Five-armed Bernoulli instance, two UCB1 variants.
    Example1 {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Two-armed Bernoulli instance, UCB1 against Thompson sampling.
    Example2 {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Five-armed Gaussian instance, Thompson sampling against eps-greedy.
    Example3 {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replay-vs-shared-stack equivalence battery on a config file.
    Equivalence {
        config: PathBuf,
        /// Replications per design (defaults to the config's m_var).
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Prior-averaged experiment over sampled instances (needs a bayes block).
    Bayes {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    init_workers()?;
    match cli.command {
        Command::Run { config, output } => {
            let cfg = load_config(&config, &output)?;
            let table = run_experiment(&cfg)?;
            write_out(&output.out, |w| emit_csv(&table, w))
        }
        Command::Example1 { output } => run_preset("example1", &output),
        Command::Example2 { output } => run_preset("example2", &output),
        Command::Example3 { output } => run_preset("example3", &output),
        Command::Equivalence { config, m, output } => {
            let cfg = load_config(&config, &output)?;
            let instance = cfg.instance.build("instance")?;
            let pi0 = cfg.policy0.build("policy0")?;
            let pi1 = cfg.policy1.build("policy1")?;
            let horizon = cfg.horizons[0];
            let m = m.unwrap_or(cfg.m_var);
            let reports = arbandit::equivtest::check_equivalence(
                &pi0,
                &pi1,
                &instance,
                horizon,
                m,
                cfg.master_seed,
                EQUIV_FAMILY_LEVEL,
            )?;
            write_out(&output.out, |w| emit_test_reports_csv(&reports, w))
        }
        Command::Bayes { config, output } => {
            let cfg = load_config(&config, &output)?;
            let table = run_bayes(&cfg)?;
            write_out(&output.out, |w| emit_bayes_csv(&table, w))
        }
    }
}

fn run_preset(name: &str, output: &OutputArgs) -> Result<()> {
    let mut cfg = preset(name).expect("built-in preset");
    if let Some(seed) = seed_override(output)? {
        cfg.master_seed = seed;
    }
    let table = run_experiment(&cfg)?;
    write_out(&output.out, |w| emit_csv(&table, w))
}

fn load_config(path: &Path, output: &OutputArgs) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    if let Some(seed) = seed_override(output)? {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Seed precedence: --seed flag, then ARBANDIT_SEED, then the config value.
fn seed_override(output: &OutputArgs) -> Result<Option<u64>> {
    if let Some(seed) = output.seed {
        return Ok(Some(seed));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            let seed = v
                .parse::<u64>()
                .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))?;
            Ok(Some(seed))
        }
        Err(_) => Ok(None),
    }
}

fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("{WORKERS_ENV} must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing worker pool")?;
    }
    Ok(())
}

fn write_out<F>(out: &Option<PathBuf>, emit: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match out {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("creating output file {}", path.display()))?;
            let mut w = BufWriter::new(file);
            emit(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            emit(&mut w)?;
        }
    }
    Ok(())
}
