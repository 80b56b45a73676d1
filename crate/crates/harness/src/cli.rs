//! Command-line surface.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::{resolve, Config, Overrides, ResolvedConfig, RunSettings, Suite, SEED_ENV};
use crate::exit;
use crate::suites::run_suite;

#[derive(Debug, Parser)]
#[command(name = "powertrace", version, about = "Run Tr(rho^k O) estimation experiments")]
pub struct Cli {
    /// JSON experiment definition.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root of the output tree.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config file and the environment.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 picks the number of cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chebyshev degree law for x^k.
    Approx(SuiteArgs),
    /// End-to-end trace-power estimation against the dense oracle.
    Estimate(SuiteArgs),
    /// Generalized swap test.
    Baseline(SuiteArgs),
    /// Helstrom, Le Cam and hybrid-argument constructions.
    Bounds(SuiteArgs),
    /// BQP reduction identity on random circuits.
    Bqp(SuiteArgs),
    /// Rényi entropy and virtual-distillation ratios.
    Apps(SuiteArgs),
    /// Swap-test copies against estimator queries.
    Separation(SuiteArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SuiteArgs {
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub qubits: Option<u32>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Amplitude-estimation grid size (a power of two).
    #[arg(long = "K")]
    pub grid_k: Option<u64>,
    /// Polynomial in the BQP reduction, `λ = 1 − 1/(qk)`.
    #[arg(long)]
    pub q: Option<f64>,
}

impl Command {
    pub fn split(&self) -> (Suite, &SuiteArgs) {
        match self {
            Command::Approx(a) => (Suite::Approx, a),
            Command::Estimate(a) => (Suite::Estimate, a),
            Command::Baseline(a) => (Suite::Baseline, a),
            Command::Bounds(a) => (Suite::Bounds, a),
            Command::Bqp(a) => (Suite::Bqp, a),
            Command::Apps(a) => (Suite::Apps, a),
            Command::Separation(a) => (Suite::Separation, a),
        }
    }
}

impl Cli {
    /// Reads the config file and merges it with the environment seed and the flags.
    pub fn resolve(&self, env_seed: Option<&str>) -> Result<(ResolvedConfig, RunSettings)> {
        let (suite, args) = self.command.split();
        let file = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        let overrides = Overrides {
            seed: self.seed,
            jobs: self.jobs,
            out: self.out.clone(),
            k: args.k.clone(),
            eps: args.eps.clone(),
            qubits: args.qubits,
            rank: args.rank,
            shots: args.shots,
            grid_k: args.grid_k,
            q: args.q,
        };
        resolve(suite, &file, &overrides, env_seed)
    }
}

/// Runs the parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> u8 {
    let env_seed = std::env::var(SEED_ENV).ok();
    let (cfg, settings) = match cli.resolve(env_seed.as_deref()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return exit::CONFIG;
        }
    };
    match run_suite(&cfg, &settings) {
        Ok(run) => {
            let s = &run.summary;
            let fraction = s.pass_fraction.map_or_else(|| "n/a".to_owned(), |f| format!("{f:.4}"));
            println!(
                "{} {}: {} records, {} errors, pass fraction {} (threshold {}), {}",
                s.suite,
                s.config_hash,
                s.records,
                s.errors,
                fraction,
                s.pass_threshold,
                if s.ok { "ok" } else { "FAILED" }
            );
            for c in &s.checks {
                println!("  {} {} = {:.6}", if c.pass { "pass" } else { "FAIL" }, c.name, c.value);
            }
            for r in run.records.iter().filter(|r| r.error.is_some()) {
                eprintln!("record {}: {}", r.record_index, r.error.as_deref().unwrap_or_default());
            }
            println!("{}", run.dir.display());
            if s.ok {
                exit::OK
            } else {
                exit::FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::FAILED
        }
    }
}
