//! Flat JSON experiment configuration and its resolution against suite defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use powertrace_core::estimator::{AeMode, AE_SUCCESS_PROBABILITY};
use powertrace_core::numkernel::qubit_cap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::canonical_json;

/// Environment variable overriding the master seed.
pub const SEED_ENV: &str = "POWERTRACE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Approx,
    Estimate,
    Baseline,
    Bounds,
    Bqp,
    Apps,
    Separation,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Approx => "approx",
            Suite::Estimate => "estimate",
            Suite::Baseline => "baseline",
            Suite::Bounds => "bounds",
            Suite::Bqp => "bqp",
            Suite::Apps => "apps",
            Suite::Separation => "separation",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    RandomMixed,
    Diagonal,
    Pure,
    Named,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    PauliString,
    Projector,
    RandomHermitian,
    Named,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsExperiment {
    Helstrom,
    Lecam,
    Hybrid,
}

/// On-disk configuration. Every field is optional; missing fields take the
/// defaults of the suite being run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub suite: Option<Suite>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub k: Option<Vec<u32>>,
    pub eps: Option<Vec<f64>>,
    pub qubits: Option<u32>,
    pub rank: Option<usize>,
    pub shots: Option<u64>,
    /// Amplitude-estimation grid size.
    #[serde(rename = "K")]
    pub grid_k: Option<u64>,
    pub q: Option<f64>,
    pub c: Option<f64>,
    pub runs: Option<usize>,
    pub state_kind: Option<StateKind>,
    pub state_name: Option<String>,
    pub observable_kind: Option<ObservableKind>,
    pub observable: Option<String>,
    pub ae_mode: Option<AeMode>,
    pub m_values: Option<Vec<u64>>,
    pub t_values: Option<Vec<u64>>,
    pub experiment: Option<BoundsExperiment>,
    pub pass_threshold: Option<f64>,
    pub confidence_z: Option<f64>,
}

impl Config {
    /// Parses a config; errors carry `origin:line:column`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow!("{origin}:{}:{}: {e}", e.line(), e.column()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Command-line overrides; these win over both the file and the environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub k: Option<Vec<u32>>,
    pub eps: Option<Vec<f64>>,
    pub qubits: Option<u32>,
    pub rank: Option<usize>,
    pub shots: Option<u64>,
    pub grid_k: Option<u64>,
    pub q: Option<f64>,
}

/// Fully specified experiment definition; this is what gets hashed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub suite: Suite,
    pub seed: u64,
    pub k: Vec<u32>,
    pub eps: Vec<f64>,
    pub qubits: u32,
    pub rank: usize,
    pub shots: u64,
    #[serde(rename = "K")]
    pub grid_k: Option<u64>,
    pub q: f64,
    pub c: f64,
    pub runs: usize,
    pub state_kind: StateKind,
    pub state_name: Option<String>,
    pub observable_kind: ObservableKind,
    pub observable: Option<String>,
    pub ae_mode: AeMode,
    pub m_values: Vec<u64>,
    pub t_values: Vec<u64>,
    pub experiment: BoundsExperiment,
    pub pass_threshold: f64,
    pub confidence_z: f64,
}

/// Settings that affect where and how fast a suite runs, not what it computes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub out: PathBuf,
    /// Worker threads; 0 lets rayon choose.
    pub jobs: usize,
}

struct Defaults {
    k: Vec<u32>,
    eps: Vec<f64>,
    qubits: u32,
    rank: usize,
    shots: u64,
    runs: usize,
    state_kind: StateKind,
    observable_kind: ObservableKind,
    ae_mode: AeMode,
    pass_threshold: f64,
}

fn defaults(suite: Suite) -> Defaults {
    let base = Defaults {
        k: vec![4],
        eps: vec![0.05],
        qubits: 2,
        rank: 2,
        shots: 10_000,
        runs: 20,
        state_kind: StateKind::RandomMixed,
        observable_kind: ObservableKind::PauliString,
        ae_mode: AeMode::Sampled,
        pass_threshold: 1.0,
    };
    match suite {
        Suite::Approx => Defaults { k: vec![8, 16, 32, 64, 128], eps: vec![1e-3], runs: 1, ..base },
        Suite::Estimate => Defaults { pass_threshold: AE_SUCCESS_PROBABILITY - 0.05, ..base },
        Suite::Baseline => Defaults { k: vec![2, 3, 4], qubits: 1, runs: 1, ..base },
        Suite::Bounds => Defaults { k: vec![10, 20, 40, 80], eps: vec![0.01, 0.005, 0.002, 0.001, 0.0005], qubits: 1, runs: 1, ..base },
        Suite::Bqp => Defaults { k: vec![5], qubits: 2, runs: 10, ..base },
        Suite::Apps => Defaults { k: vec![2], qubits: 1, runs: 200, pass_threshold: 0.95, ..base },
        Suite::Separation => Defaults { k: vec![4, 8, 16, 32, 64], qubits: 1, runs: 1, ..base },
    }
}

/// Merges file, environment and command line (in increasing precedence) over suite defaults.
pub fn resolve(suite: Suite, file: &Config, cli: &Overrides, env_seed: Option<&str>) -> Result<(ResolvedConfig, RunSettings)> {
    if let Some(s) = file.suite {
        if s != suite {
            bail!("config is for suite `{s}` but `{suite}` was requested");
        }
    }
    let d = defaults(suite);
    let env_seed = env_seed
        .map(|s| s.trim().parse::<u64>().map_err(|e| anyhow!("{SEED_ENV}={s:?} is not a u64: {e}")))
        .transpose()?;
    let cfg = ResolvedConfig {
        suite,
        seed: cli.seed.or(env_seed).or(file.seed).unwrap_or(0),
        k: cli.k.clone().or_else(|| file.k.clone()).unwrap_or(d.k),
        eps: cli.eps.clone().or_else(|| file.eps.clone()).unwrap_or(d.eps),
        qubits: cli.qubits.or(file.qubits).unwrap_or(d.qubits),
        rank: cli.rank.or(file.rank).unwrap_or(d.rank),
        shots: cli.shots.or(file.shots).unwrap_or(d.shots),
        grid_k: cli.grid_k.or(file.grid_k),
        q: cli.q.or(file.q).unwrap_or(10.0),
        c: file.c.unwrap_or(0.5),
        runs: file.runs.unwrap_or(d.runs),
        state_kind: file.state_kind.unwrap_or(d.state_kind),
        state_name: file.state_name.clone(),
        observable_kind: file.observable_kind.unwrap_or(d.observable_kind),
        observable: file.observable.clone(),
        ae_mode: file.ae_mode.unwrap_or(d.ae_mode),
        m_values: file.m_values.clone().unwrap_or_else(|| vec![0, 1, 2, 4, 8, 16, 32, 64, 128, 256]),
        t_values: file.t_values.clone().unwrap_or_else(|| vec![1, 10, 100, 1000, 10_000]),
        experiment: file.experiment.unwrap_or(BoundsExperiment::Helstrom),
        pass_threshold: file.pass_threshold.unwrap_or(d.pass_threshold),
        confidence_z: file.confidence_z.unwrap_or(powertrace_core::bounds::DEFAULT_CONFIDENCE_Z),
    };
    cfg.validate()?;
    let settings = RunSettings {
        out: cli.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        jobs: cli.jobs.or(file.jobs).unwrap_or(0),
    };
    Ok((cfg, settings))
}

impl ResolvedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() || self.eps.is_empty() {
            bail!("k and eps lists must be nonempty");
        }
        if let Some(bad) = self.k.iter().find(|&&k| k == 0) {
            bail!("k values must be positive, got {bad}");
        }
        if let Some(bad) = self.eps.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            bail!("eps values must lie in (0, 1], got {bad}");
        }
        if self.qubits == 0 || self.qubits > qubit_cap() {
            bail!("qubits must lie in 1..={}, got {}", qubit_cap(), self.qubits);
        }
        if self.rank == 0 || self.rank > 1usize << self.qubits {
            bail!("rank must lie in 1..={}, got {}", 1usize << self.qubits, self.rank);
        }
        if self.shots < 2 {
            bail!("shots must be at least 2, got {}", self.shots);
        }
        if self.runs == 0 {
            bail!("runs must be positive");
        }
        if !(0.0..=1.0).contains(&self.pass_threshold) {
            bail!("pass_threshold must lie in [0, 1], got {}", self.pass_threshold);
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            bail!("c must lie in (0, 1), got {}", self.c);
        }
        if !(self.q > 0.0) {
            bail!("q must be positive, got {}", self.q);
        }
        if !(self.confidence_z > 0.0) {
            bail!("confidence_z must be positive, got {}", self.confidence_z);
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = canonical_json(self).expect("config serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }
}
