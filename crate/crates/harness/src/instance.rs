//! Instance generation from a resolved config and a per-record seed.

use anyhow::{bail, Result};
use powertrace_core::instances::{random_density, random_observable};
use powertrace_core::numkernel::{DensityMatrix, Observable};
use powertrace_core::rng::{derive_seed, stream};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::config::{ObservableKind, ResolvedConfig, StateKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub qubits: u32,
    pub rank: usize,
    pub seed: u64,
    pub state_kind: StateKind,
    pub observable_kind: ObservableKind,
    pub k: u32,
    pub eps: f64,
}

impl InstanceSpec {
    pub fn from_config(cfg: &ResolvedConfig, seed: u64, k: u32, eps: f64) -> Self {
        Self {
            qubits: cfg.qubits,
            rank: cfg.rank,
            seed,
            state_kind: cfg.state_kind,
            observable_kind: cfg.observable_kind,
            k,
            eps,
        }
    }
}

/// Seed of record `index` under the master seed.
pub fn record_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

pub fn build_state(cfg: &ResolvedConfig, spec: &InstanceSpec) -> Result<DensityMatrix> {
    let state_seed = derive_seed(spec.seed, 0);
    Ok(match spec.state_kind {
        StateKind::RandomMixed => random_density(spec.qubits, spec.rank, state_seed)?,
        StateKind::Pure => random_density(spec.qubits, 1, state_seed)?,
        StateKind::Diagonal => {
            let mut rng = stream(state_seed, 0);
            let mut probs = vec![0.0; 1usize << spec.qubits];
            for p in probs.iter_mut().take(spec.rank) {
                *p = -(1.0 - rng.random::<f64>()).ln();
            }
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
            DensityMatrix::diagonal(&probs)?
        }
        StateKind::Named => match cfg.state_name.as_deref() {
            Some("rho0") | Some("zero") => DensityMatrix::basis(spec.qubits, 0)?,
            Some("rho1") => {
                if spec.qubits != 1 {
                    bail!("state `rho1` is a single-qubit state");
                }
                powertrace_core::instances::biased_qubit(cfg.c / spec.k as f64)?
            }
            Some("maximally_mixed") => DensityMatrix::maximally_mixed(spec.qubits),
            other => bail!("unknown state_name {other:?}; expected rho0, rho1 or maximally_mixed"),
        },
    })
}

pub fn build_observable(cfg: &ResolvedConfig, spec: &InstanceSpec) -> Result<Observable> {
    Ok(match spec.observable_kind {
        ObservableKind::PauliString => {
            let label = cfg
                .observable
                .clone()
                .unwrap_or_else(|| format!("Z{}", "I".repeat(spec.qubits as usize - 1)));
            if label.len() != spec.qubits as usize {
                bail!("Pauli label {label:?} does not act on {} qubits", spec.qubits);
            }
            Observable::pauli_string(&label)?
        }
        ObservableKind::Projector => Observable::basis_projector(spec.qubits, 0)?,
        ObservableKind::RandomHermitian => random_observable(spec.qubits, &mut stream(derive_seed(spec.seed, 1), 0))?,
        ObservableKind::Named => match cfg.observable.as_deref() {
            Some("identity") => Observable::identity(spec.qubits),
            Some("zero_projector") => Observable::basis_projector(spec.qubits, 0)?,
            other => bail!("unknown named observable {other:?}; expected identity or zero_projector"),
        },
    })
}
