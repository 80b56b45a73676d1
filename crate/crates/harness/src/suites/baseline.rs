//! Generalized swap test: the permutation identity and shot-noise scaling.

use anyhow::Result;
use powertrace_core::bounds::{cyclic_permutation, swap_test_estimate, SwapTestEstimate};
use powertrace_core::numkernel::{trace_power_obs_oracle, ComplexMatrix, DensityMatrix, Observable};
use powertrace_core::rng::derive_seed;
use serde::Serialize;

use super::{erase, execute, instance, Check, Erased, Outcome};
use crate::config::ResolvedConfig;
use crate::instance::{record_seed, InstanceSpec};
use crate::stats::log_log_slope;

/// Largest `n·k` for which the dense `P_k ρ^{⊗k}` product is formed.
const DENSE_IDENTITY_QUBITS: u64 = 8;
const IDENTITY_TOL: f64 = 1e-9;
/// Passing records sit within this many standard errors of the exact mean.
const STDERR_MULTIPLE: f64 = 5.0;

pub(crate) const HEADER: &[&str] =
    &["seed", "k", "shots", "mode", "mean", "stderr", "exact_mean", "copies_used", "identity_defect", "pass"];

#[derive(Debug, Serialize)]
struct Report {
    estimate: SwapTestEstimate,
    identity_defect: Option<f64>,
}

/// `|Tr(P_k ρ^{⊗k} (O ⊗ I)) − Tr(ρ^k O)|` by dense algebra.
pub fn permutation_identity_defect(rho: &DensityMatrix, o: &Observable, k: u32) -> Result<f64> {
    let d = rho.dim();
    let p = cyclic_permutation(k, d)?;
    let copies = rho.tensor_power(k)?;
    let o_ext = o.matrix().kron(&ComplexMatrix::identity(d.pow(k - 1)))?;
    let lhs = (&(&p * &copies) * &o_ext).trace();
    Ok((lhs - trace_power_obs_oracle(rho, o, k)?).norm())
}

/// `shots/100`, `shots/10`, `shots`, dropping counts below two.
fn shot_ladder(shots: u64) -> Vec<u64> {
    let mut v: Vec<u64> = [shots / 100, shots / 10, shots].into_iter().filter(|&s| s >= 2).collect();
    v.dedup();
    v
}

pub(super) fn run(cfg: &ResolvedConfig, jobs: usize) -> Result<Erased> {
    let mut tasks = Vec::new();
    for &k in &cfg.k {
        // one instance per k, shared by every rung of the shot ladder
        let seed = record_seed(cfg.seed, tasks.len());
        for shots in shot_ladder(cfg.shots) {
            tasks.push((InstanceSpec::from_config(cfg, seed, k, cfg.eps[0]), shots));
        }
    }
    let collected = execute(jobs, tasks, |spec, &shots| {
        let (rho, o) = instance(cfg, spec)?;
        let estimate = swap_test_estimate(&rho, &o, spec.k, shots, derive_seed(spec.seed, shots))?;
        let identity_defect = if (rho.qubits() as u64) * (spec.k as u64) <= DENSE_IDENTITY_QUBITS {
            Some(permutation_identity_defect(&rho, &o, spec.k)?)
        } else {
            None
        };
        let pass = (estimate.mean - estimate.exact_mean).abs() <= STDERR_MULTIPLE * estimate.stderr
            && identity_defect.is_none_or(|d| d <= IDENTITY_TOL);
        let cells = vec![
            spec.seed.into(),
            spec.k.into(),
            shots.into(),
            serde_json::to_value(estimate.mode)?.as_str().unwrap_or_default().into(),
            estimate.mean.into(),
            estimate.stderr.into(),
            estimate.exact_mean.into(),
            estimate.copies_used.into(),
            identity_defect.into(),
            pass.into(),
        ];
        let data = (spec.k, shots, estimate.stderr);
        Outcome::new(Report { estimate, identity_defect }, Some(pass), vec![cells], data)
    })?;

    let mut checks = Vec::new();
    for &k in &cfg.k {
        let (shots, stderr): (Vec<f64>, Vec<f64>) =
            collected.data().filter(|(_, d)| d.0 == k).map(|(_, d)| (d.1 as f64, d.2)).unzip();
        if shots.len() >= 2 && stderr.iter().all(|&s| s > 0.0) {
            checks.push(Check::within(format!("stderr_exponent@k={k}"), log_log_slope(&shots, &stderr), -0.55, -0.45));
        }
    }
    Ok(erase(HEADER, collected, checks))
}
