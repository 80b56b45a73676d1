//! Applications: Rényi entropy of the maximally mixed state and virtual-distillation ratios.

use anyhow::Result;
use powertrace_core::blockenc::purify;
use powertrace_core::estimator::{renyi_entropy, vd_ratio, AeMode};
use powertrace_core::numkernel::DensityMatrix;
use powertrace_core::rng::derive_seed;
use powertrace_core::Error as CoreError;
use serde_json::json;

use super::{erase, execute, instance, Check, Erased, Outcome};
use crate::config::ResolvedConfig;
use crate::instance::{record_seed, InstanceSpec};
use crate::output::Cell;

pub(crate) const HEADER: &[&str] =
    &["kind", "seed", "k", "eps", "mode", "estimate", "oracle", "abs_error", "error_bound", "pass"];

#[derive(Clone, Copy)]
enum Task {
    /// Rényi entropy of order `k` of `I/2^n`, with amplitude estimation at its
    /// worst admissible outcome so the propagated bound is exercised deterministically.
    Renyi,
    VirtualDistillation,
}

fn mode_name(mode: AeMode) -> &'static str {
    match mode {
        AeMode::Sampled => "sampled",
        AeMode::Ideal => "ideal",
    }
}

pub(super) fn run(cfg: &ResolvedConfig, jobs: usize) -> Result<Erased> {
    let eps = cfg.eps[0];
    let mut tasks = Vec::new();
    for &k in cfg.k.iter().filter(|&&k| k >= 2) {
        let seed = record_seed(cfg.seed, tasks.len());
        tasks.push((InstanceSpec::from_config(cfg, seed, k, eps), Task::Renyi));
    }
    for _ in 0..cfg.runs {
        for &k in &cfg.k {
            let seed = record_seed(cfg.seed, tasks.len());
            tasks.push((InstanceSpec::from_config(cfg, seed, k, eps), Task::VirtualDistillation));
        }
    }
    let collected = execute(jobs, tasks, |spec, task| {
        let row = |kind: &str, mode: AeMode, estimate: f64, oracle: f64, bound: f64, pass: bool| -> Vec<Cell> {
            vec![
                kind.into(),
                spec.seed.into(),
                spec.k.into(),
                spec.eps.into(),
                mode_name(mode).into(),
                estimate.into(),
                oracle.into(),
                (estimate - oracle).abs().into(),
                bound.into(),
                pass.into(),
            ]
        };
        match task {
            Task::Renyi => {
                let p = purify(&DensityMatrix::maximally_mixed(spec.qubits))?;
                let r = renyi_entropy(&p, spec.k, spec.eps, AeMode::Ideal, derive_seed(spec.seed, 2))?;
                let pass = (r.value - r.oracle_value).abs() <= r.error_bound;
                let cells = row("renyi", AeMode::Ideal, r.value, r.oracle_value, r.error_bound, pass);
                Outcome::new(&r, Some(pass), vec![cells], (*task as u8, pass))
            }
            Task::VirtualDistillation => {
                let (rho, o) = instance(cfg, spec)?;
                let p = purify(&rho)?;
                let r = match vd_ratio(&p, &o, spec.k, spec.eps, spec.eps, cfg.ae_mode, derive_seed(spec.seed, 2)) {
                    Ok(r) => r,
                    // the denominator estimate left its admissible range, so no bound exists to cover the error
                    Err(CoreError::UnreliableEstimate(msg)) => {
                        let cells = vec![
                            "vd_ratio".into(),
                            spec.seed.into(),
                            spec.k.into(),
                            spec.eps.into(),
                            mode_name(cfg.ae_mode).into(),
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                            false.into(),
                        ];
                        let report = json!({ "unreliable_estimate": msg });
                        return Outcome::new(report, Some(false), vec![cells], (*task as u8, false));
                    }
                    Err(e) => return Err(e.into()),
                };
                let pass = (r.ratio_estimate - r.oracle_ratio).abs() <= r.error_bound;
                let cells = row("vd_ratio", cfg.ae_mode, r.ratio_estimate, r.oracle_ratio, r.error_bound, pass);
                Outcome::new(&r, Some(pass), vec![cells], (*task as u8, pass))
            }
        }
    })?;

    let mut checks = Vec::new();
    let renyi: Vec<bool> = collected.data().filter(|(_, d)| d.0 == Task::Renyi as u8).map(|(_, d)| d.1).collect();
    if !renyi.is_empty() {
        let frac = renyi.iter().filter(|&&p| p).count() as f64 / renyi.len() as f64;
        checks.push(Check::at_least("renyi_within_bound_fraction", frac, 1.0));
    }
    let vd: Vec<bool> =
        collected.data().filter(|(_, d)| d.0 == Task::VirtualDistillation as u8).map(|(_, d)| d.1).collect();
    if !vd.is_empty() {
        let frac = vd.iter().filter(|&&p| p).count() as f64 / vd.len() as f64;
        checks.push(Check::at_least("vd_coverage", frac, cfg.pass_threshold));
    }
    Ok(erase(HEADER, collected, checks))
}
