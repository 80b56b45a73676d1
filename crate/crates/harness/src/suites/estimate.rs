//! End-to-end estimation of `Tr(ρ^k O)` against the dense oracle.

use anyhow::Result;
use powertrace_core::blockenc::purify;
use powertrace_core::estimator::estimate_trace_power_with_grid;
use powertrace_core::rng::derive_seed;

use super::{erase, execute, grid_tasks, instance, Erased, Outcome};
use crate::config::ResolvedConfig;

pub(crate) const HEADER: &[&str] = &[
    "seed",
    "k",
    "eps",
    "estimate_re",
    "estimate_im",
    "oracle_re",
    "oracle_im",
    "abs_error",
    "error_bound",
    "model_error",
    "poly_degree",
    "ae_grid_k",
    "u_rho_queries_total",
    "pass",
];

pub(super) fn run(cfg: &ResolvedConfig, jobs: usize) -> Result<Erased> {
    let collected = execute(jobs, grid_tasks(cfg, cfg.runs), |spec, _| {
        let (rho, o) = instance(cfg, spec)?;
        let p = purify(&rho)?;
        let r = estimate_trace_power_with_grid(&p, &o, spec.k, spec.eps, cfg.ae_mode, derive_seed(spec.seed, 2), cfg.grid_k)?;
        let cells = vec![
            spec.seed.into(),
            r.k.into(),
            r.eps_requested.into(),
            r.estimate.re.into(),
            r.estimate.im.into(),
            r.oracle_value.re.into(),
            r.oracle_value.im.into(),
            r.abs_error.into(),
            r.error_bound.into(),
            r.model_error.into(),
            r.poly_degree.into(),
            r.ae_queries_k.into(),
            r.u_rho_queries_total.into(),
            r.pass.into(),
        ];
        Outcome::new(&r, Some(r.pass), vec![cells], ())
    })?;
    Ok(erase(HEADER, collected, Vec::new()))
}
