//! Copies used by the swap test against `U_ρ` queries of the estimator, as `k` grows.

use anyhow::Result;
use powertrace_core::bounds::{swap_copies_for_eps, swap_test_moments};
use powertrace_core::estimator::estimate_plan_with_grid;
use serde_json::json;

use super::approx::distinct;
use super::{erase, execute, instance, Check, Erased, Outcome};
use crate::config::ResolvedConfig;
use crate::instance::{record_seed, InstanceSpec};
use crate::output::Cell;
use crate::stats::log_log_slope;

pub(crate) const HEADER: &[&str] = &[
    "k",
    "eps",
    "swap_mode",
    "swap_copies_for_eps",
    "qsvt_u_rho_queries_for_eps",
    "poly_degree",
    "ae_grid_k",
    "swap_copies_exponent",
    "qsvt_queries_exponent",
];

const SWAP_EXPONENT: (f64, f64) = (0.85, 1.15);
const QSVT_EXPONENT_MAX: f64 = 0.65;

pub(super) fn run(cfg: &ResolvedConfig, jobs: usize) -> Result<Erased> {
    let eps = cfg.eps[0];
    // a single instance across k, so that only k varies along the table
    let seed = record_seed(cfg.seed, 0);
    let tasks = cfg.k.iter().map(|&k| (InstanceSpec::from_config(cfg, seed, k, eps), ())).collect();
    let mut collected = execute(jobs, tasks, |spec, _| {
        let (rho, o) = instance(cfg, spec)?;
        let moments = swap_test_moments(&rho, &o, spec.k)?;
        let copies = swap_copies_for_eps(&rho, &o, spec.k, spec.eps, cfg.confidence_z)?;
        let plan = estimate_plan_with_grid(&o, spec.k, spec.eps, cfg.grid_k)?;
        let report = json!({
            "k": spec.k,
            "eps": spec.eps,
            "swap_moments": moments,
            "swap_copies_for_eps": copies,
            "confidence_z": cfg.confidence_z,
            "plan": plan,
        });
        let cells = vec![
            spec.k.into(),
            spec.eps.into(),
            serde_json::to_value(moments.mode)?.as_str().unwrap_or_default().into(),
            copies.into(),
            plan.u_rho_queries_total.into(),
            plan.poly_degree.into(),
            plan.ae_queries_k.into(),
        ];
        Outcome::new(report, None, vec![cells], (spec.k as f64, copies as f64, plan.u_rho_queries_total as f64))
    })?;

    let points: Vec<(f64, f64, f64)> = collected.data().map(|(_, d)| *d).collect();
    let ks: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut checks = Vec::new();
    let (mut swap_exp, mut qsvt_exp) = (Cell::Empty, Cell::Empty);
    if distinct(&ks) >= 2 {
        let swap: Vec<f64> = points.iter().map(|p| p.1).collect();
        let qsvt: Vec<f64> = points.iter().map(|p| p.2).collect();
        let (s, q) = (log_log_slope(&ks, &swap), log_log_slope(&ks, &qsvt));
        checks.push(Check::within("swap_copies_exponent", s, SWAP_EXPONENT.0, SWAP_EXPONENT.1));
        checks.push(Check::at_most("qsvt_queries_exponent", q, QSVT_EXPONENT_MAX));
        (swap_exp, qsvt_exp) = (s.into(), q.into());
    }
    for outcome in collected.outcomes.iter_mut().flatten() {
        for row in &mut outcome.rows {
            row.push(swap_exp.clone());
            row.push(qsvt_exp.clone());
        }
    }
    Ok(erase(HEADER, collected, checks))
}
