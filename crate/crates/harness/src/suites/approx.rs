//! Degree law of the truncated Chebyshev expansion of `x^k`.

use anyhow::Result;
use powertrace_core::chebyshev::{
    chernoff_tail, degree_lower_bound_solve, minimal_empirical_degree, power_expansion, required_degree, sup_error_scan,
    truncate, EMPIRICAL_GRID,
};
use serde::Serialize;

use super::{erase, execute, grid_tasks, Check, Erased, Outcome};
use crate::config::ResolvedConfig;
use crate::stats::log_log_slope;

pub(crate) const HEADER: &[&str] = &[
    "k",
    "eps",
    "formula_degree",
    "empirical_degree",
    "measured_sup_error",
    "exact_tail",
    "chernoff_tail",
    "lower_bound_d",
    "pass",
];

#[derive(Debug, Serialize)]
struct Row {
    k: u32,
    eps: f64,
    formula_degree: u32,
    empirical_degree: u32,
    measured_sup_error: f64,
    exact_tail: f64,
    chernoff_tail: f64,
    lower_bound_d: Option<f64>,
    pass: bool,
}

pub(super) fn run(cfg: &ResolvedConfig, jobs: usize) -> Result<Erased> {
    let collected = execute(jobs, grid_tasks(cfg, 1), |spec, _| {
        let (k, eps) = (spec.k, spec.eps);
        let formula_degree = required_degree(k, eps)?;
        let truncation = truncate(&power_expansion(k)?, formula_degree, k);
        let measured_sup_error = sup_error_scan(&truncation.kept, k, EMPIRICAL_GRID)?;
        let row = Row {
            k,
            eps,
            formula_degree,
            empirical_degree: minimal_empirical_degree(k, eps, EMPIRICAL_GRID)?,
            measured_sup_error,
            exact_tail: truncation.tail_exact,
            chernoff_tail: chernoff_tail(k, formula_degree),
            lower_bound_d: degree_lower_bound_solve(k, eps).ok(),
            pass: measured_sup_error <= eps,
        };
        let cells = vec![
            row.k.into(),
            row.eps.into(),
            row.formula_degree.into(),
            row.empirical_degree.into(),
            row.measured_sup_error.into(),
            row.exact_tail.into(),
            row.chernoff_tail.into(),
            row.lower_bound_d.into(),
            row.pass.into(),
        ];
        let pass = row.pass;
        Outcome::new(&row, Some(pass), vec![cells], (k, eps, row.empirical_degree))
    })?;

    let mut checks = Vec::new();
    for &eps in &cfg.eps {
        let (ks, degrees): (Vec<f64>, Vec<f64>) =
            collected.data().filter(|(_, d)| d.1 == eps).map(|(_, d)| (d.0 as f64, d.2 as f64)).unzip();
        if distinct(&ks) >= 2 {
            checks.push(Check::within(format!("empirical_degree_slope@eps={eps}"), log_log_slope(&ks, &degrees), 0.4, 0.6));
        }
    }
    Ok(erase(HEADER, collected, checks))
}

pub(crate) fn distinct(xs: &[f64]) -> usize {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}
