//! Hadamard-test readout, amplitude estimation and the end-to-end estimator
//! of `Tr(ρ^k O)`, plus the entropy and distillation wrappers built on it.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::blockenc::{observable_alpha, BlockEncoding, PurifiedState};
use crate::error::{validation, Error, Result};
use crate::numkernel::{
    apply_to_vector, check_qubits, gates, trace_power_obs_oracle, ComplexMatrix, Observable, C64, ZERO,
};
use crate::qsvt::{alternative_degree, poly_budget, power_ledger, power_times_obs};
use crate::rng::{rng_from_seed, stream, Rng};

/// `8/π²`, the single-call success probability of amplitude estimation.
pub const AE_SUCCESS_PROBABILITY: f64 = 8.0 / (PI * PI);
/// Largest grid exponent accepted when sizing amplitude estimation.
pub const MAX_GRID_EXPONENT: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WSetting {
    /// Reads out the real part.
    I,
    /// Reads out the imaginary part.
    SDagger,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardTestResult {
    pub p_zero: f64,
    pub w_setting: WSetting,
    pub circuit_qubits: u32,
}

/// Born probability of reading `0` on the control of the Hadamard test
/// `H · W · controlled-U · H` applied to `|0⟩_c |0⟩_b |ρ⟩_{EI}`.
///
/// The state is propagated as a vector over `[c][b][E][I]`; the dilation acts
/// on `[b][I]` when the control is set.
pub fn hadamard_test_prob(be: &BlockEncoding, p: &PurifiedState, w: WSetting) -> Result<HadamardTestResult> {
    let u = be
        .dilation()
        .ok_or_else(|| Error::Resource("Hadamard test needs an explicit dilation; the encoding exceeds the dilation cap".into()))?;
    if be.system_dim() != p.sys_dim() {
        return Err(validation("block encoding and purification act on different systems"));
    }
    let circuit_qubits = 1 + be.ancillas() + p.total_qubits();
    check_qubits(circuit_qubits, "Hadamard test circuit")?;
    let anc_dim = 1usize << be.ancillas();
    let half = anc_dim * p.vec().len();
    // after the first Hadamard both control branches hold |0⟩_b|ρ⟩ / √2
    let mut branch0 = vec![ZERO; half];
    branch0[..p.vec().len()].copy_from_slice(p.vec());
    let mut branch1 = branch0.clone();
    apply_to_vector(u, &[anc_dim, p.env_dim(), p.sys_dim()], &[0, 2], &mut branch1)?;
    let phase = match w {
        WSetting::I => C64::new(1.0, 0.0),
        WSetting::SDagger => gates::s_dagger().get(1, 1),
    };
    // control amplitude after the final Hadamard: (branch0 + phase·branch1) / 2
    let p_zero: f64 = branch0.iter().zip(&branch1).map(|(a, b)| ((a + phase * b) * 0.5).norm_sqr()).sum();
    Ok(HadamardTestResult { p_zero: p_zero.clamp(0.0, 1.0), w_setting: w, circuit_qubits })
}

/// `1/2 + Re(Tr(ρ M))/(2α)` (or `Im` for `S†`) with `M` the encoded block.
pub fn hadamard_closed_form(be: &BlockEncoding, rho: &ComplexMatrix, w: WSetting) -> f64 {
    let t = (rho * be.block()).trace() / be.alpha();
    match w {
        WSetting::I => 0.5 + 0.5 * t.re,
        WSetting::SDagger => 0.5 + 0.5 * t.im,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AeMode {
    /// Outcomes drawn from the phase-estimation distribution.
    Sampled,
    /// Deterministic outcome at the edge of the error bound.
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeOutcome {
    pub p_estimate: f64,
    pub grid_size_k: u64,
    pub raw_outcome_index: u64,
    pub within_bound: bool,
}

/// `2π √(p(1−p))/K + π²/K²`.
pub fn ae_error_bound(p: f64, k: u64) -> f64 {
    let kf = k as f64;
    2.0 * PI * (p * (1.0 - p)).max(0.0).sqrt() / kf + PI * PI / (kf * kf)
}

/// Smallest power-of-two `K ≥ 2` with `π/K + π²/K² ≤ ε′`, the bound at `p(1−p) = 1/4`.
pub fn grid_size_for(eps_prime: f64) -> Result<u64> {
    if !(eps_prime > 0.0) {
        return Err(validation(format!("AE accuracy must be positive, got {eps_prime}")));
    }
    for t in 1..=MAX_GRID_EXPONENT {
        let k = 1u64 << t;
        if ae_error_bound(0.5, k) <= eps_prime {
            return Ok(k);
        }
    }
    Err(Error::Resource(format!("AE accuracy {eps_prime} needs more than 2^{MAX_GRID_EXPONENT} grid points")))
}

/// `sin²(Kπx) / (K² sin²(πx))`, equal to one at integers.
fn fejer(k: u64, x: f64) -> f64 {
    let kf = k as f64;
    let s = (PI * x).sin();
    if s.abs() < 1e-12 {
        return 1.0;
    }
    let num = (kf * PI * x).sin();
    (num * num / (kf * kf * s * s)).min(1.0)
}

/// Outcome distribution of canonical amplitude estimation on a `K`-point grid.
#[derive(Debug, Clone)]
pub struct AeDistribution {
    p_true: f64,
    k: u64,
    cdf: Vec<f64>,
}

impl AeDistribution {
    pub fn new(p_true: f64, k: u64) -> Result<Self> {
        check_probability(p_true)?;
        if k < 2 || !k.is_power_of_two() || k > 1 << MAX_GRID_EXPONENT {
            return Err(validation(format!("K must be a power of two in [2, 2^{MAX_GRID_EXPONENT}], got {k}")));
        }
        let theta = p_true.sqrt().asin() / PI;
        let kf = k as f64;
        let mut cdf = Vec::with_capacity(k as usize);
        let mut acc = 0.0;
        for y in 0..k {
            let g = y as f64 / kf;
            acc += 0.5 * (fejer(k, g - theta) + fejer(k, g + theta));
            cdf.push(acc);
        }
        let total = acc;
        for v in &mut cdf {
            *v /= total;
        }
        Ok(Self { p_true, k, cdf })
    }

    pub fn probability(&self, y: u64) -> f64 {
        let y = y as usize;
        self.cdf[y] - if y == 0 { 0.0 } else { self.cdf[y - 1] }
    }

    pub fn outcome(&self, y: u64) -> AeOutcome {
        let p_estimate = (PI * y as f64 / self.k as f64).sin().powi(2);
        AeOutcome {
            p_estimate,
            grid_size_k: self.k,
            raw_outcome_index: y,
            within_bound: (p_estimate - self.p_true).abs() <= ae_error_bound(self.p_true, self.k) + 1e-12,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> AeOutcome {
        let u: f64 = rng.random();
        let y = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        self.outcome(y as u64)
    }

    /// Total probability of outcomes inside the error bound.
    pub fn coverage(&self) -> f64 {
        (0..self.k).filter(|&y| self.outcome(y).within_bound).map(|y| self.probability(y)).sum()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(validation(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// One amplitude-estimation call on a known Born probability.
pub fn amplitude_estimate(p_true: f64, k: u64, mode: AeMode, rng_seed: u64) -> Result<AeOutcome> {
    match mode {
        AeMode::Sampled => {
            let dist = AeDistribution::new(p_true, k)?;
            Ok(dist.sample(&mut rng_from_seed(rng_seed)))
        }
        AeMode::Ideal => ideal_outcome(p_true, k),
    }
}

fn ideal_outcome(p_true: f64, k: u64) -> Result<AeOutcome> {
    check_probability(p_true)?;
    if k == 0 {
        return Err(validation("K must be positive"));
    }
    let b = ae_error_bound(p_true, k);
    let p_estimate = if p_true <= 0.5 { (p_true + b).min(1.0) } else { (p_true - b).max(0.0) };
    let index = (k as f64 * p_estimate.sqrt().asin() / PI).round() as u64;
    Ok(AeOutcome { p_estimate, grid_size_k: k, raw_outcome_index: index, within_bound: true })
}

/// Error budget and query bill of one estimation, computable without simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatePlan {
    pub k: u32,
    pub eps_requested: f64,
    pub alpha_o: f64,
    /// Share of `eps` assigned to the polynomial stage, in estimate units.
    pub eps_poly_budget: f64,
    /// Per-pass probability accuracy `ε′ = eps / (4 α_O)`.
    pub eps_ae_budget: f64,
    /// Sup-norm budget of the polynomial, `eps / (2‖O‖)`.
    pub poly_approx_eps: f64,
    pub poly_degree: u32,
    /// Degree under the `√(2(k−1) ln(4 α_O ‖O‖/ε))` variant.
    pub poly_degree_alt: u32,
    pub ae_queries_k: u64,
    pub passes: u32,
    pub u_rho_queries_total: u64,
}

pub fn estimate_plan(o: &Observable, k: u32, eps: f64) -> Result<EstimatePlan> {
    estimate_plan_with_grid(o, k, eps, None)
}

/// As [`estimate_plan`], with the amplitude-estimation grid pinned to `grid` when given.
pub fn estimate_plan_with_grid(o: &Observable, k: u32, eps: f64, grid: Option<u64>) -> Result<EstimatePlan> {
    if k < 2 {
        return Err(validation(format!("the estimator needs k >= 2, got {k}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(validation(format!("eps must be positive, got {eps}")));
    }
    let eps_capped = eps.min(1.0);
    let alpha_o = observable_alpha(o);
    let poly_approx_eps = poly_budget(eps_capped, o)?;
    let ledger = power_ledger(k, poly_approx_eps)?;
    let eps_ae_budget = eps / (4.0 * alpha_o);
    let ae_queries_k = match grid {
        Some(g) if g < 2 || !g.is_power_of_two() || g > 1 << MAX_GRID_EXPONENT => {
            return Err(validation(format!("K must be a power of two in [2, 2^{MAX_GRID_EXPONENT}], got {g}")));
        }
        Some(g) => g,
        None => grid_size_for(eps_ae_budget)?,
    };
    let passes = if o.is_hermitian() { 1 } else { 2 };
    Ok(EstimatePlan {
        k,
        eps_requested: eps,
        alpha_o,
        eps_poly_budget: eps / 2.0,
        eps_ae_budget,
        poly_approx_eps,
        poly_degree: ledger.poly_degree,
        poly_degree_alt: alternative_degree(k, eps_capped, o)?,
        ae_queries_k,
        passes,
        u_rho_queries_total: ledger.u_rho_queries * ae_queries_k * passes as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub estimate: C64,
    pub oracle_value: C64,
    pub k: u32,
    pub eps_requested: f64,
    pub eps_poly_budget: f64,
    pub eps_ae_budget: f64,
    pub poly_approx_eps: f64,
    pub poly_degree: u32,
    pub poly_degree_alt: u32,
    pub alpha_o: f64,
    pub ae_queries_k: u64,
    pub u_rho_queries_total: u64,
    pub passes: u32,
    /// `|Tr(ρ p(ρ) O) − Tr(ρ^k O)|`.
    pub model_error: f64,
    pub hadamard_p_zero: Vec<f64>,
    pub ae_outcomes: Vec<AeOutcome>,
    pub abs_error: f64,
    /// `eps`, or `√2·eps` when two passes are combined.
    pub error_bound: f64,
    pub pass: bool,
    pub seed: u64,
    pub mode: AeMode,
}

/// Estimates `Tr(ρ^k O)` from purified access.
///
/// Each pass draws its amplitude-estimation outcome from the stream
/// `(seed, pass index)`.
pub fn estimate_trace_power(
    p: &PurifiedState,
    o: &Observable,
    k: u32,
    eps: f64,
    mode: AeMode,
    seed: u64,
) -> Result<EstimationReport> {
    estimate_trace_power_with_grid(p, o, k, eps, mode, seed, None)
}

/// As [`estimate_trace_power`], with the amplitude-estimation grid pinned to `grid` when given.
pub fn estimate_trace_power_with_grid(
    p: &PurifiedState,
    o: &Observable,
    k: u32,
    eps: f64,
    mode: AeMode,
    seed: u64,
    grid: Option<u64>,
) -> Result<EstimationReport> {
    let plan = estimate_plan_with_grid(o, k, eps, grid)?;
    let rho = p.density()?;
    let oracle_value = trace_power_obs_oracle(&rho, o, k)?;
    let enc = power_times_obs(p, o, k, eps.min(1.0))?;
    let settings: &[WSetting] = if plan.passes == 1 { &[WSetting::I] } else { &[WSetting::I, WSetting::SDagger] };
    let mut parts = [0.0f64; 2];
    let mut hadamard_p_zero = Vec::new();
    let mut ae_outcomes = Vec::new();
    for (i, &w) in settings.iter().enumerate() {
        let ht = hadamard_test_prob(&enc.encoding, p, w)?;
        let outcome = match mode {
            AeMode::Sampled => AeDistribution::new(ht.p_zero, plan.ae_queries_k)?.sample(&mut stream(seed, i as u64)),
            AeMode::Ideal => ideal_outcome(ht.p_zero, plan.ae_queries_k)?,
        };
        parts[i] = plan.alpha_o * (2.0 * outcome.p_estimate - 1.0);
        hadamard_p_zero.push(ht.p_zero);
        ae_outcomes.push(outcome);
    }
    let estimate = C64::new(parts[0], parts[1]);
    let readout = (rho.matrix() * enc.encoding.block()).trace();
    let model_error = if plan.passes == 1 { (readout.re - oracle_value.re).abs() } else { (readout - oracle_value).norm() };
    let abs_error = if plan.passes == 1 { (estimate.re - oracle_value.re).abs() } else { (estimate - oracle_value).norm() };
    let error_bound = if plan.passes == 1 { eps } else { 2f64.sqrt() * eps };
    Ok(EstimationReport {
        estimate,
        oracle_value,
        k,
        eps_requested: eps,
        eps_poly_budget: plan.eps_poly_budget,
        eps_ae_budget: plan.eps_ae_budget,
        poly_approx_eps: plan.poly_approx_eps,
        poly_degree: plan.poly_degree,
        poly_degree_alt: plan.poly_degree_alt,
        alpha_o: plan.alpha_o,
        ae_queries_k: plan.ae_queries_k,
        u_rho_queries_total: plan.u_rho_queries_total,
        passes: plan.passes,
        model_error,
        hadamard_p_zero,
        ae_outcomes,
        abs_error,
        error_bound,
        pass: abs_error <= error_bound,
        seed,
        mode,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub oracle_value: f64,
    /// Estimated `Tr(ρ^order)`.
    pub trace_estimate: f64,
    pub report: EstimationReport,
}

/// `(1/(1−α)) ln Tr(ρ^α)` from an estimate of `Tr(ρ^α)`.
///
/// The error bound is `eps / (α−1)` times the Lipschitz constant `1/t_low` of
/// the logarithm on `[t_low, 1]`, `t_low = max(t̃ − eps, dim^{1−α})`.
pub fn renyi_entropy(p: &PurifiedState, order: u32, eps: f64, mode: AeMode, seed: u64) -> Result<EntropyEstimate> {
    if order < 2 {
        return Err(validation(format!("Renyi order must be at least 2, got {order}")));
    }
    let report = estimate_trace_power(p, &Observable::identity(p.sys_qubits()), order, eps, mode, seed)?;
    let t = report.estimate.re;
    if t - eps <= 0.0 {
        return Err(Error::UnreliableEstimate(format!(
            "trace power estimate {t} is within eps = {eps} of zero; the logarithm is undefined there"
        )));
    }
    let floor = (p.sys_dim() as f64).powi(1 - order as i32);
    let t_low = (t - eps).max(floor);
    let scale = 1.0 / (order as f64 - 1.0);
    let value = -scale * t.clamp(floor, 1.0).ln();
    let oracle_value = -scale * report.oracle_value.re.ln();
    Ok(EntropyEstimate { value, error_bound: scale * eps / t_low, oracle_value, trace_estimate: t, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TsallisForm {
    /// `Tr(ρ^q) / (1−q)`.
    AsPrinted,
    /// `(1 − Tr(ρ^q)) / (q−1)`.
    Standard,
}

pub fn tsallis_value(trace: f64, q: u32, form: TsallisForm) -> f64 {
    let q = q as f64;
    match form {
        TsallisForm::AsPrinted => trace / (1.0 - q),
        TsallisForm::Standard => (1.0 - trace) / (q - 1.0),
    }
}

/// Tsallis entropy from an estimate of `Tr(ρ^q)`; both forms are linear, so the error bound is `eps/(q−1)`.
pub fn tsallis_entropy(
    p: &PurifiedState,
    q: u32,
    eps: f64,
    form: TsallisForm,
    mode: AeMode,
    seed: u64,
) -> Result<EntropyEstimate> {
    if q < 2 {
        return Err(validation(format!("Tsallis index must be at least 2, got {q}")));
    }
    let report = estimate_trace_power(p, &Observable::identity(p.sys_qubits()), q, eps, mode, seed)?;
    let t = report.estimate.re;
    Ok(EntropyEstimate {
        value: tsallis_value(t, q, form),
        error_bound: eps / (q as f64 - 1.0),
        oracle_value: tsallis_value(report.oracle_value.re, q, form),
        trace_estimate: t,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdEstimate {
    pub ratio_estimate: f64,
    pub error_bound: f64,
    pub oracle_ratio: f64,
    /// Both estimator calls succeed with at least this probability.
    pub joint_success_probability: f64,
    pub numerator: EstimationReport,
    pub denominator: EstimationReport,
}

/// `|a − ã|/b + |a| |b − b̃|/b²` with the conservative substitutions
/// `b ← b̃ − eps_den` and `|a| ← |ã| + eps_num`.
pub fn ratio_error_bound(a_est: f64, b_est: f64, eps_num: f64, eps_den: f64) -> Result<f64> {
    let b_low = b_est - eps_den;
    if b_low <= 0.0 {
        return Err(Error::UnreliableEstimate(format!(
            "denominator estimate {b_est} is within eps = {eps_den} of zero"
        )));
    }
    Ok(eps_num / b_low + (a_est.abs() + eps_num) * eps_den / (b_low * b_low))
}

/// `Tr(ρ^k O) / Tr(ρ^k)` from two estimator calls.
///
/// The two calls use the seeds derived from `(seed, 0)` and `(seed, 1)`.
pub fn vd_ratio(
    p: &PurifiedState,
    o: &Observable,
    k: u32,
    eps_num: f64,
    eps_den: f64,
    mode: AeMode,
    seed: u64,
) -> Result<VdEstimate> {
    if !o.is_hermitian() {
        return Err(validation("virtual distillation needs a Hermitian observable"));
    }
    let numerator = estimate_trace_power(p, o, k, eps_num, mode, crate::rng::derive_seed(seed, 0))?;
    let denominator =
        estimate_trace_power(p, &Observable::identity(p.sys_qubits()), k, eps_den, mode, crate::rng::derive_seed(seed, 1))?;
    let (a, b) = (numerator.estimate.re, denominator.estimate.re);
    let error_bound = ratio_error_bound(a, b, eps_num, eps_den)?;
    Ok(VdEstimate {
        ratio_estimate: a / b,
        error_bound,
        oracle_ratio: numerator.oracle_value.re / denominator.oracle_value.re,
        joint_success_probability: AE_SUCCESS_PROBABILITY * AE_SUCCESS_PROBABILITY,
        numerator,
        denominator,
    })
}
