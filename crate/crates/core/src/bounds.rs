//! Sample-access baseline (generalised swap test) and runnable versions of the
//! lower-bound and BQP-reduction constructions.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::blockenc::{halmos_dilate, PurifiedState};
use crate::error::{validation, Error, Result};
use crate::numkernel::{
    c, check_dim, check_qubits, eigh, log2_exact, qubit_cap, trace_power_obs_oracle, vec_norm, ComplexMatrix,
    DensityMatrix, Observable, C64, ZERO,
};
use crate::rng::stream;

/// Shots drawn from one RNG stream; chunk `i` uses `stream(seed, i)`.
pub const SHOT_CHUNK: u64 = 4096;
/// Two-sided 95% normal quantile used to size shot budgets.
pub const DEFAULT_CONFIDENCE_Z: f64 = 1.959_963_984_540_054;
/// Success probability demanded of a discriminator.
pub const TARGET_SUCCESS: f64 = 2.0 / 3.0;
/// Trace distance at which a discriminator reaches [`TARGET_SUCCESS`].
pub const HYBRID_CROSSING: f64 = 2.0 * TARGET_SUCCESS - 1.0;
/// Tolerance for the closed forms checked inside the constructions.
pub const CONSTRUCTION_TOL: f64 = 1e-10;

fn digits(mut index: usize, d: usize, k: usize, out: &mut [usize]) {
    for slot in out[..k].iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
}

fn undigits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * d + x)
}

/// `P_k |a₁, a₂, …, a_k⟩ = |a_k, a₁, …, a_{k−1}⟩` on `k` registers of dimension `d`,
/// register 1 most significant.
pub fn cyclic_permutation(k: u32, d: usize) -> Result<ComplexMatrix> {
    if k == 0 || d < 2 {
        return Err(validation(format!("cyclic permutation needs k >= 1 and d >= 2, got k={k}, d={d}")));
    }
    let k = k as usize;
    let dim = d
        .checked_pow(k as u32)
        .ok_or_else(|| Error::Resource(format!("{d}^{k} overflows")))?;
    check_dim(dim, "cyclic permutation")?;
    let mut p = ComplexMatrix::zeros(dim, dim);
    let mut a = vec![0; k];
    let mut b = vec![0; k];
    for col in 0..dim {
        digits(col, d, k, &mut a);
        b[0] = a[k - 1];
        b[1..].copy_from_slice(&a[..k - 1]);
        p.set(undigits(&b, d), col, c(1.0, 0.0));
    }
    Ok(p)
}

/// How swap-test outcomes are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapTestMode {
    /// Outcomes drawn from the spectral measure of `X ⊗ O` on the circuit output.
    Exact,
    /// Gaussian outcomes with the exact single-shot mean and variance.
    Surrogate,
}

/// Single-shot statistics of the readout `X_c ⊗ O ⊗ I^{⊗(k−1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapTestMoments {
    pub mean: f64,
    pub variance: f64,
    pub mode: SwapTestMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapTestEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub copies_used: u64,
    pub shots: u64,
    pub k: u32,
    pub mode: SwapTestMode,
    /// Exact single-shot mean, `Re Tr(ρ^k O)`.
    pub exact_mean: f64,
    pub single_shot_variance: f64,
}

fn swap_test_is_exact(rho: &DensityMatrix, k: u32) -> bool {
    (rho.qubits() as u64) * (k as u64) + 1 <= qubit_cap() as u64
}

fn check_swap_args(rho: &DensityMatrix, o: &Observable, k: u32) -> Result<()> {
    if k == 0 {
        return Err(validation("swap test needs k >= 1"));
    }
    if !o.is_hermitian() {
        return Err(validation("swap test reads out a Hermitian observable"));
    }
    if o.dim() != rho.dim() {
        return Err(validation(format!("observable dimension {} does not match state dimension {}", o.dim(), rho.dim())));
    }
    Ok(())
}

/// Reduced state on `[control][register 1]` after `H_c`, controlled-`P_k`, with
/// `ρ^{⊗k}` on the copies. Entries are read off the permuted tensor product
/// directly, so the `d^k`-dimensional operator is never formed.
pub fn swap_test_output_state(rho: &DensityMatrix, k: u32) -> Result<ComplexMatrix> {
    if k == 0 {
        return Err(validation("swap test needs k >= 1"));
    }
    check_qubits(rho.qubits() * k + 1, "swap test circuit")?;
    let d = rho.dim();
    let k = k as usize;
    let r = rho.matrix();
    let rest = d.pow(k as u32 - 1);
    let mut out = ComplexMatrix::zeros(2 * d, 2 * d);
    let mut rest_digits = vec![0; k];
    let mut u = vec![0; k];
    let mut v = vec![0; k];
    // (P^a M P^{−b})[i, j] = M[π^a(i), π^b(j)] with π = P^{−1}, a left rotation of digits.
    let place = |x: usize, rd: &[usize], cycled: bool, dst: &mut [usize]| {
        if cycled {
            dst[..k - 1].copy_from_slice(&rd[..k - 1]);
            dst[k - 1] = x;
        } else {
            dst[0] = x;
            dst[1..].copy_from_slice(&rd[..k - 1]);
        }
    };
    for a in 0..2 {
        for b in 0..2 {
            for x in 0..d {
                for y in 0..d {
                    let mut acc = ZERO;
                    for rix in 0..rest {
                        digits(rix, d, k - 1, &mut rest_digits);
                        place(x, &rest_digits, a == 1, &mut u);
                        place(y, &rest_digits, b == 1, &mut v);
                        let mut term = c(1.0, 0.0);
                        for t in 0..k {
                            term *= r.get(u[t], v[t]);
                        }
                        acc += term;
                    }
                    out.set(a * d + x, b * d + y, acc * 0.5);
                }
            }
        }
    }
    Ok(out)
}

/// Outcome values and Born probabilities of `X ⊗ O` on a `[control][register]` state.
fn readout_measure(state: &ComplexMatrix, o: &Observable) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = o.dim();
    let spec = eigh(o.matrix())?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut values = Vec::with_capacity(2 * d);
    let mut probs = Vec::with_capacity(2 * d);
    for (sign, phase) in [(1.0, 1.0), (-1.0, -1.0)] {
        for j in 0..d {
            let oj = spec.vector(j);
            let mut w = vec![ZERO; 2 * d];
            for i in 0..d {
                w[i] = oj[i] * s;
                w[d + i] = oj[i] * (s * phase);
            }
            let p = state.sandwich(&w, &w).re.max(0.0);
            values.push(sign * spec.eigenvalues[j]);
            probs.push(p);
        }
    }
    Ok((values, probs))
}

/// Exact single-shot mean and variance of the swap-test readout.
pub fn swap_test_moments(rho: &DensityMatrix, o: &Observable, k: u32) -> Result<SwapTestMoments> {
    check_swap_args(rho, o, k)?;
    if swap_test_is_exact(rho, k) {
        let state = swap_test_output_state(rho, k)?;
        let (values, probs) = readout_measure(&state, o)?;
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        let second: f64 = values.iter().zip(&probs).map(|(v, p)| v * v * p).sum();
        return Ok(SwapTestMoments { mean, variance: (second - mean * mean).max(0.0), mode: SwapTestMode::Exact });
    }
    // The output marginal on [control][register 1] is ½[[ρ, ρ^k], [ρ^k, ρ]].
    let mean = trace_power_obs_oracle(rho, o, k)?.re;
    let o2 = o.matrix().matmul(o.matrix());
    let second = rho.matrix().matmul(&o2).trace().re;
    Ok(SwapTestMoments { mean, variance: (second - mean * mean).max(0.0), mode: SwapTestMode::Surrogate })
}

/// Generalised swap test: `shots` runs of the controlled-`P_k` Hadamard test,
/// each consuming `k` copies of `ρ`.
pub fn swap_test_estimate(rho: &DensityMatrix, o: &Observable, k: u32, shots: u64, seed: u64) -> Result<SwapTestEstimate> {
    check_swap_args(rho, o, k)?;
    if shots < 2 {
        return Err(validation(format!("swap test needs at least 2 shots, got {shots}")));
    }
    let moments = swap_test_moments(rho, o, k)?;
    let measure = match moments.mode {
        SwapTestMode::Exact => {
            let (values, probs) = readout_measure(&swap_test_output_state(rho, k)?, o)?;
            let total: f64 = probs.iter().sum();
            let mut cdf = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for p in &probs {
                acc += p / total;
                cdf.push(acc);
            }
            Some((values, cdf))
        }
        SwapTestMode::Surrogate => None,
    };
    let sd = moments.variance.sqrt();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let chunks = shots.div_ceil(SHOT_CHUNK);
    for chunk in 0..chunks {
        let mut rng = stream(seed, chunk);
        let n = SHOT_CHUNK.min(shots - chunk * SHOT_CHUNK);
        for _ in 0..n {
            let x = match &measure {
                Some((values, cdf)) => {
                    let u: f64 = rng.random();
                    values[cdf.partition_point(|&p| p <= u).min(values.len() - 1)]
                }
                None => moments.mean + sd * rng.sample::<f64, _>(StandardNormal),
            };
            sum += x;
            sum_sq += x * x;
        }
    }
    let n = shots as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(SwapTestEstimate {
        mean,
        stderr: (var / n).sqrt(),
        copies_used: k as u64 * shots,
        shots,
        k,
        mode: moments.mode,
        exact_mean: moments.mean,
        single_shot_variance: moments.variance,
    })
}

/// Copies the swap test needs for half-width `eps` at normal quantile `z`:
/// `k · ⌈z² Var / eps²⌉`.
pub fn swap_copies_for_eps(rho: &DensityMatrix, o: &Observable, k: u32, eps: f64, z: f64) -> Result<u64> {
    if !(eps > 0.0) || !(z > 0.0) {
        return Err(validation(format!("need eps > 0 and z > 0, got eps={eps}, z={z}")));
    }
    let m = swap_test_moments(rho, o, k)?;
    let shots = ((z * z * m.variance / (eps * eps)).ceil() as u64).max(1);
    Ok(k as u64 * shots)
}

/// `ρ₀ = |0⟩⟨0|`, `ρ₁ = (1−ε′)|0⟩⟨0| + ε′|1⟩⟨1|`, `O = |0⟩⟨0|`, `ε′ = c/k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscriminationInstance {
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
    pub obs: Observable,
    pub eps_prime: f64,
    pub k: u32,
}

impl DiscriminationInstance {
    pub fn new(k: u32, c_const: f64) -> Result<Self> {
        if k == 0 || !(c_const > 0.0 && c_const < 1.0) {
            return Err(validation(format!("need k >= 1 and c in (0, 1), got k={k}, c={c_const}")));
        }
        let eps_prime = c_const / k as f64;
        let inst = Self {
            rho0: DensityMatrix::basis(1, 0)?,
            rho1: DensityMatrix::diagonal(&[1.0 - eps_prime, eps_prime])?,
            obs: Observable::basis_projector(1, 0)?,
            eps_prime,
            k,
        };
        let diff = trace_power_obs_oracle(&inst.rho0, &inst.obs, k)?.re - trace_power_obs_oracle(&inst.rho1, &inst.obs, k)?.re;
        if (diff - inst.gap()).abs() > 1e-12 {
            return Err(Error::Construction(format!("value gap {diff} does not match 1 − (1−ε′)^k = {}", inst.gap())));
        }
        Ok(inst)
    }

    /// `(Tr(ρ₀^k O), Tr(ρ₁^k O)) = (1, (1−ε′)^k)`.
    pub fn values(&self) -> (f64, f64) {
        (1.0, (1.0 - self.eps_prime).powi(self.k as i32))
    }

    /// `Δ = 1 − (1−ε′)^k`.
    pub fn gap(&self) -> f64 {
        1.0 - (1.0 - self.eps_prime).powi(self.k as i32)
    }

    /// Midpoint decision threshold; estimates above it are read as `ρ₀`.
    pub fn threshold(&self) -> f64 {
        let (a, b) = self.values();
        0.5 * (a + b)
    }

    /// Estimation accuracy used by the experiments, `Δ/3 < Δ/2`.
    pub fn accuracy(&self) -> f64 {
        self.gap() / 3.0
    }

    /// Returns 0 for `ρ₀` and 1 for `ρ₁`.
    pub fn decide(&self, estimate: f64) -> u8 {
        u8::from(estimate <= self.threshold())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelstromRow {
    pub m: u64,
    /// `F(ρ₀^{⊗m}, ρ₁^{⊗m}) = (1−ε′)^m`.
    pub fidelity: f64,
    /// `1 − ½√F`.
    pub success_lower_bound: f64,
    /// `½ + ½T`; here `T = 1 − (1−ε′)^m` since `ρ₀^{⊗m}` is pure and an eigenvector of `ρ₁^{⊗m}`.
    pub helstrom_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelstromTable {
    pub k: u32,
    pub c: f64,
    pub eps_prime: f64,
    pub rows: Vec<HelstromRow>,
    /// Smallest `m` with `1 − ½(1−ε′)^{m/2} ≥ 2/3`, i.e. `(1−ε′)^m ≤ 4/9`.
    pub m_star: u64,
}

/// Smallest `m` with `(1−ε′)^m ≤ 4/9`.
pub fn helstrom_threshold_copies(eps_prime: f64) -> Result<u64> {
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(validation(format!("ε′ must lie in (0, 1), got {eps_prime}")));
    }
    let target: f64 = 4.0 / 9.0;
    let f = |m: u64| (1.0 - eps_prime).powf(m as f64);
    let mut m = (target.ln() / (1.0 - eps_prime).ln()).ceil().max(0.0) as u64;
    while f(m) > target {
        m += 1;
    }
    while m > 0 && f(m - 1) <= target {
        m -= 1;
    }
    Ok(m)
}

pub fn helstrom_experiment(k: u32, c_const: f64, m_values: &[u64]) -> Result<HelstromTable> {
    if m_values.is_empty() {
        return Err(validation("m_values must be nonempty"));
    }
    let inst = DiscriminationInstance::new(k, c_const)?;
    let eps_prime = inst.eps_prime;
    let rows = m_values
        .iter()
        .map(|&m| {
            let fidelity = (1.0 - eps_prime).powf(m as f64);
            HelstromRow {
                m,
                fidelity,
                success_lower_bound: 1.0 - 0.5 * fidelity.sqrt(),
                helstrom_success: 0.5 + 0.5 * (1.0 - fidelity),
            }
        })
        .collect();
    Ok(HelstromTable { k, c: c_const, eps_prime, rows, m_star: helstrom_threshold_copies(eps_prime)? })
}

/// `D(p ‖ q)` between Bernoulli distributions, in nats.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeCamConstruction {
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
    pub eps: f64,
    pub delta: f64,
    /// `D(½+δ ‖ ½−δ)`.
    pub kl: f64,
    pub expectation0: f64,
    pub expectation1: f64,
    /// `1/D`, the copy count below which the two coins stay indistinguishable.
    pub copy_bound: f64,
}

/// `ρ₀ = (½+δ)P₊ + (½−δ)P₋` and its mirror `ρ₁`, with `P±` the rank-one projectors
/// on eigenvectors of `±‖O‖` and `δ = ε/(2‖O‖)`.
pub fn lecam_construction(o: &Observable, eps: f64) -> Result<LeCamConstruction> {
    if !o.is_hermitian() {
        return Err(validation("Le Cam construction needs a Hermitian observable"));
    }
    let norm = o.op_norm();
    if !(norm > 0.0) {
        return Err(validation("observable must be nonzero"));
    }
    let delta = eps / (2.0 * norm);
    if !(delta > 0.0 && delta < 0.5) {
        return Err(validation(format!("δ = ε/(2‖O‖) must lie in (0, ½), got {delta}")));
    }
    let spec = eigh(o.matrix())?;
    let (lo, hi) = (spec.eigenvalues[0], spec.eigenvalues[spec.dim() - 1]);
    if (hi - norm).abs() > CONSTRUCTION_TOL * norm || (lo + norm).abs() > CONSTRUCTION_TOL * norm {
        return Err(Error::Construction(format!(
            "observable spectrum [{lo}, {hi}] is one-sided; the construction needs both ±‖O‖ = ±{norm}"
        )));
    }
    let plus = spec.vector(spec.dim() - 1);
    let minus = spec.vector(0);
    let mix = |wp: f64, wm: f64| DensityMatrix::mixture(&[wp, wm], &[plus.clone(), minus.clone()]);
    let rho0 = mix(0.5 + delta, 0.5 - delta)?;
    let rho1 = mix(0.5 - delta, 0.5 + delta)?;
    let expectation0 = trace_power_obs_oracle(&rho0, o, 1)?.re;
    let expectation1 = trace_power_obs_oracle(&rho1, o, 1)?.re;
    if (expectation0 - eps).abs() > CONSTRUCTION_TOL || (expectation1 + eps).abs() > CONSTRUCTION_TOL {
        return Err(Error::Construction(format!(
            "expectations ({expectation0}, {expectation1}) differ from ±{eps}"
        )));
    }
    let kl = bernoulli_kl(0.5 + delta, 0.5 - delta);
    Ok(LeCamConstruction { rho0, rho1, eps, delta, kl, expectation0, expectation1, copy_bound: 1.0 / kl })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridRow {
    pub t: u64,
    /// `T · ‖U₀ − U₁‖`, an upper bound on the distance after `T` queries.
    pub cumulative_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridDemo {
    pub eps: f64,
    pub op_norm: f64,
    pub delta: f64,
    pub direct_norm: f64,
    pub closed_form: f64,
    /// `Tr(|ν⟩⟨ν| A₀ O) = 0`.
    pub expectation0: f64,
    /// `Tr(|ν⟩⟨ν| A₁ O) = ±2ε`.
    pub expectation1: f64,
    /// Smallest `T` with `T · ‖U₀ − U₁‖ ≥` [`HYBRID_CROSSING`]; `None` when the unitaries coincide.
    pub crossing_t: Option<u64>,
    pub rows: Vec<HybridRow>,
}

/// `√(δ² + (1 − √(1−δ²))²)`.
pub fn hybrid_closed_form(delta: f64) -> f64 {
    let s = 1.0 - (1.0 - delta * delta).sqrt();
    (delta * delta + s * s).sqrt()
}

/// Compares the dilations of `A₀ = 0` and `A₁ = δ|ν⟩⟨ν|`, `δ = 2ε/‖O‖`.
pub fn hybrid_bound_demo(o: &Observable, eps: f64, t_values: &[u64]) -> Result<HybridDemo> {
    if !o.is_hermitian() {
        return Err(validation("hybrid demo needs a Hermitian observable"));
    }
    let norm = o.op_norm();
    if !(norm > 0.0) || !(eps >= 0.0) {
        return Err(validation(format!("need a nonzero observable and eps >= 0, got ‖O‖={norm}, eps={eps}")));
    }
    let delta = 2.0 * eps / norm;
    if delta > 1.0 {
        return Err(validation(format!("δ = 2ε/‖O‖ must be at most 1, got {delta}")));
    }
    let spec = eigh(o.matrix())?;
    let top = (0..spec.dim())
        .max_by(|&a, &b| spec.eigenvalues[a].abs().total_cmp(&spec.eigenvalues[b].abs()))
        .unwrap_or(0);
    let nu = spec.vector(top);
    let d = o.dim();
    let a1 = ComplexMatrix::projector(&nu).scale(delta);
    let u0 = halmos_dilate(&ComplexMatrix::zeros(d, d))?;
    let u1 = halmos_dilate(&a1)?;
    let direct_norm = (&u0 - &u1).op_norm();
    let closed_form = hybrid_closed_form(delta);
    if (direct_norm - closed_form).abs() > 1e-9 {
        return Err(Error::Numerical(format!("‖U₀ − U₁‖ = {direct_norm} but the closed form gives {closed_form}")));
    }
    let expectation1 = a1.matmul(o.matrix()).sandwich(&nu, &nu).re;
    let crossing_t = (direct_norm > 0.0).then(|| (HYBRID_CROSSING / direct_norm).ceil() as u64);
    let rows = t_values.iter().map(|&t| HybridRow { t, cumulative_bound: t as f64 * direct_norm }).collect();
    Ok(HybridDemo {
        eps,
        op_norm: norm,
        delta,
        direct_norm,
        closed_form,
        expectation0: 0.0,
        expectation1,
        crossing_t,
        rows,
    })
}

/// Reduction of a BQP acceptance probability to `Tr(ρ^k O) = λ^k p_x`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BqpInstance {
    /// `1 − 1/(q k)`.
    pub lambda: f64,
    pub k: u32,
    pub q: f64,
    pub p_x: f64,
    /// `|Γ_x⟩` with environment `A` and system `[S][R]`.
    pub purification: PurifiedState,
    /// `|0⟩⟨0|_S ⊗ Π_acc`.
    pub obs: Observable,
    /// `(a, b) = (⅔λ^k, ⅓λ^k)`.
    pub thresholds: (f64, f64),
    /// Basis index (or `None` for a kernel vector) used for `|φ⟩`.
    pub phi_basis_index: Option<usize>,
    pub trace_value: f64,
    pub identity_defect: f64,
    /// `λ^k ≥ 1 − 1/q`.
    pub bernoulli_holds: bool,
}

impl BqpInstance {
    /// Promise gap `a − b = λ^k/3`.
    pub fn gap(&self) -> f64 {
        self.thresholds.0 - self.thresholds.1
    }
}

/// `|φ⟩` with `Π_acc|φ⟩ = 0`: the last computational basis state annihilated by
/// `Π_acc`, falling back to a kernel eigenvector.
fn null_state(pi: &ComplexMatrix) -> Result<(Vec<C64>, Option<usize>)> {
    let dim = pi.rows();
    if let Some(i) = (0..dim).rev().find(|&i| pi.get(i, i).re.abs() <= 1e-12) {
        let mut v = vec![ZERO; dim];
        v[i] = c(1.0, 0.0);
        return Ok((v, Some(i)));
    }
    let spec = eigh(pi)?;
    if spec.eigenvalues[0].abs() <= 1e-12 {
        return Ok((spec.vector(0), None));
    }
    Err(Error::Construction("the acceptance projector has no null state".into()))
}

pub fn bqp_instance(u_x: &ComplexMatrix, accept_projector: &Observable, q: f64, k: u32) -> Result<BqpInstance> {
    let r_dim = u_x.rows();
    let Some(r) = log2_exact(r_dim).filter(|_| u_x.is_square()) else {
        return Err(validation(format!("u_x must be square with power-of-two dimension, got {}x{}", u_x.rows(), u_x.cols())));
    };
    check_qubits(r + 2, "BQP purification")?;
    if !u_x.is_unitary(1e-10) {
        return Err(validation("u_x is not unitary"));
    }
    let pi = accept_projector.matrix();
    if accept_projector.dim() != r_dim || !accept_projector.is_hermitian() || pi.matmul(pi).max_abs_diff(pi) > 1e-10 {
        return Err(validation("acceptance operator must be a projector on the circuit register"));
    }
    if k == 0 || !(q * k as f64 >= 1.0) {
        return Err(validation(format!("need k >= 1 and q·k >= 1, got q={q}, k={k}")));
    }
    let lambda = 1.0 - 1.0 / (q * k as f64);
    let mut zero = vec![ZERO; r_dim];
    zero[0] = c(1.0, 0.0);
    let psi = u_x.apply(&zero);
    let p_x = pi.sandwich(&psi, &psi).re;
    let (phi, phi_basis_index) = null_state(pi)?;

    // Layout [A][S][R]: amplitudes √λ on |0,0,ψ⟩ and √(1−λ) on |1,1,φ⟩.
    let sys_dim = 2 * r_dim;
    let mut vec = vec![ZERO; 2 * sys_dim];
    for i in 0..r_dim {
        vec[i] = psi[i] * lambda.sqrt();
        vec[sys_dim + r_dim + i] = phi[i] * (1.0 - lambda).sqrt();
    }
    let n = vec_norm(&vec);
    for z in &mut vec {
        *z /= n;
    }
    let purification = PurifiedState::new(1, r + 1, vec)?;
    let s0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
    let obs = Observable::new(s0.kron(pi)?)?;
    let rho = purification.density()?;
    let trace_value = trace_power_obs_oracle(&rho, &obs, k)?.re;
    let lk = lambda.powi(k as i32);
    Ok(BqpInstance {
        lambda,
        k,
        q,
        p_x,
        purification,
        obs,
        thresholds: (lk * 2.0 / 3.0, lk / 3.0),
        phi_basis_index,
        trace_value,
        identity_defect: (trace_value - lk * p_x).abs(),
        bernoulli_holds: lk >= 1.0 - 1.0 / q,
    })
}

/// `|1⟩⟨1|` on the first of `qubits` qubits.
pub fn first_qubit_accept(qubits: u32) -> Result<Observable> {
    if qubits == 0 {
        return Err(validation("acceptance qubit needs a register of at least one qubit"));
    }
    let one = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
    Observable::new(one.kron(&ComplexMatrix::identity(1usize << (qubits - 1)))?)
}

#[cfg(test)]
mod tests;
