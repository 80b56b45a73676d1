//! Chebyshev expansion of `x^k`, truncation with exact and Chernoff tails,
//! Clenshaw evaluation, and the degree lower-bound solver.
//!
//! The expansion is
//! `x^k = 2^{1-k} Σ_{j=0}^{⌊k/2⌋} α_j C(k, j) T_{k-2j}(x)` with `α_{k/2} = 1/2`
//! for even `k` and `α_j = 1` otherwise. All coefficients are nonnegative and
//! sum to one, so every truncation is bounded by one on `[-1, 1]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{validation, Error, Result};

pub const MAX_POWER: u32 = 1024;
/// Coefficients below this are stored as exact zeros.
const COEFF_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn of(n: u32) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn admits(self, n: usize) -> bool {
        match self {
            Parity::Even => n % 2 == 0,
            Parity::Odd => n % 2 == 1,
            Parity::None => true,
        }
    }
}

/// A real polynomial in the Chebyshev-T basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevPoly {
    coeffs: BTreeMap<usize, f64>,
    parity: Parity,
}

impl ChebyshevPoly {
    /// Zero coefficients are dropped; a parity tag that contradicts a nonzero
    /// coefficient is an error.
    pub fn new(coeffs: BTreeMap<usize, f64>, parity: Parity) -> Result<Self> {
        let mut kept = BTreeMap::new();
        for (n, v) in coeffs {
            if !v.is_finite() {
                return Err(validation(format!("coefficient of T_{n} is not finite")));
            }
            if v == 0.0 {
                continue;
            }
            if !parity.admits(n) {
                return Err(validation(format!("T_{n} has a nonzero coefficient but the parity is {parity:?}")));
            }
            kept.insert(n, v);
        }
        Ok(Self { coeffs: kept, parity })
    }

    /// `c · T_n`.
    pub fn monomial(n: usize, coeff: f64) -> Self {
        let parity = Parity::of(n as u32);
        Self::new(BTreeMap::from([(n, coeff)]), parity).expect("single term matches its own parity")
    }

    pub fn constant(value: f64) -> Self {
        Self::monomial(0, value)
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, f64> {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(&n).copied().unwrap_or(0.0)
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Largest index with a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    /// Clenshaw evaluation; `|x| ≤ 1` is required.
    pub fn eval(&self, x: f64) -> Result<f64> {
        clenshaw_eval(self, x)
    }

    /// Clenshaw recurrence without the domain check, for matrix eigenvalues
    /// that sit a rounding error outside `[-1, 1]`.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let deg = self.degree();
        let (mut b1, mut b2) = (0.0, 0.0);
        for n in (1..=deg).rev() {
            let b0 = self.coeff(n) + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeff(0) + x * b1 - b2
    }

    /// Derivative, expressed again in the T basis.
    pub fn derivative(&self) -> ChebyshevPoly {
        let deg = self.degree();
        let mut d = vec![0.0; deg + 2];
        // c'_{n-1} = c'_{n+1} + 2 n c_n, with c'_0 halved at the end
        for n in (1..=deg).rev() {
            d[n - 1] = d[n + 1] + 2.0 * n as f64 * self.coeff(n);
        }
        d[0] *= 0.5;
        let parity = match self.parity {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        };
        let coeffs = d.into_iter().enumerate().take(deg.max(1)).collect();
        ChebyshevPoly::new(coeffs, parity).expect("derivative flips parity")
    }
}

impl Serialize for ChebyshevPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            parity: Parity,
            coeffs: BTreeMap<String, &'a f64>,
        }
        Repr { parity: self.parity, coeffs: self.coeffs.iter().map(|(n, c)| (n.to_string(), c)).collect() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChebyshevPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Repr {
            parity: Parity,
            coeffs: BTreeMap<String, f64>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let mut coeffs = BTreeMap::new();
        for (key, value) in repr.coeffs {
            let n: usize = key.parse().map_err(|_| D::Error::custom(format!("bad Chebyshev index {key:?}")))?;
            coeffs.insert(n, value);
        }
        ChebyshevPoly::new(coeffs, repr.parity).map_err(D::Error::custom)
    }
}

/// Exact Chebyshev expansion of `x^k`.
///
/// Binomials are taken relative to the central one by the ratio recurrence and
/// then normalized with the identity `Σ_n c_n = 1`, which avoids both overflow
/// and the drift of a cumulative log-sum.
pub fn power_expansion(k: u32) -> Result<ChebyshevPoly> {
    if k == 0 || k > MAX_POWER {
        return Err(validation(format!("power must be in 1..={MAX_POWER}, got {k}")));
    }
    let half = k / 2;
    // rel[j] = C(k, j) / C(k, half) for j ≤ half
    let mut rel = vec![0.0f64; half as usize + 1];
    rel[half as usize] = 1.0;
    for j in (0..half).rev() {
        rel[j as usize] = rel[j as usize + 1] * (j + 1) as f64 / (k - j) as f64;
    }
    let weights: Vec<f64> = (0..=half)
        .map(|j| if k % 2 == 0 && j == half { 0.5 * rel[j as usize] } else { rel[j as usize] })
        .collect();
    let total: f64 = weights.iter().rev().sum();
    let mut coeffs = BTreeMap::new();
    for (j, w) in weights.into_iter().enumerate() {
        let value = w / total;
        if value >= COEFF_FLOOR {
            coeffs.insert((k - 2 * j as u32) as usize, value);
        }
    }
    ChebyshevPoly::new(coeffs, Parity::of(k))
}

/// Smallest degree `m ≥ √(2k ln(2/ε))` with the parity of `k`, capped at `k`.
pub fn required_degree(k: u32, eps: f64) -> Result<u32> {
    if k == 0 {
        return Err(validation("k must be at least 1"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(validation(format!("eps must lie in (0, 1], got {eps}")));
    }
    let raw = (2.0 * k as f64 * (2.0 / eps).ln()).sqrt();
    // absorb rounding noise so that exact integers do not round up
    let mut m = (raw - 1e-12).ceil().max(0.0) as u32;
    if m % 2 != k % 2 {
        m += 1;
    }
    Ok(m.min(k))
}

/// `2 exp(−m² / 2k)`.
pub fn chernoff_tail(k: u32, m: u32) -> f64 {
    2.0 * (-(m as f64).powi(2) / (2.0 * k as f64)).exp()
}

/// A truncated expansion together with its dropped mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationReport {
    pub kept: ChebyshevPoly,
    /// Sum of the dropped coefficients; equals the sup error for nonnegative expansions.
    pub tail_exact: f64,
    pub tail_chernoff: f64,
    pub degree: u32,
}

/// Keeps indices `≤ m` of an expansion of `x^k`.
pub fn truncate(expansion: &ChebyshevPoly, m: u32, k: u32) -> TruncationReport {
    let mut kept = BTreeMap::new();
    let mut tail = 0.0;
    for (&n, &c) in expansion.coeffs() {
        if n <= m as usize {
            kept.insert(n, c);
        } else {
            tail += c.abs();
        }
    }
    let kept = ChebyshevPoly::new(kept, expansion.parity()).expect("subset keeps parity");
    let degree = kept.degree() as u32;
    TruncationReport { kept, tail_exact: tail, tail_chernoff: chernoff_tail(k, m), degree }
}

/// Truncation of the `x^k` expansion at [`required_degree`].
pub fn power_approximation(k: u32, eps: f64) -> Result<TruncationReport> {
    let m = required_degree(k, eps)?;
    Ok(truncate(&power_expansion(k)?, m, k))
}

/// Value of `Σ c_n T_n(x)` by the backward recurrence.
pub fn clenshaw_eval(p: &ChebyshevPoly, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(validation(format!("Chebyshev evaluation needs |x| <= 1, got {x}")));
    }
    Ok(p.eval_unchecked(x))
}

/// Chebyshev nodes of the first kind plus both endpoints, ascending.
pub fn scan_grid(grid_size: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..grid_size)
        .map(|j| (PI * (j as f64 + 0.5) / grid_size as f64).cos())
        .collect();
    xs.push(-1.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs
}

/// Maximum of `|x^k − p(x)|` over [`scan_grid`]; a lower bound on the sup norm.
pub fn sup_error_scan(p: &ChebyshevPoly, k: u32, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(validation("grid_size must be at least 2"));
    }
    Ok(scan_grid(grid_size)
        .into_iter()
        .map(|x| (x.powi(k as i32) - p.eval_unchecked(x)).abs())
        .fold(0.0, f64::max))
}

/// Maximum of `|p(x)|` over [`scan_grid`].
pub fn sup_abs_scan(p: &ChebyshevPoly, grid_size: usize) -> f64 {
    scan_grid(grid_size).into_iter().map(|x| p.eval_unchecked(x).abs()).fold(0.0, f64::max)
}

pub const EMPIRICAL_GRID: usize = 4096;

/// Smallest parity-respecting truncation degree whose scanned error is at most `eps`.
///
/// The scanned error of a truncation is nonincreasing in the degree (the
/// dropped coefficients are nonnegative), so a binary search applies.
pub fn minimal_empirical_degree(k: u32, eps: f64, grid_size: usize) -> Result<u32> {
    let expansion = power_expansion(k)?;
    let first = k % 2;
    let steps = (k - first) / 2;
    let error_at = |step: u32| -> Result<f64> {
        let m = first + 2 * step;
        sup_error_scan(&truncate(&expansion, m, k).kept, k, grid_size)
    };
    let (mut lo, mut hi) = (0u32, steps);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if error_at(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(first + 2 * lo)
}

/// Fixed point of `d² = 2k [ln(π²/2ε) − ln(π² + ln d)]`.
pub fn degree_lower_bound_solve(k: u32, eps: f64) -> Result<f64> {
    if k < 2 {
        return Err(validation("k must be at least 2"));
    }
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(validation(format!("eps must lie in (0, 0.1], got {eps}")));
    }
    let pi2 = PI * PI;
    let lead = (pi2 / (2.0 * eps)).ln();
    let two_k = 2.0 * k as f64;
    let mut d = (two_k * lead).sqrt();
    for _ in 0..10_000 {
        let next = (two_k * (lead - (pi2 + d.ln()).ln())).sqrt();
        if !next.is_finite() {
            return Err(Error::Numerical(format!("lower-bound iteration left the domain at d = {d}")));
        }
        if (next - d).abs() < 1e-9 {
            return Ok(next);
        }
        d = next;
    }
    Err(Error::Numerical("lower-bound iteration did not converge in 10^4 steps".into()))
}
