//! Simulated singular value transformation.
//!
//! The polynomial is applied as an exact eigenvalue transform of the encoded
//! Hermitian block and re-encoded through a Halmos dilation on one fresh
//! ancilla. Query counts follow the degree of the polynomial, since a
//! degree-`m` transform uses `m` applications of the source encoding.

use serde::{Deserialize, Serialize};

use crate::blockenc::{
    be_product, density_block_encoding, halmos_block_encoding, observable_alpha, observable_block_encoding,
    pad_ancillas, BlockEncoding, PurifiedState,
};
use crate::chebyshev::{power_approximation, required_degree, sup_abs_scan, ChebyshevPoly, Parity};
use crate::error::{validation, Error, Result};
use crate::numkernel::{eigh, ComplexMatrix, Observable};

/// Grid used for the `|p| ≤ 1` admissibility scan.
pub const ADMISSIBILITY_GRID: usize = 2048;
pub const ADMISSIBILITY_TOL: f64 = 1e-9;
/// Each application of the density block encoding costs this many `U_ρ` queries.
pub const U_RHO_QUERIES_PER_APPLICATION: u64 = 2;

/// Query accounting for one polynomial transform of the density encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub u_rho_queries: u64,
    pub be_rho_applications: u64,
    pub poly_degree: u32,
}

impl QueryLedger {
    pub fn for_degree(degree: u32) -> Self {
        Self {
            u_rho_queries: U_RHO_QUERIES_PER_APPLICATION * degree as u64,
            be_rho_applications: degree as u64,
            poly_degree: degree,
        }
    }
}

/// A transform request: `poly` applied to `source`, aiming at `x^target_exponent`.
#[derive(Debug, Clone)]
pub struct QsvtRequest {
    pub source: BlockEncoding,
    pub poly: ChebyshevPoly,
    pub target_exponent: u32,
    pub eps_poly: f64,
}

impl QsvtRequest {
    pub fn validate(&self) -> Result<()> {
        if self.poly.parity() != Parity::of(self.target_exponent) {
            return Err(Error::Contract(format!(
                "polynomial parity {:?} does not match exponent {}",
                self.poly.parity(),
                self.target_exponent
            )));
        }
        check_admissible(&self.poly)?;
        check_source(&self.source)
    }
}

fn check_admissible(poly: &ChebyshevPoly) -> Result<()> {
    if poly.parity() == Parity::None {
        return Err(Error::Contract("transform polynomial needs a definite parity".into()));
    }
    let sup = sup_abs_scan(poly, ADMISSIBILITY_GRID);
    if sup > 1.0 + ADMISSIBILITY_TOL {
        return Err(Error::Contract(format!("polynomial reaches |p| = {sup} on [-1, 1]")));
    }
    Ok(())
}

fn check_source(source: &BlockEncoding) -> Result<()> {
    let defect = source.block().hermiticity_defect();
    if defect > 1e-10 * source.block().frobenius_norm().max(1.0) {
        return Err(Error::Contract(format!("source block is not Hermitian (defect {defect:.3e})")));
    }
    Ok(())
}

/// `p(A/α)` by eigenvalue transform.
pub fn eigen_transform(block: &ComplexMatrix, alpha: f64, poly: &ChebyshevPoly) -> Result<ComplexMatrix> {
    let spec = eigh(&block.scale(1.0 / alpha))?;
    Ok(spec.map(|l| poly.eval_unchecked(l.clamp(-1.0, 1.0))))
}

/// A transformed encoding with its query bill.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub encoding: BlockEncoding,
    pub ledger: QueryLedger,
}

/// `(1, a+1, 0)` encoding of `p(A/α)` on `[source ancillas][new ancilla][system]`.
pub fn apply_poly(source: &BlockEncoding, poly: &ChebyshevPoly) -> Result<Transformed> {
    check_admissible(poly)?;
    check_source(source)?;
    let block = eigen_transform(source.block(), source.alpha(), poly)?;
    let inner = halmos_block_encoding(block, 1.0)?;
    let encoding = pad_ancillas(&inner, source.ancillas())?;
    Ok(Transformed { encoding, ledger: QueryLedger::for_degree(poly.degree() as u32) })
}

/// Checked form of [`apply_poly`] that also enforces the parity of the target exponent.
pub fn apply_request(req: &QsvtRequest) -> Result<Transformed> {
    req.validate()?;
    apply_poly(&req.source, &req.poly)
}

/// Encoding of `p_m(ρ) ≈ ρ^{k−1}` with its approximation bookkeeping.
#[derive(Debug, Clone)]
pub struct PowerEncoding {
    pub encoding: BlockEncoding,
    pub ledger: QueryLedger,
    pub poly: ChebyshevPoly,
    pub eps_poly: f64,
    /// `2 exp(−m² / 2(k−1))`.
    pub tail_chernoff: f64,
    /// Sum of the dropped Chebyshev coefficients.
    pub tail_exact: f64,
    /// `‖p_m(ρ) − ρ^{k−1}‖` measured on the spectrum of ρ.
    pub model_error: f64,
}

/// Degree and ledger of the `ρ^{k−1}` transform without building anything.
pub fn power_ledger(k: u32, eps_poly: f64) -> Result<QueryLedger> {
    check_k(k)?;
    Ok(QueryLedger::for_degree(required_degree(k - 1, eps_poly)?))
}

fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(validation(format!("k must be at least 2, got {k}")));
    }
    Ok(())
}

/// `(1, a+n+1, ε)` encoding of `ρ^{k−1}`, realised as an exact encoding of `p_m(ρ)`.
pub fn power_block_encoding(p: &PurifiedState, k: u32, eps: f64) -> Result<PowerEncoding> {
    check_k(k)?;
    let source = density_block_encoding(p)?;
    let approx = power_approximation(k - 1, eps)?;
    let request = QsvtRequest { source, poly: approx.kept.clone(), target_exponent: k - 1, eps_poly: eps };
    let Transformed { mut encoding, ledger } = apply_request(&request)?;
    encoding.set_err(eps);
    let spec = eigh(request.source.block())?;
    let model_error = spec
        .eigenvalues
        .iter()
        .map(|&l| {
            let l = l.clamp(-1.0, 1.0);
            (approx.kept.eval_unchecked(l) - l.powi(k as i32 - 1)).abs()
        })
        .fold(0.0, f64::max);
    Ok(PowerEncoding {
        encoding,
        ledger,
        poly: approx.kept,
        eps_poly: eps,
        tail_chernoff: approx.tail_chernoff,
        tail_exact: approx.tail_exact,
        model_error,
    })
}

/// Polynomial budget for a target accuracy `eps_total` on `Tr(ρ^k O)`: `ε / (2‖O‖)`, capped at one.
pub fn poly_budget(eps_total: f64, o: &Observable) -> Result<f64> {
    if !(eps_total > 0.0 && eps_total <= 1.0) {
        return Err(validation(format!("eps must lie in (0, 1], got {eps_total}")));
    }
    if o.op_norm() == 0.0 {
        return Ok(1.0);
    }
    Ok((eps_total / (2.0 * o.op_norm())).min(1.0))
}

/// Degree from the alternative budget `ε / (2 α_O ‖O‖)`, i.e. `√(2(k−1) ln(4 α_O ‖O‖ / ε))`.
pub fn alternative_degree(k: u32, eps_total: f64, o: &Observable) -> Result<u32> {
    check_k(k)?;
    let scale = 2.0 * observable_alpha(o) * o.op_norm();
    let budget = if scale == 0.0 { 1.0 } else { (eps_total / scale).min(1.0) };
    required_degree(k - 1, budget)
}

/// Encoding of `p_m(ρ)·O` with all bookkeeping.
#[derive(Debug, Clone)]
pub struct ObservablePowerEncoding {
    pub encoding: BlockEncoding,
    pub power: PowerEncoding,
    pub alpha_o: f64,
}

/// `(α_O, a+n+2, α_O ε_poly)` encoding of `p_m(ρ) O` with `ε_poly = ε/(2‖O‖)`.
pub fn power_times_obs(p: &PurifiedState, o: &Observable, k: u32, eps_total: f64) -> Result<ObservablePowerEncoding> {
    if o.dim() != p.sys_dim() {
        return Err(validation(format!(
            "observable dimension {} does not match the system dimension {}",
            o.dim(),
            p.sys_dim()
        )));
    }
    let eps_poly = poly_budget(eps_total, o)?;
    let power = power_block_encoding(p, k, eps_poly)?;
    let obs = observable_block_encoding(o)?;
    let encoding = be_product(&power.encoding, &obs)?;
    Ok(ObservablePowerEncoding { encoding, power, alpha_o: obs.alpha() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockenc::{purify, verify_block_encoding};
    use crate::chebyshev::{chernoff_tail, power_expansion, truncate};
    use crate::instances::{biased_qubit, random_density, random_observable};
    use crate::numkernel::{gates, trace_power_obs_oracle, DensityMatrix};
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn diag_source(d: &[f64]) -> BlockEncoding {
        halmos_block_encoding(ComplexMatrix::from_real_diagonal(d), 1.0).unwrap()
    }

    #[test]
    fn identity_and_constant_polynomials() {
        let a = diag_source(&[0.7, 0.3]);
        let t1 = apply_poly(&a, &ChebyshevPoly::monomial(1, 1.0)).unwrap();
        assert!(t1.encoding.block().max_abs_diff(a.block()) < 1e-14);
        assert_eq!(t1.encoding.ancillas(), 2);
        assert_eq!(t1.ledger.poly_degree, 1);
        let one = apply_poly(&a, &ChebyshevPoly::constant(1.0)).unwrap();
        assert!(one.encoding.block().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
        assert_eq!(one.ledger.u_rho_queries, 0);
    }

    #[test]
    fn square_by_full_expansion() {
        let a = diag_source(&[0.7, 0.3]);
        let p = truncate(&power_expansion(2).unwrap(), 2, 2).kept;
        let t = apply_poly(&a, &p).unwrap();
        assert!(t.encoding.block().max_abs_diff(&ComplexMatrix::from_real_diagonal(&[0.49, 0.09])) < 1e-14);
        assert!(verify_block_encoding(&t.encoding, t.encoding.block()).unwrap() < 1e-12);
    }

    #[test]
    fn contract_violations_are_rejected() {
        let a = diag_source(&[0.7, 0.3]);
        let big = ChebyshevPoly::monomial(2, 1.5);
        assert!(matches!(apply_poly(&a, &big), Err(Error::Contract(_))));
        let req = QsvtRequest { source: a.clone(), poly: ChebyshevPoly::monomial(2, 1.0), target_exponent: 3, eps_poly: 0.1 };
        assert!(matches!(apply_request(&req), Err(Error::Contract(_))));
        let mixed = ChebyshevPoly::new([(1, 0.5), (2, 0.5)].into(), Parity::None).unwrap();
        assert!(matches!(apply_poly(&a, &mixed), Err(Error::Contract(_))));
        let nh = halmos_block_encoding(ComplexMatrix::from_real(2, 2, &[0., 0.5, 0., 0.]).unwrap(), 1.0).unwrap();
        assert!(matches!(apply_poly(&nh, &ChebyshevPoly::monomial(1, 1.0)), Err(Error::Contract(_))));
    }

    #[test]
    fn pure_state_power_is_itself() {
        let rho = DensityMatrix::basis(1, 1).unwrap();
        for k in [2u32, 5, 9] {
            let pe = power_block_encoding(&purify(&rho).unwrap(), k, 1e-3).unwrap();
            assert!((pe.encoding.block() - rho.matrix()).op_norm() <= 1e-3);
        }
    }

    #[test]
    fn maximally_mixed_square() {
        let rho = DensityMatrix::maximally_mixed(1);
        let pe = power_block_encoding(&purify(&rho).unwrap(), 3, 1e-3).unwrap();
        let quarter = ComplexMatrix::identity(2).scale(0.25);
        assert!((pe.encoding.block() - &quarter).op_norm() <= 1e-3);
        assert_eq!(pe.encoding.err(), 1e-3);
        assert!(verify_block_encoding(&pe.encoding, pe.encoding.block()).unwrap() <= 1e-10);
    }

    #[test]
    fn rank_three_eighth_power() {
        let rho = random_density(3, 3, 31).unwrap();
        let pe = power_block_encoding(&purify(&rho).unwrap(), 9, 1e-4).unwrap();
        let dense = rho.power(8);
        assert!((pe.encoding.block() - &dense).op_norm() <= 1e-4);
        assert_eq!(pe.ledger.poly_degree, required_degree(8, 1e-4).unwrap());
    }

    #[test]
    fn power_times_observable_examples() {
        let rho1 = biased_qubit(0.1).unwrap();
        let proj0 = Observable::basis_projector(1, 0).unwrap();
        let t = power_times_obs(&purify(&rho1).unwrap(), &proj0, 3, 1e-3).unwrap();
        let oracle = ComplexMatrix::from_real_diagonal(&[0.81, 0.0]);
        assert!((t.encoding.block() - &oracle).op_norm() <= 1e-3);
        assert_eq!(t.alpha_o, 1.0);
        assert_abs_diff_eq!(t.encoding.err(), 1e-3 / 2.0, epsilon = 1e-18);
        assert!(verify_block_encoding(&t.encoding, t.encoding.block()).unwrap() <= 1e-10);

        let rho = random_density(2, 4, 17).unwrap();
        let zz = Observable::pauli_string("ZZ").unwrap();
        let p = purify(&rho).unwrap();
        let t = power_times_obs(&p, &zz, 5, 0.01).unwrap();
        let approx = (rho.matrix() * t.encoding.block()).trace();
        let exact = trace_power_obs_oracle(&rho, &zz, 5).unwrap();
        assert!((approx - exact).norm() <= 0.01);
    }

    #[test]
    fn identity_observable_reduces_to_power() {
        let rho = random_density(1, 2, 2).unwrap();
        let p = purify(&rho).unwrap();
        let t = power_times_obs(&p, &Observable::identity(1), 4, 0.02).unwrap();
        let pe = power_block_encoding(&p, 4, 0.01).unwrap();
        assert_eq!(t.alpha_o, 1.0);
        assert!(t.encoding.block().max_abs_diff(pe.encoding.block()) < 1e-14);
    }

    #[test]
    fn alternative_degree_uses_alpha_in_log() {
        let o = Observable::new(gates::z().scale(3.0)).unwrap();
        // budget ε/(2·3·3) against ε/(2·3)
        let alt = alternative_degree(40, 0.1, &o).unwrap();
        let main = required_degree(39, poly_budget(0.1, &o).unwrap()).unwrap();
        assert_eq!(alt, required_degree(39, 0.1 / 18.0).unwrap());
        assert!(alt >= main);
    }

    #[test]
    fn ledger_counts_two_queries_per_application() {
        let l = power_ledger(33, 0.025).unwrap();
        assert_eq!(l.poly_degree, required_degree(32, 0.025).unwrap());
        assert_eq!(l.u_rho_queries, 2 * l.poly_degree as u64);
        assert!(power_ledger(1, 0.1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn power_error_within_chernoff_tail(seed in any::<u64>(), qubits in 1u32..=2, k in 2u32..=40, log_eps in -6.0f64..-0.5) {
            let eps = 10f64.powf(log_eps);
            let dim = 1usize << qubits;
            let rho = random_density(qubits, 1 + seed as usize % dim, seed).unwrap();
            let pe = power_block_encoding(&purify(&rho).unwrap(), k, eps).unwrap();
            let m = pe.ledger.poly_degree;
            prop_assert_eq!(m, required_degree(k - 1, eps).unwrap());
            prop_assert_eq!(pe.ledger.u_rho_queries, 2 * m as u64);
            let defect = (pe.encoding.block() - &rho.power(k - 1)).op_norm();
            prop_assert!(defect <= chernoff_tail(k - 1, m) + 1e-12);
            prop_assert!(defect <= eps + 1e-12);
        }

        #[test]
        fn parity_mismatch_rejected(k in 2u32..=30) {
            let a = diag_source(&[0.5, 0.25]);
            let wrong = ChebyshevPoly::monomial(k as usize, 1.0);
            let req = QsvtRequest { source: a, poly: wrong, target_exponent: k - 1, eps_poly: 0.1 };
            prop_assert!(matches!(apply_request(&req), Err(Error::Contract(_))));
        }

        #[test]
        fn eigen_transform_matches_independent_sum(seed in any::<u64>(), k in 1u32..=12) {
            let mut rng = rng_from_seed(seed);
            let h = random_observable(2, &mut rng).unwrap();
            let source = halmos_block_encoding(h.matrix().clone(), 1.0).unwrap();
            let poly = power_expansion(k).unwrap();
            let t = apply_poly(&source, &poly).unwrap();
            let spec = eigh(h.matrix()).unwrap();
            let mut expected = ComplexMatrix::zeros(4, 4);
            for i in 0..4 {
                let v = spec.vector(i);
                expected = &expected + &ComplexMatrix::projector(&v).scale(spec.eigenvalues[i].powi(k as i32));
            }
            prop_assert!(t.encoding.block().max_abs_diff(&expected) <= 1e-10);
        }
    }
}
