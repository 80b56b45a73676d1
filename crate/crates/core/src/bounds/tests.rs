use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::instances::{random_density, random_density_with, random_observable, random_unitary};
use crate::numkernel::{fidelity, gates, kron, partial_trace, trace_distance, Keep};
use crate::rng::rng_from_seed;

fn fitted_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

/// `Tr(ρ·ρ·…·ρ·O)` by repeated multiplication.
fn power_obs_by_products(rho: &DensityMatrix, o: &ComplexMatrix, k: u32) -> C64 {
    let mut m = o.clone();
    for _ in 0..k {
        m = rho.matrix().matmul(&m);
    }
    m.trace()
}

fn dense_permutation_trace(rho: &DensityMatrix, o: &Observable, k: u32) -> C64 {
    let p = cyclic_permutation(k, rho.dim()).unwrap();
    let r = rho.tensor_power(k).unwrap();
    let rest = ComplexMatrix::identity(rho.dim().pow(k - 1));
    let o1 = kron(o.matrix(), &rest).unwrap();
    p.matmul(&r).matmul(&o1).trace()
}

/// Full circuit: `|+⟩⟨+| ⊗ ρ^{⊗k}`, controlled-`P_k`, trace out registers 2..k.
fn dense_output_state(rho: &DensityMatrix, k: u32) -> ComplexMatrix {
    let d = rho.dim();
    let n = d.pow(k);
    let p = cyclic_permutation(k, d).unwrap();
    let mut cp = ComplexMatrix::identity(2 * n);
    cp.set_block(n, n, &p);
    let plus = ComplexMatrix::from_fn(2, 2, |_, _| c(0.5, 0.0));
    let input = kron(&plus, &rho.tensor_power(k).unwrap()).unwrap();
    let out = cp.matmul(&input).matmul(&cp.adjoint());
    partial_trace(&out, (2 * d, n / d), Keep::A).unwrap()
}

#[test]
fn two_register_cycle_is_swap() {
    assert_eq!(cyclic_permutation(2, 2).unwrap(), gates::swap());
}

#[test]
fn cycle_has_order_k() {
    for (k, d) in [(3, 2), (4, 2), (3, 3), (5, 2)] {
        let p = cyclic_permutation(k, d).unwrap();
        let mut acc = ComplexMatrix::identity(p.rows());
        for _ in 0..k {
            acc = acc.matmul(&p);
        }
        assert_eq!(acc, ComplexMatrix::identity(p.rows()), "k={k}, d={d}");
        if k > 1 {
            assert_ne!(p, ComplexMatrix::identity(p.rows()));
        }
    }
}

#[test]
fn cycle_moves_last_register_first() {
    // |a, b, c⟩ = |0, 1, 1⟩ (index 3) maps to |1, 0, 1⟩ (index 5).
    let p = cyclic_permutation(3, 2).unwrap();
    assert_eq!(p.get(5, 3), c(1.0, 0.0));
}

#[test]
fn cycle_above_cap_is_a_resource_error() {
    assert!(matches!(cyclic_permutation(8, 4), Err(Error::Resource(_))));
    assert!(cyclic_permutation(0, 2).is_err());
}

#[test]
fn permutation_identity_one_qubit_k3() {
    let rho = random_density(1, 2, 3).unwrap();
    let o = random_observable(1, &mut rng_from_seed(4)).unwrap();
    let lhs = dense_permutation_trace(&rho, &o, 3);
    let rhs = power_obs_by_products(&rho, o.matrix(), 3);
    assert!((lhs - rhs).norm() < 1e-12);
}

#[test]
fn circuit_output_matches_dense_simulation_and_closed_form() {
    for (qubits, k, seed) in [(1, 1, 1), (1, 2, 2), (1, 3, 3), (1, 4, 4), (2, 2, 5), (2, 3, 6)] {
        let rho = random_density(qubits, 1usize << qubits, seed).unwrap();
        let fast = swap_test_output_state(&rho, k).unwrap();
        let dense = dense_output_state(&rho, k);
        assert!(fast.max_abs_diff(&dense) < 1e-13, "qubits={qubits}, k={k}");
        let d = rho.dim();
        let rk = rho.power(k);
        let mut closed = ComplexMatrix::zeros(2 * d, 2 * d);
        closed.set_block(0, 0, &rho.matrix().scale(0.5));
        closed.set_block(d, d, &rho.matrix().scale(0.5));
        closed.set_block(0, d, &rk.scale(0.5));
        closed.set_block(d, 0, &rk.scale(0.5));
        assert!(fast.max_abs_diff(&closed) < 1e-12);
    }
}

#[test]
fn pure_state_identity_observable_always_reads_one() {
    let psi = crate::instances::random_state_vector(2, &mut rng_from_seed(9));
    let rho = DensityMatrix::pure(&psi).unwrap();
    let r = swap_test_estimate(&rho, &Observable::identity(1), 4, 500, 1).unwrap();
    assert_abs_diff_eq!(r.mean, 1.0, epsilon = 1e-12);
    assert!(r.stderr < 1e-6);
    assert_eq!(r.copies_used, 2000);
    assert_eq!(r.mode, SwapTestMode::Exact);
}

#[test]
fn maximally_mixed_cube_is_a_quarter() {
    let rho = DensityMatrix::maximally_mixed(1);
    let r = swap_test_estimate(&rho, &Observable::identity(1), 3, 20_000, 7).unwrap();
    assert_abs_diff_eq!(r.exact_mean, 0.25, epsilon = 1e-12);
    assert!((r.mean - 0.25).abs() <= 4.0 * r.stderr, "{r:?}");
}

#[test]
fn pooled_mean_is_unbiased() {
    let rho = random_density(1, 2, 21).unwrap();
    let o = Observable::pauli_string("Z").unwrap();
    let k = 3;
    let oracle = power_obs_by_products(&rho, o.matrix(), k).re;
    let r = swap_test_estimate(&rho, &o, k, 100_000, 5).unwrap();
    assert!((r.mean - oracle).abs() <= 5.0 * r.stderr, "mean {} oracle {oracle} stderr {}", r.mean, r.stderr);
}

#[test]
fn stderr_follows_inverse_square_root() {
    let rho = random_density(1, 2, 13).unwrap();
    let o = Observable::pauli_string("X").unwrap();
    let points: Vec<(f64, f64)> = [100u64, 1_000, 10_000]
        .iter()
        .map(|&s| ((s as f64).ln(), swap_test_estimate(&rho, &o, 3, s, 17).unwrap().stderr.ln()))
        .collect();
    let slope = fitted_slope(&points);
    assert!((slope + 0.5).abs() <= 0.05, "stderr exponent {slope}");
}

#[test]
fn surrogate_mode_above_cap() {
    let rho = random_density(2, 4, 8).unwrap();
    let o = Observable::pauli_string("ZZ").unwrap();
    let k = 7;
    let r = swap_test_estimate(&rho, &o, k, 50_000, 2).unwrap();
    assert_eq!(r.mode, SwapTestMode::Surrogate);
    let oracle = power_obs_by_products(&rho, o.matrix(), k).re;
    assert_abs_diff_eq!(r.exact_mean, oracle, epsilon = 1e-12);
    let second = rho.matrix().matmul(&o.matrix().matmul(o.matrix())).trace().re;
    assert_abs_diff_eq!(r.single_shot_variance, second - oracle * oracle, epsilon = 1e-12);
    assert!((r.mean - oracle).abs() <= 5.0 * r.stderr);
}

#[test]
fn exact_and_compressed_moments_agree_below_cap() {
    let rho = random_density(2, 3, 30).unwrap();
    let o = random_observable(2, &mut rng_from_seed(31)).unwrap();
    let m = swap_test_moments(&rho, &o, 3).unwrap();
    assert_eq!(m.mode, SwapTestMode::Exact);
    let mean = power_obs_by_products(&rho, o.matrix(), 3).re;
    let second = rho.matrix().matmul(&o.matrix().matmul(o.matrix())).trace().re;
    assert_abs_diff_eq!(m.mean, mean, epsilon = 1e-12);
    assert_abs_diff_eq!(m.variance, second - mean * mean, epsilon = 1e-12);
}

#[test]
fn swap_test_rejects_bad_arguments() {
    let rho = DensityMatrix::maximally_mixed(1);
    let o = Observable::pauli_string("Z").unwrap();
    assert!(swap_test_estimate(&rho, &o, 2, 1, 0).is_err());
    assert!(swap_test_estimate(&rho, &o, 0, 100, 0).is_err());
    assert!(swap_test_estimate(&rho, &Observable::pauli_string("ZZ").unwrap(), 2, 100, 0).is_err());
}

#[test]
fn swap_test_is_reproducible() {
    let rho = random_density(1, 2, 3).unwrap();
    let o = Observable::pauli_string("Y").unwrap();
    let a = swap_test_estimate(&rho, &o, 2, 10_000, 99).unwrap();
    let b = swap_test_estimate(&rho, &o, 2, 10_000, 99).unwrap();
    assert_eq!(a, b);
}

#[test]
fn copy_budget_grows_linearly_in_k() {
    let rho = random_density(1, 2, 50).unwrap();
    let o = Observable::pauli_string("Z").unwrap();
    let points: Vec<(f64, f64)> = [4u32, 8, 16, 32, 64]
        .iter()
        .map(|&k| {
            let copies = swap_copies_for_eps(&rho, &o, k, 0.05, DEFAULT_CONFIDENCE_Z).unwrap();
            ((k as f64).ln(), (copies as f64).ln())
        })
        .collect();
    let slope = fitted_slope(&points);
    assert!((0.85..=1.15).contains(&slope), "copies exponent {slope}");
}

#[test]
fn discrimination_instance_values() {
    let inst = DiscriminationInstance::new(10, 0.5).unwrap();
    assert_abs_diff_eq!(inst.eps_prime, 0.05, epsilon = 1e-15);
    let v1 = power_obs_by_products(&inst.rho1, inst.obs.matrix(), 10).re;
    assert_abs_diff_eq!(v1, 0.95f64.powi(10), epsilon = 1e-12);
    assert_abs_diff_eq!(power_obs_by_products(&inst.rho0, inst.obs.matrix(), 10).re, 1.0, epsilon = 1e-12);
    assert_eq!(inst.decide(1.0), 0);
    assert_eq!(inst.decide(v1), 1);
    assert!(inst.accuracy() < inst.gap() / 2.0);
    assert!(DiscriminationInstance::new(10, 1.0).is_err());
}

#[test]
fn no_copies_no_information() {
    let t = helstrom_experiment(10, 0.5, &[0, 1, 5]).unwrap();
    assert_abs_diff_eq!(t.rows[0].success_lower_bound, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(t.rows[0].helstrom_success, 0.5, epsilon = 1e-15);
    assert!(helstrom_experiment(10, 0.5, &[]).is_err());
}

#[test]
fn helstrom_threshold_example() {
    let t = helstrom_experiment(10, 0.5, &[1]).unwrap();
    let expected = ((4.0f64 / 9.0).ln() / 0.95f64.ln()).ceil() as u64;
    assert_eq!(t.m_star, expected);
    assert_eq!(t.m_star, 16);
    assert!(0.95f64.powi(16) <= 4.0 / 9.0 && 0.95f64.powi(15) > 4.0 / 9.0);
}

#[test]
fn helstrom_rows_match_dense_states() {
    let k = 4;
    let inst = DiscriminationInstance::new(k, 0.6).unwrap();
    let t = helstrom_experiment(k, 0.6, &[1, 2, 3, 4]).unwrap();
    for row in &t.rows {
        let m = row.m as u32;
        let a = DensityMatrix::new(inst.rho0.tensor_power(m).unwrap()).unwrap();
        let b = DensityMatrix::new(inst.rho1.tensor_power(m).unwrap()).unwrap();
        assert_abs_diff_eq!(fidelity(&a, &b).unwrap(), row.fidelity, epsilon = 1e-10);
        let helstrom = 0.5 + 0.5 * trace_distance(&a, &b).unwrap();
        assert_abs_diff_eq!(helstrom, row.helstrom_success, epsilon = 1e-12);
        assert!(row.success_lower_bound <= row.helstrom_success + 1e-15);
    }
}

#[test]
fn helstrom_threshold_is_linear_in_k() {
    let ks = [10u32, 20, 40, 80];
    let m: Vec<f64> = ks.iter().map(|&k| helstrom_experiment(k, 0.5, &[0]).unwrap().m_star as f64).collect();
    let n = ks.len() as f64;
    let mk = ks.iter().map(|&k| k as f64).sum::<f64>() / n;
    let mm = m.iter().sum::<f64>() / n;
    let slope = ks.iter().zip(&m).map(|(&k, &y)| (k as f64 - mk) * (y - mm)).sum::<f64>()
        / ks.iter().map(|&k| (k as f64 - mk).powi(2)).sum::<f64>();
    let unit = m[0] / 10.0;
    assert!(slope >= 0.8 * unit && slope <= 1.2 * unit, "slope {slope}, m*(10)/10 = {unit}");
    let ratio = m[3] / m[0];
    assert!((7.0..=9.0).contains(&ratio), "{ratio}");
}

#[test]
fn lecam_pauli_z_example() {
    let r = lecam_construction(&Observable::pauli_string("Z").unwrap(), 0.1).unwrap();
    assert_abs_diff_eq!(r.delta, 0.05, epsilon = 1e-15);
    assert_abs_diff_eq!(r.expectation0, 0.1, epsilon = 1e-12);
    assert_abs_diff_eq!(r.expectation1, -0.1, epsilon = 1e-12);
    assert_abs_diff_eq!(r.rho0.matrix().get(0, 0).re, 0.55, epsilon = 1e-12);
}

#[test]
fn bernoulli_kl_small_delta_limit() {
    // D(½+δ ‖ ½−δ) = 4δ artanh(2δ) = 8δ² + 32δ⁴/3 + 128δ⁶/5 + O(δ⁸).
    for delta in [1e-2, 1e-3] {
        let kl = bernoulli_kl(0.5 + delta, 0.5 - delta);
        let series = 8.0 * delta * delta + 32.0 * delta.powi(4) / 3.0 + 128.0 * delta.powi(6) / 5.0;
        assert!((kl - series).abs() <= 100.0 * delta.powi(8) + 1e-17, "δ={delta}: {kl} vs {series}");
        assert!((kl / (delta * delta) - 8.0).abs() <= 11.0 * delta * delta);
    }
}

#[test]
fn lecam_rejects_one_sided_spectrum() {
    let proj = Observable::basis_projector(1, 0).unwrap();
    assert!(matches!(lecam_construction(&proj, 0.1), Err(Error::Construction(_))));
    let z = Observable::pauli_string("Z").unwrap();
    assert!(lecam_construction(&z, 1.0).is_err());
}

#[test]
fn lecam_copy_bound_exponent() {
    let points: Vec<(f64, f64)> = [(1.0, 0.1), (1.0, 0.05), (2.0, 0.05), (4.0, 0.05), (4.0, 0.02), (8.0, 0.01)]
        .iter()
        .map(|&(scale, eps)| {
            let o = Observable::new(gates::z().scale(scale)).unwrap();
            let r = lecam_construction(&o, eps).unwrap();
            ((scale / eps).ln(), r.copy_bound.ln())
        })
        .collect();
    let slope = fitted_slope(&points);
    assert!((slope - 2.0).abs() <= 0.1, "{slope}");
}

#[test]
fn hybrid_zero_delta_is_trivial() {
    let r = hybrid_bound_demo(&Observable::pauli_string("Z").unwrap(), 0.0, &[1, 10]).unwrap();
    assert!(r.direct_norm < 1e-12);
    assert_eq!(r.crossing_t, None);
}

#[test]
fn hybrid_closed_form_example() {
    let r = hybrid_bound_demo(&Observable::pauli_string("Z").unwrap(), 0.15, &[1, 2, 4]).unwrap();
    assert_abs_diff_eq!(r.delta, 0.3, epsilon = 1e-15);
    let expected = (0.09 + (1.0 - 0.91f64.sqrt()).powi(2)).sqrt();
    assert_abs_diff_eq!(r.closed_form, expected, epsilon = 1e-15);
    assert!((r.direct_norm - expected).abs() <= 1e-9);
    assert_abs_diff_eq!(r.expectation1.abs(), 0.3, epsilon = 1e-12);
    assert_abs_diff_eq!(r.rows[2].cumulative_bound, 4.0 * r.direct_norm, epsilon = 1e-15);
    let t = r.crossing_t.unwrap();
    assert!(t as f64 * r.direct_norm >= HYBRID_CROSSING && (t - 1) as f64 * r.direct_norm < HYBRID_CROSSING);
}

#[test]
fn hybrid_crossing_scales_with_norm_over_eps() {
    let mut rng = rng_from_seed(12);
    let base = random_observable(2, &mut rng).unwrap();
    let points: Vec<(f64, f64)> = [(1.0, 0.01), (1.0, 0.003), (2.0, 0.002), (4.0, 0.001), (8.0, 0.0005)]
        .iter()
        .map(|&(scale, eps)| {
            let o = base.scaled(scale).unwrap();
            let r = hybrid_bound_demo(&o, eps, &[]).unwrap();
            ((o.op_norm() / eps).ln(), (r.crossing_t.unwrap() as f64).ln())
        })
        .collect();
    let slope = fitted_slope(&points);
    assert!((slope - 1.0).abs() <= 0.05, "{slope}");
}

#[test]
fn hybrid_rejects_large_delta() {
    assert!(hybrid_bound_demo(&Observable::pauli_string("Z").unwrap(), 0.6, &[1]).is_err());
}

fn bqp_oracle(inst: &BqpInstance) -> f64 {
    let rho = inst.purification.density().unwrap();
    power_obs_by_products(&rho, inst.obs.matrix(), inst.k).re
}

#[test]
fn bqp_accepting_circuit() {
    let u = kron(&gates::x(), &ComplexMatrix::identity(2)).unwrap();
    let inst = bqp_instance(&u, &first_qubit_accept(2).unwrap(), 10.0, 5).unwrap();
    assert_abs_diff_eq!(inst.p_x, 1.0, epsilon = 1e-15);
    let lambda = 1.0 - 1.0 / 50.0;
    assert_abs_diff_eq!(inst.lambda, lambda, epsilon = 1e-15);
    assert_abs_diff_eq!(bqp_oracle(&inst), lambda.powi(5), epsilon = 1e-10);
    assert!(inst.identity_defect <= 1e-10);
    assert_abs_diff_eq!(inst.gap(), lambda.powi(5) / 3.0, epsilon = 1e-12);
}

#[test]
fn bqp_rejecting_circuit() {
    let inst = bqp_instance(&ComplexMatrix::identity(4), &first_qubit_accept(2).unwrap(), 10.0, 5).unwrap();
    assert_abs_diff_eq!(inst.p_x, 0.0, epsilon = 1e-15);
    assert!(bqp_oracle(&inst).abs() <= 1e-12);
}

#[test]
fn bqp_phi_is_annihilated() {
    // |1…1⟩ is accepted, so the last annihilated basis state is |01…1⟩.
    let inst = bqp_instance(&ComplexMatrix::identity(8), &first_qubit_accept(3).unwrap(), 2.0, 1).unwrap();
    assert_eq!(inst.phi_basis_index, Some(3));
    let full = Observable::identity(1);
    assert!(matches!(
        bqp_instance(&ComplexMatrix::identity(2), &full, 2.0, 1),
        Err(Error::Construction(_))
    ));
}

#[test]
fn bernoulli_inequality_grid() {
    for q in [2.0, 10.0, 100.0] {
        for k in [1u32, 5, 50] {
            let inst = bqp_instance(&ComplexMatrix::identity(2), &first_qubit_accept(1).unwrap(), q, k).unwrap();
            assert!(inst.bernoulli_holds, "q={q}, k={k}");
            assert!(inst.lambda.powi(k as i32) >= 1.0 - 1.0 / q);
        }
    }
}

#[test]
fn bqp_identity_on_random_circuits() {
    let mut rng = rng_from_seed(77);
    for trial in 0..50 {
        let qubits = 1 + trial % 3;
        let u = random_unitary(1usize << qubits, &mut rng);
        let q = [2.0, 10.0][trial as usize % 2];
        let k = [1u32, 5, 20][trial as usize % 3];
        let inst = bqp_instance(&u, &first_qubit_accept(qubits).unwrap(), q, k).unwrap();
        let oracle = bqp_oracle(&inst);
        assert!((oracle - inst.lambda.powi(k as i32) * inst.p_x).abs() <= 1e-10, "trial {trial}");
        assert!(inst.identity_defect <= 1e-10);
    }
}

#[test]
fn bqp_rejects_bad_input() {
    let acc = first_qubit_accept(1).unwrap();
    assert!(bqp_instance(&ComplexMatrix::identity(2), &acc, 0.5, 1).is_err());
    assert!(bqp_instance(&ComplexMatrix::identity(2).scale(2.0), &acc, 2.0, 1).is_err());
    assert!(bqp_instance(&ComplexMatrix::identity(4), &acc, 2.0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_identity_holds(seed in any::<u64>(), two_qubits in any::<bool>(), k in 1u32..=4) {
        let qubits = if two_qubits { 2 } else { 1 };
        let k = if two_qubits { k.min(3) } else { k };
        let mut rng = rng_from_seed(seed);
        let rank = 1 + (seed % (1u64 << qubits)) as usize;
        let rho = random_density_with(qubits, rank, &mut rng).unwrap();
        let o = random_observable(qubits, &mut rng).unwrap();
        let lhs = dense_permutation_trace(&rho, &o, k);
        let rhs = power_obs_by_products(&rho, o.matrix(), k);
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn discrimination_gap_invariant(k in 1u32..200, c_const in 0.01f64..0.99) {
        let inst = DiscriminationInstance::new(k, c_const).unwrap();
        let (a, b) = inst.values();
        prop_assert!((a - b - (1.0 - (1.0 - c_const / k as f64).powi(k as i32))).abs() < 1e-12);
    }

    #[test]
    fn bqp_gap_is_a_third_of_lambda_power(q in 1.0f64..50.0, k in 1u32..30) {
        let inst = bqp_instance(&ComplexMatrix::identity(2), &first_qubit_accept(1).unwrap(), q, k).unwrap();
        prop_assert!((inst.gap() - inst.lambda.powi(k as i32) / 3.0).abs() < 1e-12);
        prop_assert!(inst.bernoulli_holds);
    }
}
