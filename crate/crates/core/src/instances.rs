//! Seeded random states, unitaries and observables.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{validation, Result};
use crate::numkernel::{c, ComplexMatrix, DensityMatrix, Observable, C64};
use crate::rng::{rng_from_seed, Rng};

fn gaussian(rng: &mut Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Complex Ginibre matrix with standard normal real and imaginary parts.
pub fn ginibre(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, gaussian(rng));
        }
    }
    m
}

/// `G G† / Tr(G G†)` with `G` a seeded `2^qubits × rank` Ginibre matrix.
pub fn random_density(qubits: u32, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(qubits, rank, &mut rng_from_seed(seed))
}

pub fn random_density_with(qubits: u32, rank: usize, rng: &mut Rng) -> Result<DensityMatrix> {
    crate::numkernel::check_qubits(qubits, "random_density")?;
    let dim = 1usize << qubits;
    if rank == 0 || rank > dim {
        return Err(validation(format!("rank must be in 1..={dim}, got {rank}")));
    }
    let g = ginibre(dim, rank, rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / tr).hermitian_part())
}

/// Haar-random pure state vector.
pub fn random_state_vector(dim: usize, rng: &mut Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let n = crate::numkernel::vec_norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix on `R`'s diagonal.
pub fn random_unitary(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let qr = ginibre(dim, dim, rng).to_faer().qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let mut u = ComplexMatrix::from_faer(q.as_ref());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            u.set(i, j, u.get(i, j) * phase);
        }
    }
    u
}

/// Random Hermitian matrix `(G + G†)/2` scaled to unit operator norm.
pub fn random_hermitian(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng).hermitian_part();
    let n = g.op_norm();
    g.scale(1.0 / n)
}

pub fn random_observable(qubits: u32, rng: &mut Rng) -> Result<Observable> {
    Observable::new(random_hermitian(1usize << qubits, rng))
}

/// Random matrix with operator norm `norm` (at most 1 keeps it a contraction).
pub fn random_contraction(rows: usize, cols: usize, norm: f64, rng: &mut Rng) -> ComplexMatrix {
    let g = ginibre(rows, cols, rng);
    let n = g.op_norm();
    g.scale(norm / n)
}

/// `(1 − ε′)|0⟩⟨0| + ε′|1⟩⟨1|` on one qubit.
pub fn biased_qubit(eps_prime: f64) -> Result<DensityMatrix> {
    DensityMatrix::diagonal(&[1.0 - eps_prime, eps_prime])
}
