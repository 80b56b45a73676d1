use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{validation, Result};

/// Tolerance on `‖H − H†‖` accepted by [`eigh`].
pub const EIGH_HERMITIAN_TOL: f64 = 1e-8;

/// Spectral decomposition `H = V Λ V†` with ascending eigenvalues.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EighResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EighResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column_vec(i)
    }

    /// `Σ f(λ_i) |v_i⟩⟨v_i|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v.get(i, k) * v.get(j, k).conj() * fl[k]).sum())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| l)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvectors are phase-normalised so that the entry of largest modulus
/// (first one on ties) is real and positive, which makes the output
/// deterministic for a given input.
pub fn eigh(h: &ComplexMatrix) -> Result<EighResult> {
    if !h.is_square() {
        return Err(validation("eigh needs a square matrix"));
    }
    let defect = h.hermiticity_defect();
    if defect > EIGH_HERMITIAN_TOL * h.frobenius_norm().max(1.0) {
        return Err(validation(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    let n = h.rows();
    let eig = h
        .hermitian_part()
        .to_faer()
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| crate::Error::Numerical(format!("eigendecomposition did not converge: {e:?}")))?;
    let raw: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let eigenvalues = order.iter().map(|&i| raw[i]).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let column: Vec<C64> = eig.U().col(src).iter().copied().collect();
        let pivot = column
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |(bi, bn), (i, z)| if z.norm() > bn + 1e-12 { (i, z.norm()) } else { (bi, bn) })
            .0;
        let phase = if column[pivot].norm() > 0.0 { column[pivot].conj() / column[pivot].norm() } else { C64::new(1.0, 0.0) };
        for (row, z) in column.iter().enumerate() {
            vecs.set(row, col, z * phase);
        }
    }
    Ok(EighResult { eigenvalues, eigenvectors: vecs })
}

/// Principal square root of a PSD matrix, clipping eigenvalues in `[-clip, 0)` to zero.
pub fn psd_sqrt(m: &ComplexMatrix, clip: f64) -> Result<ComplexMatrix> {
    let e = eigh(m)?;
    if let Some(&min) = e.eigenvalues.first() {
        if min < -clip {
            return Err(validation(format!("matrix is not PSD (min eigenvalue {min:.3e})")));
        }
    }
    Ok(e.map(|l| l.max(0.0).sqrt()))
}
