use serde::{Deserialize, Serialize};

use super::limits::log2_exact;
use super::matrix::{c, gates, ComplexMatrix, C64};
use super::spectral::{eigh, EighResult};
use crate::error::{validation, Result};

/// Hermiticity, trace and positivity tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// A positive semidefinite, unit-trace operator on `n` qubits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() || log2_exact(mat.rows()).is_none() {
            return Err(validation(format!(
                "density matrix must be square with power-of-two dimension, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        if !mat.is_finite() {
            return Err(validation("density matrix has non-finite entries"));
        }
        let herm = mat.hermiticity_defect();
        if herm > STATE_TOL {
            return Err(validation(format!("density matrix is not Hermitian (defect {herm:.3e})")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(validation(format!("density matrix trace is {tr}, expected 1")));
        }
        let spectrum = eigh(&mat)?;
        let min = spectrum.eigenvalues[0];
        if min < -STATE_TOL {
            return Err(validation(format!("density matrix has negative eigenvalue {min:.3e}")));
        }
        Ok(Self { mat })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = super::matrix::vec_norm(psi);
        if norm == 0.0 {
            return Err(validation("cannot build a pure state from the zero vector"));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::projector(&v)).map(|d| d.hermitised())
    }

    /// Computational basis state `|index⟩⟨index|` on `qubits` qubits.
    pub fn basis(qubits: u32, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(validation(format!("basis index {index} out of range for {qubits} qubits")));
        }
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Self::new(ComplexMatrix::from_real_diagonal(&diag))
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(qubits: u32) -> Self {
        let dim = 1usize << qubits;
        Self { mat: ComplexMatrix::identity(dim).scale(1.0 / dim as f64) }
    }

    /// Diagonal state with the given probabilities.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(probs))
    }

    /// `Σ p_i |ψ_i⟩⟨ψ_i|` for an orthonormal set supplied by the caller.
    pub fn mixture(weights: &[f64], states: &[Vec<C64>]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(validation("mixture needs one weight per state"));
        }
        let dim = states[0].len();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (w, s) in weights.iter().zip(states) {
            m = &m + &ComplexMatrix::projector(s).scale(*w);
        }
        Self::new(m.hermitian_part())
    }

    fn hermitised(self) -> Self {
        Self { mat: self.mat.hermitian_part() }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn qubits(&self) -> u32 {
        self.dim().trailing_zeros()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// Spectrum with eigenvalues in `[-1e-10, 0)` clipped to zero.
    pub fn spectrum(&self) -> EighResult {
        let mut e = eigh(&self.mat).expect("validated Hermitian");
        for l in &mut e.eigenvalues {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        e
    }

    pub fn purity(&self) -> f64 {
        self.spectrum().eigenvalues.iter().map(|l| l * l).sum()
    }

    /// `ρ^p` through the eigendecomposition.
    pub fn power(&self, p: u32) -> ComplexMatrix {
        self.spectrum().map(|l| l.powi(p as i32))
    }

    /// `ρ^{⊗m}` (subject to the qubit cap).
    pub fn tensor_power(&self, m: u32) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::identity(1);
        for _ in 0..m {
            out = out.kron(&self.mat)?;
        }
        Ok(out)
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = crate::Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.mat
    }
}

/// An observable with a cached operator norm. Non-Hermitian operators are
/// accepted only through [`Observable::non_hermitian`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Observable {
    mat: ComplexMatrix,
    op_norm: f64,
    hermitian: bool,
}

impl Observable {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::build(mat, true)
    }

    /// Observable flagged as non-Hermitian; estimators then run both the real
    /// and the imaginary Hadamard-test passes.
    pub fn non_hermitian(mat: ComplexMatrix) -> Result<Self> {
        Self::build(mat, false)
    }

    fn build(mat: ComplexMatrix, require_hermitian: bool) -> Result<Self> {
        if !mat.is_square() || log2_exact(mat.rows()).is_none() {
            return Err(validation("observable must be square with power-of-two dimension"));
        }
        if !mat.is_finite() {
            return Err(validation("observable has non-finite entries"));
        }
        let hermitian = mat.is_hermitian(STATE_TOL);
        if require_hermitian && !hermitian {
            return Err(validation(format!(
                "observable is not Hermitian (defect {:.3e}); use Observable::non_hermitian",
                mat.hermiticity_defect()
            )));
        }
        let mat = if hermitian { mat.hermitian_part() } else { mat };
        let op_norm = mat.op_norm();
        Ok(Self { mat, op_norm, hermitian })
    }

    pub fn identity(qubits: u32) -> Self {
        Self::new(ComplexMatrix::identity(1usize << qubits)).expect("identity is Hermitian")
    }

    /// Tensor product of single-qubit Paulis, e.g. `"XZ"` is `X ⊗ Z`.
    pub fn pauli_string(label: &str) -> Result<Self> {
        if label.is_empty() {
            return Err(validation("empty Pauli string"));
        }
        let mut m = ComplexMatrix::identity(1);
        for ch in label.chars() {
            let p = match ch.to_ascii_uppercase() {
                'I' => ComplexMatrix::identity(2),
                'X' => gates::x(),
                'Y' => gates::y(),
                'Z' => gates::z(),
                other => return Err(validation(format!("unknown Pauli letter {other:?}"))),
            };
            m = m.kron(&p)?;
        }
        Self::new(m)
    }

    /// Projector onto a computational basis state.
    pub fn basis_projector(qubits: u32, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(validation("basis index out of range"));
        }
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Self::new(ComplexMatrix::from_real_diagonal(&diag))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn qubits(&self) -> u32 {
        self.dim().trailing_zeros()
    }

    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::build(self.mat.scale(s), self.hermitian)
    }
}

/// `Σ_i λ_i^k ⟨ψ_i|O|ψ_i⟩`: the exact value of `Tr(ρ^k O)`.
pub fn trace_power_obs_oracle(rho: &DensityMatrix, o: &Observable, k: u32) -> Result<C64> {
    if k == 0 {
        return Err(validation("k must be at least 1"));
    }
    if rho.dim() != o.dim() {
        return Err(validation(format!("state dimension {} != observable dimension {}", rho.dim(), o.dim())));
    }
    let spec = rho.spectrum();
    let mut acc = c(0.0, 0.0);
    for (i, &l) in spec.eigenvalues.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let v = spec.vector(i);
        acc += o.matrix().sandwich(&v, &v) * l.powi(k as i32);
    }
    Ok(acc)
}

fn check_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(validation(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `½‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let diff = a.matrix() - b.matrix();
    let e = eigh(&diff.hermitian_part())?;
    Ok((0.5 * e.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()).min(1.0))
}

/// Uhlmann fidelity `(Tr √(√a b √a))²`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let sqrt_a = a.spectrum().map(|l| l.sqrt());
    let inner = (&(&sqrt_a * b.matrix()) * &sqrt_a).hermitian_part();
    let e = eigh(&inner)?;
    let root: f64 = e.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// Operator norm (largest singular value).
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    m.op_norm()
}

/// Schatten 1-norm (sum of singular values).
pub fn schatten1(m: &ComplexMatrix) -> f64 {
    m.schatten1()
}
