//! Purifications, block encodings and their algebra.
//!
//! A dilation always acts on registers `[ancillas][system]`, ancillas first,
//! so the encoded block is the top-left `dim × dim` corner.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::numkernel::{
    check_qubits, dilation_qubit_cap, eigh, embed, left_multiply, log2_exact, partial_trace, permute_registers,
    svd, vec_norm, Svd, ComplexMatrix, DensityMatrix, Keep, Observable, C64, ZERO,
};

/// Tolerance for the unit norm of a purification vector.
pub const PURIFICATION_NORM_TOL: f64 = 1e-12;
/// Contractions up to this far above norm one are clipped back to one.
pub const CONTRACTION_CLIP_TOL: f64 = 1e-6;
const EIGENVALUE_TIE_TOL: f64 = 1e-12;

/// A unit vector on `[env][sys]` whose reduced state on `sys` is the encoded density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurifiedState {
    env_qubits: u32,
    sys_qubits: u32,
    vec: Vec<C64>,
}

impl PurifiedState {
    pub fn new(env_qubits: u32, sys_qubits: u32, vec: Vec<C64>) -> Result<Self> {
        let dim = 1usize << (env_qubits + sys_qubits);
        if vec.len() != dim {
            return Err(validation(format!("purification has length {}, expected {dim}", vec.len())));
        }
        if vec.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(validation("purification has non-finite entries"));
        }
        let norm = vec_norm(&vec);
        if (norm - 1.0).abs() > PURIFICATION_NORM_TOL {
            return Err(validation(format!("purification has norm {norm}, expected 1")));
        }
        Ok(Self { env_qubits, sys_qubits, vec })
    }

    pub fn env_qubits(&self) -> u32 {
        self.env_qubits
    }

    pub fn sys_qubits(&self) -> u32 {
        self.sys_qubits
    }

    pub fn env_dim(&self) -> usize {
        1 << self.env_qubits
    }

    pub fn sys_dim(&self) -> usize {
        1 << self.sys_qubits
    }

    pub fn total_qubits(&self) -> u32 {
        self.env_qubits + self.sys_qubits
    }

    pub fn vec(&self) -> &[C64] {
        &self.vec
    }

    /// `Tr_E |ρ⟩⟨ρ|`.
    pub fn reduced(&self) -> ComplexMatrix {
        crate::numkernel::reduce_pure(&self.vec, (self.env_dim(), self.sys_dim()), Keep::B)
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.reduced())
    }

    /// A state-preparation unitary `U_ρ` on `[env][sys]` with `U_ρ|0⟩ = |ρ⟩`.
    ///
    /// The remaining columns come from Gram–Schmidt against the computational
    /// basis in index order.
    pub fn state_prep_unitary(&self) -> Result<ComplexMatrix> {
        check_qubits(self.total_qubits(), "state preparation unitary")?;
        complete_unitary(&self.vec)
    }
}

/// Gram–Schmidt completion of a unit vector to a unitary whose first column it is.
pub fn complete_unitary(first: &[C64]) -> Result<ComplexMatrix> {
    let dim = first.len();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(dim);
    basis.push(first.to_vec());
    for j in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![ZERO; dim];
        v[j] = C64::new(1.0, 0.0);
        // two passes of modified Gram–Schmidt keep the columns orthonormal to rounding
        for _ in 0..2 {
            for b in &basis {
                let proj: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
        }
        let norm = vec_norm(&v);
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    if basis.len() != dim {
        return Err(Error::Numerical("Gram-Schmidt completion lost rank".into()));
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| basis[j][i]))
}

fn lexicographic(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// `|ρ⟩ = Σ_i √p_i |i⟩_E |ψ_i⟩_I` with `i` ranking eigenvalues in descending order.
///
/// Eigenvalues within `1e-12` of each other form a tie group, ordered by the
/// lexicographic order of their (phase-normalised) eigenvectors.
pub fn purify(rho: &DensityMatrix) -> Result<PurifiedState> {
    let spec = eigh(rho.matrix())?;
    let n = spec.dim();
    let vectors: Vec<Vec<C64>> = (0..n).map(|i| spec.vector(i)).collect();
    let mut order: Vec<usize> = (0..n).rev().collect();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (spec.eigenvalues[order[start]] - spec.eigenvalues[order[end]]).abs() <= EIGENVALUE_TIE_TOL {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| lexicographic(&vectors[a], &vectors[b]));
        start = end;
    }
    let mut vec = vec![ZERO; n * n];
    for (rank, &idx) in order.iter().enumerate() {
        let weight = spec.eigenvalues[idx].max(0.0).sqrt();
        for (s, z) in vectors[idx].iter().enumerate() {
            vec[rank * n + s] = z * weight;
        }
    }
    let norm = vec_norm(&vec);
    let vec = vec.into_iter().map(|z| z / norm).collect();
    PurifiedState::new(rho.qubits(), rho.qubits(), vec)
}

/// `(α, a, ε)` block encoding of `block`, optionally with an explicit dilation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "BlockEncodingRepr", into = "BlockEncodingRepr")]
pub struct BlockEncoding {
    block: ComplexMatrix,
    alpha: f64,
    ancillas: u32,
    err: f64,
    dilation: Option<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockEncodingRepr {
    block: ComplexMatrix,
    alpha: f64,
    ancillas: u32,
    err: f64,
}

impl From<BlockEncoding> for BlockEncodingRepr {
    fn from(be: BlockEncoding) -> Self {
        Self { block: be.block, alpha: be.alpha, ancillas: be.ancillas, err: be.err }
    }
}

impl TryFrom<BlockEncodingRepr> for BlockEncoding {
    type Error = Error;

    fn try_from(r: BlockEncodingRepr) -> Result<Self> {
        let be = BlockEncoding::bookkeeping(r.block, r.alpha, r.ancillas, r.err)?;
        Ok(be.with_recomputed_dilation())
    }
}

impl BlockEncoding {
    /// Metadata-only encoding; `alpha ≥ ‖block‖ − 1e-9` is enforced.
    pub fn bookkeeping(block: ComplexMatrix, alpha: f64, ancillas: u32, err: f64) -> Result<Self> {
        if !block.is_square() || log2_exact(block.rows()).is_none() {
            return Err(validation("encoded block must be square with power-of-two dimension"));
        }
        if !block.is_finite() {
            return Err(validation("encoded block has non-finite entries"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(validation(format!("alpha must be positive, got {alpha}")));
        }
        if !(err >= 0.0 && err.is_finite()) {
            return Err(validation(format!("err must be nonnegative, got {err}")));
        }
        let norm = block.op_norm();
        if norm > alpha + 1e-9 {
            return Err(validation(format!("alpha {alpha} is below the block norm {norm}")));
        }
        Ok(Self { block, alpha, ancillas, err, dilation: None })
    }

    /// Attaches an explicit dilation; it must be unitary on `[ancillas][system]`.
    pub fn with_dilation(mut self, dilation: ComplexMatrix) -> Result<Self> {
        let dim = self.block.rows() << self.ancillas;
        if !dilation.is_square() || dilation.rows() != dim {
            return Err(validation(format!("dilation must be {dim}x{dim}, got {}x{}", dilation.rows(), dilation.cols())));
        }
        let defect = dilation.unitarity_defect();
        if defect > 1e-9 {
            return Err(validation(format!("dilation is not unitary (defect {defect:.3e})")));
        }
        self.dilation = Some(dilation);
        Ok(self)
    }

    /// Attaches a dilation produced by one of this module's constructions.
    fn with_trusted_dilation(mut self, dilation: ComplexMatrix) -> Self {
        debug_assert_eq!(dilation.rows(), self.block.rows() << self.ancillas);
        self.dilation = Some(dilation);
        self
    }

    /// Rebuilds a dilation as `I ⊗ halmos(block/alpha)` when it fits under the
    /// dilation cap and there is at least one ancilla.
    pub fn with_recomputed_dilation(mut self) -> Self {
        if self.ancillas >= 1 && self.total_qubits() <= dilation_qubit_cap() {
            if let Ok(h) = halmos_dilate(&self.block.scale(1.0 / self.alpha)) {
                if let Ok(d) = ComplexMatrix::identity(1 << (self.ancillas - 1)).kron(&h) {
                    self = self.with_trusted_dilation(d);
                    return self;
                }
            }
        }
        self
    }

    pub fn block(&self) -> &ComplexMatrix {
        &self.block
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ancillas(&self) -> u32 {
        self.ancillas
    }

    pub fn err(&self) -> f64 {
        self.err
    }

    pub fn dilation(&self) -> Option<&ComplexMatrix> {
        self.dilation.as_ref()
    }

    pub fn has_dilation(&self) -> bool {
        self.dilation.is_some()
    }

    pub fn system_dim(&self) -> usize {
        self.block.rows()
    }

    pub fn system_qubits(&self) -> u32 {
        self.block.rows().trailing_zeros()
    }

    pub fn total_qubits(&self) -> u32 {
        self.ancillas + self.system_qubits()
    }

    /// `(⟨0^a| ⊗ I) U (|0^a⟩ ⊗ I)`.
    pub fn dilation_block(&self) -> Option<ComplexMatrix> {
        let d = self.system_dim();
        self.dilation.as_ref().map(|u| u.top_left(d, d))
    }

    pub fn set_err(&mut self, err: f64) {
        self.err = err;
    }

    /// Drops the dilation, keeping the bookkeeping.
    pub fn without_dilation(mut self) -> Self {
        self.dilation = None;
        self
    }

    /// Corrupts the dilation by flipping the sign of column `col`; used by mutation tests.
    #[doc(hidden)]
    pub fn flip_dilation_column(&mut self, col: usize) {
        if let Some(u) = self.dilation.as_mut() {
            for r in 0..u.rows() {
                let z = u.get(r, col);
                u.set(r, col, -z);
            }
        }
    }
}

fn materialize(total_qubits: u32) -> bool {
    total_qubits <= dilation_qubit_cap()
}

/// `(U_ρ† ⊗ I)(I_E ⊗ SWAP)(U_ρ ⊗ I)` on `[E][I][I']`: a `(1, a+n, 0)` encoding of ρ on `I'`.
pub fn density_block_encoding(p: &PurifiedState) -> Result<BlockEncoding> {
    let n = p.sys_qubits();
    let total = p.env_qubits() + 2 * n;
    check_qubits(total, "density block encoding")?;
    let rho = p.reduced();
    let be = BlockEncoding::bookkeeping(rho, 1.0, p.env_qubits() + n, 0.0)?;
    if !materialize(total) {
        return Ok(be);
    }
    let (de, ds) = (p.env_dim(), p.sys_dim());
    let dims = [de, ds, ds];
    let u = p.state_prep_unitary()?;
    let swap = permute_registers(&[ds, ds], &[1, 0])?;
    let mut w = embed(&u, &dims, &[0, 1])?;
    w = left_multiply(&swap, &dims, &[1, 2], &w)?;
    w = left_multiply(&u.adjoint(), &dims, &[0, 1], &w)?;
    Ok(be.with_trusted_dilation(w))
}

/// Halmos dilation `[[M, √(I−MM†)], [√(I−M†M), −M†]]` of a square contraction.
///
/// With `M = W Σ V†` this is `diag(W, V) [[Σ, S], [S, −Σ]] diag(V†, W†)` where
/// `S = √(I − Σ²)`, which stays unitary to rounding even for singular values
/// at one. Norms in `(1, 1 + 1e-6]` are clipped back to one.
pub fn halmos_dilate(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(validation("Halmos dilation needs a square matrix"));
    }
    if !m.is_finite() {
        return Err(validation("Halmos dilation needs finite entries"));
    }
    let d = m.rows();
    let Svd { u: w, singular_values, v } = svd(m)?;
    let norm = singular_values.iter().copied().fold(0.0, f64::max);
    if norm > 1.0 + CONTRACTION_CLIP_TOL {
        return Err(validation(format!("matrix norm {norm} exceeds 1; not a contraction")));
    }
    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    let sigma: Vec<f64> = singular_values.iter().map(|s| (s * scale).min(1.0)).collect();
    let comp: Vec<f64> = sigma.iter().map(|s| ((1.0 - s) * (1.0 + s)).sqrt()).collect();
    // X D Y† for a real diagonal D
    let sandwich = |x: &ComplexMatrix, diag: &[f64], y: &ComplexMatrix| {
        ComplexMatrix::from_fn(d, d, |i, j| (0..d).map(|k| x.get(i, k) * diag[k] * y.get(j, k).conj()).sum())
    };
    let m_clipped = sandwich(&w, &sigma, &v);
    let mut u = ComplexMatrix::zeros(2 * d, 2 * d);
    u.set_block(0, 0, &m_clipped);
    u.set_block(0, d, &sandwich(&w, &comp, &w));
    u.set_block(d, 0, &sandwich(&v, &comp, &v));
    u.set_block(d, d, &(-&m_clipped.adjoint()));
    Ok(u)
}

/// `(1, 1, 0)`-style encoding of a contraction through its Halmos dilation,
/// with the given normalization.
pub fn halmos_block_encoding(block: ComplexMatrix, alpha: f64) -> Result<BlockEncoding> {
    let be = BlockEncoding::bookkeeping(block, alpha, 1, 0.0)?;
    if !materialize(be.total_qubits()) {
        return Ok(be);
    }
    let u = halmos_dilate(&be.block.scale(1.0 / alpha))?;
    Ok(be.with_trusted_dilation(u))
}

/// Normalization used for observables: `max(1, ‖O‖)`.
pub fn observable_alpha(o: &Observable) -> f64 {
    o.op_norm().max(1.0)
}

/// One-ancilla encoding of `O` with `α = max(1, ‖O‖)`.
pub fn observable_block_encoding(o: &Observable) -> Result<BlockEncoding> {
    halmos_block_encoding(o.matrix().clone(), observable_alpha(o))
}

/// Prepends `extra` ancillas acted on trivially.
pub fn pad_ancillas(be: &BlockEncoding, extra: u32) -> Result<BlockEncoding> {
    let mut out = BlockEncoding::bookkeeping(be.block.clone(), be.alpha, be.ancillas + extra, be.err)?;
    if let Some(u) = &be.dilation {
        if materialize(out.total_qubits()) {
            out = out.with_trusted_dilation(ComplexMatrix::identity(1 << extra).kron(u)?);
        }
    }
    Ok(out)
}

/// Product encoding of `A·B` on `[ancA][ancB][sys]`: `(α_A α_B, r+s, α_A δ + α_B ε)`.
pub fn be_product(a: &BlockEncoding, b: &BlockEncoding) -> Result<BlockEncoding> {
    if a.system_dim() != b.system_dim() {
        return Err(validation(format!(
            "system dimensions differ: {} vs {}",
            a.system_dim(),
            b.system_dim()
        )));
    }
    let block = &a.block * &b.block;
    let alpha = a.alpha * b.alpha;
    let err = a.alpha * b.err + b.alpha * a.err;
    let ancillas = a.ancillas + b.ancillas;
    let be = BlockEncoding::bookkeeping(block, alpha, ancillas, err)?;
    let (Some(ua), Some(ub)) = (&a.dilation, &b.dilation) else {
        return Ok(be);
    };
    if !materialize(be.total_qubits()) {
        return Ok(be);
    }
    let dims = [1usize << a.ancillas, 1usize << b.ancillas, a.system_dim()];
    let mut u = embed(ub, &dims, &[1, 2])?;
    u = left_multiply(ua, &dims, &[0, 2], &u)?;
    Ok(be.with_trusted_dilation(u))
}

/// `‖target − α (⟨0^a| ⊗ I) U (|0^a⟩ ⊗ I)‖` in operator norm.
pub fn verify_block_encoding(be: &BlockEncoding, target: &ComplexMatrix) -> Result<f64> {
    let top = be
        .dilation_block()
        .ok_or_else(|| validation("block encoding has no explicit dilation to verify"))?;
    if target.rows() != top.rows() || target.cols() != top.cols() {
        return Err(validation("target dimension does not match the encoded system"));
    }
    Ok((target - &top.scale(be.alpha)).op_norm())
}

/// Reduced state of a purification, as a checked density matrix.
pub fn reduced_state(p: &PurifiedState) -> Result<ComplexMatrix> {
    let full = ComplexMatrix::column(p.vec());
    partial_trace(&full, (p.env_dim(), p.sys_dim()), Keep::B)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_contraction, random_density, random_density_with};
    use crate::numkernel::{c, gates};
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn purify_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(1);
        let p = purify(&rho).unwrap();
        assert!(p.reduced().max_abs_diff(rho.matrix()) < 1e-14);
        // weights sit on environment basis states |0⟩ and |1⟩
        let w0: f64 = p.vec()[..2].iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(w0, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn purify_pure_state() {
        let rho = DensityMatrix::basis(1, 0).unwrap();
        let p = purify(&rho).unwrap();
        assert_abs_diff_eq!(p.vec()[0].norm(), 1.0, epsilon = 1e-14);
        assert!(p.vec()[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn purify_random_rank_two() {
        let rho = random_density(2, 2, 3).unwrap();
        let p = purify(&rho).unwrap();
        let back = reduced_state(&p).unwrap();
        assert!((&back - rho.matrix()).op_norm() <= 1e-11);
        // environment weights are the eigenvalues in descending order
        let w: Vec<f64> = (0..4).map(|i| p.vec()[i * 4..(i + 1) * 4].iter().map(|z| z.norm_sqr()).sum()).collect();
        assert!(w.windows(2).all(|x| x[0] >= x[1] - 1e-15));
    }

    #[test]
    fn state_prep_maps_zero_to_purification() {
        let rho = random_density(2, 3, 8).unwrap();
        let p = purify(&rho).unwrap();
        let u = p.state_prep_unitary().unwrap();
        assert!(u.unitarity_defect() < 1e-12);
        let col = u.column_vec(0);
        for (a, b) in col.iter().zip(p.vec()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn density_encoding_examples() {
        for rho in [DensityMatrix::basis(1, 0).unwrap(), DensityMatrix::maximally_mixed(1)] {
            let be = density_block_encoding(&purify(&rho).unwrap()).unwrap();
            assert_eq!(be.alpha(), 1.0);
            assert_eq!(be.ancillas(), 2);
            assert_eq!(be.err(), 0.0);
            assert!(be.dilation_block().unwrap().max_abs_diff(rho.matrix()) <= 1e-10);
        }
    }

    #[test]
    fn density_encoding_verifies_for_many_states() {
        let mut rng = rng_from_seed(50);
        for i in 0..50 {
            let qubits = 1 + i % 3;
            let rank = 1 + i as usize % (1 << qubits);
            let rho = random_density_with(qubits, rank, &mut rng).unwrap();
            let be = density_block_encoding(&purify(&rho).unwrap()).unwrap();
            assert!(verify_block_encoding(&be, rho.matrix()).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn density_encoding_over_cap_is_resource_error() {
        let p = purify(&DensityMatrix::maximally_mixed(5)).unwrap();
        assert!(matches!(density_block_encoding(&p), Err(Error::Resource(_))));
    }

    #[test]
    fn halmos_examples() {
        let u0 = halmos_dilate(&ComplexMatrix::zeros(2, 2)).unwrap();
        let swap_like = ComplexMatrix::from_real(
            4,
            4,
            &[0., 0., 1., 0., 0., 0., 0., 1., 1., 0., 0., 0., 0., 1., 0., 0.],
        )
        .unwrap();
        assert!(u0.max_abs_diff(&swap_like) < 1e-15);
        let ui = halmos_dilate(&ComplexMatrix::identity(2)).unwrap();
        assert!(ui.max_abs_diff(&ComplexMatrix::from_real_diagonal(&[1., 1., -1., -1.])) < 1e-15);
    }

    #[test]
    fn halmos_of_scaled_projector_matches_closed_form() {
        let delta = 0.3;
        let nu = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let p = ComplexMatrix::projector(&nu);
        let u1 = halmos_dilate(&p.scale(delta)).unwrap();
        // √(I − δ²P) = I − (1 − √(1−δ²)) P for a rank-one projector
        let root = &ComplexMatrix::identity(2) - &p.scale(1.0 - (1.0 - delta * delta).sqrt());
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected.set_block(0, 0, &p.scale(delta));
        expected.set_block(0, 2, &root);
        expected.set_block(2, 0, &root);
        expected.set_block(2, 2, &p.scale(-delta));
        assert!(u1.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn halmos_rejects_expansions() {
        assert!(halmos_dilate(&ComplexMatrix::identity(2).scale(1.1)).is_err());
        assert!(halmos_dilate(&ComplexMatrix::identity(2).scale(1.0 + 1e-9)).is_ok());
    }

    #[test]
    fn observable_encodings() {
        let z = observable_block_encoding(&Observable::pauli_string("Z").unwrap()).unwrap();
        assert_eq!(z.alpha(), 1.0);
        assert!(z.dilation_block().unwrap().max_abs_diff(&gates::z()) < 1e-14);
        let three = Observable::new(ComplexMatrix::from_real_diagonal(&[3.0, 0.0])).unwrap();
        let be = observable_block_encoding(&three).unwrap();
        assert_abs_diff_eq!(be.alpha(), 3.0, epsilon = 1e-12);
        assert!(be.dilation_block().unwrap().max_abs_diff(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])) < 1e-12);
        let xz = Observable::new(&gates::x() + &gates::z()).unwrap();
        assert_abs_diff_eq!(observable_block_encoding(&xz).unwrap().alpha(), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn product_bookkeeping() {
        let rho = random_density(1, 2, 4).unwrap();
        let a = density_block_encoding(&purify(&rho).unwrap()).unwrap();
        let o = Observable::new(ComplexMatrix::from_real_diagonal(&[2.0, -1.0])).unwrap();
        let b = observable_block_encoding(&o).unwrap();
        let ab = be_product(&a, &b).unwrap();
        assert_abs_diff_eq!(ab.alpha(), 2.0, epsilon = 1e-12);
        assert_eq!(ab.ancillas(), 3);
        assert_eq!(ab.err(), 0.0);
        let target = rho.matrix() * o.matrix();
        assert!(verify_block_encoding(&ab, &target).unwrap() <= 1e-10);
        let id = halmos_block_encoding(ComplexMatrix::identity(2), 1.0).unwrap();
        let idid = be_product(&id, &id).unwrap();
        assert!(verify_block_encoding(&idid, &ComplexMatrix::identity(2)).unwrap() <= 1e-12);
        assert!(be_product(&a, &halmos_block_encoding(ComplexMatrix::identity(4), 1.0).unwrap()).is_err());
    }

    #[test]
    fn product_error_propagates() {
        let mut rng = rng_from_seed(77);
        let ma = random_contraction(4, 4, 0.9, &mut rng);
        let mb = random_contraction(4, 4, 0.7, &mut rng);
        let mut a = halmos_block_encoding(ma.clone(), 1.0).unwrap();
        let mut b = halmos_block_encoding(mb.clone(), 2.0).unwrap();
        a.set_err(0.01);
        b.set_err(0.02);
        let ab = be_product(&a, &b).unwrap();
        assert_abs_diff_eq!(ab.err(), 1.0 * 0.02 + 2.0 * 0.01, epsilon = 1e-15);
        assert!(verify_block_encoding(&ab, &(&ma * &mb)).unwrap() <= ab.err() + 1e-8);
    }

    #[test]
    fn corrupted_dilation_is_detected() {
        let rho = random_density(1, 2, 12).unwrap();
        let mut be = density_block_encoding(&purify(&rho).unwrap()).unwrap();
        assert!(verify_block_encoding(&be, rho.matrix()).unwrap() <= 1e-10);
        be.flip_dilation_column(0);
        assert!(verify_block_encoding(&be, rho.matrix()).unwrap() > 1e-3);
        let bare = be.without_dilation();
        assert!(verify_block_encoding(&bare, rho.matrix()).is_err());
    }

    #[test]
    fn halmos_verifies_exactly() {
        let mut rng = rng_from_seed(2);
        let m = random_contraction(4, 4, 1.0, &mut rng);
        let be = halmos_block_encoding(m.clone(), 1.0).unwrap();
        assert!(verify_block_encoding(&be, &m).unwrap() <= 1e-10);
    }

    #[test]
    fn json_omits_dilation_and_recomputes() {
        let rho = random_density(1, 2, 5).unwrap();
        let be = density_block_encoding(&purify(&rho).unwrap()).unwrap();
        let js = serde_json::to_value(&be).unwrap();
        assert!(js.get("dilation").is_none());
        let back: BlockEncoding = serde_json::from_value(js).unwrap();
        assert_eq!(back.ancillas(), be.ancillas());
        assert!(verify_block_encoding(&back, rho.matrix()).unwrap() <= 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn purification_round_trip(seed in any::<u64>(), qubits in 1u32..=3, rank_frac in 0.0f64..1.0) {
            let dim = 1usize << qubits;
            let rank = 1 + ((dim - 1) as f64 * rank_frac).round() as usize;
            let rho = random_density(qubits, rank, seed).unwrap();
            let p = purify(&rho).unwrap();
            prop_assert!((vec_norm(p.vec()) - 1.0).abs() <= 1e-12);
            prop_assert!((&reduced_state(&p).unwrap() - rho.matrix()).op_norm() <= 1e-11);
        }

        #[test]
        fn halmos_is_unitary(seed in any::<u64>(), qubits in 0u32..=3, norm in 0.0f64..=1.0) {
            let mut rng = rng_from_seed(seed);
            let d = 1usize << qubits;
            let m = random_contraction(d, d, norm, &mut rng);
            let u = halmos_dilate(&m).unwrap();
            prop_assert!(u.unitarity_defect() <= 1e-9);
            prop_assert!(u.top_left(d, d).max_abs_diff(&m) <= 1e-12);
        }

        #[test]
        fn product_defect_within_recorded_error(seed in any::<u64>(), ea in 0.0f64..0.1, eb in 0.0f64..0.1) {
            let mut rng = rng_from_seed(seed);
            let ma = random_contraction(2, 2, 1.0, &mut rng);
            let mb = random_contraction(2, 2, 1.0, &mut rng);
            // encode perturbed blocks and record the perturbation as err
            let pa = &ma + &random_contraction(2, 2, ea, &mut rng);
            let pb = &mb + &random_contraction(2, 2, eb, &mut rng);
            let (na, nb) = (pa.op_norm().max(1.0), pb.op_norm().max(1.0));
            let mut a = halmos_block_encoding(pa, na).unwrap();
            let mut b = halmos_block_encoding(pb, nb).unwrap();
            a.set_err(ea);
            b.set_err(eb);
            let ab = be_product(&a, &b).unwrap();
            // the perturbed product differs from ma·mb by at most ea·‖mb‖ + ‖pa‖·eb
            prop_assert!(verify_block_encoding(&ab, &(&ma * &mb)).unwrap() <= ab.err() + 1e-8);
        }

        #[test]
        fn density_encoding_is_exact(seed in any::<u64>(), qubits in 1u32..=3) {
            let rho = random_density(qubits, 1usize << qubits, seed).unwrap();
            let be = density_block_encoding(&purify(&rho).unwrap()).unwrap();
            prop_assert!(verify_block_encoding(&be, rho.matrix()).unwrap() <= 1e-10);
            if qubits <= 2 {
                prop_assert!(be.dilation().unwrap().unitarity_defect() <= 1e-9);
            }
        }
    }
}
