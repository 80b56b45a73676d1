//! Tensor-product register bookkeeping: applying an operator to a subset of
//! registers of a larger system, and partial traces.
//!
//! Registers are listed most-significant first, so a basis index of a system
//! with register dimensions `[d0, d1, d2]` is `i0*d1*d2 + i1*d2 + i2`.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{validation, Result};

/// Precomputed index sets for an operator acting on some registers.
struct Layout {
    /// Offsets of the operator's basis states inside the full index space.
    local: Vec<usize>,
    /// Base offsets enumerating the remaining registers.
    bases: Vec<usize>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for r in (0..dims.len().saturating_sub(1)).rev() {
        s[r] = s[r + 1] * dims[r + 1];
    }
    s
}

fn mixed_radix_offsets(regs: &[usize], dims: &[usize], strides: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &r in regs {
        let mut next = Vec::with_capacity(out.len() * dims[r]);
        for &o in &out {
            for i in 0..dims[r] {
                next.push(o + i * strides[r]);
            }
        }
        out = next;
    }
    out
}

fn layout(dims: &[usize], acts_on: &[usize]) -> Result<Layout> {
    for (n, &r) in acts_on.iter().enumerate() {
        if r >= dims.len() {
            return Err(validation(format!("register {r} out of range")));
        }
        if acts_on[..n].contains(&r) {
            return Err(validation(format!("register {r} listed twice")));
        }
    }
    let st = strides(dims);
    let rest: Vec<usize> = (0..dims.len()).filter(|r| !acts_on.contains(r)).collect();
    Ok(Layout {
        local: mixed_radix_offsets(acts_on, dims, &st),
        bases: mixed_radix_offsets(&rest, dims, &st),
    })
}

fn check_op(u: &ComplexMatrix, dims: &[usize], acts_on: &[usize]) -> Result<usize> {
    let du: usize = acts_on.iter().map(|&r| dims.get(r).copied().unwrap_or(0)).product();
    if !u.is_square() || u.rows() != du {
        return Err(validation(format!(
            "operator is {}x{} but the target registers have dimension {du}",
            u.rows(),
            u.cols()
        )));
    }
    Ok(du)
}

/// Applies `u` (acting on registers `acts_on`, in that order) to a state vector.
pub fn apply_to_vector(u: &ComplexMatrix, dims: &[usize], acts_on: &[usize], state: &mut [C64]) -> Result<()> {
    let du = check_op(u, dims, acts_on)?;
    let total: usize = dims.iter().product();
    if state.len() != total {
        return Err(validation(format!("state has length {}, expected {total}", state.len())));
    }
    let lay = layout(dims, acts_on)?;
    let entries = u.to_row_major();
    let mut buf = vec![ZERO; du];
    for &base in &lay.bases {
        for (slot, &off) in buf.iter_mut().zip(&lay.local) {
            *slot = state[base + off];
        }
        for (i, &off) in lay.local.iter().enumerate() {
            let row = &entries[i * du..(i + 1) * du];
            state[base + off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
    Ok(())
}

/// Returns `(u on acts_on) · m` without materialising the embedded operator.
pub fn left_multiply(u: &ComplexMatrix, dims: &[usize], acts_on: &[usize], m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let du = check_op(u, dims, acts_on)?;
    let total: usize = dims.iter().product();
    if m.rows() != total {
        return Err(validation(format!("matrix has {} rows, expected {total}", m.rows())));
    }
    let lay = layout(dims, acts_on)?;
    let entries = u.to_row_major();
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    let mut buf = vec![ZERO; du];
    for col in 0..m.cols() {
        for &base in &lay.bases {
            for (slot, &off) in buf.iter_mut().zip(&lay.local) {
                *slot = m.get(base + off, col);
            }
            for (i, &off) in lay.local.iter().enumerate() {
                let row = &entries[i * du..(i + 1) * du];
                out.set(base + off, col, row.iter().zip(&buf).map(|(a, b)| a * b).sum());
            }
        }
    }
    Ok(out)
}

/// The full operator `u ⊗ I` with `u` placed on registers `acts_on`.
pub fn embed(u: &ComplexMatrix, dims: &[usize], acts_on: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    super::limits::check_dim(total, "embed")?;
    left_multiply(u, dims, acts_on, &ComplexMatrix::identity(total))
}

/// Permutation matrix reordering registers: the output register `j` is the
/// input register `perm[j]`.
pub fn permute_registers(dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let n = dims.len();
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(validation("register permutation is not a bijection"));
    }
    let total: usize = dims.iter().product();
    super::limits::check_dim(total, "permute_registers")?;
    let in_strides = strides(dims);
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let out_strides = strides(&out_dims);
    let mut m = ComplexMatrix::zeros(total, total);
    for idx in 0..total {
        let mut out_idx = 0;
        for (j, &p) in perm.iter().enumerate() {
            let digit = (idx / in_strides[p]) % dims[p];
            out_idx += digit * out_strides[j];
        }
        m.set(out_idx, idx, C64::new(1.0, 0.0));
    }
    Ok(m)
}

/// Which factor of a bipartite system to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of a bipartite operator on `A ⊗ B`. A single-column input is
/// treated as the pure state `|v⟩⟨v|`.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    let n = da * db;
    if m.cols() == 1 {
        if m.rows() != n {
            return Err(validation(format!("state of length {} does not match {da}x{db}", m.rows())));
        }
        return Ok(reduce_pure(&m.column_vec(0), dims, keep));
    }
    if !m.is_square() || m.rows() != n {
        return Err(validation(format!(
            "operator of shape {}x{} does not match {da}x{db}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(match keep {
        Keep::A => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|b| m.get(i * db + b, j * db + b)).sum()),
        Keep::B => ComplexMatrix::from_fn(db, db, |i, j| (0..da).map(|a| m.get(a * db + i, a * db + j)).sum()),
    })
}

/// Reduced density matrix of a pure bipartite state vector.
pub fn reduce_pure(v: &[C64], dims: (usize, usize), keep: Keep) -> ComplexMatrix {
    let (da, db) = dims;
    match keep {
        Keep::A => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|b| v[i * db + b] * v[j * db + b].conj()).sum()),
        Keep::B => ComplexMatrix::from_fn(db, db, |i, j| (0..da).map(|a| v[a * db + i] * v[a * db + j].conj()).sum()),
    }
}
