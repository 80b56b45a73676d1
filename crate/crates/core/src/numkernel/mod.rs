//! Dense complex linear algebra, quantum-state primitives and the exact
//! `Tr(ρ^k O)` oracle.

pub mod limits;
pub mod matrix;
pub mod registers;
pub mod spectral;
pub mod states;

pub use limits::{check_dim, check_qubits, dilation_qubit_cap, log2_exact, qubit_cap, set_dilation_qubit_cap, set_qubit_cap};
pub use matrix::{c, gates, inner, svd, vec_norm, ComplexMatrix, Svd, C64, ONE, ZERO};
pub use registers::{apply_to_vector, embed, left_multiply, partial_trace, permute_registers, reduce_pure, Keep};
pub use spectral::{eigh, psd_sqrt, EighResult};
pub use states::{fidelity, op_norm, schatten1, trace_distance, trace_power_obs_oracle, DensityMatrix, Observable};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> crate::Result<ComplexMatrix> {
    a.kron(b)
}
