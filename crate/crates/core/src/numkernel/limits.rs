//! Process-wide size limits. Every operator and circuit handled by the crate
//! is dense, so the caps bound memory use.

use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_QUBIT_CAP: u32 = 14;
/// Explicit dilations are dense square matrices; above this many qubits only
/// the block-encoding bookkeeping is kept.
pub const DEFAULT_DILATION_QUBIT_CAP: u32 = 10;

static QUBIT_CAP: AtomicU32 = AtomicU32::new(DEFAULT_QUBIT_CAP);
static DILATION_QUBIT_CAP: AtomicU32 = AtomicU32::new(DEFAULT_DILATION_QUBIT_CAP);

pub fn qubit_cap() -> u32 {
    QUBIT_CAP.load(Ordering::Relaxed)
}

pub fn set_qubit_cap(qubits: u32) {
    QUBIT_CAP.store(qubits, Ordering::Relaxed);
}

pub fn dilation_qubit_cap() -> u32 {
    DILATION_QUBIT_CAP.load(Ordering::Relaxed).min(qubit_cap())
}

pub fn set_dilation_qubit_cap(qubits: u32) {
    DILATION_QUBIT_CAP.store(qubits, Ordering::Relaxed);
}

/// Fails when a register of dimension `dim` exceeds the qubit cap.
pub fn check_dim(dim: usize, what: &str) -> Result<()> {
    if dim > (1usize << qubit_cap()) {
        return Err(Error::Resource(format!(
            "{what}: dimension {dim} exceeds the {}-qubit cap",
            qubit_cap()
        )));
    }
    Ok(())
}

pub fn check_qubits(qubits: u32, what: &str) -> Result<()> {
    if qubits > qubit_cap() {
        return Err(Error::Resource(format!(
            "{what}: {qubits} qubits exceed the {}-qubit cap",
            qubit_cap()
        )));
    }
    Ok(())
}

/// `log2(dim)` for powers of two.
pub fn log2_exact(dim: usize) -> Option<u32> {
    (dim.is_power_of_two()).then(|| dim.trailing_zeros())
}
