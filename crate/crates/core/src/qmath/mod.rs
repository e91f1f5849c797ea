//! Dense complex linear algebra and qubit-register manipulation.
//!
//! Every other module builds on these types; the register is small enough
//! (a handful of live qubits at a time) that plain `Vec<Complex64>` storage is
//! the simplest correct choice.

mod density;
mod matrix;
mod state;

pub use density::{embed, DensityMatrix};
pub use matrix::ComplexMatrix;
pub use state::{fidelity_up_to_phase, QubitState};

pub use num_complex::Complex64 as C64;

/// Deviation from `M†M = I` tolerated when a matrix must be unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Deviation from unit norm tolerated for normalized states.
pub const NORM_TOL: f64 = 1e-12;

/// Contracts `<bra|` against the leading `bra.len()` dimensions of a flat vector
/// and returns the (unnormalized) remainder. Works for any local dimensions,
/// including qutrits, as long as the leading block is contiguous.
pub fn contract_leading(state: &[C64], bra: &[C64]) -> Vec<C64> {
    let rest = state.len() / bra.len();
    (0..rest).map(|k| bra.iter().enumerate().map(|(j, b)| b.conj() * state[j * rest + k]).sum()).collect()
}

/// Kronecker product of flat vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}
