use num_complex::Complex64 as C64;

use super::state::bit_of;
use super::{ComplexMatrix, QubitState};
use crate::error::{Error, Result};

/// Density operator on `num_qubits` qubits, same bit ordering as [`QubitState`].
/// Trace may be below one after a projection.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    m: ComplexMatrix,
}

impl DensityMatrix {
    pub fn from_pure(state: &QubitState) -> Self {
        let a = state.amplitudes();
        Self { num_qubits: state.num_qubits(), m: ComplexMatrix::outer(a, a) }
    }

    pub fn from_matrix(num_qubits: usize, m: ComplexMatrix) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: m.rows() });
        }
        Ok(Self { num_qubits, m })
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self { num_qubits, m: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)) }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { num_qubits: self.num_qubits + other.num_qubits, m: self.m.kron(&other.m) }
    }

    /// `U rho U†` with `U` acting on `targets`.
    pub fn conjugate(&self, u: &ComplexMatrix, targets: &[usize]) -> Result<Self> {
        let full = embed(u, targets, self.num_qubits)?;
        Ok(Self { num_qubits: self.num_qubits, m: &(&full * &self.m) * &full.adjoint() })
    }

    /// `P rho P†` for an arbitrary operator `P` on `targets` (no unitarity requirement).
    pub fn sandwich(&self, p: &ComplexMatrix, targets: &[usize]) -> Result<Self> {
        self.conjugate_unchecked(p, targets)
    }

    fn conjugate_unchecked(&self, p: &ComplexMatrix, targets: &[usize]) -> Result<Self> {
        let full = embed_unchecked(p, targets, self.num_qubits)?;
        Ok(Self { num_qubits: self.num_qubits, m: &(&full * &self.m) * &full.adjoint() })
    }

    /// Reduced state on `keep` (in the listed order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let n = self.num_qubits;
        if keep.is_empty() {
            return Err(Error::InvalidArgument("partial trace must keep at least one qubit".into()));
        }
        for (i, &q) in keep.iter().enumerate() {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, num_qubits: n });
            }
            if keep[..i].contains(&q) {
                return Err(Error::DuplicateTarget(q));
            }
        }
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let k = keep.len();
        let spread = |idx: usize, qubits: &[usize]| -> usize {
            let m = qubits.len();
            (0..m).filter(|&b| idx & (1 << (m - 1 - b)) != 0).map(|b| bit_of(n, qubits[b])).sum()
        };
        let keep_off: Vec<usize> = (0..1usize << k).map(|i| spread(i, keep)).collect();
        let trace_off: Vec<usize> = (0..1usize << traced.len()).map(|i| spread(i, &traced)).collect();
        let mut out = ComplexMatrix::zeros(1 << k, 1 << k);
        for (i, &ri) in keep_off.iter().enumerate() {
            for (j, &rj) in keep_off.iter().enumerate() {
                out[(i, j)] = trace_off.iter().map(|&t| self.m[(ri + t, rj + t)]).sum();
            }
        }
        Ok(Self { num_qubits: k, m: out })
    }

    /// Hermitian within 1e-12, trace in (0, 1], eigenvalues above -1e-10.
    pub fn is_valid(&self) -> bool {
        let tr = self.trace();
        self.m.is_hermitian(1e-12) && tr > 0.0 && tr <= 1.0 + 1e-12 && self.m.is_positive_semidefinite(1e-10)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m.max_abs_diff(&other.m)
    }
}

/// Lifts a `2^k` operator on `targets` to the full `2^n` space.
pub fn embed(u: &ComplexMatrix, targets: &[usize], n: usize) -> Result<ComplexMatrix> {
    embed_unchecked(u, targets, n)
}

fn embed_unchecked(u: &ComplexMatrix, targets: &[usize], n: usize) -> Result<ComplexMatrix> {
    let dim = 1usize << n;
    if u.rows() != 1 << targets.len() || !u.is_square() {
        return Err(Error::DimensionMismatch { expected: 1 << targets.len(), found: u.rows() });
    }
    let mut full = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut e = QubitState::basis(n, col);
        e.apply_matrix_checked(u, targets)?;
        for (row, a) in e.amplitudes().iter().enumerate() {
            full[(row, col)] = *a;
        }
    }
    Ok(full)
}

impl QubitState {
    fn apply_matrix_checked(&mut self, u: &ComplexMatrix, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.num_qubits() {
                return Err(Error::QubitOutOfRange { index: t, num_qubits: self.num_qubits() });
            }
            if targets[..i].contains(&t) {
                return Err(Error::DuplicateTarget(t));
            }
        }
        self.apply_matrix_unchecked(u, targets);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateKind;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let b = QubitState::from_amplitudes(vec![
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();
        let rho = DensityMatrix::from_pure(&b).partial_trace(&[0]).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-15);
    }

    #[test]
    fn product_marginal_is_factor() {
        let rho = DensityMatrix::from_pure(&QubitState::zero(2)).partial_trace(&[0]).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::from_pure(&QubitState::zero(1))) < 1e-15);
    }

    #[test]
    fn h_state_second_marginal_is_maximally_mixed() {
        let h = QubitState::plus_n(2).apply_unitary(&GateKind::CZ.matrix(), &[0, 1]).unwrap();
        let rho = DensityMatrix::from_pure(&h).partial_trace(&[1]).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-15);
        assert!(rho.is_valid());
    }

    #[test]
    fn partial_trace_rejects_bad_keep() {
        let rho = DensityMatrix::from_pure(&QubitState::zero(2));
        assert!(rho.partial_trace(&[]).is_err());
        assert!(rho.partial_trace(&[2]).is_err());
    }

    #[test]
    fn conjugation_matches_state_evolution() {
        let s = QubitState::plus_n(2);
        let cz = GateKind::CZ.matrix();
        let a = DensityMatrix::from_pure(&s).conjugate(&cz, &[1, 0]).unwrap();
        let b = DensityMatrix::from_pure(&s.apply_unitary(&cz, &[0, 1]).unwrap());
        assert!(a.max_abs_diff(&b) < 1e-15);
    }
}
