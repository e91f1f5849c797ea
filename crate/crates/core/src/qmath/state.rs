use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, NORM_TOL, UNITARY_TOL};
use crate::error::{Error, Result};

/// Amplitude vector over `num_qubits` qubits. Qubit 0 is the most significant
/// bit of the basis label, so `|q0 q1 ... q(n-1)>` reads left to right.
///
/// Projections produce subnormalized states; those carry `subnormalized = true`
/// and keep their norm so that probabilities can be read off directly.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    num_qubits: usize,
    amps: Vec<C64>,
    subnormalized: bool,
}

#[inline]
pub(crate) fn bit_of(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

impl QubitState {
    /// |0...0> on `n` qubits.
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Self { num_qubits: n, amps, subnormalized: false }
    }

    pub fn plus() -> Self {
        Self::single(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0))
    }

    pub fn minus() -> Self {
        Self::single(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0))
    }

    /// `|+>^n`.
    pub fn plus_n(n: usize) -> Self {
        let a = C64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
        Self { num_qubits: n, amps: vec![a; 1 << n], subnormalized: false }
    }

    fn single(a: C64, b: C64) -> Self {
        Self { num_qubits: 1, amps: vec![a, b], subnormalized: false }
    }

    /// A normalized state from raw amplitudes; rejects vectors off the unit sphere.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_len(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("state norm {norm} is not 1")));
        }
        Ok(Self { num_qubits: n, amps, subnormalized: false })
    }

    /// Wraps amplitudes without a norm check and flags the result as subnormalized.
    pub fn subnormalized(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_len(amps.len())?;
        Ok(Self { num_qubits: n, amps, subnormalized: true })
    }

    /// Rescales arbitrary nonzero amplitudes onto the unit sphere.
    pub fn normalized_from(amps: Vec<C64>) -> Result<Self> {
        let mut s = Self::subnormalized(amps)?;
        s.renormalize()?;
        Ok(s)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let amps: Vec<C64> =
            (0..1usize << n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        Self::normalized_from(amps).expect("gaussian vector is nonzero")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm and clears the subnormalized flag.
    pub fn renormalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        for a in &mut self.amps {
            *a /= n;
        }
        self.subnormalized = false;
        Ok(n)
    }

    pub fn normalized(&self) -> Result<Self> {
        let mut s = self.clone();
        s.renormalize()?;
        Ok(s)
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            num_qubits: self.num_qubits,
            amps: self.amps.iter().map(|&a| a * s).collect(),
            subnormalized: self.subnormalized,
        }
    }

    /// Kronecker product; `self`'s qubits come first.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for &a in &self.amps {
            for &b in &other.amps {
                amps.push(a * b);
            }
        }
        Self {
            num_qubits: self.num_qubits + other.num_qubits,
            amps,
            subnormalized: self.subnormalized || other.subnormalized,
        }
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.num_qubits {
                return Err(Error::QubitOutOfRange { index: t, num_qubits: self.num_qubits });
            }
            if targets[..i].contains(&t) {
                return Err(Error::DuplicateTarget(t));
            }
        }
        Ok(())
    }

    /// Applies `u` to `targets` (first target = most significant bit of `u`'s index).
    pub fn apply_unitary(&self, u: &ComplexMatrix, targets: &[usize]) -> Result<Self> {
        let mut s = self.clone();
        s.apply_unitary_mut(u, targets)?;
        Ok(s)
    }

    pub fn apply_unitary_mut(&mut self, u: &ComplexMatrix, targets: &[usize]) -> Result<()> {
        self.check_targets(targets)?;
        let k = targets.len();
        if !u.is_square() || u.rows() != 1 << k {
            return Err(Error::DimensionMismatch { expected: 1 << k, found: u.rows() });
        }
        u.ensure_unitary(UNITARY_TOL)?;
        self.apply_matrix_unchecked(u, targets);
        Ok(())
    }

    /// Applies an arbitrary (not necessarily unitary) operator; indices are trusted.
    pub(crate) fn apply_matrix_unchecked(&mut self, u: &ComplexMatrix, targets: &[usize]) {
        let n = self.num_qubits;
        let k = targets.len();
        let masks: Vec<usize> = targets.iter().map(|&t| bit_of(n, t)).collect();
        let all: usize = masks.iter().sum();
        let sub = 1usize << k;
        let offsets: Vec<usize> =
            (0..sub).map(|j| (0..k).filter(|&b| j & (1 << (k - 1 - b)) != 0).map(|b| masks[b]).sum()).collect();
        let mut buf = vec![C64::new(0.0, 0.0); sub];
        for base in 0..self.amps.len() {
            if base & all != 0 {
                continue;
            }
            for (j, off) in offsets.iter().enumerate() {
                buf[j] = self.amps[base + off];
            }
            for (i, off) in offsets.iter().enumerate() {
                self.amps[base + off] = u.row(i).iter().zip(&buf).map(|(a, b)| a * b).sum();
            }
        }
    }

    /// Contracts `<ket|` on `targets` and returns the (subnormalized) state of the
    /// remaining qubits in their original relative order. Its squared norm is
    /// the probability of the projective outcome `ket`.
    pub fn project(&self, ket: &QubitState, targets: &[usize]) -> Result<Self> {
        self.check_targets(targets)?;
        if ket.num_qubits != targets.len() {
            return Err(Error::DimensionMismatch { expected: targets.len(), found: ket.num_qubits });
        }
        Ok(self.project_unchecked(&ket.amps, targets))
    }

    pub(crate) fn project_unchecked(&self, ket: &[C64], targets: &[usize]) -> Self {
        let n = self.num_qubits;
        let k = targets.len();
        let rest: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
        let rest_masks: Vec<usize> = rest.iter().map(|&q| bit_of(n, q)).collect();
        let target_offsets: Vec<usize> = (0..1usize << k)
            .map(|j| (0..k).filter(|&b| j & (1 << (k - 1 - b)) != 0).map(|b| bit_of(n, targets[b])).sum())
            .collect();
        let m = rest.len();
        let mut out = vec![C64::new(0.0, 0.0); 1 << m];
        for (r, slot) in out.iter_mut().enumerate() {
            let base: usize = (0..m).filter(|&b| r & (1 << (m - 1 - b)) != 0).map(|b| rest_masks[b]).sum();
            *slot = ket.iter().zip(&target_offsets).map(|(kv, off)| kv.conj() * self.amps[base + off]).sum();
        }
        Self { num_qubits: m, amps: out, subnormalized: true }
    }

    /// Probability that a computational-basis measurement of `qubit` returns 1.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let bit = bit_of(self.num_qubits, qubit);
        self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Computational-basis outcome distribution.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Reorders qubits so that new qubit `i` is old qubit `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: order.len() });
        }
        self.check_targets(order)?;
        let n = self.num_qubits;
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (new_idx, slot) in amps.iter_mut().enumerate() {
            let mut old_idx = 0;
            for (i, &o) in order.iter().enumerate() {
                if new_idx & bit_of(n, i) != 0 {
                    old_idx |= bit_of(n, o);
                }
            }
            *slot = self.amps[old_idx];
        }
        Ok(Self { num_qubits: n, amps, subnormalized: self.subnormalized })
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::DimensionMismatch { expected: self.amps.len(), found: other.amps.len() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Largest amplitude difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.amps.len() != other.amps.len() {
            return f64::INFINITY;
        }
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("amplitude count {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

/// `|<a|b>|` for normalized states; equal to 1 exactly when they agree up to a global phase.
pub fn fidelity_up_to_phase(a: &QubitState, b: &QubitState) -> Result<f64> {
    if a.num_qubits != b.num_qubits {
        return Err(Error::DimensionMismatch { expected: a.num_qubits, found: b.num_qubits });
    }
    Ok(a.inner(b)?.norm().min(1.0))
}
