//! Teleportation-based computation: rotated maximally entangled states, scheme
//! validation, and gate teleportation with Pauli residuals.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gates::GateKind;
use crate::pauli::PauliOp;
use crate::qmath::{contract_leading, kron_vec, ComplexMatrix, QubitState, UNITARY_TOL};

const BASIS_TOL: f64 = 1e-10;
const PAULI_MATCH_TOL: f64 = 1e-9;

/// `(1/√d) Σ_i |i⟩|i⟩` on a `d×d` system, stored flat with the first system most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntangled {
    d: usize,
    amps: Vec<C64>,
}

impl MaxEntangled {
    pub fn schmidt(d: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); d * d];
        let a = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            amps[i * d + i] = C64::new(a, 0.0);
        }
        Self { d, amps }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }
}

/// `|φ(U)⟩ = (U†⊗I)|φ⟩`.
pub fn phi_u(u: &ComplexMatrix, resource: &MaxEntangled) -> Result<Vec<C64>> {
    let d = resource.d;
    if u.rows() != d || !u.is_square() {
        return Err(Error::DimensionMismatch { expected: d, found: u.rows() });
    }
    u.ensure_unitary(UNITARY_TOL)?;
    let full = u.adjoint().kron(&ComplexMatrix::identity(d));
    full.mat_vec(&resource.amps)
}

/// Projects the first two systems of `|α⟩⊗|φ⟩` onto `|φ(U)⟩` and returns the
/// (unnormalized) state left on the third system, `(1/d)U|α⟩`.
pub fn project_onto_phi(u: &ComplexMatrix, alpha: &[C64], resource: &MaxEntangled) -> Result<Vec<C64>> {
    if alpha.len() != resource.d {
        return Err(Error::DimensionMismatch { expected: resource.d, found: alpha.len() });
    }
    let bra = phi_u(u, resource)?;
    Ok(contract_leading(&kron_vec(alpha, &resource.amps), &bra))
}

/// Normalized Hilbert-Schmidt orthonormality `(1/d) Tr(U_i U_j†) = δ_ij`.
pub fn validate_operator_basis(ops: &[ComplexMatrix]) -> Result<bool> {
    let d = ops.first().map(|m| m.rows()).unwrap_or(0);
    if d == 0 || ops.len() != d * d {
        return Err(Error::InvalidScheme(format!("expected d^2 = {} operators, got {}", d * d, ops.len())));
    }
    for u in ops {
        if u.rows() != d || !u.is_square() {
            return Err(Error::DimensionMismatch { expected: d, found: u.rows() });
        }
        u.ensure_unitary(UNITARY_TOL)?;
    }
    for (i, a) in ops.iter().enumerate() {
        for (j, b) in ops.iter().enumerate() {
            let ip = (a * &b.adjoint()).trace() / d as f64;
            let want = if i == j { 1.0 } else { 0.0 };
            if (ip - C64::new(want, 0.0)).norm() > BASIS_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Resource, measurement operators `U_i` and POVM weights `k_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportScheme {
    pub resource: MaxEntangled,
    pub ops: Vec<ComplexMatrix>,
    pub weights: Vec<f64>,
}

fn pauli_1q() -> [ComplexMatrix; 4] {
    let xz = &GateKind::X.matrix() * &GateKind::Z.matrix();
    [ComplexMatrix::identity(2), GateKind::X.matrix(), GateKind::Z.matrix(), xz]
}

impl TeleportScheme {
    pub fn new(d: usize, ops: Vec<ComplexMatrix>, weights: Vec<f64>) -> Result<Self> {
        if ops.len() < d * d {
            return Err(Error::InvalidScheme(format!("{} operators is fewer than d^2 = {}", ops.len(), d * d)));
        }
        if weights.len() != ops.len() {
            return Err(Error::InvalidScheme(format!("{} weights for {} operators", weights.len(), ops.len())));
        }
        if let Some(k) = weights.iter().find(|&&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidScheme(format!("weight {k} is not positive")));
        }
        for u in &ops {
            if u.rows() != d || !u.is_square() {
                return Err(Error::DimensionMismatch { expected: d, found: u.rows() });
            }
            u.ensure_unitary(UNITARY_TOL)?;
        }
        Ok(Self { resource: MaxEntangled::schmidt(d), ops, weights })
    }

    /// Standard teleportation: `{I, X, Z, XZ}` with unit weights.
    pub fn standard_bell() -> Self {
        Self::new(2, pauli_1q().to_vec(), vec![1.0; 4]).expect("Bell scheme")
    }

    /// The Bell scheme with every operator right-multiplied by `u`.
    pub fn rotated_bell(u: &ComplexMatrix) -> Result<Self> {
        let ops = pauli_1q().iter().map(|p| p * u).collect();
        Self::new(2, ops, vec![1.0; 4])
    }

    /// `d = 4` scheme with `U_ij = (P_i⊗P_j)·CZ`.
    pub fn cz_scheme() -> Self {
        let cz = GateKind::CZ.matrix();
        let p = pauli_1q();
        let ops = p.iter().flat_map(|a| p.iter().map(|b| &a.kron(b) * &cz)).collect();
        Self::new(4, ops, vec![1.0; 16]).expect("CZ scheme")
    }

    /// Bell basis together with its `H`-rotated copy, each weighted 1/2.
    pub fn doubled_bell() -> Self {
        let h = GateKind::H.matrix();
        let mut ops = pauli_1q().to_vec();
        ops.extend(pauli_1q().iter().map(|p| p * &h));
        Self::new(2, ops, vec![0.5; 8]).expect("doubled scheme")
    }

    pub fn dim(&self) -> usize {
        self.resource.d
    }

    pub fn is_projective(&self) -> bool {
        self.ops.len() == self.dim() * self.dim()
    }
}

/// `Σ k_i |φ(U_i)⟩⟨φ(U_i)| = I⊗I` entrywise within 1e-10.
pub fn validate_povm(scheme: &TeleportScheme) -> bool {
    let d = scheme.dim();
    let mut sum = ComplexMatrix::zeros(d * d, d * d);
    for (u, &k) in scheme.ops.iter().zip(&scheme.weights) {
        let Ok(v) = phi_u(u, &scheme.resource) else { return false };
        let term = ComplexMatrix::outer(&v, &v).scale(C64::new(k, 0.0));
        sum = sum.add(&term).expect("same shape");
    }
    sum.approx_eq(&ComplexMatrix::identity(d * d), BASIS_TOL)
}

/// One measurement branch of a gate teleportation.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportBranch {
    pub index: usize,
    pub probability: f64,
    /// Renormalized state on the receiving system.
    pub output: QubitState,
    /// Pauli with `U_i ∝ residual · gate`.
    pub residual: PauliOp,
}

fn residual_for(u_i: &ComplexMatrix, gate: &ComplexMatrix) -> Result<PauliOp> {
    let r = u_i * &gate.adjoint();
    PauliOp::match_up_to_phase(&r, PAULI_MATCH_TOL)
        .map(|(p, _)| p)
        .ok_or_else(|| Error::InvalidScheme("measurement operator is not a Pauli times the gate".into()))
}

/// All outcome branches with nonzero probability.
pub fn teleport_branches(
    scheme: &TeleportScheme,
    gate_u: &ComplexMatrix,
    input: &QubitState,
) -> Result<Vec<TeleportBranch>> {
    let d = scheme.dim();
    if input.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: input.dim() });
    }
    if gate_u.rows() != d || !gate_u.is_square() {
        return Err(Error::DimensionMismatch { expected: d, found: gate_u.rows() });
    }
    if !validate_povm(scheme) {
        return Err(Error::InvalidScheme("measurement is not complete".into()));
    }
    let mut out = Vec::with_capacity(scheme.ops.len());
    for (index, (u, &k)) in scheme.ops.iter().zip(&scheme.weights).enumerate() {
        let v = project_onto_phi(u, input.amplitudes(), &scheme.resource)?;
        let probability = k * v.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if probability <= 0.0 {
            continue;
        }
        out.push(TeleportBranch {
            index,
            probability,
            output: QubitState::normalized_from(v)?,
            residual: residual_for(u, gate_u)?,
        });
    }
    Ok(out)
}

/// Seeded single-shot gate teleportation.
pub fn teleport_gate(
    scheme: &TeleportScheme,
    gate_u: &ComplexMatrix,
    input: &QubitState,
    seed: u64,
) -> Result<TeleportBranch> {
    let branches = teleport_branches(scheme, gate_u, input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = sample_index(branches.iter().map(|b| b.probability), rng.random::<f64>());
    Ok(branches.into_iter().nth(idx).expect("nonempty"))
}

/// Cumulative-distribution inversion; the last entry absorbs rounding slack.
pub(crate) fn sample_index<I: IntoIterator<Item = f64>>(probs: I, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.into_iter().enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// A perfect matching of wires 3..=8 into three `|H⟩` bonds.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct BondPairing {
    pub bonds: Vec<[usize; 2]>,
}

impl BondPairing {
    /// All 15 matchings of wires 3..=8.
    pub fn all() -> Vec<BondPairing> {
        fn rec(rest: &[usize], acc: &mut Vec<[usize; 2]>, out: &mut Vec<BondPairing>) {
            if rest.is_empty() {
                out.push(BondPairing { bonds: acc.clone() });
                return;
            }
            let a = rest[0];
            for i in 1..rest.len() {
                let b = rest[i];
                let remaining: Vec<usize> = rest[1..].iter().copied().filter(|&w| w != b).collect();
                acc.push([a, b]);
                rec(&remaining, acc, out);
                acc.pop();
            }
        }
        let mut out = Vec::new();
        rec(&[3, 4, 5, 6, 7, 8], &mut Vec::new(), &mut out);
        out
    }

    /// The pairing recorded in the fixture.
    pub fn fixture() -> BondPairing {
        serde_json::from_str(include_str!("../fixtures/cz8_pairing.json")).expect("valid fixture")
    }
}

/// The 8 three-qubit states `(|abc⟩ ± |āb̄c̄⟩)/√2` for `abc ∈ {000, 001, 010, 100}`.
pub fn ghz_pair_basis() -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(8);
    for lead in [0b000usize, 0b001, 0b010, 0b100] {
        for sign in [1.0, -1.0] {
            let mut v = vec![C64::new(0.0, 0.0); 8];
            v[lead] = C64::new(FRAC_1_SQRT_2, 0.0);
            v[lead ^ 0b111] = C64::new(sign * FRAC_1_SQRT_2, 0.0);
            out.push(v);
        }
    }
    out
}

fn h_state() -> QubitState {
    QubitState::plus_n(2).apply_unitary(&GateKind::CZ.matrix(), &[0, 1]).expect("CZ")
}

/// Full 8-wire state: input on wires 1, 2 and `|H⟩` on each bond. Wire `w` is qubit `w-1`.
fn cz8_initial(input: &QubitState, pairing: &BondPairing) -> Result<QubitState> {
    let mut s = input.clone();
    let mut wires = vec![1usize, 2];
    for b in &pairing.bonds {
        s = s.tensor(&h_state());
        wires.extend_from_slice(b);
    }
    let order: Vec<usize> = (1..=8).map(|w| wires.iter().position(|&x| x == w).expect("wire placed")).collect();
    s.permuted(&order)
}

/// Unnormalized output on wires 7, 8 for outcome pair `(i, j)`.
fn cz8_branch_vector(initial: &QubitState, basis: &[Vec<C64>], i: usize, j: usize) -> QubitState {
    // measure wires 1,3,5 (qubits 0,2,4), leaving wires 2,4,6,7,8
    let first = initial.project_unchecked(&basis[i], &[0, 2, 4]);
    first.project_unchecked(&basis[j], &[0, 1, 2])
}

/// `(H⊗H)·CZ`, the gate the eight-qubit scheme applies.
pub fn cz8_gate() -> ComplexMatrix {
    &GateKind::H.matrix().kron(&GateKind::H.matrix()) * &GateKind::CZ.matrix()
}

/// Per-branch linear map from input to output, scaled to unit average singular value.
fn cz8_branch_map(pairing: &BondPairing, i: usize, j: usize) -> Result<Option<ComplexMatrix>> {
    let basis = ghz_pair_basis();
    let mut m = ComplexMatrix::zeros(4, 4);
    for col in 0..4 {
        let init = cz8_initial(&QubitState::basis(2, col), pairing)?;
        let out = cz8_branch_vector(&init, &basis, i, j);
        for (row, a) in out.amplitudes().iter().enumerate() {
            m[(row, col)] = *a;
        }
    }
    let fro = (m.data().iter().map(|a| a.norm_sqr()).sum::<f64>() / 4.0).sqrt();
    if fro < 1e-12 {
        return Ok(None);
    }
    Ok(Some(m.scale(C64::new(1.0 / fro, 0.0))))
}

/// Pauli pairs `P` with `M_ij ∝ P·(H⊗H)CZ` for all 64 branches, or `None` if some
/// branch breaks the law under this pairing.
pub fn cz8_residuals(pairing: &BondPairing) -> Result<Option<Vec<PauliOp>>> {
    let g_dag = cz8_gate().adjoint();
    let mut out = Vec::with_capacity(64);
    for i in 0..8 {
        for j in 0..8 {
            let Some(m) = cz8_branch_map(pairing, i, j)? else { return Ok(None) };
            match PauliOp::match_up_to_phase(&(&m * &g_dag), PAULI_MATCH_TOL) {
                Some((p, _)) => out.push(p),
                None => return Ok(None),
            }
        }
    }
    Ok(Some(out))
}

/// Exhaustive search over the 15 bond pairings.
pub fn search_cz8_pairings() -> Result<Vec<BondPairing>> {
    let mut ok = Vec::new();
    for p in BondPairing::all() {
        if cz8_residuals(&p)?.is_some() {
            ok.push(p);
        }
    }
    Ok(ok)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cz8Branch {
    pub outcomes: (usize, usize),
    pub probability: f64,
    pub output: QubitState,
    pub residual: PauliOp,
}

/// All 64 branches of the eight-qubit CZ scheme under the fixture pairing.
pub fn cz8_branches(input: &QubitState) -> Result<Vec<Cz8Branch>> {
    if input.num_qubits() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: input.num_qubits() });
    }
    let pairing = BondPairing::fixture();
    let residuals = cz8_residuals(&pairing)?
        .ok_or_else(|| Error::InvalidScheme("fixture pairing does not realize the gate".into()))?;
    let init = cz8_initial(input, &pairing)?;
    let basis = ghz_pair_basis();
    let mut out = Vec::with_capacity(64);
    for i in 0..8 {
        for j in 0..8 {
            let v = cz8_branch_vector(&init, &basis, i, j);
            let probability = v.norm_sqr();
            out.push(Cz8Branch {
                outcomes: (i, j),
                probability,
                output: v.normalized()?,
                residual: residuals[i * 8 + j].clone(),
            });
        }
    }
    Ok(out)
}

/// Seeded single run of the eight-qubit scheme.
pub fn teleport_cz_fig3(input: &QubitState, seed: u64) -> Result<Cz8Branch> {
    let branches = cz8_branches(input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = sample_index(branches.iter().map(|b| b.probability), rng.random::<f64>());
    Ok(branches.into_iter().nth(idx).expect("64 branches"))
}
