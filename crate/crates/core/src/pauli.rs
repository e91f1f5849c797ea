//! Pauli group arithmetic, symbolic byproduct frames, and propagation tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{Gate, GateKind};
use crate::qmath::ComplexMatrix;

/// Identifier of a recorded measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeId(pub u32);

impl fmt::Display for OutcomeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Parity expression: the XOR of the referenced outcome bits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DepSet(BTreeSet<OutcomeId>);

impl DepSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(id: OutcomeId) -> Self {
        Self(BTreeSet::from([id]))
    }

    /// XOR-folds the ids, so repeated ids cancel.
    pub fn from_ids<I: IntoIterator<Item = OutcomeId>>(ids: I) -> Self {
        let mut s = Self::new();
        for id in ids {
            s.toggle(id);
        }
        s
    }

    pub fn toggle(&mut self, id: OutcomeId) {
        if !self.0.remove(&id) {
            self.0.insert(id);
        }
    }

    pub fn xor_assign(&mut self, other: &DepSet) {
        for &id in &other.0 {
            self.toggle(id);
        }
    }

    pub fn xor(&self, other: &DepSet) -> DepSet {
        let mut s = self.clone();
        s.xor_assign(other);
        s
    }

    pub fn contains(&self, id: OutcomeId) -> bool {
        self.0.contains(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = OutcomeId> + '_ {
        self.0.iter().copied()
    }

    /// Rewrites every id through `f` (used when renaming outcomes).
    pub fn map_ids(&self, f: impl Fn(OutcomeId) -> OutcomeId) -> DepSet {
        DepSet::from_ids(self.0.iter().map(|&id| f(id)))
    }

    pub fn eval(&self, record: &OutcomeRecord) -> Result<u8> {
        let mut acc = 0u8;
        for &id in &self.0 {
            acc ^= record.value(id)?;
        }
        Ok(acc)
    }
}

impl FromIterator<OutcomeId> for DepSet {
    fn from_iter<I: IntoIterator<Item = OutcomeId>>(iter: I) -> Self {
        DepSet::from_ids(iter)
    }
}

impl fmt::Display for DepSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.0.iter().map(|id| id.to_string()).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Outcome bits keyed by id, each assigned once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeRecord(BTreeMap<OutcomeId, u8>);

impl OutcomeRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (OutcomeId, u8)>>(pairs: I) -> Result<Self> {
        let mut r = Self::new();
        for (id, b) in pairs {
            r.insert(id, b)?;
        }
        Ok(r)
    }

    pub fn insert(&mut self, id: OutcomeId, bit: u8) -> Result<()> {
        if bit > 1 {
            return Err(Error::InvalidArgument(format!("outcome bit {bit} for {id}")));
        }
        if self.0.insert(id, bit).is_some() {
            return Err(Error::DuplicateOutcome(id));
        }
        Ok(())
    }

    pub fn get(&self, id: OutcomeId) -> Option<u8> {
        self.0.get(&id).copied()
    }

    pub fn value(&self, id: OutcomeId) -> Result<u8> {
        self.get(id).ok_or(Error::UnresolvedOutcome(id))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (OutcomeId, u8)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }
}

/// `i^phase · ⊗_j X^{x_j} Z^{z_j}`; qubit 0 is the leftmost factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliOp {
    phase: u8,
    x: Vec<bool>,
    z: Vec<bool>,
}

impl PauliOp {
    pub fn identity(n: usize) -> Self {
        Self { phase: 0, x: vec![false; n], z: vec![false; n] }
    }

    pub fn from_bits(phase: u8, x: Vec<bool>, z: Vec<bool>) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: z.len() });
        }
        Ok(Self { phase: phase % 4, x, z })
    }

    /// Single-qubit `X^x Z^z`.
    pub fn single(x: bool, z: bool) -> Self {
        Self { phase: 0, x: vec![x], z: vec![z] }
    }

    pub fn x_on(n: usize, q: usize) -> Self {
        let mut p = Self::identity(n);
        p.x[q] = true;
        p
    }

    pub fn z_on(n: usize, q: usize) -> Self {
        let mut p = Self::identity(n);
        p.z[q] = true;
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    /// Exponent `k` of the `i^k` prefactor.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn phase_factor(&self) -> C64 {
        [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][self.phase as usize]
    }

    pub fn x_bits(&self) -> &[bool] {
        &self.x
    }

    pub fn z_bits(&self) -> &[bool] {
        &self.z
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase % 4;
        self
    }

    /// Same exponents, phase dropped.
    pub fn unsigned(&self) -> Self {
        self.clone().with_phase(0)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut x = self.x.clone();
        x.extend_from_slice(&other.x);
        let mut z = self.z.clone();
        z.extend_from_slice(&other.z);
        Self { phase: (self.phase + other.phase) % 4, x, z }
    }

    /// Restriction to the listed qubits, phase kept.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        Self {
            phase: self.phase,
            x: qubits.iter().map(|&q| self.x[q]).collect(),
            z: qubits.iter().map(|&q| self.z[q]).collect(),
        }
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let o = C64::new(1.0, 0.0);
        let z0 = C64::new(0.0, 0.0);
        let mut m = ComplexMatrix::identity(1).scale(self.phase_factor());
        for (&x, &z) in self.x.iter().zip(&self.z) {
            let f = match (x, z) {
                (false, false) => ComplexMatrix::identity(2),
                (true, false) => ComplexMatrix::from_rows(&[[z0, o], [o, z0]]),
                (false, true) => ComplexMatrix::diagonal(&[o, -o]),
                // XZ = [[0,-1],[1,0]]
                (true, true) => ComplexMatrix::from_rows(&[[z0, -o], [o, z0]]),
            };
            m = m.kron(&f);
        }
        m
    }

    /// Matches `m` against a Pauli operator up to an arbitrary global scalar.
    /// Returns the phase-free operator and the scalar `λ` with `m ≈ λ·P`.
    pub fn match_up_to_phase(m: &ComplexMatrix, tol: f64) -> Option<(PauliOp, C64)> {
        let dim = m.rows();
        if !m.is_square() || !dim.is_power_of_two() {
            return None;
        }
        let n = dim.trailing_zeros() as usize;
        let xmask = (0..dim).max_by(|&a, &b| m[(a, 0)].norm().total_cmp(&m[(b, 0)].norm()))?;
        let lambda = m[(xmask, 0)];
        if lambda.norm() < 0.5 {
            return None;
        }
        let mut zmask = 0usize;
        for j in 0..n {
            let c = 1usize << (n - 1 - j);
            if (m[(c ^ xmask, c)] / lambda).re < 0.0 {
                zmask |= c;
            }
        }
        let bits = |mask: usize| (0..n).map(|j| mask & (1 << (n - 1 - j)) != 0).collect::<Vec<_>>();
        let p = PauliOp { phase: 0, x: bits(xmask), z: bits(zmask) };
        let recon = p.matrix().scale(lambda);
        (recon.max_abs_diff(m) <= tol).then_some((p, lambda))
    }

    /// Exact match including an `i^k` phase.
    pub fn from_matrix(m: &ComplexMatrix, tol: f64) -> Option<PauliOp> {
        let (p, lambda) = Self::match_up_to_phase(m, tol)?;
        let k = (0..4u8).find(|&k| (p.clone().with_phase(k).phase_factor() - lambda).norm() <= tol)?;
        Some(p.with_phase(k))
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pre = ["", "i", "-", "-i"][self.phase as usize];
        write!(f, "{pre}")?;
        for (j, (&x, &z)) in self.x.iter().zip(&self.z).enumerate() {
            if j > 0 {
                write!(f, "⊗")?;
            }
            let s = match (x, z) {
                (false, false) => "I",
                (true, false) => "X",
                (false, true) => "Z",
                (true, true) => "XZ",
            };
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Group product `p·q` with the exact phase.
pub fn pauli_mul(p: &PauliOp, q: &PauliOp) -> Result<PauliOp> {
    let n = p.num_qubits();
    if q.num_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, found: q.num_qubits() });
    }
    // Z^{z1} X^{x2} = (-1)^{z1 x2} X^{x2} Z^{z1}
    let swaps = (0..n).filter(|&j| p.z[j] && q.x[j]).count() as u8;
    Ok(PauliOp {
        phase: (p.phase + q.phase + 2 * (swaps % 2)) % 4,
        x: (0..n).map(|j| p.x[j] ^ q.x[j]).collect(),
        z: (0..n).map(|j| p.z[j] ^ q.z[j]).collect(),
    })
}

/// Conjugation images `(g X_j g†, g Z_j g†)` for the Clifford kinds, local to the gate's targets.
fn clifford_images(kind: GateKind) -> Option<Vec<(PauliOp, PauliOp)>> {
    let p = |phase: u8, x: &[bool], z: &[bool]| PauliOp { phase, x: x.to_vec(), z: z.to_vec() };
    let (t, f) = (true, false);
    Some(match kind {
        GateKind::H => vec![(p(0, &[f], &[t]), p(0, &[t], &[f]))],
        // P X P† = Y = i·XZ
        GateKind::PPi4 => vec![(p(1, &[t], &[t]), p(0, &[f], &[t]))],
        GateKind::X => vec![(p(0, &[t], &[f]), p(2, &[f], &[t]))],
        GateKind::Y => vec![(p(2, &[t], &[f]), p(2, &[f], &[t]))],
        GateKind::Z => vec![(p(2, &[t], &[f]), p(0, &[f], &[t]))],
        GateKind::CZ => {
            vec![(p(0, &[t, f], &[f, t]), p(0, &[f, f], &[t, f])), (p(0, &[f, t], &[t, f]), p(0, &[f, f], &[f, t]))]
        }
        GateKind::CX => {
            vec![(p(0, &[t, t], &[f, f]), p(0, &[f, f], &[t, f])), (p(0, &[f, t], &[f, f]), p(0, &[f, f], &[t, t]))]
        }
        _ => return None,
    })
}

/// Commutes a Pauli through a gate: `g·p = p'·g'`.
///
/// `p` acts on the gate's targets in order. Clifford kinds return `g' = g` and the
/// exact conjugate `p' = g p g†`. Rotations and `W` return the angle-flipped gate;
/// for `Phase` and `W` the identity holds up to a global phase.
pub fn propagate(g: &Gate, p: &PauliOp) -> Result<(PauliOp, Gate)> {
    let arity = g.kind.arity();
    if p.num_qubits() != arity {
        return Err(Error::DimensionMismatch { expected: arity, found: p.num_qubits() });
    }
    if let Some(images) = clifford_images(g.kind) {
        let mut out = PauliOp::identity(arity).with_phase(p.phase);
        for (j, (xi, _)) in images.iter().enumerate() {
            if p.x[j] {
                out = pauli_mul(&out, xi)?;
            }
        }
        for (j, (_, zi)) in images.iter().enumerate() {
            if p.z[j] {
                out = pauli_mul(&out, zi)?;
            }
        }
        return Ok((out, g.clone()));
    }
    let (x, z) = (p.x[0], p.z[0]);
    let flip = |flag: bool, t: f64| if flag { -t } else { t };
    match g.kind {
        GateKind::Rz(t) => Ok((p.clone(), Gate::one(GateKind::Rz(flip(x, t)), g.targets[0]))),
        GateKind::Phase(t) => Ok((p.clone(), Gate::one(GateKind::Phase(flip(x, t)), g.targets[0]))),
        GateKind::Rx(t) => Ok((p.clone(), Gate::one(GateKind::Rx(flip(z, t)), g.targets[0]))),
        GateKind::W(t) => {
            // W X^x Z^z ∝ Z^x X^z W((-1)^x θ) = (-1)^{xz} X^z Z^x W(..)
            let sign = if x && z { 2 } else { 0 };
            let out = PauliOp { phase: (p.phase + sign) % 4, x: vec![z], z: vec![x] };
            Ok((out, Gate::one(GateKind::W(flip(x, t)), g.targets[0])))
        }
        other => Err(Error::UnsupportedGate(other.to_string())),
    }
}

/// One row of the conjugation witness for [`is_clifford`].
#[derive(Debug, Clone, PartialEq)]
pub struct Conjugation {
    /// Generator label such as `X0` or `Z2`.
    pub generator: String,
    /// `U P U†` as a phase-free Pauli, if it is one.
    pub image: Option<PauliOp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordCheck {
    pub is_clifford: bool,
    pub witness: Vec<Conjugation>,
}

const CLIFFORD_TOL: f64 = 1e-9;

/// Tests `U P U† ∈ P_n` (up to phase) for every generator `X_j`, `Z_j`.
pub fn is_clifford(u: &ComplexMatrix, n: usize) -> Result<CliffordCheck> {
    let dim = 1usize << n;
    if u.rows() != dim || !u.is_square() {
        return Err(Error::DimensionMismatch { expected: dim, found: u.rows() });
    }
    u.ensure_unitary(crate::qmath::UNITARY_TOL)?;
    let ud = u.adjoint();
    let mut witness = Vec::with_capacity(2 * n);
    for j in 0..n {
        for (label, gen) in [("X", PauliOp::x_on(n, j)), ("Z", PauliOp::z_on(n, j))] {
            let conj = &(u * &gen.matrix()) * &ud;
            let image = PauliOp::match_up_to_phase(&conj, CLIFFORD_TOL).map(|(p, _)| p);
            witness.push(Conjugation { generator: format!("{label}{j}"), image });
        }
    }
    Ok(CliffordCheck { is_clifford: witness.iter().all(|c| c.image.is_some()), witness })
}

/// Symbolic byproduct on a register: `X^{x_j} Z^{z_j}` per qubit with parity exponents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PauliFrame {
    entries: Vec<FrameEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub x_deps: DepSet,
    pub z_deps: DepSet,
}

impl PauliFrame {
    pub fn identity(n: usize) -> Self {
        Self { entries: vec![FrameEntry::default(); n] }
    }

    pub fn from_entries(entries: Vec<FrameEntry>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[FrameEntry] {
        &self.entries
    }

    pub fn entry(&self, q: usize) -> &FrameEntry {
        &self.entries[q]
    }

    pub fn entry_mut(&mut self, q: usize) -> &mut FrameEntry {
        &mut self.entries[q]
    }

    pub fn push(&mut self, e: FrameEntry) {
        self.entries.push(e);
    }

    pub fn xor_x(&mut self, q: usize, d: &DepSet) {
        self.entries[q].x_deps.xor_assign(d);
    }

    pub fn xor_z(&mut self, q: usize, d: &DepSet) {
        self.entries[q].z_deps.xor_assign(d);
    }

    /// Symbolic product; phases are not tracked.
    pub fn combine(&self, other: &PauliFrame) -> Result<PauliFrame> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        Ok(PauliFrame {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| FrameEntry { x_deps: a.x_deps.xor(&b.x_deps), z_deps: a.z_deps.xor(&b.z_deps) })
                .collect(),
        })
    }

    /// All outcome ids the frame refers to.
    pub fn referenced(&self) -> BTreeSet<OutcomeId> {
        self.entries.iter().flat_map(|e| e.x_deps.iter().chain(e.z_deps.iter())).collect()
    }
}

/// Evaluates every exponent against `record`; the result carries no phase.
pub fn frame_resolve(frame: &PauliFrame, record: &OutcomeRecord) -> Result<PauliOp> {
    let mut x = Vec::with_capacity(frame.len());
    let mut z = Vec::with_capacity(frame.len());
    for e in &frame.entries {
        x.push(e.x_deps.eval(record)? == 1);
        z.push(e.z_deps.eval(record)? == 1);
    }
    Ok(PauliOp { phase: 0, x, z })
}

/// Layers of pairwise XOR needed to combine `k` bits.
pub fn parity_depth(k: usize) -> Result<usize> {
    match k {
        0 => Err(Error::InvalidArgument("parity of zero bits".into())),
        1 => Ok(0),
        _ => Ok((usize::BITS - (k - 1).leading_zeros()) as usize),
    }
}
