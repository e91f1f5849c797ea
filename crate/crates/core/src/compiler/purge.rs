use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::gates::{euler_xzx, Circuit, Gate, GateKind};
use crate::pauli::OutcomeId;
use crate::qmath::{ComplexMatrix, QubitState, UNITARY_TOL};

/// Operation in a circuit with mid-circuit measurements.
#[derive(Debug, Clone, PartialEq)]
pub enum DynOp {
    Gate(Gate),
    /// Projective measurement in the basis `{U|0⟩, U|1⟩}`; the qubit is left in the observed basis state.
    Measure {
        qubit: usize,
        basis: ComplexMatrix,
        id: OutcomeId,
    },
    /// Pauli `X`, `Y` or `Z` on `target`, applied when outcome `control` was 1.
    Controlled {
        kind: GateKind,
        target: usize,
        control: OutcomeId,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicCircuit {
    pub num_qubits: usize,
    pub ops: Vec<DynOp>,
}

impl DynamicCircuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, ops: Vec::new() }
    }

    pub fn gate(mut self, kind: GateKind, targets: &[usize]) -> Result<Self> {
        self.ops.push(DynOp::Gate(Gate::new(kind, targets.to_vec())?));
        Ok(self)
    }

    pub fn measure(mut self, qubit: usize, basis: ComplexMatrix, id: OutcomeId) -> Self {
        self.ops.push(DynOp::Measure { qubit, basis, id });
        self
    }

    pub fn controlled(mut self, kind: GateKind, target: usize, control: OutcomeId) -> Self {
        self.ops.push(DynOp::Controlled { kind, target, control });
        self
    }

    pub fn num_measurements(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, DynOp::Measure { .. })).count()
    }

    /// Checks indices, bases, and that every control refers to an earlier measurement.
    pub fn validate(&self) -> Result<()> {
        let mut declared = Vec::new();
        let range = |q: usize| {
            if q >= self.num_qubits {
                Err(Error::QubitOutOfRange { index: q, num_qubits: self.num_qubits })
            } else {
                Ok(())
            }
        };
        for op in &self.ops {
            match op {
                DynOp::Gate(g) => {
                    for &t in &g.targets {
                        range(t)?;
                    }
                }
                DynOp::Measure { qubit, basis, id } => {
                    range(*qubit)?;
                    if basis.rows() != 2 || !basis.is_square() {
                        return Err(Error::DimensionMismatch { expected: 2, found: basis.rows() });
                    }
                    basis.ensure_unitary(UNITARY_TOL)?;
                    if declared.contains(id) {
                        return Err(Error::DuplicateOutcome(*id));
                    }
                    declared.push(*id);
                }
                DynOp::Controlled { kind, target, control } => {
                    range(*target)?;
                    if !matches!(kind, GateKind::X | GateKind::Y | GateKind::Z) {
                        return Err(Error::UnsupportedGate(format!("classically controlled {kind}")));
                    }
                    if !declared.contains(control) {
                        return Err(Error::UnresolvedOutcome(*control));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Unitary replacement: measurement `k` writes its outcome into ancilla `ancillas[k].1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PurgedCircuit {
    pub circuit: Circuit,
    pub ancillas: Vec<(OutcomeId, usize)>,
}

fn push_1q(c: &mut Circuit, u: &ComplexMatrix, q: usize) -> Result<()> {
    let e = euler_xzx(u)?;
    c.push(Gate::one(GateKind::Rx(e.xi), q))?;
    c.push(Gate::one(GateKind::Rz(e.eta), q))?;
    c.push(Gate::one(GateKind::Rx(e.zeta), q))
}

/// Replaces each measurement by a pointer ancilla: `U†` on the qubit, `CX` onto a
/// fresh `|0⟩` ancilla, then `U` again so the qubit ends in the measured basis.
/// Classically controlled Paulis become ancilla-controlled gates.
pub fn purge_measurements(c: &DynamicCircuit) -> Result<PurgedCircuit> {
    c.validate()?;
    let n = c.num_qubits;
    let mut out = Circuit::new(n + c.num_measurements());
    let mut ancilla: BTreeMap<OutcomeId, usize> = BTreeMap::new();
    let mut ancillas = Vec::new();
    for op in &c.ops {
        match op {
            DynOp::Gate(g) => out.push(g.clone())?,
            DynOp::Measure { qubit, basis, id } => {
                let a = n + ancillas.len();
                push_1q(&mut out, &basis.adjoint(), *qubit)?;
                out.push(Gate::two(GateKind::CX, *qubit, a))?;
                push_1q(&mut out, basis, *qubit)?;
                ancilla.insert(*id, a);
                ancillas.push((*id, a));
            }
            DynOp::Controlled { kind, target, control } => {
                let a = ancilla[control];
                if a == *target {
                    return Err(Error::InvalidArgument("control ancilla cannot be a target".into()));
                }
                match kind {
                    GateKind::X => out.push(Gate::two(GateKind::CX, a, *target))?,
                    GateKind::Z => out.push(Gate::two(GateKind::CZ, a, *target))?,
                    // Y = i·XZ
                    GateKind::Y => {
                        out.push(Gate::two(GateKind::CZ, a, *target))?;
                        out.push(Gate::two(GateKind::CX, a, *target))?;
                        out.push(Gate::one(GateKind::Phase(FRAC_PI_2), a))?;
                    }
                    _ => unreachable!("validated"),
                }
            }
        }
    }
    Ok(PurgedCircuit { circuit: out, ancillas })
}

/// Joint distribution of final computational-basis readout and mid-circuit outcomes,
/// computed by exact branching. Index = final bits (qubit 0 most significant) followed
/// by outcome bits in measurement order.
pub fn dynamic_distribution(c: &DynamicCircuit, input: &QubitState) -> Result<Vec<f64>> {
    c.validate()?;
    if input.num_qubits() != c.num_qubits {
        return Err(Error::DimensionMismatch { expected: c.num_qubits, found: input.num_qubits() });
    }
    let k = c.num_measurements();
    let mut dist = vec![0.0; 1 << (c.num_qubits + k)];
    branch(c, 0, input.clone(), &mut BTreeMap::new(), 0, &mut dist);
    Ok(dist)
}

fn branch(
    c: &DynamicCircuit,
    start: usize,
    mut s: QubitState,
    rec: &mut BTreeMap<OutcomeId, u8>,
    bits: usize,
    dist: &mut [f64],
) {
    for (i, op) in c.ops.iter().enumerate().skip(start) {
        match op {
            DynOp::Gate(g) => s.apply_matrix_unchecked(&g.matrix(), &g.targets),
            DynOp::Controlled { kind, target, control } => {
                if rec[control] == 1 {
                    s.apply_matrix_unchecked(&kind.matrix(), &[*target]);
                }
            }
            DynOp::Measure { qubit, basis, id } => {
                for m in 0..2u8 {
                    let col: Vec<_> = (0..2).map(|r| basis[(r, m as usize)]).collect();
                    let proj = ComplexMatrix::outer(&col, &col);
                    let mut t = s.clone();
                    t.apply_matrix_unchecked(&proj, &[*qubit]);
                    if t.norm_sqr() == 0.0 {
                        continue;
                    }
                    rec.insert(*id, m);
                    branch(c, i + 1, t, rec, (bits << 1) | m as usize, dist);
                    rec.remove(id);
                }
                return;
            }
        }
    }
    let k = c.num_measurements();
    for (idx, a) in s.amplitudes().iter().enumerate() {
        dist[(idx << k) | bits] += a.norm_sqr();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    fn teleport() -> DynamicCircuit {
        let i = ComplexMatrix::identity(2);
        DynamicCircuit::new(3)
            .gate(GateKind::H, &[1])
            .and_then(|c| c.gate(GateKind::CX, &[1, 2]))
            .and_then(|c| c.gate(GateKind::CX, &[0, 1]))
            .and_then(|c| c.gate(GateKind::H, &[0]))
            .unwrap()
            .measure(0, i.clone(), OutcomeId(0))
            .measure(1, i, OutcomeId(1))
            .controlled(GateKind::X, 2, OutcomeId(1))
            .controlled(GateKind::Z, 2, OutcomeId(0))
    }

    #[test]
    fn teleportation_distribution_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = QubitState::random(1, &mut rng);
        let input = psi.tensor(&QubitState::zero(2));
        let c = teleport();
        let want = dynamic_distribution(&c, &input).unwrap();
        let p = purge_measurements(&c).unwrap();
        assert_eq!(p.ancillas.len(), 2);
        let got = p.circuit.apply(&input.tensor(&QubitState::zero(2))).unwrap().probabilities();
        assert!(tv(&want, &got) < 1e-12);
        // qubit 2 carries psi: P(q2 = 1) matches |psi_1|^2 in every branch
        let p1: f64 = got.iter().enumerate().filter(|(i, _)| i & 0b00100 != 0).map(|(_, p)| p).sum();
        assert!((p1 - psi.amplitudes()[1].norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn measurement_free_circuit_is_unchanged() {
        let c = DynamicCircuit::new(2).gate(GateKind::H, &[0]).and_then(|c| c.gate(GateKind::CZ, &[0, 1])).unwrap();
        let p = purge_measurements(&c).unwrap();
        assert_eq!(p.circuit.num_qubits, 2);
        assert_eq!(p.circuit.gates.len(), 2);
    }

    #[test]
    fn single_angle_measurement_with_controlled_x() {
        let theta = 0.8;
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let e = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, theta);
        let basis = ComplexMatrix::from_rows(&[[h, h], [e, -e]]);
        let c = DynamicCircuit::new(2)
            .gate(GateKind::Rx(0.3), &[0])
            .unwrap()
            .measure(0, basis, OutcomeId(7))
            .controlled(GateKind::X, 1, OutcomeId(7));
        let p = purge_measurements(&c).unwrap();
        assert_eq!(p.ancillas, vec![(OutcomeId(7), 2)]);
        let controlled = p.circuit.gates.iter().filter(|g| g.targets.first() == Some(&2)).count();
        assert_eq!(controlled, 1);
        let input = QubitState::zero(2);
        let want = dynamic_distribution(&c, &input).unwrap();
        let got = p.circuit.apply(&QubitState::zero(3)).unwrap().probabilities();
        assert!(tv(&want, &got) < 1e-12);
    }

    #[test]
    fn undeclared_control_is_rejected() {
        let c = DynamicCircuit::new(1).controlled(GateKind::X, 0, OutcomeId(3));
        assert_eq!(purge_measurements(&c).unwrap_err(), Error::UnresolvedOutcome(OutcomeId(3)));
    }
}
