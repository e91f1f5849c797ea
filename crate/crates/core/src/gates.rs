//! Gate catalog, circuits, and the two single-qubit decompositions
//! (`Rx·Rz·Rx` Euler angles and the four-fold `W` chain).
//!
//! Rotations use the full angle in the exponent: `Rx(θ) = exp(-iθX)`,
//! `Rz(θ) = exp(-iθZ)`. `W(θ) = H·P(θ)` with `P(θ) = diag(1, e^{iθ})`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qmath::{ComplexMatrix, QubitState, UNITARY_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    /// `diag(1, i)`.
    PPi4,
    Phase(f64),
    Rx(f64),
    Rz(f64),
    W(f64),
    CZ,
    /// Control is the first target.
    CX,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::CZ | GateKind::CX => 2,
            _ => 1,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateKind::Phase(t) | GateKind::Rx(t) | GateKind::Rz(t) | GateKind::W(t) => Some(t),
            _ => None,
        }
    }

    /// Same kind with the angle replaced; unchanged for fixed gates.
    pub fn with_angle(&self, theta: f64) -> GateKind {
        match self {
            GateKind::Phase(_) => GateKind::Phase(theta),
            GateKind::Rx(_) => GateKind::Rx(theta),
            GateKind::Rz(_) => GateKind::Rz(theta),
            GateKind::W(_) => GateKind::W(theta),
            other => *other,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::PPi4 => "P_pi4",
            GateKind::Phase(_) => "Phase",
            GateKind::Rx(_) => "Rx",
            GateKind::Rz(_) => "Rz",
            GateKind::W(_) => "W",
            GateKind::CZ => "CZ",
            GateKind::CX => "CX",
        }
    }

    pub fn from_name(name: &str, theta: Option<f64>) -> Result<GateKind> {
        let need = |t: Option<f64>| t.ok_or_else(|| Error::InvalidArgument(format!("gate {name} requires theta")));
        Ok(match name {
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "P_pi4" => GateKind::PPi4,
            "Phase" => GateKind::Phase(need(theta)?),
            "Rx" => GateKind::Rx(need(theta)?),
            "Rz" => GateKind::Rz(need(theta)?),
            "W" => GateKind::W(need(theta)?),
            "CZ" => GateKind::CZ,
            "CX" => GateKind::CX,
            other => return Err(Error::InvalidArgument(format!("unknown gate kind {other:?}"))),
        })
    }

    /// True for the fixed Clifford kinds (angle gates are never reported as Clifford here,
    /// even at Clifford angles).
    pub fn is_clifford_kind(&self) -> bool {
        matches!(
            self,
            GateKind::X | GateKind::Y | GateKind::Z | GateKind::H | GateKind::PPi4 | GateKind::CZ | GateKind::CX
        )
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        match *self {
            GateKind::X => ComplexMatrix::from_rows(&[[z, o], [o, z]]),
            GateKind::Y => ComplexMatrix::from_rows(&[[z, c(0.0, -1.0)], [c(0.0, 1.0), z]]),
            GateKind::Z => ComplexMatrix::from_rows(&[[o, z], [z, -o]]),
            GateKind::H => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                ComplexMatrix::from_rows(&[[h, h], [h, -h]])
            }
            GateKind::PPi4 => ComplexMatrix::from_rows(&[[o, z], [z, c(0.0, 1.0)]]),
            GateKind::Phase(t) => ComplexMatrix::from_rows(&[[o, z], [z, C64::from_polar(1.0, t)]]),
            GateKind::Rx(t) => {
                let (s, co) = t.sin_cos();
                ComplexMatrix::from_rows(&[[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]])
            }
            GateKind::Rz(t) => ComplexMatrix::from_rows(&[[C64::from_polar(1.0, -t), z], [z, C64::from_polar(1.0, t)]]),
            GateKind::W(t) => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                let e = C64::from_polar(FRAC_1_SQRT_2, t);
                ComplexMatrix::from_rows(&[[h, e], [h, -e]])
            }
            GateKind::CZ => ComplexMatrix::diagonal(&[o, o, o, -o]),
            GateKind::CX => ComplexMatrix::from_rows(&[[o, z, z, z], [z, o, z, z], [z, z, z, o], [z, z, o, z]]),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.angle() {
            Some(t) => write!(f, "{}({t})", self.name()),
            None => write!(f, "{}", self.name()),
        }
    }
}

/// A catalog gate applied to specific wires.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self> {
        if targets.len() != kind.arity() {
            return Err(Error::InvalidArgument(format!(
                "{} takes {} target(s), got {}",
                kind.name(),
                kind.arity(),
                targets.len()
            )));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::DuplicateTarget(targets[0]));
        }
        Ok(Self { kind, targets })
    }

    pub fn one(kind: GateKind, q: usize) -> Self {
        Self::new(kind, vec![q]).expect("single-qubit gate")
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Self {
        Self::new(kind, vec![a, b]).expect("two-qubit gate")
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.kind.matrix()
    }
}

/// Ordered gate list on `num_qubits` wires, earliest gate first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn with_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Self { num_qubits, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        for &t in &gate.targets {
            if t >= self.num_qubits {
                return Err(Error::QubitOutOfRange { index: t, num_qubits: self.num_qubits });
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            if g.targets.len() != g.kind.arity() {
                return Err(Error::InvalidArgument(format!("{} has wrong arity", g.kind)));
            }
            for (i, &t) in g.targets.iter().enumerate() {
                if t >= self.num_qubits {
                    return Err(Error::QubitOutOfRange { index: t, num_qubits: self.num_qubits });
                }
                if g.targets[..i].contains(&t) {
                    return Err(Error::DuplicateTarget(t));
                }
            }
        }
        Ok(())
    }

    /// Runs the circuit on a statevector.
    pub fn apply(&self, input: &QubitState) -> Result<QubitState> {
        if input.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch { expected: self.num_qubits, found: input.num_qubits() });
        }
        let mut s = input.clone();
        for g in &self.gates {
            s.apply_unitary_mut(&g.matrix(), &g.targets)?;
        }
        Ok(s)
    }

    /// Full `2^n × 2^n` unitary, built column by column.
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.num_qubits;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for col in 0..dim {
            let out = self.apply(&QubitState::basis(self.num_qubits, col))?;
            for (row, a) in out.amplitudes().iter().enumerate() {
                m[(row, col)] = *a;
            }
        }
        Ok(m)
    }
}

/// `U ∝ Rx(ζ)·Rz(η)·Rx(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub xi: f64,
    pub eta: f64,
    pub zeta: f64,
}

impl EulerAngles {
    pub fn matrix(&self) -> ComplexMatrix {
        &(&GateKind::Rx(self.zeta).matrix() * &GateKind::Rz(self.eta).matrix()) * &GateKind::Rx(self.xi).matrix()
    }
}

/// `U ∝ W(0)·W(θ1)·W(θ2)·W(θ3)`; `W(θ3)` acts first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl WAngles {
    pub fn matrix(&self) -> ComplexMatrix {
        let w = |t: f64| GateKind::W(t).matrix();
        &(&(&w(0.0) * &w(self.theta1)) * &w(self.theta2)) * &w(self.theta3)
    }
}

const DEGENERATE_TOL: f64 = 1e-12;

fn check_single_qubit_unitary(u: &ComplexMatrix) -> Result<()> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: u.rows() });
    }
    u.ensure_unitary(UNITARY_TOL)
}

/// Reduces to `[0, period)` and snaps values within rounding of the period to 0.
fn canonical(angle: f64, period: f64) -> f64 {
    let r = angle.rem_euclid(period);
    if (period - r).abs() < 1e-13 || r.abs() < 1e-15 {
        0.0
    } else {
        r
    }
}

/// `U ∝ Rz(alpha)·Rx(beta)·Rz(gamma)` with alpha, gamma in [0, π) and beta in [0, π/2].
fn zxz(u: &ComplexMatrix) -> (f64, f64, f64) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let root = det.sqrt();
    let v00 = u[(0, 0)] / root;
    let v10 = u[(1, 0)] / root;
    let (cb, sb) = (v00.norm(), v10.norm());
    let beta = sb.atan2(cb);
    // v00 = cos β e^{-i(α+γ)}, v10 = -i sin β e^{i(α-γ)}
    let (alpha, gamma) = if sb < DEGENERATE_TOL {
        // diagonal: all of the z rotation goes to the rightmost factor
        (0.0, -v00.arg())
    } else if cb < DEGENERATE_TOL {
        // antidiagonal: α - γ fixed, choose α = 0
        let diff = (v10 * C64::new(0.0, 1.0)).arg();
        (0.0, -diff)
    } else {
        let sum = -v00.arg();
        let diff = (v10 * C64::new(0.0, 1.0)).arg();
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    // Rz(a + π) = -Rz(a), so π-periodicity only costs a global sign.
    (canonical(alpha, PI), beta, canonical(gamma, PI))
}

/// Euler angles with `U ∝ Rx(ζ)Rz(η)Rx(ξ)`; ξ, ζ ∈ [0, 2π), η ∈ [0, π).
pub fn euler_xzx(u: &ComplexMatrix) -> Result<EulerAngles> {
    check_single_qubit_unitary(u)?;
    // H·Rx(a)·H = Rz(a), so decompose H U H in z-x-z form.
    let h = GateKind::H.matrix();
    let conj = &(&h * u) * &h;
    let (zeta, eta, xi) = zxz(&conj);
    Ok(EulerAngles { xi, eta, zeta })
}

/// Angles with `U ∝ W(0)W(θ1)W(θ2)W(θ3)`, each in [0, 2π).
///
/// Uses `W(0)W(a)W(b)W(c) ∝ Rz(a/2)·Rx(b/2)·Rz(c/2)`.
pub fn w_decompose(u: &ComplexMatrix) -> Result<WAngles> {
    check_single_qubit_unitary(u)?;
    let (alpha, beta, gamma) = zxz(u);
    Ok(WAngles {
        theta1: canonical(2.0 * alpha, 2.0 * PI),
        theta2: canonical(2.0 * beta, 2.0 * PI),
        theta3: canonical(2.0 * gamma, 2.0 * PI),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn w_zero_is_hadamard() {
        assert!(GateKind::W(0.0).matrix().approx_eq(&GateKind::H.matrix(), 1e-15));
    }

    #[test]
    fn rz_pi_is_minus_identity() {
        let m = GateKind::Rz(PI).matrix();
        assert!(m.approx_eq(&ComplexMatrix::identity(2).scale(c(-1.0, 0.0)), 1e-15));
    }

    #[test]
    fn cz_is_diag() {
        let m = GateKind::CZ.matrix();
        assert_eq!(m[(3, 3)], c(-1.0, 0.0));
        assert_eq!(m[(2, 2)], c(1.0, 0.0));
    }

    #[test]
    fn every_kind_is_unitary() {
        for k in [
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::H,
            GateKind::PPi4,
            GateKind::Phase(0.3),
            GateKind::Rx(1.1),
            GateKind::Rz(-0.4),
            GateKind::W(2.5),
            GateKind::CZ,
            GateKind::CX,
        ] {
            assert!(k.matrix().is_unitary(1e-12), "{k}");
        }
    }

    #[test]
    fn euler_identity_is_all_zero() {
        let e = euler_xzx(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!((e.xi, e.eta, e.zeta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn euler_of_rx_puts_angle_in_xi() {
        let e = euler_xzx(&GateKind::Rx(0.3).matrix()).unwrap();
        assert!((e.xi - 0.3).abs() < 1e-12 && e.eta.abs() < 1e-12 && e.zeta.abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn decompositions_reject_non_unitary() {
        let bad = ComplexMatrix::from_real_rows(&[[1.0, 0.5], [0.0, 1.0]]);
        assert!(euler_xzx(&bad).is_err());
        assert!(w_decompose(&bad).is_err());
        assert!(w_decompose(&ComplexMatrix::identity(4)).is_err());
    }

    fn roundtrip_fidelity(u: &ComplexMatrix, recon: &ComplexMatrix, rng: &mut ChaCha8Rng) -> f64 {
        let v = QubitState::random(1, rng);
        let a = v.apply_unitary(u, &[0]).unwrap();
        let b = v.apply_unitary(recon, &[0]).unwrap();
        crate::qmath::fidelity_up_to_phase(&a, &b).unwrap()
    }

    #[test]
    fn w_decompose_named_gates_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for u in [GateKind::H.matrix(), GateKind::Rz(0.2).matrix(), GateKind::Rx(0.5).matrix()] {
            let w = w_decompose(&u).unwrap();
            assert!(w.matrix().approx_eq_up_to_phase(&u, 1e-10), "{w:?}");
            assert!(roundtrip_fidelity(&u, &w.matrix(), &mut rng) >= 1.0 - 1e-9);
        }
        // H needs a nonzero branch: the all-zero triple reconstructs the identity.
        let wh = w_decompose(&GateKind::H.matrix()).unwrap();
        assert!(wh.theta1 != 0.0 || wh.theta2 != 0.0 || wh.theta3 != 0.0);
    }

    #[test]
    fn random_haar_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u = ComplexMatrix::random_unitary(2, &mut rng);
            let e = euler_xzx(&u).unwrap();
            assert!((0.0..2.0 * PI).contains(&e.xi) && (0.0..2.0 * PI).contains(&e.zeta));
            assert!((0.0..PI).contains(&e.eta));
            assert!(roundtrip_fidelity(&u, &e.matrix(), &mut rng) >= 1.0 - 1e-9);
            let w = w_decompose(&u).unwrap();
            assert!(roundtrip_fidelity(&u, &w.matrix(), &mut rng) >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn degenerate_inputs_take_closed_forms() {
        for u in [GateKind::X.matrix(), GateKind::Z.matrix(), GateKind::Y.matrix(), GateKind::PPi4.matrix()] {
            let e = euler_xzx(&u).unwrap();
            assert!(e.matrix().approx_eq_up_to_phase(&u, 1e-12), "{u:?} -> {e:?}");
            let w = w_decompose(&u).unwrap();
            assert!(w.matrix().approx_eq_up_to_phase(&u, 1e-12), "{u:?} -> {w:?}");
        }
    }

    #[test]
    fn circuit_rejects_out_of_range() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::one(GateKind::H, 2)).is_err());
        assert!(Gate::new(GateKind::CZ, vec![1, 1]).is_err());
        assert!(Gate::new(GateKind::H, vec![0, 1]).is_err());
    }
}
