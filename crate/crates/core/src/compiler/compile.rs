use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::gates::{euler_xzx, w_decompose, Circuit, GateKind};
use crate::mbqc::{MeasurementPattern, PatternBuilder};
use crate::qmath::ComplexMatrix;

/// How runs of single-qubit gates become measurement steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OneQubitLowering {
    /// Each gate maps to a fixed short chain of `W` steps.
    #[default]
    Native,
    /// Fuse each run and emit `W(0)W(θ1)W(θ2)W(θ3)` (four steps).
    WChain,
    /// Fuse each run and emit the Euler pattern `Rx(ζ)Rz(η)Rx(ξ)` (four steps).
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompileOptions {
    pub one_qubit: OneQubitLowering,
}

/// `W` angles, in application order, that realize a single-qubit gate up to phase.
pub fn native_steps(kind: GateKind) -> Result<Vec<f64>> {
    Ok(match kind {
        GateKind::H => vec![0.0],
        GateKind::W(t) => vec![t],
        // W(0)W(2θ) = P(2θ) ∝ Rz(θ)
        GateKind::Rz(t) => vec![2.0 * t, 0.0],
        GateKind::Rx(t) => vec![0.0, 2.0 * t],
        GateKind::Phase(t) => vec![t, 0.0],
        GateKind::PPi4 => vec![FRAC_PI_2, 0.0],
        GateKind::Z => vec![PI, 0.0],
        GateKind::X => vec![0.0, PI],
        GateKind::Y => vec![PI, PI],
        other => return Err(Error::UnsupportedGate(other.to_string())),
    })
}

fn fused_steps(u: &ComplexMatrix, lowering: OneQubitLowering) -> Result<Vec<f64>> {
    match lowering {
        OneQubitLowering::Native => unreachable!("native lowering does not fuse"),
        OneQubitLowering::WChain => {
            let w = w_decompose(u)?;
            Ok(vec![w.theta3, w.theta2, w.theta1, 0.0])
        }
        OneQubitLowering::Euler => {
            let e = euler_xzx(u)?;
            Ok(vec![0.0, 2.0 * e.xi, 2.0 * e.eta, 2.0 * e.zeta])
        }
    }
}

/// Compiles with native single-qubit lowering.
pub fn compile(c: &Circuit) -> Result<MeasurementPattern> {
    compile_with(c, &CompileOptions::default())
}

/// Circuit wires become input sites `0..n`; outputs are the final wire heads.
pub fn compile_with(c: &Circuit, opts: &CompileOptions) -> Result<MeasurementPattern> {
    c.validate()?;
    let mut b = PatternBuilder::new(c.num_qubits, true);
    let mut pending: Vec<Option<ComplexMatrix>> = vec![None; c.num_qubits];
    let flush = |b: &mut PatternBuilder, pending: &mut Vec<Option<ComplexMatrix>>, q: usize| -> Result<()> {
        if let Some(u) = pending[q].take() {
            for a in fused_steps(&u, opts.one_qubit)? {
                b.step(q, a)?;
            }
        }
        Ok(())
    };
    for g in &c.gates {
        match g.kind {
            GateKind::CZ | GateKind::CX => {
                let (a, t) = (g.targets[0], g.targets[1]);
                flush(&mut b, &mut pending, a)?;
                flush(&mut b, &mut pending, t)?;
                if g.kind == GateKind::CX {
                    // CX = (I⊗H) CZ (I⊗H)
                    b.step(t, 0.0)?;
                    b.cz(a, t)?;
                    b.step(t, 0.0)?;
                } else {
                    b.cz(a, t)?;
                }
            }
            kind => {
                let q = g.targets[0];
                if opts.one_qubit == OneQubitLowering::Native {
                    for a in native_steps(kind)? {
                        b.step(q, a)?;
                    }
                } else {
                    native_steps(kind)?;
                    let m = kind.matrix();
                    pending[q] = Some(match pending[q].take() {
                        Some(prev) => &m * &prev,
                        None => m,
                    });
                }
            }
        }
    }
    for q in 0..c.num_qubits {
        flush(&mut b, &mut pending, q)?;
    }
    Ok(b.finish())
}
