//! Random instance generators shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;

use mbqc_core::compiler::{DynOp, DynamicCircuit};
use mbqc_core::gates::{Circuit, Gate, GateKind};
use mbqc_core::pauli::OutcomeId;
use mbqc_core::qmath::ComplexMatrix;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn angle<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-PI..PI)
}

/// Gate drawn from `palette` (angles filled in at random) on random distinct wires.
pub fn random_gate<R: Rng>(rng: &mut R, n: usize, palette: &[GateKind]) -> Gate {
    loop {
        let kind = *palette.choose(rng).expect("non-empty palette");
        let kind = match kind.angle() {
            Some(_) => kind.with_angle(angle(rng)),
            None => kind,
        };
        if kind.arity() == 2 {
            if n < 2 {
                continue;
            }
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            return Gate::two(kind, a, b);
        }
        return Gate::one(kind, rng.random_range(0..n));
    }
}

pub fn random_circuit<R: Rng>(rng: &mut R, n: usize, max_gates: usize, palette: &[GateKind]) -> Circuit {
    let len = rng.random_range(1..=max_gates);
    let gates = (0..len).map(|_| random_gate(rng, n, palette)).collect();
    Circuit::with_gates(n, gates).expect("valid random circuit")
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub const UNIVERSAL: [GateKind; 5] =
    [GateKind::CZ, GateKind::H, GateKind::Rx(0.0), GateKind::Rz(0.0), GateKind::W(0.0)];
pub const CLIFFORD: [GateKind; 4] = [GateKind::Z, GateKind::H, GateKind::PPi4, GateKind::CX];
pub const CX_RX: [GateKind; 2] = [GateKind::CX, GateKind::Rx(0.0)];
pub const CX_RZ: [GateKind; 2] = [GateKind::CX, GateKind::Rz(0.0)];

/// Circuit with `1..=max_meas` mid-circuit measurements in random bases and
/// classically controlled Paulis on other qubits.
pub fn random_dynamic<R: Rng>(rng: &mut R, n: usize, max_gates: usize, max_meas: usize) -> DynamicCircuit {
    let mut c = DynamicCircuit::new(n);
    let meas = rng.random_range(1..=max_meas);
    let mut ids = Vec::new();
    for k in 0..meas {
        for _ in 0..rng.random_range(0..=max_gates / meas) {
            c.ops.push(DynOp::Gate(random_gate(rng, n, &UNIVERSAL)));
        }
        let q = rng.random_range(0..n);
        let id = OutcomeId(k as u32);
        c.ops.push(DynOp::Measure { qubit: q, basis: ComplexMatrix::random_unitary(2, rng), id });
        ids.push(id);
        for _ in 0..rng.random_range(0..=2) {
            let kind = *[GateKind::X, GateKind::Y, GateKind::Z].choose(rng).unwrap();
            let control = *ids.choose(rng).unwrap();
            c.ops.push(DynOp::Controlled { kind, target: rng.random_range(0..n), control });
        }
    }
    for _ in 0..rng.random_range(0..=2) {
        c.ops.push(DynOp::Gate(random_gate(rng, n, &UNIVERSAL)));
    }
    c
}
