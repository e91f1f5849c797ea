mod common;

use common::{angle, rng};
use mbqc_core::gates::{Gate, GateKind};
use mbqc_core::pauli::{
    frame_resolve, is_clifford, pauli_mul, propagate, DepSet, FrameEntry, OutcomeId, OutcomeRecord, PauliFrame, PauliOp,
};
use mbqc_core::qmath::{fidelity_up_to_phase, ComplexMatrix, QubitState, C64};
use mbqc_core::tqc::{
    project_onto_phi, teleport_branches, teleport_gate, validate_operator_basis, validate_povm, MaxEntangled,
    TeleportScheme,
};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

const ALL_KINDS: [GateKind; 11] = [
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::H,
    GateKind::PPi4,
    GateKind::Phase(0.0),
    GateKind::Rx(0.0),
    GateKind::Rz(0.0),
    GateKind::W(0.0),
    GateKind::CZ,
    GateKind::CX,
];

fn random_pauli<R: Rng>(r: &mut R, n: usize) -> PauliOp {
    let x = (0..n).map(|_| r.random_bool(0.5)).collect();
    let z = (0..n).map(|_| r.random_bool(0.5)).collect();
    PauliOp::from_bits(r.random_range(0..4), x, z).unwrap()
}

fn random_record(ids: u32, r: &mut impl Rng) -> OutcomeRecord {
    OutcomeRecord::from_pairs((0..ids).map(|i| (OutcomeId(i), r.random_range(0..2)))).unwrap()
}

fn random_frame(n: usize, ids: u32, r: &mut impl Rng) -> PauliFrame {
    let set = |r: &mut dyn rand::RngCore| DepSet::from_ids((0..ids).filter(|_| r.random_bool(0.5)).map(OutcomeId));
    PauliFrame::from_entries((0..n).map(|_| FrameEntry { x_deps: set(r), z_deps: set(r) }).collect())
}

fn random_alpha(d: usize, r: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn propagation_agrees_with_matrices(seed in any::<u64>()) {
        let mut r = rng(seed);
        let kind = *ALL_KINDS.choose(&mut r).unwrap();
        let kind = if kind.angle().is_some() { kind.with_angle(angle(&mut r)) } else { kind };
        let g = if kind.arity() == 2 { Gate::two(kind, 0, 1) } else { Gate::one(kind, 0) };
        let p = random_pauli(&mut r, kind.arity());
        let (p2, g2) = propagate(&g, &p).unwrap();
        let lhs = &g.matrix() * &p.matrix();
        let rhs = &p2.matrix() * &g2.matrix();
        prop_assert!(lhs.phase_aligned_diff(&rhs) <= 1e-10, "{kind}");
        if kind.is_clifford_kind() {
            prop_assert_eq!(g2, g);
            prop_assert!(lhs.approx_eq(&rhs, 1e-12));
        }
    }

    #[test]
    fn clifford_words_stay_clifford(seed in any::<u64>(), len in 1usize..=6) {
        let mut r = rng(seed);
        let gens = [GateKind::H, GateKind::PPi4, GateKind::CZ, GateKind::CX, GateKind::Z, GateKind::X];
        let mut u = ComplexMatrix::identity(4);
        for _ in 0..len {
            let k = *gens.choose(&mut r).unwrap();
            let m = if k.arity() == 2 {
                if r.random_bool(0.5) { Gate::two(k, 0, 1) } else { Gate::two(k, 1, 0) }
            } else {
                Gate::one(k, r.random_range(0..2))
            };
            let mut c = mbqc_core::gates::Circuit::new(2);
            c.push(m).unwrap();
            let step = c.unitary().unwrap();
            prop_assert!(is_clifford(&step, 2).unwrap().is_clifford);
            u = &step * &u;
            prop_assert!(is_clifford(&u, 2).unwrap().is_clifford);
        }
    }

    #[test]
    fn frame_resolution_is_a_homomorphism(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let f1 = random_frame(n, 5, &mut r);
        let f2 = random_frame(n, 5, &mut r);
        let rec = random_record(5, &mut r);
        let both = frame_resolve(&f1.combine(&f2).unwrap(), &rec).unwrap();
        let prod = pauli_mul(&frame_resolve(&f1, &rec).unwrap(), &frame_resolve(&f2, &rec).unwrap()).unwrap();
        prop_assert!(both.matrix().phase_aligned_diff(&prod.matrix()) < 1e-12);
    }

    #[test]
    fn projection_onto_rotated_state(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let u = ComplexMatrix::random_unitary(d, &mut r);
        let alpha = random_alpha(d, &mut r);
        let got = project_onto_phi(&u, &alpha, &MaxEntangled::schmidt(d)).unwrap();
        let want = u.mat_vec(&alpha).unwrap();
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w / d as f64).norm() <= 1e-10);
        }
    }

    #[test]
    fn rotated_bell_branches_apply_the_gate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = ComplexMatrix::random_unitary(2, &mut r);
        let psi = QubitState::random(1, &mut r);
        let scheme = TeleportScheme::rotated_bell(&u).unwrap();
        let ideal = psi.apply_unitary(&u, &[0]).unwrap();
        for b in teleport_branches(&scheme, &u, &psi).unwrap() {
            prop_assert!((b.probability - 0.25).abs() < 1e-10);
            let want = ideal.apply_unitary(&b.residual.matrix(), &[0]).unwrap();
            prop_assert!(fidelity_up_to_phase(&b.output, &want).unwrap() >= 1.0 - 1e-9);
        }
    }
}

#[test]
fn doubled_bell_is_a_valid_povm() {
    let s = TeleportScheme::doubled_bell();
    assert!(!s.is_projective());
    assert!(validate_povm(&s));
    let psi = QubitState::random(1, &mut rng(3));
    let total: f64 = s
        .ops
        .iter()
        .zip(&s.weights)
        .map(|(u, k)| {
            k * project_onto_phi(u, psi.amplitudes(), &s.resource).unwrap().iter().map(|a| a.norm_sqr()).sum::<f64>()
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    // operators that are not Pauli multiples of the gate have no residual
    assert!(teleport_branches(&s, &ComplexMatrix::identity(2), &psi).is_err());
}

#[test]
fn teleport_gate_is_seeded() {
    let psi = QubitState::random(2, &mut rng(4));
    let s = TeleportScheme::cz_scheme();
    let a = teleport_gate(&s, &GateKind::CZ.matrix(), &psi, 17).unwrap();
    let b = teleport_gate(&s, &GateKind::CZ.matrix(), &psi, 17).unwrap();
    assert_eq!(a, b);
}

#[test]
fn non_basis_is_rejected() {
    let ops = vec![ComplexMatrix::identity(2); 4];
    assert!(!validate_operator_basis(&ops).unwrap());
    assert!(validate_operator_basis(&ops[..3]).is_err());
}
