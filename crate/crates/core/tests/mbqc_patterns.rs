mod common;

use common::{random_circuit, rng, UNIVERSAL};
use mbqc_core::compiler::compile;
use mbqc_core::gates::GateKind;
use mbqc_core::io::{from_json, to_json, PatternJson};
use mbqc_core::mbqc::{
    compose, delete_site_z, pattern_cz, pattern_cz_grid, pattern_rx, pattern_single_step, pattern_wire, run_pattern,
    run_pattern_dense, Basis, CompiledPattern, MeasurementPattern, RunMode, SiteId,
};
use mbqc_core::pauli::{DepSet, OutcomeId};
use mbqc_core::qmath::{fidelity_up_to_phase, ComplexMatrix, QubitState};
use proptest::prelude::*;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

/// Worst infidelity over every branch between the corrected output and `u|ψ⟩`.
fn worst_branch(p: &MeasurementPattern, u: &ComplexMatrix, psi: &QubitState) -> (f64, usize) {
    let want = psi.apply_unitary(u, &(0..psi.num_qubits()).collect::<Vec<_>>()).unwrap();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    CompiledPattern::new(p)
        .unwrap()
        .for_each_branch(psi, |leaf| {
            count += 1;
            worst = worst.max(1.0 - fidelity_up_to_phase(&leaf.corrected(), &want).unwrap());
        })
        .unwrap();
    (worst, count)
}

fn w(theta: f64) -> ComplexMatrix {
    GateKind::W(theta).matrix()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn outcomes_are_uniform(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let c = random_circuit(&mut r, n, 4, &UNIVERSAL);
        let p = compile(&c).unwrap();
        let psi = QubitState::random(n, &mut r);
        let m = p.num_measurements();
        let mut total = 0.0;
        CompiledPattern::new(&p).unwrap().for_each_branch(&psi, |leaf| {
            total += leaf.probability;
            for s in leaf.step_probabilities {
                assert!((s - 0.5).abs() < 1e-10, "step probability {s}");
            }
            assert!((leaf.probability - 0.5f64.powi(m as i32)).abs() < 1e-12);
        }).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lazy_matches_dense(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let c = random_circuit(&mut r, n, 3, &UNIVERSAL);
        let p = compile(&c).unwrap();
        let psi = QubitState::random(n, &mut r);
        let lazy = run_pattern(&p, &psi, &RunMode::Sample(seed)).unwrap();
        let dense = run_pattern_dense(&p, &psi, &lazy.outcomes).unwrap();
        prop_assert!((lazy.probability - dense.probability).abs() < 1e-10);
        prop_assert!(fidelity_up_to_phase(&lazy.output, &dense.output).unwrap() > 1.0 - 1e-10);
        let again = run_pattern(&p, &psi, &RunMode::Branch(lazy.outcomes.clone())).unwrap();
        prop_assert_eq!(again.output, lazy.output);
    }

    #[test]
    fn composition_multiplies(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let (p1, p2) = (pattern_single_step(a), pattern_single_step(b));
        let q = compose(&p1, &p2, &[(p1.outputs[0], p2.inputs[0])]).unwrap();
        let u = &w(-b) * &w(-a);
        let psi = QubitState::random(1, &mut rng(seed));
        let (worst, count) = worst_branch(&q, &u, &psi);
        prop_assert_eq!(count, 4);
        prop_assert!(worst < 1e-10);
    }

    #[test]
    fn composition_is_associative(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, seed in any::<u64>()) {
        let (p1, p2, p3) = (pattern_rx(a), pattern_single_step(b), pattern_rx(c));
        let wire = |x: &MeasurementPattern, y: &MeasurementPattern| compose(x, y, &[(x.outputs[0], y.inputs[0])]).unwrap();
        let left = wire(&wire(&p1, &p2), &p3);
        let right = wire(&p1, &wire(&p2, &p3));
        prop_assert_eq!(left.num_measurements(), right.num_measurements());
        let u = &(&GateKind::Rx(c).matrix() * &w(-b)) * &GateKind::Rx(a).matrix();
        let psi = QubitState::random(1, &mut rng(seed));
        for q in [&left, &right] {
            let (worst, count) = worst_branch(q, &u, &psi);
            prop_assert_eq!(count, 1 << q.num_measurements());
            prop_assert!(worst < 1e-10);
        }
    }

    #[test]
    fn pattern_json_round_trips(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let p = compile(&random_circuit(&mut r, n, 5, &UNIVERSAL)).unwrap();
        let text = to_json(&PatternJson::from_pattern(&p)).unwrap();
        let back = from_json::<PatternJson>(&text).unwrap().into_pattern().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn rx_pattern_applies_rx(theta in -3.0f64..3.0, seed in any::<u64>()) {
        let psi = QubitState::random(1, &mut rng(seed));
        let (worst, _) = worst_branch(&pattern_rx(theta), &GateKind::Rx(theta).matrix(), &psi);
        prop_assert!(worst < 1e-10);
    }
}

#[test]
fn z_measurement_with_sign_dependence_is_rejected() {
    let mut p = pattern_wire();
    p.instructions[1].basis = Basis::Mz;
    p.instructions[1].sign_deps = DepSet::single(OutcomeId(0));
    assert!(p.validate().is_err());
    assert!(run_pattern(&p, &QubitState::plus(), &RunMode::Sample(0)).is_err());
}

#[test]
fn deleting_a_dangling_site_leaves_the_wire_intact() {
    let base = pattern_wire();
    let mut big = base.clone();
    let extra = SiteId(10);
    big.graph.add_site(extra);
    big.graph.add_edge(extra, SiteId(1)).unwrap();
    big.graph.add_edge(extra, SiteId(2)).unwrap();
    // without the deletion the extra site is never measured
    assert!(big.validate().is_err());
    let del = delete_site_z(&big, extra).unwrap();
    assert_eq!(del.instructions[0].basis, Basis::Mz);
    let psi = QubitState::random(1, &mut rng(21));
    let (worst, count) = worst_branch(&del, &ComplexMatrix::identity(2), &psi);
    assert_eq!(count, 8);
    assert!(worst < 1e-10);
    assert!(delete_site_z(&big, SiteId(0)).is_err());
}

#[test]
fn cz_grid_fixture_is_locked() {
    let text = include_str!("../fixtures/cz_grid.json");
    let p = from_json::<PatternJson>(text).unwrap().into_pattern().unwrap();
    assert_eq!(p, pattern_cz_grid());
}

#[test]
fn cz_grid_applies_cz_on_every_branch() {
    let p = pattern_cz_grid();
    assert_eq!(p.graph.num_sites(), 10);
    assert_eq!(p.num_measurements(), 8);
    for seed in 0..4 {
        let psi = QubitState::random(2, &mut rng(seed));
        let (worst, count) = worst_branch(&p, &GateKind::CZ.matrix(), &psi);
        assert_eq!(count, 256);
        assert!(worst < 1e-10);
    }
}

#[test]
fn bare_cz_edge_is_deterministic() {
    let p = pattern_cz();
    assert_eq!(p.num_measurements(), 0);
    let psi = QubitState::random(2, &mut rng(5));
    let (worst, count) = worst_branch(&p, &GateKind::CZ.matrix(), &psi);
    assert_eq!(count, 1);
    assert!(worst < 1e-12);
}

#[test]
fn compose_rejects_bad_wiring() {
    let p = pattern_wire();
    assert!(compose(&p, &p, &[]).is_err());
    assert!(compose(&p, &p, &[(p.inputs[0], p.inputs[0])]).is_err());
}
