mod common;

use common::{rng, tv};
use mbqc_core::gates::GateKind;
use mbqc_core::laddersim::{
    cluster_ladder, joint_probability, joint_probability_dense, sweep, FixedOrder, LadderSampler, LadderSimState,
    LadderSpec, MeasurementQuery, QueryItem,
};
use mbqc_core::mbqc::Basis;
use mbqc_core::qmath::QubitState;
use mbqc_core::vbs::{
    build_grid_state, correspondence_fidelity, hbell_basis, hbell_cz_images, pi_project, rotated_bell_w, verify_lemma3,
    BondGrid, Geometry,
};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

fn random_basis(r: &mut impl Rng) -> Basis {
    if r.random_bool(0.3) {
        Basis::Mz
    } else {
        Basis::M(r.random_range(-3.0..3.0))
    }
}

fn query(lines: &[(usize, Basis)], bits: usize) -> MeasurementQuery {
    let k = lines.len();
    MeasurementQuery::new(
        lines
            .iter()
            .enumerate()
            .map(|(j, &(line, basis))| QueryItem { line, basis, outcome: ((bits >> (k - 1 - j)) & 1) as u8 })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn outcome_probabilities_sum_to_one(seed in any::<u64>(), n in 2usize..=6, k in 1usize..=3) {
        let mut r = rng(seed);
        let spec = LadderSpec::random(n, &mut r).unwrap();
        let k = k.min(n);
        let lines: Vec<(usize, Basis)> = sample(&mut r, n, k).into_iter().map(|l| (l, random_basis(&mut r))).collect();
        let mut total = 0.0;
        for bits in 0..1usize << k {
            let q = query(&lines, bits);
            let rep = sweep(&spec, &q).unwrap();
            prop_assert!(rep.max_lines <= LadderSimState::MAX_LINES);
            prop_assert!((rep.probability - joint_probability_dense(&spec, &q).unwrap()).abs() < 1e-10);
            total += rep.probability;
        }
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn marginals_are_consistent(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let spec = LadderSpec::random(n, &mut r).unwrap();
        let a = r.random_range(0..n);
        let b = (a + 1 + r.random_range(0..n - 1)) % n;
        let qa = MeasurementQuery::new(vec![QueryItem { line: a, basis: random_basis(&mut r), outcome: 1 }]).unwrap();
        let basis_b = random_basis(&mut r);
        let split: f64 = (0..2u8)
            .map(|o| joint_probability(&spec, &qa.with(QueryItem { line: b, basis: basis_b, outcome: o }).unwrap()).unwrap())
            .sum();
        prop_assert!((split - joint_probability(&spec, &qa).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn pi_projection_follows_part_order(seed in any::<u64>(), cols in 2usize..=3) {
        let mut r = rng(seed);
        let g = BondGrid::grid(2, cols).unwrap();
        let state = build_grid_state(&g).unwrap();
        let parts = g.partition();
        let m = parts.len();
        let order: Vec<usize> = sample(&mut r, m, m).into_vec();
        let shuffled: Vec<Vec<usize>> = order.iter().map(|&i| parts[i].clone()).collect();
        let base = pi_project(&state, &parts).unwrap();
        let got = pi_project(&state, &shuffled).unwrap();
        let want = base.permuted(&order).unwrap();
        for (x, y) in got.amplitudes().iter().zip(want.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn rotated_bell_is_orthonormal(theta in -10.0f64..10.0) {
        let b = rotated_bell_w(theta);
        for i in 0..4 {
            for j in 0..4 {
                let ip = b[i].state.inner(&b[j].state).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip.norm() - want).abs() < 1e-12);
            }
        }
        prop_assert_eq!(b.iter().filter(|x| x.in_pi_range).count(), 2);
    }

    #[test]
    fn bond_teleportation_matches_cluster_step(theta in -3.2f64..3.2, seed in any::<u64>()) {
        let psi = QubitState::random(1, &mut rng(seed));
        prop_assert!(correspondence_fidelity(theta, &psi).unwrap() > 1.0 - 1e-10);
    }
}

#[test]
fn sampling_order_does_not_change_the_distribution() {
    let mut r = rng(40);
    let spec = LadderSpec::random(4, &mut r).unwrap();
    let lines = [(0, Basis::M(0.7)), (2, Basis::Mz), (3, Basis::M(-1.1))];
    let exact: Vec<f64> = (0..8).map(|bits| joint_probability(&spec, &query(&lines, bits)).unwrap()).collect();
    let shots = 20_000;
    for order in [lines.to_vec(), lines.iter().rev().copied().collect()] {
        let mut sampler = LadderSampler::new(&spec);
        let mut counts = [0.0; 8];
        let mut strategy = FixedOrder(order);
        let mut r = rng(41);
        for _ in 0..shots {
            let s = sampler.sample(&mut strategy, &mut r).unwrap();
            let rec = s.record();
            let bits = lines.iter().fold(0, |acc, &(l, _)| {
                (acc << 1) | rec.value(mbqc_core::pauli::OutcomeId(l as u32)).unwrap() as usize
            });
            counts[bits] += 1.0 / shots as f64;
        }
        // memoized: at most one sweep per distinct prefix
        assert!(sampler.sweeps() <= 1 + 2 + 4 + 8);
        assert!(tv(&counts, &exact) < 0.02, "tv {}", tv(&counts, &exact));
    }
}

#[test]
fn cluster_ladder_has_uniform_x_outcomes() {
    let spec = cluster_ladder(5).unwrap();
    for line in 0..5 {
        let q = MeasurementQuery::new(vec![QueryItem { line, basis: Basis::M(0.0), outcome: 0 }]).unwrap();
        assert!((joint_probability(&spec, &q).unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn bad_queries_are_rejected() {
    let item = QueryItem { line: 1, basis: Basis::Mz, outcome: 0 };
    assert!(MeasurementQuery::new(vec![item, item]).is_err());
    assert!(MeasurementQuery::new(vec![QueryItem { outcome: 2, ..item }]).is_err());
    let spec = cluster_ladder(3).unwrap();
    let far = MeasurementQuery::new(vec![QueryItem { line: 7, ..item }]).unwrap();
    assert!(joint_probability(&spec, &far).is_err());
}

#[test]
fn bond_projection_gives_cluster_states() {
    for n in 2..=6 {
        assert!(verify_lemma3(Geometry::Line(n)).unwrap() > 1.0 - 1e-12, "line {n}");
    }
    for (rows, cols) in [(2, 2), (2, 3), (1, 4)] {
        assert!(verify_lemma3(Geometry::Grid(rows, cols)).unwrap() > 1.0 - 1e-12, "{rows}x{cols}");
    }
    assert!(verify_lemma3(Geometry::Grid(3, 3)).is_err());
    assert!(verify_lemma3(Geometry::Line(11)).is_err());
}

#[test]
fn cz_sends_hbell_to_the_product_basis() {
    let cz = GateKind::CZ.matrix();
    for (b, want) in hbell_basis().iter().zip(hbell_cz_images()) {
        let got = b.apply_unitary(&cz, &[0, 1]).unwrap();
        for (x, y) in got.amplitudes().iter().zip(want.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
