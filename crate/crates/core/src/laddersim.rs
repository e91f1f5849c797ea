//! Classical simulation of single-qubit measurements on ladder states.
//!
//! A ladder on `n` lines starts from `|0…0⟩` and applies two-qubit unitaries
//! `U_{0,1}, U_{1,2}, …` in order. A measurement on line `a` sits right after
//! `U_{a,a+1}`. Since no later gate touches line `a`, the sweep only ever keeps
//! the reduced state of two adjacent lines.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gates::GateKind;
use crate::mbqc::Basis;
use crate::pauli::{OutcomeId, OutcomeRecord};
use crate::qmath::{ComplexMatrix, DensityMatrix, QubitState, C64, UNITARY_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct LadderSpec {
    n: usize,
    unitaries: Vec<ComplexMatrix>,
}

impl LadderSpec {
    pub fn new(n: usize, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("a ladder needs at least two lines, got {n}")));
        }
        if unitaries.len() != n - 1 {
            return Err(Error::InvalidArgument(format!("{n} lines need {} unitaries, got {}", n - 1, unitaries.len())));
        }
        for u in &unitaries {
            if u.rows() != 4 || !u.is_square() {
                return Err(Error::DimensionMismatch { expected: 4, found: u.rows() });
            }
            u.ensure_unitary(UNITARY_TOL)?;
        }
        Ok(Self { n, unitaries })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let us = (1..n).map(|_| ComplexMatrix::random_unitary(4, rng)).collect();
        Self::new(n, us)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    /// Full `2^n` statevector, line 0 most significant.
    pub fn state(&self) -> QubitState {
        let mut s = QubitState::zero(self.n);
        for (i, u) in self.unitaries.iter().enumerate() {
            s.apply_matrix_unchecked(u, &[i, i + 1]);
        }
        s
    }
}

/// The 1D cluster state as a ladder. `U_{0,1} = CZ(H⊗H)`; later rungs only
/// need `CZ(I⊗H)` because the upper line already holds its `|+⟩`.
pub fn cluster_ladder(n: usize) -> Result<LadderSpec> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("a ladder needs at least two lines, got {n}")));
    }
    let h = GateKind::H.matrix();
    let cz = GateKind::CZ.matrix();
    let first = &cz * &h.kron(&h);
    let rest = &cz * &ComplexMatrix::identity(2).kron(&h);
    let mut us = vec![first];
    us.extend(std::iter::repeat_n(rest, n - 2));
    LadderSpec::new(n, us)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryItem {
    pub line: usize,
    pub basis: Basis,
    pub outcome: u8,
}

/// Fixed-outcome measurements, kept sorted by line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementQuery {
    items: Vec<QueryItem>,
}

impl MeasurementQuery {
    pub fn new(mut items: Vec<QueryItem>) -> Result<Self> {
        items.sort_by_key(|i| i.line);
        for w in items.windows(2) {
            if w[0].line == w[1].line {
                return Err(Error::InvalidArgument(format!("line {} queried twice", w[0].line)));
            }
        }
        if let Some(i) = items.iter().find(|i| i.outcome > 1) {
            return Err(Error::InvalidArgument(format!("outcome {} on line {} is not a bit", i.outcome, i.line)));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[QueryItem] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn with(&self, item: QueryItem) -> Result<Self> {
        let mut v = self.items.clone();
        v.push(item);
        Self::new(v)
    }

    fn at(&self, line: usize) -> Option<&QueryItem> {
        self.items.iter().find(|i| i.line == line)
    }
}

/// Rank-one projector for outcome `bit` of `basis`.
pub fn projector(basis: Basis, bit: u8) -> ComplexMatrix {
    let v = match basis {
        Basis::Mz => {
            let mut v = vec![C64::new(0.0, 0.0); 2];
            v[bit as usize] = C64::new(1.0, 0.0);
            v
        }
        Basis::M(theta) => {
            let s = if bit == 0 { 1.0 } else { -1.0 };
            let r = std::f64::consts::FRAC_1_SQRT_2;
            vec![C64::new(r, 0.0), C64::from_polar(s * r, theta)]
        }
    };
    ComplexMatrix::outer(&v, &v)
}

/// Sweep state: the current line and the reduced state on at most two lines.
#[derive(Debug, Clone)]
pub struct LadderSimState {
    pub line: usize,
    pub rho: DensityMatrix,
}

impl LadderSimState {
    pub const MAX_LINES: usize = 2;

    fn check(&self) {
        assert!(self.rho.num_qubits() <= Self::MAX_LINES, "sweep holds {} lines", self.rho.num_qubits());
    }

    /// Weight left after the projections applied so far.
    pub fn subnorm(&self) -> f64 {
        self.rho.trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepReport {
    pub probability: f64,
    /// Most lines held at any point of the sweep.
    pub max_lines: usize,
    pub steps: usize,
}

pub fn joint_probability(spec: &LadderSpec, q: &MeasurementQuery) -> Result<f64> {
    Ok(sweep(spec, q)?.probability)
}

/// Runs the two-line sweep, asserting the space bound after every step.
pub fn sweep(spec: &LadderSpec, q: &MeasurementQuery) -> Result<SweepReport> {
    if let Some(i) = q.items().iter().find(|i| i.line >= spec.n) {
        return Err(Error::QubitOutOfRange { index: i.line, num_qubits: spec.n });
    }
    let zero = DensityMatrix::from_pure(&QubitState::zero(1));
    let mut st = LadderSimState { line: 0, rho: zero.clone() };
    let mut max_lines = 1;
    let mut steps = 0;
    let mut observe = |st: &LadderSimState| {
        st.check();
        max_lines = max_lines.max(st.rho.num_qubits());
        steps += 1;
    };
    observe(&st);
    for (a, u) in spec.unitaries.iter().enumerate() {
        // sigma_{a,a+1}
        st.rho = st.rho.tensor(&zero).conjugate(u, &[0, 1])?;
        observe(&st);
        if let Some(item) = q.at(a) {
            st.rho = st.rho.sandwich(&projector(item.basis, item.outcome), &[0])?;
            observe(&st);
        }
        st.rho = st.rho.partial_trace(&[1])?;
        st.line = a + 1;
        observe(&st);
    }
    if let Some(item) = q.at(spec.n - 1) {
        st.rho = st.rho.sandwich(&projector(item.basis, item.outcome), &[0])?;
        observe(&st);
    }
    Ok(SweepReport { probability: st.subnorm(), max_lines, steps })
}

/// Brute-force reference: project the full ladder statevector.
pub fn joint_probability_dense(spec: &LadderSpec, q: &MeasurementQuery) -> Result<f64> {
    if let Some(i) = q.items().iter().find(|i| i.line >= spec.n) {
        return Err(Error::QubitOutOfRange { index: i.line, num_qubits: spec.n });
    }
    let mut s = spec.state();
    for it in q.items() {
        s.apply_matrix_unchecked(&projector(it.basis, it.outcome), &[it.line]);
    }
    Ok(s.norm_sqr())
}

/// Chooses the next line and basis from the outcomes seen so far; `None` stops.
pub trait Strategy {
    fn next(&mut self, history: &[QueryItem]) -> Option<(usize, Basis)>;
}

impl<F: FnMut(&[QueryItem]) -> Option<(usize, Basis)>> Strategy for F {
    fn next(&mut self, history: &[QueryItem]) -> Option<(usize, Basis)> {
        self(history)
    }
}

/// Measures a fixed list in order, ignoring outcomes.
#[derive(Debug, Clone)]
pub struct FixedOrder(pub Vec<(usize, Basis)>);

impl Strategy for FixedOrder {
    fn next(&mut self, history: &[QueryItem]) -> Option<(usize, Basis)> {
        self.0.get(history.len()).copied()
    }
}

/// One sampled history: items in the order they were chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderSample {
    pub history: Vec<QueryItem>,
}

impl LadderSample {
    /// Outcomes keyed by line.
    pub fn record(&self) -> OutcomeRecord {
        OutcomeRecord::from_pairs(self.history.iter().map(|i| (OutcomeId(i.line as u32), i.outcome)))
            .expect("lines are distinct")
    }
}

/// Samples each outcome from a ratio of two joint probabilities, recomputed from scratch.
pub fn conditional_sample<S: Strategy + ?Sized>(
    spec: &LadderSpec,
    strategy: &mut S,
    seed: u64,
) -> Result<LadderSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LadderSampler::new(spec).sample(strategy, &mut rng)
}

type QueryKey = Vec<(usize, Option<u64>, u8)>;

/// Repeated conditional sampling on one ladder. Joint probabilities of queries
/// already seen are remembered, so many shots cost at most one sweep per
/// distinct prefix.
#[derive(Debug)]
pub struct LadderSampler<'a> {
    spec: &'a LadderSpec,
    memo: HashMap<QueryKey, f64>,
}

impl<'a> LadderSampler<'a> {
    pub fn new(spec: &'a LadderSpec) -> Self {
        Self { spec, memo: HashMap::new() }
    }

    /// Sweeps computed so far.
    pub fn sweeps(&self) -> usize {
        self.memo.len()
    }

    fn joint(&mut self, q: &MeasurementQuery) -> Result<f64> {
        let key: QueryKey = q.items().iter().map(|i| (i.line, i.basis.angle().map(f64::to_bits), i.outcome)).collect();
        if let Some(&p) = self.memo.get(&key) {
            return Ok(p);
        }
        let p = joint_probability(self.spec, q)?;
        self.memo.insert(key, p);
        Ok(p)
    }

    pub fn sample<S: Strategy + ?Sized, R: Rng + ?Sized>(
        &mut self,
        strategy: &mut S,
        rng: &mut R,
    ) -> Result<LadderSample> {
        let mut history = Vec::new();
        let mut q = MeasurementQuery::default();
        let mut p_hist = 1.0;
        while let Some((line, basis)) = strategy.next(&history) {
            if line >= self.spec.n {
                return Err(Error::QubitOutOfRange { index: line, num_qubits: self.spec.n });
            }
            if p_hist <= 0.0 {
                return Err(Error::ImpossibleHistory);
            }
            let q0 = q.with(QueryItem { line, basis, outcome: 0 })?;
            let p0 = self.joint(&q0)?;
            let c0 = (p0 / p_hist).clamp(0.0, 1.0);
            let outcome = u8::from(rng.random::<f64>() >= c0);
            let item = QueryItem { line, basis, outcome };
            if outcome == 0 {
                q = q0;
                p_hist = p0;
            } else {
                q = q.with(item)?;
                p_hist = self.joint(&q)?;
            }
            history.push(item);
        }
        Ok(LadderSample { history })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbqc::{build_cluster, ClusterGraph};
    use crate::qmath::fidelity_up_to_phase;

    fn item(line: usize, basis: Basis, outcome: u8) -> QueryItem {
        QueryItem { line, basis, outcome }
    }

    #[test]
    fn identity_ladder_keeps_zeros() {
        let spec = LadderSpec::new(2, vec![ComplexMatrix::identity(4)]).unwrap();
        let q = MeasurementQuery::new(vec![item(1, Basis::Mz, 0)]).unwrap();
        assert!((joint_probability(&spec, &q).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cluster_ladder_outcome_is_uniform() {
        let spec = cluster_ladder(3).unwrap();
        let q = MeasurementQuery::new(vec![item(1, Basis::M(0.0), 0)]).unwrap();
        assert!((joint_probability(&spec, &q).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cluster_ladder_matches_graph_state() {
        for n in 2..=5 {
            let s = cluster_ladder(n).unwrap().state();
            let g = ClusterGraph::line(n as u32);
            let c = build_cluster(&g, &[]).unwrap();
            assert!(fidelity_up_to_phase(&s, &c).unwrap() > 1.0 - 1e-12, "n={n}");
        }
    }

    #[test]
    fn two_line_marginal_is_maximally_mixed() {
        let s = cluster_ladder(2).unwrap().state();
        let rho = DensityMatrix::from_pure(&s).partial_trace(&[1]).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-12);
    }

    #[test]
    fn sweep_matches_dense_and_holds_two_lines() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6 {
            let spec = LadderSpec::random(n, &mut rng).unwrap();
            let mut items = Vec::new();
            for l in 0..n {
                if rng.random_bool(0.6) {
                    let b = if rng.random_bool(0.5) {
                        Basis::Mz
                    } else {
                        Basis::M(rng.random_range(0.0..std::f64::consts::TAU))
                    };
                    items.push(item(l, b, rng.random_range(0..2)));
                }
            }
            let q = MeasurementQuery::new(items).unwrap();
            let r = sweep(&spec, &q).unwrap();
            assert_eq!(r.max_lines, 2);
            assert!((r.probability - joint_probability_dense(&spec, &q).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn query_rejects_duplicates_and_bad_lines() {
        assert!(MeasurementQuery::new(vec![item(1, Basis::Mz, 0), item(1, Basis::Mz, 1)]).is_err());
        let spec = cluster_ladder(3).unwrap();
        let q = MeasurementQuery::new(vec![item(3, Basis::Mz, 0)]).unwrap();
        assert!(joint_probability(&spec, &q).is_err());
        assert!(LadderSpec::new(1, vec![]).is_err());
        assert!(LadderSpec::new(2, vec![ComplexMatrix::identity(2)]).is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let spec = cluster_ladder(4).unwrap();
        let plan = FixedOrder(vec![(0, Basis::M(0.3)), (2, Basis::Mz), (3, Basis::M(1.0))]);
        let a = conditional_sample(&spec, &mut plan.clone(), 9).unwrap();
        let b = conditional_sample(&spec, &mut plan.clone(), 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.record().len(), 3);
    }

    #[test]
    fn adaptive_strategy_sees_history() {
        let spec = cluster_ladder(3).unwrap();
        let mut strat = |h: &[QueryItem]| match h.len() {
            0 => Some((0, Basis::Mz)),
            1 => Some((1, Basis::M(if h[0].outcome == 0 { 0.0 } else { 1.0 }))),
            _ => None,
        };
        let s = conditional_sample(&spec, &mut strat, 3).unwrap();
        assert_eq!(s.history.len(), 2);
    }
}
