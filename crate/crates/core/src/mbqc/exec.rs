use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pauli::{OutcomeId, OutcomeRecord, PauliFrame, PauliOp};
use crate::qmath::QubitState;

use super::graph::SiteId;
use super::pattern::{Basis, MeasurementPattern};

/// Conditional probabilities below this are treated as impossible branches.
pub const ZERO_PROB: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum RunMode {
    Sample(u64),
    Branch(OutcomeRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub outcomes: OutcomeRecord,
    /// State of the output sites, in output order, renormalized.
    pub output: QubitState,
    pub frame: PauliFrame,
    /// Probability of the realized outcome sequence.
    pub probability: f64,
    /// Conditional probability of each outcome given the earlier ones.
    pub step_probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    /// Append a `|+⟩` qubit as the new least significant position.
    AddPlus,
    Cz(usize, usize),
    Measure {
        pos: usize,
        instr: usize,
    },
}

#[derive(Debug, Clone)]
struct Meas {
    basis: Basis,
    sign_deps: Vec<usize>,
}

/// A pattern lowered to a fixed operation list over dense qubit positions.
///
/// Sites enter the register only when first touched and leave when measured,
/// so the live register stays close to the pattern's width rather than its size.
#[derive(Debug, Clone)]
pub struct CompiledPattern {
    ops: Vec<Op>,
    meas: Vec<Meas>,
    ids: Vec<OutcomeId>,
    final_order: Vec<usize>,
    num_inputs: usize,
    frame: PauliFrame,
    frame_idx: Vec<(Vec<usize>, Vec<usize>)>,
    max_live: usize,
}

impl CompiledPattern {
    pub fn new(p: &MeasurementPattern) -> Result<Self> {
        p.validate()?;
        let mut live: Vec<SiteId> = p.inputs.clone();
        let mut pending: BTreeSet<(SiteId, SiteId)> = p.graph.edges().collect();
        let mut ops = Vec::new();
        let mut max_live = live.len();
        let ensure = |s: SiteId, live: &mut Vec<SiteId>, ops: &mut Vec<Op>, max_live: &mut usize| -> usize {
            if let Some(i) = live.iter().position(|&t| t == s) {
                return i;
            }
            live.push(s);
            ops.push(Op::AddPlus);
            *max_live = (*max_live).max(live.len());
            live.len() - 1
        };
        let index_of: BTreeMap<OutcomeId, usize> = p.instructions.iter().enumerate().map(|(i, x)| (x.id, i)).collect();
        let mut meas = Vec::with_capacity(p.instructions.len());
        for (k, ins) in p.instructions.iter().enumerate() {
            ensure(ins.site, &mut live, &mut ops, &mut max_live);
            let incident: Vec<(SiteId, SiteId)> =
                pending.iter().copied().filter(|&(a, b)| a == ins.site || b == ins.site).collect();
            for e in incident {
                pending.remove(&e);
                let other = if e.0 == ins.site { e.1 } else { e.0 };
                let j = ensure(other, &mut live, &mut ops, &mut max_live);
                let i = live.iter().position(|&t| t == ins.site).expect("live");
                ops.push(Op::Cz(i, j));
            }
            let pos = live.iter().position(|&t| t == ins.site).expect("live");
            ops.push(Op::Measure { pos, instr: k });
            live.remove(pos);
            meas.push(Meas { basis: ins.basis, sign_deps: ins.sign_deps.iter().map(|d| index_of[&d]).collect() });
        }
        for &o in &p.outputs {
            ensure(o, &mut live, &mut ops, &mut max_live);
        }
        for (a, b) in pending {
            let i = ensure(a, &mut live, &mut ops, &mut max_live);
            let j = ensure(b, &mut live, &mut ops, &mut max_live);
            ops.push(Op::Cz(i, j));
        }
        let final_order = p.outputs.iter().map(|o| live.iter().position(|t| t == o).expect("live")).collect();
        let frame_idx = p
            .frame
            .entries()
            .iter()
            .map(|e| (e.x_deps.iter().map(|d| index_of[&d]).collect(), e.z_deps.iter().map(|d| index_of[&d]).collect()))
            .collect();
        Ok(Self {
            ops,
            meas,
            ids: p.instructions.iter().map(|i| i.id).collect(),
            final_order,
            num_inputs: p.inputs.len(),
            frame: p.frame.clone(),
            frame_idx,
            max_live,
        })
    }

    pub fn num_measurements(&self) -> usize {
        self.meas.len()
    }

    /// Largest number of simultaneously live qubits.
    pub fn max_live(&self) -> usize {
        self.max_live
    }

    pub fn outcome_ids(&self) -> &[OutcomeId] {
        &self.ids
    }

    pub fn frame(&self) -> &PauliFrame {
        &self.frame
    }

    /// Outcome record from bits listed in instruction order.
    pub fn record(&self, bits: &[u8]) -> OutcomeRecord {
        OutcomeRecord::from_pairs(self.ids.iter().copied().zip(bits.iter().copied())).expect("distinct ids")
    }

    /// Resolved byproduct (phase-free) from bits in instruction order.
    pub fn resolve_frame(&self, bits: &[u8]) -> PauliOp {
        let parity = |idx: &[usize]| idx.iter().fold(0u8, |a, &i| a ^ bits[i]) == 1;
        let x = self.frame_idx.iter().map(|(x, _)| parity(x)).collect();
        let z = self.frame_idx.iter().map(|(_, z)| parity(z)).collect();
        PauliOp::from_bits(0, x, z).expect("equal lengths")
    }

    /// X-frame parities as a basis-index mask in output order (output 0 is the MSB).
    pub fn x_mask(&self, bits: &[u8]) -> usize {
        let m = self.frame_idx.len();
        self.frame_idx
            .iter()
            .enumerate()
            .filter(|(_, (x, _))| x.iter().fold(0u8, |a, &i| a ^ bits[i]) == 1)
            .map(|(q, _)| 1usize << (m - 1 - q))
            .sum()
    }

    fn ket(&self, instr: usize, bits: &[u8], outcome: u8) -> [C64; 2] {
        let m = &self.meas[instr];
        match m.basis {
            Basis::Mz => {
                if outcome == 0 {
                    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
                } else {
                    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
                }
            }
            Basis::M(theta) => {
                let flip = m.sign_deps.iter().fold(0u8, |a, &i| a ^ bits[i]) == 1;
                let t = if flip { -theta } else { theta };
                let sign = if outcome == 0 { 1.0 } else { -1.0 };
                [C64::new(FRAC_1_SQRT_2, 0.0), C64::from_polar(sign * FRAC_1_SQRT_2, t)]
            }
        }
    }

    fn check_input(&self, input: &QubitState) -> Result<()> {
        if input.num_qubits() != self.num_inputs {
            return Err(Error::DimensionMismatch { expected: self.num_inputs, found: input.num_qubits() });
        }
        Ok(())
    }

    /// Runs ops from `start` until the next measurement; returns its op index or `None` at the end.
    fn advance(&self, start: usize, reg: &mut Reg) -> Option<usize> {
        for (k, op) in self.ops.iter().enumerate().skip(start) {
            match *op {
                Op::AddPlus => reg.add_plus(),
                Op::Cz(a, b) => reg.cz(a, b),
                Op::Measure { .. } => return Some(k),
            }
        }
        None
    }

    fn finish(&self, reg: &Reg) -> QubitState {
        let st = QubitState::subnormalized(reg.amps.clone()).expect("power of two");
        let mut out = st.permuted(&self.final_order).expect("valid order");
        out.renormalize().expect("nonzero branch");
        out
    }

    /// Single execution in sample or forced-branch mode.
    pub fn run(&self, input: &QubitState, mode: &RunMode) -> Result<RunResult> {
        self.check_input(input)?;
        let mut rng = match mode {
            RunMode::Sample(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
            RunMode::Branch(_) => None,
        };
        let mut reg = Reg::from_state(input);
        let mut bits = vec![0u8; self.meas.len()];
        let mut steps = Vec::with_capacity(self.meas.len());
        let mut probability = 1.0;
        let mut k = 0;
        while let Some(at) = self.advance(k, &mut reg) {
            let Op::Measure { pos, instr } = self.ops[at] else { unreachable!() };
            let k0 = self.ket(instr, &bits, 0);
            let k1 = self.ket(instr, &bits, 1);
            let (v0, p0) = reg.project(pos, k0);
            let (v1, p1) = reg.project(pos, k1);
            let total = p0 + p1;
            let outcome = match (&mut rng, mode) {
                (Some(r), _) => u8::from(r.random::<f64>() * total >= p0),
                (None, RunMode::Branch(rec)) => rec.value(self.ids[instr])?,
                _ => unreachable!(),
            };
            let (v, p) = if outcome == 0 { (v0, p0) } else { (v1, p1) };
            let cond = p / total;
            if cond < ZERO_PROB {
                return Err(Error::ZeroProbabilityBranch(self.ids[instr]));
            }
            reg.replace(v, p);
            bits[instr] = outcome;
            steps.push(cond);
            probability *= cond;
            k = at + 1;
        }
        Ok(RunResult {
            outcomes: self.record(&bits),
            output: self.finish(&reg),
            frame: self.frame.clone(),
            probability,
            step_probabilities: steps,
        })
    }

    /// Visits every outcome branch of nonzero probability, depth first, sharing prefixes.
    pub fn for_each_branch<F: FnMut(&Leaf<'_>)>(&self, input: &QubitState, mut visit: F) -> Result<()> {
        self.check_input(input)?;
        let mut reg = Reg::from_state(input);
        reg.renormalize();
        let mut bits = vec![0u8; self.meas.len()];
        let mut steps = Vec::with_capacity(self.meas.len());
        self.dfs(0, reg, &mut bits, &mut steps, 1.0, &mut visit);
        Ok(())
    }

    fn dfs<F: FnMut(&Leaf<'_>)>(
        &self,
        start: usize,
        mut reg: Reg,
        bits: &mut Vec<u8>,
        steps: &mut Vec<f64>,
        prob: f64,
        visit: &mut F,
    ) {
        match self.advance(start, &mut reg) {
            None => {
                let output = self.finish(&reg);
                visit(&Leaf { pattern: self, bits, probability: prob, step_probabilities: steps, output: &output });
            }
            Some(at) => {
                let Op::Measure { pos, instr } = self.ops[at] else { unreachable!() };
                let kets = [self.ket(instr, bits, 0), self.ket(instr, bits, 1)];
                let projected = kets.map(|k| reg.project(pos, k));
                let total = projected[0].1 + projected[1].1;
                for (outcome, (v, p)) in projected.into_iter().enumerate() {
                    let cond = p / total;
                    if cond < ZERO_PROB {
                        continue;
                    }
                    let mut next = Reg { amps: v, n: reg.n - 1 };
                    next.scale(1.0 / p.sqrt());
                    bits[instr] = outcome as u8;
                    steps.push(cond);
                    self.dfs(at + 1, next, bits, steps, prob * cond, visit);
                    steps.pop();
                }
                bits[instr] = 0;
            }
        }
    }
}

/// One complete branch seen by [`CompiledPattern::for_each_branch`].
pub struct Leaf<'a> {
    pattern: &'a CompiledPattern,
    /// Outcome bits in instruction order.
    pub bits: &'a [u8],
    pub probability: f64,
    /// Conditional probabilities in measurement order.
    pub step_probabilities: &'a [f64],
    pub output: &'a QubitState,
}

impl Leaf<'_> {
    pub fn record(&self) -> OutcomeRecord {
        self.pattern.record(self.bits)
    }

    pub fn byproduct(&self) -> PauliOp {
        self.pattern.resolve_frame(self.bits)
    }

    pub fn x_mask(&self) -> usize {
        self.pattern.x_mask(self.bits)
    }

    /// Output with the byproduct undone: `Z^z X^x` applied.
    pub fn corrected(&self) -> QubitState {
        correct(self.output, &self.byproduct())
    }
}

/// Applies the inverse of a phase-free `X^x Z^z` byproduct.
pub fn correct(state: &QubitState, byproduct: &PauliOp) -> QubitState {
    let n = state.num_qubits();
    let xmask: usize = (0..n).filter(|&q| byproduct.x_bits()[q]).map(|q| 1 << (n - 1 - q)).sum();
    let zmask: usize = (0..n).filter(|&q| byproduct.z_bits()[q]).map(|q| 1 << (n - 1 - q)).sum();
    let a = state.amplitudes();
    // (X^x Z^z)^{-1} = Z^z X^x: new[i] = (-1)^{|i & z|} a[i ^ x]
    let amps = (0..a.len())
        .map(|i| {
            let v = a[i ^ xmask];
            if (i & zmask).count_ones() % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect();
    QubitState::from_amplitudes(amps).unwrap_or_else(|_| state.clone())
}

/// Dense register for the executor.
#[derive(Debug, Clone)]
struct Reg {
    amps: Vec<C64>,
    n: usize,
}

impl Reg {
    fn from_state(s: &QubitState) -> Self {
        Self { amps: s.amplitudes().to_vec(), n: s.num_qubits() }
    }

    fn renormalize(&mut self) {
        let norm = self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.scale(1.0 / norm);
        }
    }

    fn scale(&mut self, f: f64) {
        for a in &mut self.amps {
            *a *= f;
        }
    }

    fn add_plus(&mut self) {
        let h = FRAC_1_SQRT_2;
        let mut out = Vec::with_capacity(self.amps.len() * 2);
        for &a in &self.amps {
            out.push(a * h);
            out.push(a * h);
        }
        self.amps = out;
        self.n += 1;
    }

    fn cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << (self.n - 1 - a)) | (1usize << (self.n - 1 - b));
        for (i, v) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *v = -*v;
            }
        }
    }

    /// Contracts `⟨ket|` on `pos`; returns the remaining amplitudes and their squared norm.
    fn project(&self, pos: usize, ket: [C64; 2]) -> (Vec<C64>, f64) {
        let low = self.n - 1 - pos;
        let low_mask = (1usize << low) - 1;
        let (c0, c1) = (ket[0].conj(), ket[1].conj());
        let half = self.amps.len() / 2;
        let mut out = Vec::with_capacity(half);
        let mut norm = 0.0;
        for r in 0..half {
            let i0 = ((r & !low_mask) << 1) | (r & low_mask);
            let v = c0 * self.amps[i0] + c1 * self.amps[i0 | (1 << low)];
            norm += v.norm_sqr();
            out.push(v);
        }
        (out, norm)
    }

    fn replace(&mut self, v: Vec<C64>, p: f64) {
        self.amps = v;
        self.n -= 1;
        self.scale(1.0 / p.sqrt());
    }
}

/// Runs a pattern once; see [`CompiledPattern::run`].
pub fn run_pattern(p: &MeasurementPattern, input: &QubitState, mode: &RunMode) -> Result<RunResult> {
    CompiledPattern::new(p)?.run(input, mode)
}

/// Reference executor: prepares the entire graph state first, then measures in order.
pub fn run_pattern_dense(p: &MeasurementPattern, input: &QubitState, forced: &OutcomeRecord) -> Result<RunResult> {
    p.validate()?;
    if input.num_qubits() != p.inputs.len() {
        return Err(Error::DimensionMismatch { expected: p.inputs.len(), found: input.num_qubits() });
    }
    let mut live: Vec<SiteId> = p.inputs.clone();
    let mut state = input.clone();
    for s in p.graph.sites() {
        if !live.contains(&s) {
            live.push(s);
            state = state.tensor(&QubitState::plus());
        }
    }
    let mut reg = Reg::from_state(&state);
    for (a, b) in p.graph.edges() {
        let i = live.iter().position(|&t| t == a).expect("site");
        let j = live.iter().position(|&t| t == b).expect("site");
        reg.cz(i, j);
    }
    let mut record = OutcomeRecord::new();
    let mut probability = 1.0;
    let mut steps = Vec::new();
    for ins in &p.instructions {
        let bit = forced.value(ins.id)?;
        let ket = match ins.basis {
            Basis::Mz => {
                if bit == 0 {
                    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
                } else {
                    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
                }
            }
            Basis::M(t) => {
                let t = if ins.sign_deps.eval(&record)? == 1 { -t } else { t };
                let s = if bit == 0 { 1.0 } else { -1.0 };
                [C64::new(FRAC_1_SQRT_2, 0.0), C64::from_polar(s * FRAC_1_SQRT_2, t)]
            }
        };
        let pos = live.iter().position(|&t| t == ins.site).expect("site");
        let (v, pr) = reg.project(pos, ket);
        if pr < ZERO_PROB {
            return Err(Error::ZeroProbabilityBranch(ins.id));
        }
        reg.replace(v, pr);
        live.remove(pos);
        record.insert(ins.id, bit)?;
        probability *= pr;
        steps.push(pr);
    }
    let order: Vec<usize> = p.outputs.iter().map(|o| live.iter().position(|t| t == o).expect("output")).collect();
    let st = QubitState::subnormalized(reg.amps).expect("power of two");
    let mut output = st.permuted(&order)?;
    output.renormalize()?;
    Ok(RunResult { outcomes: record, output, frame: p.frame.clone(), probability, step_probabilities: steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateKind;
    use crate::mbqc::library::{pattern_single_step, pattern_wire};
    use crate::qmath::fidelity_up_to_phase;

    fn forced(bits: &[(u32, u8)]) -> RunMode {
        RunMode::Branch(OutcomeRecord::from_pairs(bits.iter().map(|&(i, b)| (OutcomeId(i), b))).unwrap())
    }

    #[test]
    fn single_step_zero_branch_is_w_minus_theta() {
        let theta = 0.9;
        let psi = QubitState::normalized_from(vec![C64::new(0.3, 0.1), C64::new(-0.5, 0.7)]).unwrap();
        let r = run_pattern(&pattern_single_step(theta), &psi, &forced(&[(0, 0)])).unwrap();
        let want = psi.apply_unitary(&GateKind::W(-theta).matrix(), &[0]).unwrap();
        assert!(fidelity_up_to_phase(&r.output, &want).unwrap() > 1.0 - 1e-12);
        assert!((r.probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_step_one_branch_on_zero_input() {
        let theta = std::f64::consts::PI / 3.0;
        let r = run_pattern(&pattern_single_step(theta), &QubitState::zero(1), &forced(&[(0, 1)])).unwrap();
        let want = QubitState::zero(1)
            .apply_unitary(&GateKind::W(-theta).matrix(), &[0])
            .and_then(|s| s.apply_unitary(&GateKind::X.matrix(), &[0]))
            .unwrap();
        assert!(fidelity_up_to_phase(&r.output, &want).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn wire_branches() {
        let psi = QubitState::normalized_from(vec![C64::new(0.8, 0.0), C64::new(0.0, 0.6)]).unwrap();
        let p = pattern_wire();
        let r = run_pattern(&p, &psi, &forced(&[(0, 0), (1, 0)])).unwrap();
        assert!(fidelity_up_to_phase(&r.output, &psi).unwrap() > 1.0 - 1e-12);
        let r = run_pattern(&p, &psi, &forced(&[(0, 1), (1, 0)])).unwrap();
        let z = psi.apply_unitary(&GateKind::Z.matrix(), &[0]).unwrap();
        assert!(fidelity_up_to_phase(&r.output, &z).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn missing_forced_outcome_is_an_error() {
        let err = run_pattern(&pattern_wire(), &QubitState::plus(), &forced(&[(0, 0)]));
        assert_eq!(err.unwrap_err(), Error::UnresolvedOutcome(OutcomeId(1)));
    }

    #[test]
    fn zero_probability_branch_is_reported() {
        use crate::mbqc::graph::ClusterGraph;
        use crate::mbqc::pattern::MeasurementInstruction;
        use crate::pauli::DepSet;
        let mut g = ClusterGraph::new();
        g.add_site(SiteId(0));
        let p = MeasurementPattern {
            graph: g,
            inputs: vec![SiteId(0)],
            outputs: vec![],
            instructions: vec![MeasurementInstruction::new(SiteId(0), Basis::Mz, DepSet::new(), OutcomeId(0))],
            frame: PauliFrame::identity(0),
        };
        let err = run_pattern(&p, &QubitState::zero(1), &forced(&[(0, 1)]));
        assert_eq!(err.unwrap_err(), Error::ZeroProbabilityBranch(OutcomeId(0)));
        let mut n = 0;
        CompiledPattern::new(&p).unwrap().for_each_branch(&QubitState::zero(1), |_| n += 1).unwrap();
        assert_eq!(n, 1);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let p = pattern_wire();
        let a = run_pattern(&p, &QubitState::plus(), &RunMode::Sample(5)).unwrap();
        let b = run_pattern(&p, &QubitState::plus(), &RunMode::Sample(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn correct_undoes_byproduct() {
        let psi = QubitState::normalized_from(vec![C64::new(0.8, 0.0), C64::new(0.0, 0.6)]).unwrap();
        let xz = psi
            .apply_unitary(&GateKind::Z.matrix(), &[0])
            .and_then(|s| s.apply_unitary(&GateKind::X.matrix(), &[0]))
            .unwrap();
        let back = correct(&xz, &PauliOp::single(true, true));
        assert!(fidelity_up_to_phase(&back, &psi).unwrap() > 1.0 - 1e-12);
    }
}
