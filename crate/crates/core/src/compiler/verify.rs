use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::Circuit;
use crate::mbqc::{correct, CompiledPattern, MeasurementPattern};
use crate::pauli::OutcomeRecord;
use crate::qmath::{fidelity_up_to_phase, QubitState};

use super::schedule::ReadoutPlan;

/// A branch whose corrected output missed the expected state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchFailure {
    pub outcomes: OutcomeRecord,
    pub infidelity: f64,
}

/// Outcome of an exhaustive branch check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub branches: usize,
    pub total_probability: f64,
    pub max_infidelity: f64,
    /// Total variation between the reinterpreted readout and the expected distribution.
    pub tv_distance: f64,
    /// Largest deviation of any conditional outcome probability from 1/2.
    pub max_uniformity_deviation: f64,
    /// Readout distribution after `k ⊕ m` reinterpretation, indexed by output bits.
    pub distribution: Vec<f64>,
    /// First few failing branches.
    pub failures: Vec<BranchFailure>,
}

impl Verdict {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_infidelity <= tol && self.tv_distance <= tol && (self.total_probability - 1.0).abs() <= tol
    }
}

const MAX_REPORTED_FAILURES: usize = 8;

/// Runs every branch of `p` on `input` and compares each corrected output with `expected`.
pub fn verify_pattern(p: &MeasurementPattern, input: &QubitState, expected: &QubitState, tol: f64) -> Result<Verdict> {
    if expected.num_qubits() != p.outputs.len() {
        return Err(Error::DimensionMismatch { expected: p.outputs.len(), found: expected.num_qubits() });
    }
    let cp = CompiledPattern::new(p)?;
    let want = expected.probabilities();
    let mut dist = vec![0.0; want.len()];
    let mut branches = 0;
    let mut total = 0.0;
    let mut max_inf: f64 = 0.0;
    let mut max_dev: f64 = 0.0;
    let mut failures = Vec::new();
    cp.for_each_branch(input, |leaf| {
        branches += 1;
        total += leaf.probability;
        for &c in leaf.step_probabilities {
            max_dev = max_dev.max((c - 0.5).abs());
        }
        let fixed = correct(leaf.output, &leaf.byproduct());
        let inf = 1.0 - fidelity_up_to_phase(&fixed, expected).unwrap_or(0.0);
        max_inf = max_inf.max(inf);
        if inf > tol && failures.len() < MAX_REPORTED_FAILURES {
            failures.push(BranchFailure { outcomes: leaf.record(), infidelity: inf });
        }
        let m = leaf.x_mask();
        for (k, a) in leaf.output.amplitudes().iter().enumerate() {
            dist[k ^ m] += leaf.probability * a.norm_sqr();
        }
    })?;
    let tv = 0.5 * dist.iter().zip(&want).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(Verdict {
        branches,
        total_probability: total,
        max_infidelity: max_inf,
        tv_distance: tv,
        max_uniformity_deviation: max_dev,
        distribution: dist,
        failures,
    })
}

/// Compiles-and-checks helper: the pattern must act as `c` on `input`.
pub fn verify_against_circuit(p: &MeasurementPattern, c: &Circuit, input: &QubitState, tol: f64) -> Result<Verdict> {
    let expected = c.apply(input)?;
    verify_pattern(p, input, &expected, tol)
}

/// Reinterpreted readout distribution of an output-first plan, by exhaustive enumeration.
pub fn readout_distribution(plan: &ReadoutPlan, input: &QubitState) -> Result<Vec<f64>> {
    let cp = CompiledPattern::new(&plan.pattern)?;
    let pos: Vec<usize> =
        plan.readout.iter().map(|id| cp.outcome_ids().iter().position(|x| x == id).expect("readout id")).collect();
    let m = plan.readout.len();
    let mut dist = vec![0.0; 1 << m];
    let mut err = None;
    cp.for_each_branch(input, |leaf| {
        let rec = leaf.record();
        let mut idx = 0usize;
        for (q, e) in plan.frame.entries().iter().enumerate() {
            let bit = match e.x_deps.eval(&rec) {
                Ok(x) => leaf.bits[pos[q]] ^ x,
                Err(e) => {
                    err = Some(e);
                    0
                }
            };
            idx |= (bit as usize) << (m - 1 - q);
        }
        dist[idx] += leaf.probability;
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(dist),
    }
}

/// Reinterpreted readout distribution when outputs are measured last.
pub fn final_readout_distribution(p: &MeasurementPattern, input: &QubitState) -> Result<Vec<f64>> {
    let cp = CompiledPattern::new(p)?;
    let mut dist = vec![0.0; 1 << p.outputs.len()];
    cp.for_each_branch(input, |leaf| {
        let m = leaf.x_mask();
        for (k, a) in leaf.output.amplitudes().iter().enumerate() {
            dist[k ^ m] += leaf.probability * a.norm_sqr();
        }
    })?;
    Ok(dist)
}
