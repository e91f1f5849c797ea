use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{Circuit, GateKind};
use crate::mbqc::{Basis, MeasurementInstruction, MeasurementPattern};
use crate::pauli::{parity_depth, DepSet, OutcomeId, OutcomeRecord, PauliFrame};

use super::compile::compile;

/// Measurement layers plus the parities evaluated after each layer.
///
/// `classical[k]` lists the XOR-sets computed once layer `k` has finished: the
/// sign dependencies of layer `k + 1`, and for the last layer the byproduct exponents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub layers: Vec<Vec<OutcomeId>>,
    pub classical: Vec<Vec<DepSet>>,
}

impl Schedule {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_of(&self, id: OutcomeId) -> Option<usize> {
        self.layers.iter().position(|l| l.contains(&id))
    }

    /// Each instruction in exactly one layer, and every dependency in a strictly earlier one.
    pub fn check(&self, p: &MeasurementPattern) -> Result<()> {
        let mut seen = BTreeSet::new();
        for l in &self.layers {
            for id in l {
                if !seen.insert(*id) {
                    return Err(Error::MalformedPattern(format!("{id} scheduled twice")));
                }
            }
        }
        for ins in &p.instructions {
            let li =
                self.layer_of(ins.id).ok_or_else(|| Error::MalformedPattern(format!("{} is not scheduled", ins.id)))?;
            for d in ins.sign_deps.iter() {
                match self.layer_of(d) {
                    Some(ld) if ld < li => {}
                    _ => return Err(Error::MalformedPattern(format!("{} depends on {d} from a later layer", ins.id))),
                }
            }
        }
        if seen.len() != p.instructions.len() {
            return Err(Error::MalformedPattern("schedule lists unknown outcomes".into()));
        }
        Ok(())
    }
}

fn classical_steps(p: &MeasurementPattern, layers: &[Vec<OutcomeId>]) -> Vec<Vec<DepSet>> {
    let by_id: BTreeMap<OutcomeId, &MeasurementInstruction> = p.instructions.iter().map(|i| (i.id, i)).collect();
    let mut out: Vec<Vec<DepSet>> = vec![Vec::new(); layers.len()];
    for (k, layer) in layers.iter().enumerate().skip(1) {
        let sets: BTreeSet<DepSet> =
            layer.iter().map(|id| by_id[id].sign_deps.clone()).filter(|d| !d.is_empty()).collect();
        out[k - 1] = sets.into_iter().collect();
    }
    if let Some(last) = out.last_mut() {
        let frame_sets: BTreeSet<DepSet> = p
            .frame
            .entries()
            .iter()
            .flat_map(|e| [e.x_deps.clone(), e.z_deps.clone()])
            .filter(|d| !d.is_empty())
            .collect();
        let mut all: BTreeSet<DepSet> = last.drain(..).collect();
        all.extend(frame_sets);
        *last = all.into_iter().collect();
    }
    out
}

/// As-soon-as-possible layering of the sign-dependency DAG.
pub fn schedule(p: &MeasurementPattern) -> Result<Schedule> {
    let by_id: BTreeMap<OutcomeId, &MeasurementInstruction> = p.instructions.iter().map(|i| (i.id, i)).collect();
    if by_id.len() != p.instructions.len() {
        let mut seen = BTreeSet::new();
        let dup = p.instructions.iter().find(|i| !seen.insert(i.id)).expect("duplicate");
        return Err(Error::DuplicateOutcome(dup.id));
    }
    for ins in &p.instructions {
        if let Some(d) = ins.sign_deps.iter().find(|d| !by_id.contains_key(d)) {
            return Err(Error::UnresolvedOutcome(d));
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state: BTreeMap<OutcomeId, u8> = BTreeMap::new();
    let mut depth: BTreeMap<OutcomeId, usize> = BTreeMap::new();
    fn visit(
        id: OutcomeId,
        by_id: &BTreeMap<OutcomeId, &MeasurementInstruction>,
        state: &mut BTreeMap<OutcomeId, u8>,
        depth: &mut BTreeMap<OutcomeId, usize>,
    ) -> Result<usize> {
        match state.get(&id) {
            Some(2) => return Ok(depth[&id]),
            Some(1) => return Err(Error::CyclicDependency(id)),
            _ => {}
        }
        state.insert(id, 1);
        let mut d = 0;
        for dep in by_id[&id].sign_deps.iter() {
            d = d.max(visit(dep, by_id, state, depth)? + 1);
        }
        state.insert(id, 2);
        depth.insert(id, d);
        Ok(d)
    }
    for ins in &p.instructions {
        visit(ins.id, &by_id, &mut state, &mut depth)?;
    }
    let n_layers = depth.values().map(|d| d + 1).max().unwrap_or(0);
    let mut layers = vec![Vec::new(); n_layers];
    for ins in &p.instructions {
        layers[depth[&ins.id]].push(ins.id);
    }
    let classical = classical_steps(p, &layers);
    Ok(Schedule { layers, classical })
}

/// Quantum and classical depth of a schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthReport {
    pub quantum_layers: usize,
    pub classical_parity_depth: usize,
    pub gate_count: usize,
    pub site_count: usize,
}

pub fn depth_report(s: &Schedule) -> DepthReport {
    let classical_parity_depth = s
        .classical
        .iter()
        .flatten()
        .filter(|d| !d.is_empty())
        .map(|d| parity_depth(d.len()).expect("nonempty"))
        .max()
        .unwrap_or(0);
    DepthReport { quantum_layers: s.layers.len(), classical_parity_depth, gate_count: 0, site_count: 0 }
}

/// Depth report with circuit and pattern sizes filled in.
pub fn depth_report_for(c: &Circuit, p: &MeasurementPattern, s: &Schedule) -> DepthReport {
    DepthReport { gate_count: c.gates.len(), site_count: p.graph.num_sites(), ..depth_report(s) }
}

/// Two-layer schedule for circuits over `{CX, Rx}` or `{CX, Rz}`.
///
/// Layer 1 holds every measurement with a Pauli angle and no sign dependency (all
/// `CX` fragments and the fixed half of each rotation); layer 2 holds the rotation
/// angles, whose signs depend on layer-1 outcomes only.
pub fn schedule_two_layer(c: &Circuit) -> Result<(MeasurementPattern, Schedule)> {
    let rx_ok = c.gates.iter().all(|g| matches!(g.kind, GateKind::CX | GateKind::Rx(_)));
    let rz_ok = c.gates.iter().all(|g| matches!(g.kind, GateKind::CX | GateKind::Rz(_)));
    if !rx_ok && !rz_ok {
        let bad = c
            .gates
            .iter()
            .find(|g| !matches!(g.kind, GateKind::CX | GateKind::Rx(_) | GateKind::Rz(_)))
            .map(|g| g.kind.to_string())
            .unwrap_or_else(|| "Rx mixed with Rz".into());
        return Err(Error::UnsupportedGate(bad));
    }
    let p = compile(c)?;
    let mut layers = vec![Vec::new(), Vec::new()];
    for ins in &p.instructions {
        let fixed = matches!(ins.basis, Basis::Mz) || ins.basis.angle() == Some(0.0);
        let layer = usize::from(!(fixed && ins.sign_deps.is_empty()));
        layers[layer].push(ins.id);
    }
    let classical = classical_steps(&p, &layers);
    let s = Schedule { layers, classical };
    s.check(&p)?;
    Ok((p, s))
}

/// Instructions reordered layer by layer (stable within a layer).
pub fn reorder_by_schedule(p: &MeasurementPattern, s: &Schedule) -> Result<MeasurementPattern> {
    s.check(p)?;
    let mut q = p.clone();
    q.instructions.sort_by_key(|i| s.layer_of(i.id).expect("checked"));
    q.validate()?;
    Ok(q)
}

/// `k_i ⊕ m_i` for each output, where `m_i` is its resolved X exponent.
pub fn reinterpret_output(z_outcomes: &[u8], frame: &PauliFrame, record: &OutcomeRecord) -> Result<Vec<u8>> {
    if z_outcomes.len() != frame.len() {
        return Err(Error::DimensionMismatch { expected: frame.len(), found: z_outcomes.len() });
    }
    z_outcomes.iter().zip(frame.entries()).map(|(&k, e)| Ok(k ^ e.x_deps.eval(record)?)).collect()
}

/// A closed pattern whose output sites are read out in `Mz` before anything else.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutPlan {
    pub pattern: MeasurementPattern,
    /// Outcome ids of the output readouts, in output order.
    pub readout: Vec<OutcomeId>,
    /// Byproducts of the original outputs, used to reinterpret the readout.
    pub frame: PauliFrame,
}

/// Prepends `Mz` on every output site so the readout lands in the first layer.
pub fn output_first(p: &MeasurementPattern) -> Result<ReadoutPlan> {
    p.validate()?;
    let base = p.max_outcome_id().map_or(0, |m| m.0 + 1);
    let readout: Vec<OutcomeId> = (0..p.outputs.len() as u32).map(|k| OutcomeId(base + k)).collect();
    let mut instructions: Vec<MeasurementInstruction> = p
        .outputs
        .iter()
        .zip(&readout)
        .map(|(&s, &id)| MeasurementInstruction::new(s, Basis::Mz, DepSet::new(), id))
        .collect();
    instructions.extend(p.instructions.iter().cloned());
    let pattern = MeasurementPattern {
        graph: p.graph.clone(),
        inputs: p.inputs.clone(),
        outputs: Vec::new(),
        instructions,
        frame: PauliFrame::identity(0),
    };
    pattern.validate()?;
    Ok(ReadoutPlan { pattern, readout, frame: p.frame.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{EulerAngles, Gate};
    use crate::mbqc::{pattern_euler, pattern_wire, SiteId};

    #[test]
    fn euler_schedules_to_four_layers() {
        let p = pattern_euler(&EulerAngles { xi: 0.3, eta: 0.5, zeta: 0.7 });
        let s = schedule(&p).unwrap();
        assert_eq!(s.num_layers(), 4);
        s.check(&p).unwrap();
        assert_eq!(s.layers[3], vec![OutcomeId(3)]);
    }

    #[test]
    fn non_adaptive_pattern_is_one_layer() {
        let s = schedule(&pattern_wire()).unwrap();
        assert_eq!(s.num_layers(), 1);
        let r = depth_report(&s);
        assert_eq!(r.quantum_layers, 1);
        assert_eq!(r.classical_parity_depth, 0);
    }

    #[test]
    fn cycles_are_detected() {
        let mut p = pattern_euler(&EulerAngles { xi: 0.3, eta: 0.5, zeta: 0.7 });
        p.instructions[1].sign_deps = DepSet::single(OutcomeId(2));
        p.instructions[2].sign_deps = DepSet::single(OutcomeId(1));
        assert!(matches!(schedule(&p), Err(Error::CyclicDependency(_))));
    }

    #[test]
    fn empty_circuit_reports_zero() {
        let p = compile(&Circuit::new(3)).unwrap();
        let r = depth_report(&schedule(&p).unwrap());
        assert_eq!((r.quantum_layers, r.classical_parity_depth), (0, 0));
    }

    #[test]
    fn two_layer_examples() {
        let c = Circuit::with_gates(1, vec![Gate::one(GateKind::Rx(0.3), 0)]).unwrap();
        let (_, s) = schedule_two_layer(&c).unwrap();
        assert_eq!(s.num_layers(), 2);
        assert_eq!(s.layers[1].len(), 1);

        let c = Circuit::with_gates(2, vec![Gate::two(GateKind::CX, 0, 1), Gate::two(GateKind::CX, 1, 0)]).unwrap();
        let (_, s) = schedule_two_layer(&c).unwrap();
        assert_eq!(s.num_layers(), 2);
        assert!(s.layers[1].is_empty());

        let bad = Circuit::with_gates(1, vec![Gate::one(GateKind::H, 0)]).unwrap();
        assert!(matches!(schedule_two_layer(&bad), Err(Error::UnsupportedGate(_))));
        let mixed =
            Circuit::with_gates(1, vec![Gate::one(GateKind::Rx(0.1), 0), Gate::one(GateKind::Rz(0.1), 0)]).unwrap();
        assert!(schedule_two_layer(&mixed).is_err());
    }

    #[test]
    fn reinterpretation_xors_x_exponent() {
        let mut f = PauliFrame::identity(2);
        f.xor_x(0, &DepSet::single(OutcomeId(0)));
        f.xor_z(1, &DepSet::single(OutcomeId(0)));
        let r = OutcomeRecord::from_pairs([(OutcomeId(0), 1)]).unwrap();
        assert_eq!(reinterpret_output(&[1, 0], &f, &r).unwrap(), vec![0, 0]);
        assert!(reinterpret_output(&[1], &f, &r).is_err());
    }

    #[test]
    fn readout_lands_in_first_layer() {
        let p = pattern_euler(&EulerAngles { xi: 0.3, eta: 0.5, zeta: 0.7 });
        let plan = output_first(&p).unwrap();
        let s = schedule(&plan.pattern).unwrap();
        assert_eq!(plan.pattern.instructions[0].site, SiteId(4));
        assert_eq!(s.layer_of(plan.readout[0]), Some(0));
    }
}
