use crate::error::{Error, Result};
use crate::gates::EulerAngles;
use crate::pauli::{DepSet, FrameEntry, OutcomeId, PauliFrame};

use super::graph::{ClusterGraph, SiteId};
use super::pattern::{angle_class, wrap_angle, AngleClass, Basis, MeasurementInstruction, MeasurementPattern};

/// Result of one chained step on a wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub id: OutcomeId,
    pub measured: SiteId,
    pub head: SiteId,
}

/// Grows a pattern wire by wire. Each wire has a head (its current unmeasured
/// site) and a symbolic byproduct `X^x Z^z` on that head.
#[derive(Debug, Clone)]
pub struct PatternBuilder {
    graph: ClusterGraph,
    inputs: Vec<SiteId>,
    heads: Vec<SiteId>,
    frames: Vec<FrameEntry>,
    instructions: Vec<MeasurementInstruction>,
    next_site: u32,
    next_id: u32,
    specialize: bool,
}

impl PatternBuilder {
    /// `num_wires` input sites `0..num_wires`. With `specialize`, Pauli-angle and
    /// quarter-angle steps are scheduled without sign dependencies.
    pub fn new(num_wires: usize, specialize: bool) -> Self {
        let mut graph = ClusterGraph::new();
        let inputs: Vec<SiteId> = (0..num_wires as u32).map(SiteId).collect();
        for &s in &inputs {
            graph.add_site(s);
        }
        Self {
            graph,
            heads: inputs.clone(),
            inputs,
            frames: vec![FrameEntry::default(); num_wires],
            instructions: Vec::new(),
            next_site: num_wires as u32,
            next_id: 0,
            specialize,
        }
    }

    pub fn num_wires(&self) -> usize {
        self.heads.len()
    }

    pub fn head(&self, wire: usize) -> SiteId {
        self.heads[wire]
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.heads.len() {
            return Err(Error::QubitOutOfRange { index: wire, num_qubits: self.heads.len() });
        }
        Ok(())
    }

    /// Applies `W(alpha)` to `wire`: attach a fresh `|+⟩` site, entangle, and
    /// measure the old head in `M(-alpha)` with the sign adapted to the pending `X`.
    pub fn step(&mut self, wire: usize, alpha: f64) -> Result<Step> {
        self.check_wire(wire)?;
        let old = self.heads[wire];
        let new = SiteId(self.next_site);
        self.next_site += 1;
        self.graph.add_site(new);
        self.graph.add_edge(old, new)?;
        let id = OutcomeId(self.next_id);
        self.next_id += 1;
        let s = DepSet::single(id);

        let FrameEntry { x_deps: a, z_deps: b } = std::mem::take(&mut self.frames[wire]);
        let class = if self.specialize { angle_class(alpha) } else { AngleClass::Generic };
        let (deps, x_new) = match class {
            AngleClass::Generic => (a.clone(), s.xor(&b)),
            AngleClass::Pauli => (DepSet::new(), s.xor(&b)),
            // W(α)X ∝ ZX·W(α) at these angles
            AngleClass::Quarter => (DepSet::new(), s.xor(&a).xor(&b)),
        };
        self.frames[wire] = FrameEntry { x_deps: x_new, z_deps: a };
        self.instructions.push(MeasurementInstruction::new(old, Basis::M(wrap_angle(-alpha)), deps, id));
        self.heads[wire] = new;
        Ok(Step { id, measured: old, head: new })
    }

    /// `CZ` between the heads of two wires.
    pub fn cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_wire(a)?;
        self.check_wire(b)?;
        if a == b {
            return Err(Error::DuplicateTarget(a));
        }
        self.graph.toggle_edge(self.heads[a], self.heads[b])?;
        let xa = self.frames[a].x_deps.clone();
        let xb = self.frames[b].x_deps.clone();
        self.frames[a].z_deps.xor_assign(&xb);
        self.frames[b].z_deps.xor_assign(&xa);
        Ok(())
    }

    pub fn set_coord(&mut self, s: SiteId, rc: (i32, i32)) -> Result<()> {
        self.graph.set_coord(s, rc)
    }

    pub fn finish(self) -> MeasurementPattern {
        MeasurementPattern {
            graph: self.graph,
            inputs: self.inputs,
            outputs: self.heads,
            instructions: self.instructions,
            frame: PauliFrame::from_entries(self.frames),
        }
    }
}

/// Two sites; measuring the first in `M(θ)` leaves `X^{s} W(-θ)|ψ⟩` on the second.
pub fn pattern_single_step(theta: f64) -> MeasurementPattern {
    let mut b = PatternBuilder::new(1, false);
    b.step(0, -theta).expect("wire 0");
    b.finish()
}

/// Three sites, two X measurements: identity up to `X^{s2} Z^{s1}`.
pub fn pattern_wire() -> MeasurementPattern {
    let mut b = PatternBuilder::new(1, true);
    b.step(0, 0.0).expect("wire 0");
    b.step(0, 0.0).expect("wire 0");
    b.finish()
}

/// Five sites realizing `Rx(ζ)Rz(η)Rx(ξ)` up to `X^{s2+s4} Z^{s1+s3}`.
pub fn pattern_euler(angles: &EulerAngles) -> MeasurementPattern {
    let mut b = PatternBuilder::new(1, false);
    for alpha in [0.0, 2.0 * angles.xi, 2.0 * angles.eta, 2.0 * angles.zeta] {
        b.step(0, alpha).expect("wire 0");
    }
    b.finish()
}

/// Three sites realizing `Rx(θ)` up to `X^{s2} Z^{s1}`; the second angle adapts to `s1`.
pub fn pattern_rx(theta: f64) -> MeasurementPattern {
    let mut b = PatternBuilder::new(1, false);
    b.step(0, 0.0).expect("wire 0");
    b.step(0, 2.0 * theta).expect("wire 0");
    b.finish()
}

/// Bare edge between two wires; inputs are outputs and the frame is trivial.
pub fn pattern_cz() -> MeasurementPattern {
    let mut b = PatternBuilder::new(2, true);
    b.cz(0, 1).expect("two wires");
    b.finish()
}

/// Two five-site rows joined by one vertical edge in the middle column; each row
/// is in, a, b, c, out and every non-output site is measured in X.
pub fn pattern_cz_grid() -> MeasurementPattern {
    let mut b = PatternBuilder::new(2, true);
    let mut col = [0i32; 2];
    for w in 0..2 {
        b.set_coord(b.head(w), (w as i32, 0)).expect("input site");
    }
    let mut advance = |b: &mut PatternBuilder, w: usize| {
        let st = b.step(w, 0.0).expect("wire");
        col[w] += 1;
        b.set_coord(st.head, (w as i32, col[w])).expect("new site");
    };
    for w in 0..2 {
        advance(&mut b, w);
        advance(&mut b, w);
    }
    b.cz(0, 1).expect("two wires");
    for w in 0..2 {
        advance(&mut b, w);
        advance(&mut b, w);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_pattern_structure() {
        let p = pattern_euler(&EulerAngles { xi: 0.3, eta: 0.4, zeta: 0.5 });
        p.validate().unwrap();
        assert_eq!(p.graph.num_sites(), 5);
        let deps: Vec<Vec<u32>> = p.instructions.iter().map(|i| i.sign_deps.iter().map(|d| d.0).collect()).collect();
        assert_eq!(deps, vec![vec![], vec![0], vec![1], vec![0, 2]]);
        let f = p.frame.entry(0);
        assert_eq!(f.x_deps, DepSet::from_ids([OutcomeId(1), OutcomeId(3)]));
        assert_eq!(f.z_deps, DepSet::from_ids([OutcomeId(0), OutcomeId(2)]));
    }

    #[test]
    fn rx_pattern_structure() {
        let p = pattern_rx(0.7);
        assert_eq!(p.instructions[0].basis, Basis::M(0.0));
        assert_eq!(p.instructions[1].sign_deps, DepSet::single(OutcomeId(0)));
        assert_eq!(p.frame.entry(0).x_deps, DepSet::single(OutcomeId(1)));
        assert_eq!(p.frame.entry(0).z_deps, DepSet::single(OutcomeId(0)));
    }

    #[test]
    fn wire_has_no_adaptivity() {
        let p = pattern_wire();
        assert!(p.instructions.iter().all(|i| i.sign_deps.is_empty()));
        assert_eq!(p.frame.entry(0).z_deps, DepSet::single(OutcomeId(0)));
        assert_eq!(p.frame.entry(0).x_deps, DepSet::single(OutcomeId(1)));
    }

    #[test]
    fn grid_variant_is_ten_sites_eight_measurements() {
        let p = pattern_cz_grid();
        p.validate().unwrap();
        assert_eq!(p.graph.num_sites(), 10);
        assert_eq!(p.num_measurements(), 8);
        assert_eq!(p.graph.coords().len(), 10);
        let b0 = p.graph.coords().iter().find(|(_, &rc)| rc == (0, 2)).map(|(&s, _)| s).unwrap();
        let b1 = p.graph.coords().iter().find(|(_, &rc)| rc == (1, 2)).map(|(&s, _)| s).unwrap();
        assert!(p.graph.has_edge(b0, b1));
    }

    #[test]
    fn step_rejects_unknown_wire() {
        let mut b = PatternBuilder::new(1, true);
        assert!(b.step(1, 0.0).is_err());
        assert!(b.cz(0, 0).is_err());
    }
}
