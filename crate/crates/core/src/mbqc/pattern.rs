use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::pauli::{DepSet, OutcomeId, PauliFrame};

use super::graph::{ClusterGraph, SiteId};

/// One-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    /// Computational basis; outcome `k` means `|k⟩`.
    Mz,
    /// `(|0⟩ ± e^{iθ}|1⟩)/√2`, outcome 0 for `+`. `M(0)` is the X measurement.
    M(f64),
}

impl Basis {
    pub fn angle(&self) -> Option<f64> {
        match *self {
            Basis::Mz => None,
            Basis::M(t) => Some(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AngleClass {
    /// θ ≡ 0 (mod π): sign flips change nothing.
    Pauli,
    /// θ ≡ π/2 (mod π): a sign flip swaps the two outcomes.
    Quarter,
    Generic,
}

const ANGLE_CLASS_TOL: f64 = 1e-9;

pub(crate) fn angle_class(theta: f64) -> AngleClass {
    let r = theta.rem_euclid(PI);
    if r < ANGLE_CLASS_TOL || PI - r < ANGLE_CLASS_TOL {
        AngleClass::Pauli
    } else if (r - FRAC_PI_2).abs() < ANGLE_CLASS_TOL {
        AngleClass::Quarter
    } else {
        AngleClass::Generic
    }
}

/// Reduces into `[0, 2π)`, snapping values within rounding of `2π` to 0.
pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if 2.0 * PI - r < 1e-12 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementInstruction {
    pub site: SiteId,
    pub basis: Basis,
    /// The effective angle is `(-1)^{parity} · θ`.
    pub sign_deps: DepSet,
    pub id: OutcomeId,
}

impl MeasurementInstruction {
    pub fn new(site: SiteId, basis: Basis, sign_deps: DepSet, id: OutcomeId) -> Self {
        Self { site, basis, sign_deps, id }
    }

    pub fn is_adaptive(&self) -> bool {
        !self.sign_deps.is_empty()
    }
}

/// Graph state plus an ordered list of adaptive measurements. Output site `i`
/// carries the byproduct `X^{x_i} Z^{z_i}` from entry `i` of `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPattern {
    pub graph: ClusterGraph,
    pub inputs: Vec<SiteId>,
    pub outputs: Vec<SiteId>,
    pub instructions: Vec<MeasurementInstruction>,
    pub frame: PauliFrame,
}

fn distinct(list: &[SiteId], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for s in list {
        if !seen.insert(*s) {
            return Err(Error::MalformedPattern(format!("site {s} listed twice among {what}")));
        }
    }
    Ok(())
}

impl MeasurementPattern {
    pub fn validate(&self) -> Result<()> {
        self.validate_inner(true)
    }

    fn validate_inner(&self, require_cover: bool) -> Result<()> {
        distinct(&self.inputs, "inputs")?;
        distinct(&self.outputs, "outputs")?;
        for s in self.inputs.iter().chain(&self.outputs).chain(self.instructions.iter().map(|i| &i.site)) {
            if !self.graph.contains(*s) {
                return Err(Error::MalformedPattern(format!("site {s} is not in the graph")));
            }
        }
        let mut measured = BTreeSet::new();
        let mut ids = BTreeSet::new();
        for ins in &self.instructions {
            if !measured.insert(ins.site) {
                return Err(Error::MalformedPattern(format!("site {} measured twice", ins.site)));
            }
            if self.outputs.contains(&ins.site) {
                return Err(Error::MalformedPattern(format!("output site {} is measured", ins.site)));
            }
            if matches!(ins.basis, Basis::Mz) && !ins.sign_deps.is_empty() {
                return Err(Error::MalformedPattern(format!("Mz at site {} carries sign dependencies", ins.site)));
            }
            if let Some(bad) = ins.sign_deps.iter().find(|d| !ids.contains(d)) {
                return Err(Error::MalformedPattern(format!(
                    "instruction {} depends on {bad}, which is not an earlier outcome",
                    ins.id
                )));
            }
            if !ids.insert(ins.id) {
                return Err(Error::DuplicateOutcome(ins.id));
            }
        }
        if require_cover {
            if let Some(s) = self.graph.sites().find(|s| !measured.contains(s) && !self.outputs.contains(s)) {
                return Err(Error::MalformedPattern(format!("site {s} is neither measured nor an output")));
            }
        }
        if self.frame.len() != self.outputs.len() {
            return Err(Error::MalformedPattern(format!(
                "frame has {} entries for {} outputs",
                self.frame.len(),
                self.outputs.len()
            )));
        }
        if let Some(bad) = self.frame.referenced().into_iter().find(|d| !ids.contains(d)) {
            return Err(Error::MalformedPattern(format!("frame references undeclared outcome {bad}")));
        }
        Ok(())
    }

    pub fn num_measurements(&self) -> usize {
        self.instructions.len()
    }

    pub fn instruction_for(&self, id: OutcomeId) -> Option<&MeasurementInstruction> {
        self.instructions.iter().find(|i| i.id == id)
    }

    fn instruction_at(&self, site: SiteId) -> Option<usize> {
        self.instructions.iter().position(|i| i.site == site)
    }

    pub fn max_outcome_id(&self) -> Option<OutcomeId> {
        self.instructions.iter().map(|i| i.id).max()
    }

    fn next_outcome_id(&self) -> OutcomeId {
        OutcomeId(self.max_outcome_id().map_or(0, |m| m.0 + 1))
    }

    /// Replaces `s_id` by `s_id ⊕ deps` wherever it is referenced.
    fn flip_outcome(&mut self, id: OutcomeId, deps: &DepSet) {
        let touch = |d: &mut DepSet| {
            if d.contains(id) {
                d.xor_assign(deps);
            }
        };
        for ins in &mut self.instructions {
            touch(&mut ins.sign_deps);
        }
        for q in 0..self.frame.len() {
            let e = self.frame.entry_mut(q);
            touch(&mut e.x_deps);
            touch(&mut e.z_deps);
        }
    }

    /// Absorbs `Z^{deps}` acting on `site` before the pattern runs.
    pub fn absorb_z(&mut self, site: SiteId, deps: &DepSet) -> Result<()> {
        if deps.is_empty() {
            return Ok(());
        }
        if let Some(q) = self.outputs.iter().position(|&s| s == site) {
            self.frame.xor_z(q, deps);
            return Ok(());
        }
        let i = self
            .instruction_at(site)
            .ok_or_else(|| Error::MalformedPattern(format!("site {site} is neither measured nor an output")))?;
        match self.instructions[i].basis {
            Basis::Mz => {}
            Basis::M(_) => {
                let id = self.instructions[i].id;
                self.flip_outcome(id, deps);
            }
        }
        Ok(())
    }

    /// Absorbs `X^{deps}` acting on `site` before the pattern runs; the edges at
    /// `site` turn it into `X` there and `Z` on every neighbour.
    pub fn absorb_x(&mut self, site: SiteId, deps: &DepSet) -> Result<()> {
        if deps.is_empty() {
            return Ok(());
        }
        for v in self.graph.neighbors(site) {
            self.absorb_z(v, deps)?;
        }
        if let Some(q) = self.outputs.iter().position(|&s| s == site) {
            self.frame.xor_x(q, deps);
            return Ok(());
        }
        let i = self
            .instruction_at(site)
            .ok_or_else(|| Error::MalformedPattern(format!("site {site} is neither measured nor an output")))?;
        let id = self.instructions[i].id;
        match self.instructions[i].basis {
            Basis::Mz => self.flip_outcome(id, deps),
            Basis::M(t) => match angle_class(t) {
                AngleClass::Pauli => {}
                AngleClass::Quarter => self.flip_outcome(id, deps),
                AngleClass::Generic => self.instructions[i].sign_deps.xor_assign(deps),
            },
        }
        Ok(())
    }

    /// Renames sites and outcome ids.
    pub fn renamed(&self, site: impl Fn(SiteId) -> SiteId, id: impl Fn(OutcomeId) -> OutcomeId) -> Result<Self> {
        let mut graph = ClusterGraph::new();
        for s in self.graph.sites() {
            graph.add_site(site(s));
        }
        for (a, b) in self.graph.edges() {
            graph.toggle_edge(site(a), site(b))?;
        }
        for (&s, &rc) in self.graph.coords() {
            graph.set_coord(site(s), rc)?;
        }
        let frame = PauliFrame::from_entries(
            self.frame
                .entries()
                .iter()
                .map(|e| crate::pauli::FrameEntry { x_deps: e.x_deps.map_ids(&id), z_deps: e.z_deps.map_ids(&id) })
                .collect(),
        );
        Ok(Self {
            graph,
            inputs: self.inputs.iter().map(|&s| site(s)).collect(),
            outputs: self.outputs.iter().map(|&s| site(s)).collect(),
            instructions: self
                .instructions
                .iter()
                .map(|i| MeasurementInstruction {
                    site: site(i.site),
                    basis: i.basis,
                    sign_deps: i.sign_deps.map_ids(&id),
                    id: id(i.id),
                })
                .collect(),
            frame,
        })
    }
}

/// Runs `p1` then `p2`, feeding the listed `p1` outputs into `p2` inputs.
///
/// `p1`'s byproducts on wired outputs are absorbed into `p2` (angle-sign and
/// outcome rewrites), all entangling happens up front, and unwired `p1` outputs
/// stay outputs after `p2`'s.
pub fn compose(
    p1: &MeasurementPattern,
    p2: &MeasurementPattern,
    wiring: &[(SiteId, SiteId)],
) -> Result<MeasurementPattern> {
    p1.validate()?;
    p2.validate()?;
    let mut to_p2: BTreeMap<SiteId, SiteId> = BTreeMap::new();
    let mut from_p1: BTreeMap<SiteId, SiteId> = BTreeMap::new();
    for &(a, b) in wiring {
        if !p1.outputs.contains(&a) {
            return Err(Error::InvalidArgument(format!("site {a} is not an output of the first pattern")));
        }
        if !p2.inputs.contains(&b) {
            return Err(Error::InvalidArgument(format!("site {b} is not an input of the second pattern")));
        }
        if to_p2.insert(a, b).is_some() || from_p1.insert(b, a).is_some() {
            return Err(Error::InvalidArgument("wiring is not one-to-one".into()));
        }
    }
    if from_p1.len() != p2.inputs.len() {
        return Err(Error::InvalidArgument("wiring does not cover every input of the second pattern".into()));
    }

    let site_off = p1.graph.max_site().map_or(0, |s| s.0 + 1);
    let id_off = p1.max_outcome_id().map_or(0, |m| m.0 + 1);
    let mut q =
        p2.renamed(|s| from_p1.get(&s).copied().unwrap_or(SiteId(s.0 + site_off)), |i| OutcomeId(i.0 + id_off))?;

    // p1's byproducts on wired outputs act on p2's inputs before p2's edges
    for (k, &o) in p1.outputs.iter().enumerate() {
        if to_p2.contains_key(&o) {
            let e = p1.frame.entry(k);
            q.absorb_z(o, &e.z_deps)?;
            q.absorb_x(o, &e.x_deps)?;
        }
    }

    let mut graph = p1.graph.clone();
    for s in q.graph.sites() {
        graph.add_site(s);
    }
    for (a, b) in q.graph.edges() {
        graph.toggle_edge(a, b)?;
    }
    for (&s, &rc) in q.graph.coords() {
        if graph.coord(s).is_none() {
            graph.set_coord(s, rc)?;
        }
    }

    let mut instructions = p1.instructions.clone();
    instructions.extend(q.instructions.iter().cloned());
    let mut outputs = q.outputs.clone();
    let mut frame = q.frame.clone();
    for (k, &o) in p1.outputs.iter().enumerate() {
        if !to_p2.contains_key(&o) {
            outputs.push(o);
            frame.push(p1.frame.entry(k).clone());
        }
    }
    let out = MeasurementPattern { graph, inputs: p1.inputs.clone(), outputs, instructions, frame };
    out.validate()?;
    Ok(out)
}

/// Removes an extraneous site by measuring it in `Mz` first and absorbing the
/// resulting `Z^{k}` on each neighbour.
pub fn delete_site_z(p: &MeasurementPattern, site: SiteId) -> Result<MeasurementPattern> {
    if p.inputs.contains(&site) || p.outputs.contains(&site) {
        return Err(Error::InvalidArgument(format!("site {site} is an input or output")));
    }
    if !p.graph.contains(site) {
        return Err(Error::InvalidArgument(format!("site {site} is not in the graph")));
    }
    if p.instruction_at(site).is_some() {
        return Err(Error::InvalidArgument(format!("site {site} is already measured")));
    }
    p.validate_inner(false)?;
    let mut q = p.clone();
    let k = q.next_outcome_id();
    for v in q.graph.neighbors(site) {
        q.absorb_z(v, &DepSet::single(k))?;
    }
    q.instructions.insert(0, MeasurementInstruction::new(site, Basis::Mz, DepSet::new(), k));
    q.validate()?;
    Ok(q)
}
