//! JSON interchange formats. Complex numbers are `[re, im]` pairs and
//! matrices are row lists of them. Every `into_*` conversion validates.

use std::collections::BTreeMap;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{Circuit, Gate, GateKind};
use crate::laddersim::{LadderSpec, MeasurementQuery, QueryItem};
use crate::mbqc::{Basis, ClusterGraph, MeasurementInstruction, MeasurementPattern, SiteId};
use crate::pauli::{DepSet, FrameEntry, OutcomeId, PauliFrame};
use crate::qmath::{ComplexMatrix, C64};
use crate::tqc::TeleportScheme;

pub type MatrixJson = Vec<Vec<C64>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidArgument("ragged matrix rows".into()));
    }
    ComplexMatrix::from_vec(r, c, rows.iter().flatten().copied().collect())
}

pub fn from_json<T: DeserializeOwned>(s: &str) -> Result<T> {
    Ok(serde_json::from_str(s)?)
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitJson {
    pub n: usize,
    pub gates: Vec<GateJson>,
}

impl CircuitJson {
    pub fn from_circuit(c: &Circuit) -> Self {
        let gates = c
            .gates
            .iter()
            .map(|g| GateJson { kind: g.kind.name().to_string(), theta: g.kind.angle(), targets: g.targets.clone() })
            .collect();
        Self { n: c.num_qubits, gates }
    }

    pub fn into_circuit(&self) -> Result<Circuit> {
        let gates = self
            .gates
            .iter()
            .map(|g| Gate::new(GateKind::from_name(&g.kind, g.theta)?, g.targets.clone()))
            .collect::<Result<Vec<_>>>()?;
        Circuit::with_gates(self.n, gates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisJson {
    Mz,
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstructionJson {
    pub site: SiteId,
    pub basis: BasisJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default)]
    pub sign_deps: DepSet,
    pub id: OutcomeId,
}

fn basis_from(b: BasisJson, theta: Option<f64>) -> Result<Basis> {
    match (b, theta) {
        (BasisJson::Mz, None) => Ok(Basis::Mz),
        (BasisJson::M, Some(t)) if t.is_finite() => Ok(Basis::M(t)),
        (BasisJson::Mz, Some(_)) => Err(Error::InvalidArgument("Mz takes no angle".into())),
        (BasisJson::M, _) => Err(Error::InvalidArgument("M needs a finite theta".into())),
    }
}

fn basis_to(b: Basis) -> (BasisJson, Option<f64>) {
    match b {
        Basis::Mz => (BasisJson::Mz, None),
        Basis::M(t) => (BasisJson::M, Some(t)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternJson {
    pub sites: Vec<SiteId>,
    pub edges: Vec<(SiteId, SiteId)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub coords: BTreeMap<SiteId, (i32, i32)>,
    pub inputs: Vec<SiteId>,
    pub outputs: Vec<SiteId>,
    pub instructions: Vec<InstructionJson>,
    /// Byproduct per output site.
    pub frame: BTreeMap<SiteId, FrameEntry>,
}

impl PatternJson {
    pub fn from_pattern(p: &MeasurementPattern) -> Self {
        let instructions = p
            .instructions
            .iter()
            .map(|i| {
                let (basis, theta) = basis_to(i.basis);
                InstructionJson { site: i.site, basis, theta, sign_deps: i.sign_deps.clone(), id: i.id }
            })
            .collect();
        Self {
            sites: p.graph.sites().collect(),
            edges: p.graph.edges().collect(),
            coords: p.graph.coords().clone(),
            inputs: p.inputs.clone(),
            outputs: p.outputs.clone(),
            instructions,
            frame: p.outputs.iter().copied().zip(p.frame.entries().iter().cloned()).collect(),
        }
    }

    pub fn into_pattern(&self) -> Result<MeasurementPattern> {
        let mut g = ClusterGraph::new();
        for &s in &self.sites {
            g.add_site(s);
        }
        for &(a, b) in &self.edges {
            if a == b || g.has_edge(a, b) {
                return Err(Error::MalformedPattern(format!("bad or repeated edge {a}-{b}")));
            }
            g.add_edge(a, b)?;
        }
        for (&s, &rc) in &self.coords {
            g.set_coord(s, rc)?;
        }
        if let Some(s) = self.frame.keys().find(|s| !self.outputs.contains(s)) {
            return Err(Error::MalformedPattern(format!("frame entry for non-output site {s}")));
        }
        let frame = PauliFrame::from_entries(
            self.outputs.iter().map(|s| self.frame.get(s).cloned().unwrap_or_default()).collect(),
        );
        let instructions = self
            .instructions
            .iter()
            .map(|i| Ok(MeasurementInstruction::new(i.site, basis_from(i.basis, i.theta)?, i.sign_deps.clone(), i.id)))
            .collect::<Result<Vec<_>>>()?;
        let p = MeasurementPattern {
            graph: g,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            instructions,
            frame,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeJson {
    pub d: usize,
    pub ops: Vec<MatrixJson>,
    pub k: Vec<f64>,
}

impl SchemeJson {
    pub fn from_scheme(s: &TeleportScheme) -> Self {
        Self { d: s.dim(), ops: s.ops.iter().map(matrix_to_json).collect(), k: s.weights.clone() }
    }

    pub fn into_scheme(&self) -> Result<TeleportScheme> {
        let ops = self.ops.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        TeleportScheme::new(self.d, ops, self.k.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderJson {
    pub n: usize,
    pub unitaries: Vec<MatrixJson>,
}

impl LadderJson {
    pub fn from_spec(s: &LadderSpec) -> Self {
        Self { n: s.n(), unitaries: s.unitaries().iter().map(matrix_to_json).collect() }
    }

    pub fn into_spec(&self) -> Result<LadderSpec> {
        let us = self.unitaries.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        LadderSpec::new(self.n, us)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryItemJson {
    pub line: usize,
    pub basis: BasisJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub outcome: u8,
}

/// A ladder query is a JSON list of items.
pub fn query_from_json(items: &[QueryItemJson]) -> Result<MeasurementQuery> {
    let items = items
        .iter()
        .map(|i| Ok(QueryItem { line: i.line, basis: basis_from(i.basis, i.theta)?, outcome: i.outcome }))
        .collect::<Result<Vec<_>>>()?;
    MeasurementQuery::new(items)
}

pub fn query_to_json(q: &MeasurementQuery) -> Vec<QueryItemJson> {
    q.items()
        .iter()
        .map(|i| {
            let (basis, theta) = basis_to(i.basis);
            QueryItemJson { line: i.line, basis, theta, outcome: i.outcome }
        })
        .collect()
}
