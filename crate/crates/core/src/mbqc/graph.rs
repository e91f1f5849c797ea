use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::GateKind;
use crate::qmath::QubitState;

/// Cluster site identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteId(pub u32);

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected simple graph of cluster sites, optionally embedded in a 2D grid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterGraph {
    sites: BTreeSet<SiteId>,
    edges: BTreeSet<(SiteId, SiteId)>,
    coords: BTreeMap<SiteId, (i32, i32)>,
}

fn ordered(a: SiteId, b: SiteId) -> (SiteId, SiteId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ClusterGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sites `0..n` joined in a path.
    pub fn line(n: u32) -> Self {
        let mut g = Self::new();
        for i in 0..n {
            g.add_site(SiteId(i));
        }
        for i in 1..n {
            g.add_edge(SiteId(i - 1), SiteId(i)).expect("line edge");
        }
        g
    }

    /// `rows × cols` nearest-neighbour grid, sites numbered row-major.
    pub fn grid(rows: u32, cols: u32) -> Self {
        let mut g = Self::new();
        let id = |r: u32, c: u32| SiteId(r * cols + c);
        for r in 0..rows {
            for c in 0..cols {
                g.add_site(id(r, c));
                g.set_coord(id(r, c), (r as i32, c as i32)).expect("site exists");
            }
        }
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    g.add_edge(id(r, c), id(r, c + 1)).expect("grid edge");
                }
                if r + 1 < rows {
                    g.add_edge(id(r, c), id(r + 1, c)).expect("grid edge");
                }
            }
        }
        g
    }

    pub fn add_site(&mut self, s: SiteId) -> bool {
        self.sites.insert(s)
    }

    pub fn contains(&self, s: SiteId) -> bool {
        self.sites.contains(&s)
    }

    fn check_pair(&self, a: SiteId, b: SiteId) -> Result<()> {
        if a == b {
            return Err(Error::MalformedPattern(format!("self-loop at site {a}")));
        }
        for s in [a, b] {
            if !self.contains(s) {
                return Err(Error::MalformedPattern(format!("edge references unknown site {s}")));
            }
        }
        Ok(())
    }

    pub fn add_edge(&mut self, a: SiteId, b: SiteId) -> Result<()> {
        self.check_pair(a, b)?;
        self.edges.insert(ordered(a, b));
        Ok(())
    }

    /// Adds the edge if absent, removes it otherwise (`CZ² = I`).
    pub fn toggle_edge(&mut self, a: SiteId, b: SiteId) -> Result<()> {
        self.check_pair(a, b)?;
        let e = ordered(a, b);
        if !self.edges.remove(&e) {
            self.edges.insert(e);
        }
        Ok(())
    }

    pub fn has_edge(&self, a: SiteId, b: SiteId) -> bool {
        self.edges.contains(&ordered(a, b))
    }

    /// Removes a site and its incident edges.
    pub fn remove_site(&mut self, s: SiteId) {
        self.sites.remove(&s);
        self.coords.remove(&s);
        self.edges.retain(|&(a, b)| a != s && b != s);
    }

    pub fn set_coord(&mut self, s: SiteId, rc: (i32, i32)) -> Result<()> {
        if !self.contains(s) {
            return Err(Error::MalformedPattern(format!("coordinate for unknown site {s}")));
        }
        self.coords.insert(s, rc);
        Ok(())
    }

    pub fn coord(&self, s: SiteId) -> Option<(i32, i32)> {
        self.coords.get(&s).copied()
    }

    pub fn coords(&self) -> &BTreeMap<SiteId, (i32, i32)> {
        &self.coords
    }

    pub fn sites(&self) -> impl Iterator<Item = SiteId> + '_ {
        self.sites.iter().copied()
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (SiteId, SiteId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, s: SiteId) -> Vec<SiteId> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == s {
                    Some(b)
                } else if b == s {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn max_site(&self) -> Option<SiteId> {
        self.sites.iter().next_back().copied()
    }
}

/// Cluster state on `graph`: listed sites start in the given one-qubit states,
/// the rest in `|+⟩`, then `CZ` on every edge. Qubits follow ascending site order.
pub fn build_cluster(graph: &ClusterGraph, inputs: &[(SiteId, QubitState)]) -> Result<QubitState> {
    for (s, st) in inputs {
        if !graph.contains(*s) {
            return Err(Error::MalformedPattern(format!("input at unknown site {s}")));
        }
        if st.num_qubits() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: st.num_qubits() });
        }
    }
    let order: Vec<SiteId> = graph.sites().collect();
    let mut state = QubitState::zero(0);
    for s in &order {
        let local = inputs.iter().find(|(t, _)| t == s).map(|(_, st)| st.clone()).unwrap_or_else(QubitState::plus);
        state = state.tensor(&local);
    }
    let pos = |s: SiteId| order.iter().position(|&t| t == s).expect("known site");
    let cz = GateKind::CZ.matrix();
    for (a, b) in graph.edges() {
        state.apply_unitary_mut(&cz, &[pos(a), pos(b)])?;
    }
    Ok(state)
}
