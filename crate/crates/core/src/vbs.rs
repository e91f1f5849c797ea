//! Valence-bond picture of cluster states: grids of `|H⟩` bonds, the per-site
//! projection `Π = |0̃⟩⟨0…0| + |1̃⟩⟨1…1|`, and the rotated Bell bases that
//! relate teleportation to single-site measurements.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::GateKind;
use crate::mbqc::{build_cluster, ClusterGraph, SiteId};
use crate::qmath::{fidelity_up_to_phase, ComplexMatrix, QubitState, C64};

/// One `|H⟩` bond between `(site_a, slot_a)` and `(site_b, slot_b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub site_a: usize,
    pub slot_a: usize,
    pub site_b: usize,
    pub slot_b: usize,
}

/// Sites `0..arity.len()`, each holding `arity[s]` qubits that are all bond ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondGrid {
    pub arity: Vec<usize>,
    pub bonds: Vec<Bond>,
}

const MAX_PHYSICAL_QUBITS: usize = 22;

impl BondGrid {
    pub fn new(arity: Vec<usize>, bonds: Vec<Bond>) -> Result<Self> {
        let g = Self { arity, bonds };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let mut used: Vec<Vec<bool>> = self.arity.iter().map(|&k| vec![false; k]).collect();
        for b in &self.bonds {
            if b.site_a == b.site_b {
                return Err(Error::InvalidArgument(format!("bond loops on site {}", b.site_a)));
            }
            for (s, slot) in [(b.site_a, b.slot_a), (b.site_b, b.slot_b)] {
                let cell = used
                    .get_mut(s)
                    .and_then(|v| v.get_mut(slot))
                    .ok_or_else(|| Error::InvalidArgument(format!("no slot {slot} on site {s}")))?;
                if *cell {
                    return Err(Error::InvalidArgument(format!("slot {slot} on site {s} bonded twice")));
                }
                *cell = true;
            }
        }
        for (s, v) in used.iter().enumerate() {
            if v.is_empty() || v.contains(&false) {
                return Err(Error::InvalidArgument(format!("site {s} has unbonded slots")));
            }
        }
        if self.num_qubits() > MAX_PHYSICAL_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{} physical qubits exceeds {MAX_PHYSICAL_QUBITS}",
                self.num_qubits()
            )));
        }
        Ok(())
    }

    /// Open chain of `n` sites: arity 1 at the ends, 2 inside.
    pub fn line(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("a bond line needs two sites, got {n}")));
        }
        Self::from_edges(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>())
    }

    /// `rows × cols` grid, row-major sites; slots are handed out in bond order
    /// (each site's right bond, then its down bond).
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let s = r * cols + c;
                if c + 1 < cols {
                    edges.push((s, s + 1));
                }
                if r + 1 < rows {
                    edges.push((s, s + cols));
                }
            }
        }
        Self::from_edges(rows * cols, &edges)
    }

    fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut arity = vec![0; n];
        let mut bonds = Vec::new();
        for &(a, b) in edges {
            bonds.push(Bond { site_a: a, slot_a: arity[a], site_b: b, slot_b: arity[b] });
            arity[a] += 1;
            arity[b] += 1;
        }
        Self::new(arity, bonds)
    }

    pub fn num_sites(&self) -> usize {
        self.arity.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.arity.iter().sum()
    }

    /// Physical qubit index of `(site, slot)`.
    pub fn qubit(&self, site: usize, slot: usize) -> usize {
        self.arity[..site].iter().sum::<usize>() + slot
    }

    /// Qubits of each site, for [`pi_project`].
    pub fn partition(&self) -> Vec<Vec<usize>> {
        (0..self.num_sites()).map(|s| (0..self.arity[s]).map(|k| self.qubit(s, k)).collect()).collect()
    }

    /// Logical graph: one site per grid site, one edge per bond.
    pub fn logical_graph(&self) -> Result<ClusterGraph> {
        let mut g = ClusterGraph::new();
        for s in 0..self.num_sites() {
            g.add_site(SiteId(s as u32));
        }
        for b in &self.bonds {
            g.toggle_edge(SiteId(b.site_a as u32), SiteId(b.site_b as u32))?;
        }
        Ok(g)
    }
}

/// `Π` for a site of `k` qubits as a `2 × 2^k` isometry.
pub fn pi_matrix(k: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 1 << k);
    m[(0, 0)] = C64::new(1.0, 0.0);
    m[(1, (1 << k) - 1)] = C64::new(1.0, 0.0);
    m
}

/// `⊗|H⟩` over all bonds. `|H⟩` has amplitude `(-1)^{ab}/2` on `|ab⟩`.
pub fn build_grid_state(g: &BondGrid) -> Result<QubitState> {
    g.validate()?;
    let n = g.num_qubits();
    let pairs: Vec<(usize, usize)> =
        g.bonds.iter().map(|b| (g.qubit(b.site_a, b.slot_a), g.qubit(b.site_b, b.slot_b))).collect();
    let mag = 0.5f64.powi(g.bonds.len() as i32);
    let amps = (0..1usize << n)
        .map(|i| {
            let bit = |q: usize| (i >> (n - 1 - q)) & 1;
            let odd = pairs.iter().filter(|&&(a, b)| bit(a) & bit(b) == 1).count() % 2 == 1;
            C64::new(if odd { -mag } else { mag }, 0.0)
        })
        .collect();
    QubitState::from_amplitudes(amps)
}

/// Applies `Π` to each part. Output qubit `s` is part `s`; the result is subnormalized.
pub fn pi_project(state: &QubitState, parts: &[Vec<usize>]) -> Result<QubitState> {
    let n = state.num_qubits();
    let mut seen = vec![false; n];
    for p in parts {
        if p.is_empty() {
            return Err(Error::InvalidArgument("empty site in partition".into()));
        }
        for &q in p {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, num_qubits: n });
            }
            if seen[q] {
                return Err(Error::DuplicateTarget(q));
            }
            seen[q] = true;
        }
    }
    if seen.contains(&false) {
        return Err(Error::InvalidArgument("partition does not cover every qubit".into()));
    }
    let masks: Vec<usize> = parts.iter().map(|p| p.iter().map(|&q| 1usize << (n - 1 - q)).sum()).collect();
    let m = parts.len();
    let amps = (0..1usize << m)
        .map(|l| {
            let idx: usize = (0..m).filter(|&s| l & (1 << (m - 1 - s)) != 0).map(|s| masks[s]).sum();
            state.amplitudes()[idx]
        })
        .collect();
    QubitState::subnormalized(amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Line(usize),
    Grid(usize, usize),
}

const MAX_LOGICAL_SITES: usize = 10;

/// Fidelity between the normalized `Π`-projected bond state and the cluster
/// state on the same graph.
pub fn verify_lemma3(geometry: Geometry) -> Result<f64> {
    let g = match geometry {
        Geometry::Line(n) => BondGrid::line(n)?,
        Geometry::Grid(r, c) => BondGrid::grid(r, c)?,
    };
    if g.num_sites() > MAX_LOGICAL_SITES {
        return Err(Error::InvalidArgument(format!("{} sites exceeds {MAX_LOGICAL_SITES}", g.num_sites())));
    }
    let projected = pi_project(&build_grid_state(&g)?, &g.partition())?.normalized()?;
    let cluster = build_cluster(&g.logical_graph()?, &[])?;
    fidelity_up_to_phase(&projected, &cluster)
}

fn two_qubit(v: [C64; 4]) -> QubitState {
    QubitState::from_amplitudes(v.to_vec()).expect("normalized")
}

fn h_state() -> QubitState {
    let h = C64::new(0.5, 0.0);
    two_qubit([h, h, h, -h])
}

/// `σ_a` for `a` in `I, X, Z, XZ`.
fn sigma(a: usize) -> ComplexMatrix {
    match a {
        0 => ComplexMatrix::identity(2),
        1 => GateKind::X.matrix(),
        2 => GateKind::Z.matrix(),
        _ => &GateKind::X.matrix() * &GateKind::Z.matrix(),
    }
}

/// `{(σ_a ⊗ I)|H⟩}`.
pub fn hbell_basis() -> [QubitState; 4] {
    let h = h_state();
    std::array::from_fn(|a| h.apply_unitary(&sigma(a), &[0]).expect("one qubit"))
}

/// Where `CZ` sends each element of [`hbell_basis`], including the sign:
/// `|++⟩, |+−⟩, |−+⟩, −|−−⟩`.
pub fn hbell_cz_images() -> [QubitState; 4] {
    let (p, m) = (QubitState::plus(), QubitState::minus());
    [p.tensor(&p), p.tensor(&m), m.tensor(&p), m.tensor(&m).scaled(C64::new(-1.0, 0.0))]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotatedBell {
    pub index: usize,
    pub state: QubitState,
    /// Lies in `span{|00⟩, |11⟩}`, the range of `Π` on a two-qubit site.
    pub in_pi_range: bool,
}

/// `|a⟩ = (W(−θ)† σ_a ⊗ I)|H⟩`.
pub fn rotated_bell_w(theta: f64) -> [RotatedBell; 4] {
    let w_dag = GateKind::W(-theta).matrix().adjoint();
    let h = h_state();
    std::array::from_fn(|a| {
        let state = h.apply_unitary(&(&w_dag * &sigma(a)), &[0]).expect("one qubit");
        let amp = state.amplitudes();
        let in_pi_range = amp[0].norm_sqr() + amp[3].norm_sqr() > 0.5;
        RotatedBell { index: a, state, in_pi_range }
    })
}

/// Compares, for `a ∈ {0, 1}`, the teleportation branch `⟨a|_{AB} |ψ⟩_A|H⟩_{BC}`
/// with measuring `M(θ)` outcome `a` on site 0 of the cluster built from `|ψ⟩`.
/// Returns the smaller of the two fidelities.
pub fn correspondence_fidelity(theta: f64, psi: &QubitState) -> Result<f64> {
    if psi.num_qubits() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: psi.num_qubits() });
    }
    let grid = psi.tensor(&h_state());
    let cluster = build_cluster(&ClusterGraph::line(2), &[(SiteId(0), psi.clone())])?;
    let bell = rotated_bell_w(theta);
    let mut worst: f64 = 1.0;
    for b in bell.iter().filter(|b| b.in_pi_range) {
        let tqc = grid.project(&b.state, &[0, 1])?;
        let s = if b.index == 0 { 1.0 } else { -1.0 };
        let m =
            QubitState::from_amplitudes(vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::from_polar(s * FRAC_1_SQRT_2, theta)])?;
        let mbqc = cluster.project(&m, &[0])?;
        // the bond contributes a factor 1/2 in weight: 1/4 per Bell outcome vs 1/2 per M(θ) outcome
        if (2.0 * tqc.norm_sqr() - mbqc.norm_sqr()).abs() > 1e-12 {
            return Ok(0.0);
        }
        worst = worst.min(fidelity_up_to_phase(&tqc.normalized()?, &mbqc.normalized()?)?);
    }
    Ok(worst)
}
