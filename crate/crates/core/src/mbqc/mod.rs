//! Cluster states, adaptive measurement patterns, and their execution.

mod exec;
mod graph;
mod library;
mod pattern;

pub use exec::{correct, run_pattern, run_pattern_dense, CompiledPattern, Leaf, RunMode, RunResult, ZERO_PROB};
pub use graph::{build_cluster, ClusterGraph, SiteId};
pub use library::{
    pattern_cz, pattern_cz_grid, pattern_euler, pattern_rx, pattern_single_step, pattern_wire, PatternBuilder, Step,
};
pub use pattern::{compose, delete_site_z, Basis, MeasurementInstruction, MeasurementPattern};
