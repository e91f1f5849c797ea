//! Circuit-to-pattern compilation, measurement-layer scheduling, output
//! reinterpretation, and the unitary replacement of mid-circuit measurements.

mod compile;
mod purge;
mod schedule;
mod verify;

pub use compile::{compile, compile_with, native_steps, CompileOptions, OneQubitLowering};
pub use purge::{dynamic_distribution, purge_measurements, DynOp, DynamicCircuit, PurgedCircuit};
pub use schedule::{
    depth_report, depth_report_for, output_first, reinterpret_output, reorder_by_schedule, schedule,
    schedule_two_layer, DepthReport, ReadoutPlan, Schedule,
};
pub use verify::{
    final_readout_distribution, readout_distribution, verify_against_circuit, verify_pattern, BranchFailure, Verdict,
};
