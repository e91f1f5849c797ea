//! Measurement-based quantum computation: compile gate arrays into adaptive
//! measurement patterns, run them with Pauli-frame tracking, and check every
//! construction against a dense statevector simulation.

pub mod compiler;
pub mod error;
pub mod gates;
pub mod io;
pub mod laddersim;
pub mod mbqc;
pub mod pauli;
pub mod qmath;
pub mod tqc;
pub mod vbs;

pub use error::{Error, Result};
