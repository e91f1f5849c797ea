use thiserror::Error;

use crate::pauli::OutcomeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("duplicate target qubit {0}")]
    DuplicateTarget(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gate {0} has no propagation rule")]
    UnsupportedGate(String),

    #[error("outcome {0} has no recorded value")]
    UnresolvedOutcome(OutcomeId),

    #[error("outcome {0} recorded twice")]
    DuplicateOutcome(OutcomeId),

    #[error("malformed pattern: {0}")]
    MalformedPattern(String),

    #[error("forced outcomes select a branch of zero probability at instruction {0}")]
    ZeroProbabilityBranch(OutcomeId),

    #[error("cyclic dependency through outcome {0}")]
    CyclicDependency(OutcomeId),

    #[error("invalid teleportation scheme: {0}")]
    InvalidScheme(String),

    #[error("conditioning history has zero probability")]
    ImpossibleHistory,

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
