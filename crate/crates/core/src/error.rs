//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Action outside `1..=2N` or activation vector inconsistent with the
    /// topology.
    #[error("invalid action {action}: must lie in 1..={max}")]
    InvalidAction { action: usize, max: usize },

    /// Activation vector malformed (duplicate, out-of-range core index, empty).
    #[error("invalid activation vector: {0}")]
    InvalidActivation(String),

    /// Context carries a channel-quality value outside the supported range.
    #[error("invalid context: {0}")]
    InvalidContext(String),

    /// An episode needs at least one vBS context.
    #[error("invalid episode: context list is empty")]
    EmptyEpisode,

    /// A gradient or loss turned non-finite during training.
    #[error("non-finite value in training step {step}: {what}")]
    NonFinite { step: u64, what: String },

    /// Checkpoint does not match the requested topology/architecture.
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    /// Malformed trace or checkpoint input.
    #[error("parse error: {0}")]
    Parse(String),

    /// Operation only supported for small topologies.
    #[error("{what} supported only for n_physical <= {max}, got {got}")]
    TooLarge {
        what: &'static str,
        max: usize,
        got: usize,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
