use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A value fell outside the carrier or violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("carrier mismatch: {0}")]
    Mismatch(String),

    /// A configurable size cap was hit; the caller should shrink the instance.
    #[error("{what} exceeds cap {limit}")]
    CapExceeded { what: String, limit: usize },

    #[error("family of sets does not cover the carrier (uncovered: {0})")]
    NotACover(String),

    /// A pulled-back cover member is not open; the map is not lower semicontinuous there.
    #[error("pullback member {member} is not open: {set}")]
    NotOpen { member: usize, set: String },

    #[error("selection hypotheses violated: {0}")]
    SelectionHypotheses(String),

    #[error("measure is not invariant (witness {0})")]
    NotInvariant(String),

    #[error("configuration error: {0}")]
    Config(String),
}
