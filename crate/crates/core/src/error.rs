use thiserror::Error;

/// Errors shared across the solver crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data is malformed or outside the documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector or matrix dimensions disagree with the declared sizes.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An enumeration or grid would exceed the documented size guard.
    #[error("size limit exceeded: {detail} (limit {limit}, requested {requested})")]
    SizeLimit {
        detail: String,
        limit: u64,
        requested: u64,
    },

    /// The instance admits no coordination mechanism.
    #[error("no coordination mechanism exists: {0}")]
    Infeasible(String),

    /// The principal's utility is unbounded over the feasible set.
    #[error("principal utility is unbounded")]
    UnboundedUtility,

    /// A precondition on a solution object was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The numerical kernel failed to converge or produced an inconsistent state.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
