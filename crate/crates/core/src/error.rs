use thiserror::Error;

/// Errors raised by the transceiver chains, the analytic evaluators and the
/// simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid modulation order {0}: must be a power of two >= 2")]
    InvalidOrder(u64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate channel: gain must be non-zero")]
    DegenerateChannel,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid power allocation: {0}")]
    InvalidPowerAllocation(String),

    #[error("infeasible configuration: {0}")]
    InfeasibleConfiguration(String),

    #[error("not available: {0}")]
    NotAvailable(String),

    #[error("cannot fit curve: {0}")]
    FitRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
