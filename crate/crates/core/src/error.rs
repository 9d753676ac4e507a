use thiserror::Error;

/// Errors raised by the simulator core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// A caller broke an operation's precondition (bad index, wrong
    /// dimension, non-unitary gate, out-of-range angle, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine produced a value that cannot be trusted.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Gate name outside the supported set.
    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    /// The scene state failed its validity check after an update; the
    /// engine refuses to continue from it.
    #[error("engine halted at sim_time {sim_time}: {diagnostic}")]
    Halt { sim_time: f64, diagnostic: String },
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn contract(msg: impl Into<String>) -> SimError {
    SimError::Contract(msg.into())
}
