use thiserror::Error;

/// Errors raised by the shuffle, exact-evolution, Monte Carlo and cyclic
/// analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Deck size, rule and state disagree about dimensions.
    #[error("configuration error: {0}")]
    Config(String),

    /// Two vectors that must have equal length do not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A requested time grid is not strictly increasing.
    #[error("times must be strictly increasing (offending value {0})")]
    NonIncreasingTimes(u64),

    /// The k-tuple state space exceeds the configured dense-vector cap.
    #[error("state space of {count} tuples exceeds the cap of {cap}; use the Monte Carlo estimators")]
    CapExceeded { count: u128, cap: usize },

    /// A frequency table would not fit the Monte Carlo memory budget.
    #[error("frequency table of {states} states exceeds the memory budget of {budget}; use a statistic-based estimator")]
    TableTooLarge { states: usize, budget: usize },

    /// Probability mass drifted away from one during exact evolution.
    #[error("numerical integrity failure at t={t}: {detail}")]
    NumericalIntegrity { t: u64, detail: String },

    /// A time scan ran out of horizon before reaching its threshold.
    #[error("threshold not reached within horizon {horizon} (last value {last_value})")]
    Horizon { horizon: u64, last_value: f64 },

    /// A constructed matrix has an entry outside [0, 1].
    #[error("matrix entry {entry} = {value} lies outside [0, 1]")]
    Domain { entry: String, value: f64 },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
