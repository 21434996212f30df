use alloc::string::String;

use crate::ode::StepStats;

/// Errors produced by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside of [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("crossing not reached: |eps0| = {eps0} >= A = {amplitude}")]
    CrossingNotReached { eps0: f64, amplitude: f64 },

    #[error("step size underflow at t = {t} (h = {h}); {stats}")]
    StepUnderflow { t: f64, h: f64, stats: StepStats },

    #[error("non-finite state at t = {t}; {stats}")]
    NonFinite { t: f64, stats: StepStats },

    #[error("step budget of {max_steps} exhausted at t = {t}; {stats}")]
    TooManySteps {
        t: f64,
        max_steps: u64,
        stats: StepStats,
    },

    #[error("insufficient sampling: {0}")]
    InsufficientSampling(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("{failed} of {total} sweep cells failed, above the budget of {budget}")]
    FailureBudgetExceeded { failed: usize, total: usize, budget: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
