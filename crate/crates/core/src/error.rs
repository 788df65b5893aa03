use std::path::PathBuf;

use crate::model::Violation;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0:?}")]
    InvalidState(Vec<Violation>),

    #[error("no departure possible: all queues are empty")]
    NoBusyQueue,

    #[error("enumeration guard exceeded: {cost:.3e} outcomes > {limit:.3e}")]
    GuardExceeded { cost: f64, limit: f64 },

    #[error("step refinement did not converge after {steps} steps (last difference {diff:.3e}, tol {tol:.3e})")]
    NonConvergence { steps: usize, diff: f64, tol: f64 },

    #[error("N too small: no k with N a_k > N^kappa (ln N = {ln_queues:.4})")]
    QueuesTooFew { ln_queues: f64 },

    #[error("linear system is singular or inconsistent: {0}")]
    Singular(String),

    #[error("{censored} of {reps} replications hit the event cap of {cap}")]
    Censored { censored: usize, reps: usize, cap: u64 },

    #[error("hypotheses not satisfied: {0}")]
    HypothesesUnsatisfied(String),

    #[error("ordering violated at event {event} (t = {time}): component {component}, {lo} > {hi}")]
    OrderingViolation { event: u64, time: f64, component: usize, lo: usize, hi: usize },

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("config field `{field}`: {msg}")]
    ConfigInvalid { field: String, msg: String },

    #[error("I/O error at {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::InvalidState(_)
                | Error::ConfigParse { .. }
                | Error::ConfigInvalid { .. }
                | Error::QueuesTooFew { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
