use thiserror::Error;

/// Errors raised by the reduced-order model, orbit generation, planner and
/// simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameter: {0}")]
    Parameter(String),

    #[error("invalid gait command: {0}")]
    Command(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("periodic orbit did not converge (residual {residual:.3e} after {iterations} iterations)")]
    Orbit { residual: f64, iterations: usize },

    #[error("timing error: {0}")]
    Timing(String),

    #[error("degenerate phase: {0}")]
    DegeneratePhase(String),

    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
