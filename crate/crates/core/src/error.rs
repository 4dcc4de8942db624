use thiserror::Error;

/// Errors raised by the curriculum, reward, learner and environment layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("command component {dim} = {value} outside bounds [{min}, {max}]")]
    OutOfBounds {
        dim: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("degenerate command: normalized magnitude {magnitude} below minimum {minimum}")]
    DegenerateCommand { magnitude: f64, minimum: f64 },

    #[error("vector has norm {norm}, expected unit length")]
    NotUnit { norm: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("simulation fault: {0}")]
    SimulationFault(String),

    #[error("training fault: {0}")]
    TrainingFault(String),

    #[error("individual has no fitness attached")]
    Unevaluated,
}

pub type Result<T> = std::result::Result<T, Error>;
