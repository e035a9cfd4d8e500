use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A physical or numerical parameter is outside its admissible range.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Bogoliubov angle requested for a mode with vanishing quasiparticle energy.
    #[error("gapless mode k={k} at lambda={lambda}")]
    GaplessMode { k: usize, lambda: f64 },

    #[error("negative gamma^2 = {0}")]
    NegativeGamma2(f64),

    #[error("chain of {n} spins exceeds the dense-oracle cap of {max}")]
    DimensionCap { n: usize, max: usize },

    #[error("norm drift {drift:e} exceeds budget {budget:e}")]
    NormBudgetExceeded { drift: f64, budget: f64 },

    #[error("oracle not converged: p_flip {p_short} at T={t_short}, {p_long} at T={t_long}")]
    NonConvergent {
        t_short: f64,
        p_short: f64,
        t_long: f64,
        p_long: f64,
    },

    #[error("integrator exceeded {0} steps")]
    StepLimit(usize),

    #[error("axis is not uniform: {0}")]
    NonUniformAxis(String),

    #[error("table has no lambda axis")]
    NoLambdaAxis,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
