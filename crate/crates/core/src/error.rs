use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("operator is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("coefficient overflow during normal ordering ({0})")]
    CoefficientOverflow(String),

    #[error("Taylor order must be even and at least 2, got {0}")]
    OddTaylorOrder(u32),

    #[error("no interior minimum found on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("labeling failed for |{na},{nb}>: best overlap {overlap:.3} below {threshold}")]
    LabelingFailure { na: usize, nb: usize, overlap: f64, threshold: f64 },

    #[error("missing labels: {0:?}")]
    MissingLabels(Vec<(usize, usize)>),

    #[error("empty transition list")]
    EmptyTransitions,

    #[error("upward transition requested ({lower} -> {upper})")]
    UpwardTransition { lower: usize, upper: usize },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("trace deviation {deviation:.3e} at t = {time} ns exceeds tolerance")]
    TraceDrift { time: f64, deviation: f64 },

    #[error("norm drift {drift:.3e} exceeds tolerance; increase the substep count")]
    NormDrift { drift: f64 },

    #[error("drive calibration did not converge after {iterations} iterations (photon numbers {photons:?})")]
    Calibration { iterations: usize, photons: Vec<f64> },

    #[error("insufficient labeled ladder: need |{needed},{qubit}> for the coherent state")]
    InsufficientLadder { needed: usize, qubit: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid override: {0}")]
    Override(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::CoefficientOverflow(_) => "coefficient_overflow",
            Error::OddTaylorOrder(_) => "odd_taylor_order",
            Error::NoBracket { .. } => "no_bracket",
            Error::LabelingFailure { .. } => "labeling_failure",
            Error::MissingLabels(_) => "missing_labels",
            Error::EmptyTransitions => "empty_transitions",
            Error::UpwardTransition { .. } => "upward_transition",
            Error::Integration(_) => "integration",
            Error::TraceDrift { .. } => "trace_drift",
            Error::NormDrift { .. } => "norm_drift",
            Error::Calibration { .. } => "calibration",
            Error::InsufficientLadder { .. } => "insufficient_ladder",
            Error::Config { .. } | Error::Override(_) => "config",
            Error::LinearAlgebra(_) => "linear_algebra",
            Error::Io(_) => "io",
        }
    }
}
