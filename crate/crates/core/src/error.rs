use thiserror::Error;

/// Errors raised by the learning, objective, solver and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("predictor {predictor} returned a non-finite value at time {time}")]
    NonFinitePredictor { predictor: usize, time: u64 },

    #[error("degenerate alpha sum: |alpha . 1| = {0:e}")]
    DegenerateAlphaSum(f64),

    #[error("rank-deficient Gram: c undefined")]
    RankDeficientGram,

    #[error("predictor {0} depends on the decision; the allocation objective needs f2 == 0")]
    ControlDependentBasis(usize),

    #[error("invalid feasible set: {0}")]
    InvalidSet(String),

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("empty history")]
    EmptyHistory,

    #[error("invalid value for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o: {0}")]
    Io(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_step(self, step: u64) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::NonFinitePredictor { .. } => "non-finite-predictor",
            Error::DegenerateAlphaSum(_) => "degenerate-alpha-sum",
            Error::RankDeficientGram => "rank-deficient-gram",
            Error::ControlDependentBasis(_) => "control-dependent-basis",
            Error::InvalidSet(_) => "invalid-set",
            Error::NonPositiveStep(_) => "nonpositive-step",
            Error::EmptyHistory => "empty-history",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::AtStep { source, .. } => source.kind(),
        }
    }

    /// Step index attached by the online loop, if any.
    pub fn step(&self) -> Option<u64> {
        match self {
            Error::AtStep { step, .. } => Some(*step),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
