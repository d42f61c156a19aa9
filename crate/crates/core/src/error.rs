use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode index {mode} out of range for a {n_modes}-mode basis")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("truncation discards {tail:.3e} probability (limit {limit:.1e}); raise the cutoff")]
    TailMass { tail: f64, limit: f64 },

    #[error("parameter {name} = {value} outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("SLD equation residual {residual:.3e} exceeds {limit:.1e}")]
    SldResidual { residual: f64, limit: f64 },

    #[error("density operator is rank deficient (smallest eigenvalue {min_eigenvalue:.3e}); use the D-invariant pure-state route")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("finite-difference step {0:e} underflows")]
    StepUnderflow(f64),

    #[error("model does not support this operation: {0}")]
    Unsupported(&'static str),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("degenerate likelihood: {0}")]
    DegenerateLikelihood(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
