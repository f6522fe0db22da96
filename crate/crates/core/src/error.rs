use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input is not hermitian (max |h - h†| = {0:e})")]
    NonHermitianInput(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("eigenvalue iteration did not converge")]
    ConvergenceFailure,
    #[error("zero detuning between qubit and resonator")]
    ZeroDetuning,
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("invalid schedule: {0}")]
    ScheduleInvalid(String),
    #[error("integration step too large (error estimate {0:e})")]
    StepTooLarge(f64),
    #[error("readout confusion matrix of qubit {0} is singular")]
    SingularConfusion(usize),
    #[error("incomplete tomography settings: {0}")]
    IncompleteSettings(String),
    #[error("probe set does not span the operator space")]
    RankDeficient,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
