use thiserror::Error;

/// Errors produced by the estimation, selection and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid rank: {0}")]
    InvalidRank(String),
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("no admissible stationary point for rank {rank}")]
    NoValidRoot { rank: usize },
    #[error("ill-conditioned polynomial: {0}")]
    IllConditionedPolynomial(String),
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidData(_) => "InvalidData",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InvalidRank(_) => "InvalidRank",
            Error::DegenerateSpectrum(_) => "DegenerateSpectrum",
            Error::NoValidRoot { .. } => "NoValidRoot",
            Error::IllConditionedPolynomial(_) => "IllConditionedPolynomial",
            Error::DomainError(_) => "DomainError",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
