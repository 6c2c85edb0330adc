use thiserror::Error;

use crate::bounds::BoundsError;
use crate::learner::LearnError;
use crate::machine::MachineError;
use crate::models::CatalogError;
use crate::monomial::MonomialError;
use crate::sul::SulError;

/// Any failure surfaced by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Monomial(#[from] MonomialError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Sul(#[from] SulError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("{context}: {message}")]
    Row {
        context: String,
        message: String,
        kind: ErrorKind,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Transport,
    Resource,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Io => 1,
            ErrorKind::Validation => 2,
            ErrorKind::Transport => 3,
            ErrorKind::Resource => 4,
        }
    }
}

fn machine_kind(e: &MachineError) -> ErrorKind {
    match e {
        MachineError::EnumerationCap { .. } => ErrorKind::Resource,
        _ => ErrorKind::Validation,
    }
}

fn sul_kind(e: &SulError) -> ErrorKind {
    match e {
        SulError::Transport { .. } => ErrorKind::Transport,
        SulError::Query(m) => machine_kind(m),
        SulError::Config(_) => ErrorKind::Validation,
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Machine(e) => machine_kind(e),
            Error::Catalog(CatalogError::Io { .. }) => ErrorKind::Io,
            Error::Catalog(_) => ErrorKind::Validation,
            Error::Monomial(MonomialError::CountBudget(_)) => ErrorKind::Resource,
            Error::Monomial(_) | Error::Bounds(_) => ErrorKind::Validation,
            Error::Sul(e) => sul_kind(e),
            Error::Learn(LearnError::SamplingCap { .. }) => ErrorKind::Resource,
            Error::Learn(LearnError::Sul(e)) => sul_kind(e),
            Error::Learn(LearnError::Config(_)) => ErrorKind::Validation,
            Error::Row { kind, .. } => *kind,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => ErrorKind::Io,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.kind().exit_code()
    }
}
