//! Crate-wide error with stable machine-readable codes.

use thiserror::Error;

use crate::archive::ArchiveError;
use crate::effect::EffectError;
use crate::explain::ExplainError;
use crate::net::NetError;
use crate::table::TableError;
use crate::update::UpdateError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error(transparent)]
    Effect(#[from] EffectError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Table(e) => e.code(),
            Error::Net(e) => e.code(),
            Error::Update(e) => e.code(),
            Error::Effect(e) => e.code(),
            Error::Explain(e) => e.code(),
            Error::Archive(e) => e.code(),
        }
    }
}
