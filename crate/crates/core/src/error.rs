use thiserror::Error;

use crate::catalog_io::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid token {token:?}: {reason}")]
    InvalidToken { token: String, reason: &'static str },

    #[error("duplicate type {0:?} in type list")]
    DuplicateType(String),

    #[error("service {0:?} has no inputs")]
    EmptyInputs(String),

    #[error("service {0:?} has no outputs")]
    EmptyOutputs(String),

    #[error("duplicate service {0:?}")]
    DuplicateService(String),

    #[error("unknown initial service {0:?}")]
    UnknownInitialService(String),

    #[error("unknown service {0:?}")]
    UnknownService(String),

    #[error("affinity of service {0:?} with itself is undefined")]
    SameService(String),

    #[error("affinity against an empty required set is undefined")]
    EmptyRequired,

    #[error("composition model was not built from catalog {0:?}")]
    ModelCatalogMismatch(String),

    #[error("{} parse error(s)", .0.len())]
    Parse(Vec<ParseError>),
}
