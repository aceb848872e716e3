use crate::parser::SourceSpan;
use thiserror::Error;

/// Errors shared across evaluation, enumeration, exploration, and proving.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("head/the of empty list or none")]
    HeadOfEmpty,
    #[error("no domain declared for variable `{0}`")]
    MissingDomain(String),
    #[error("empty domain for variable `{0}`")]
    EmptyDomain(String),
    #[error("relation contains UNIV with no frame annotation; cannot enumerate successors")]
    MissingFrame,
    #[error("atomic section exceeded the step budget of {0}")]
    AtomBoundExceeded(usize),
    #[error("state space too large: {0} exceeds the cap of {1}")]
    StateSpaceTooLarge(u128, u128),
    #[error("state left its declared domain at variable `{var}` (value {value})")]
    DomainEscape { var: String, value: String },
    #[error("missing annotation: {0}")]
    MissingAnnotation(String),
    #[error("no rely-guarantee specification for event `{0}`")]
    MissingGamma(String),
    #[error("invalid scale: {0}")]
    InvalidScale(String),
    #[error("inconsistent configuration: {0}")]
    InconsistentConfig(String),
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: SourceSpan, msg: String },
    #[error("duplicate event label `{0}`")]
    DuplicateEventLabel(String),
    #[error("{span}: undeclared variable `{name}`")]
    UndeclaredVariable { span: SourceSpan, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;
