use thiserror::Error;

/// Errors raised while building or executing a model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("arithmetic overflow")]
    Overflow,
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown clock #{0}")]
    UnknownClock(usize),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("value {value} outside the domain of {target}")]
    OutOfDomain { target: String, value: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<ModelError>,
    },
}

impl ModelError {
    /// Wraps the error with a description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        ModelError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with all context layers removed.
    pub fn root(&self) -> &ModelError {
        match self {
            ModelError::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
