use thiserror::Error;
use tpsmc_core::error::ModelError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScxmlError {
    #[error("XML syntax error: {0}")]
    Xml(String),
    #[error("line {line}: <{element}> is not supported: {restriction}")]
    Restricted {
        element: String,
        restriction: &'static str,
        line: u32,
    },
    #[error("line {line}: untranslatable expression `{src}`: {reason}")]
    Untranslatable { src: String, reason: String, line: u32 },
    #[error("state `{state}` has a transition to unknown state `{target}`")]
    UnknownTarget { state: String, target: String },
    #[error("line {line}: {message}")]
    Malformed { message: String, line: u32 },
    #[error("event catalog: {0}")]
    Catalog(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = ScxmlError> = std::result::Result<T, E>;
