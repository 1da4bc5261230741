use std::fmt;

use serde::Serialize;
use tpsmc_core::error::ModelError;
use tpsmc_scxml::ScxmlError;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Validation = 2,
    Runtime = 3,
    BudgetExhausted = 4,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

impl Diagnostic {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            message: message.into(),
            file: None,
            line: None,
        }
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }

    pub fn from_scxml(e: &ScxmlError) -> Self {
        let (code, line) = match e {
            ScxmlError::Xml(_) => ("xml", None),
            ScxmlError::Restricted { line, .. } => ("restricted", Some(*line)),
            ScxmlError::Untranslatable { line, .. } => ("untranslatable", Some(*line)),
            ScxmlError::UnknownTarget { .. } => ("unknown-target", None),
            ScxmlError::Malformed { line, .. } => ("malformed", Some(*line)),
            ScxmlError::Catalog(_) => ("catalog", None),
            ScxmlError::Config(_) => ("config", None),
            ScxmlError::Model(_) => ("model", None),
        };
        // the line is reported separately
        let message = match e {
            ScxmlError::Restricted { element, restriction, .. } => format!("<{element}> is not supported: {restriction}"),
            ScxmlError::Untranslatable { src, reason, .. } => format!("untranslatable expression `{src}`: {reason}"),
            ScxmlError::Malformed { message, .. } => message.clone(),
            other => other.to_string(),
        };
        Diagnostic {
            code,
            message,
            file: None,
            line: line.filter(|l| *l > 0),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]", self.code)?;
        match (&self.file, self.line) {
            (Some(file), Some(line)) => write!(f, " {file}:{line}")?,
            (Some(file), None) => write!(f, " {file}")?,
            (None, Some(line)) => write!(f, " line {line}")?,
            (None, None) => {}
        }
        write!(f, ": {}", self.message)
    }
}

/// A failed command.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments, unreadable or missing files.
    Usage(String),
    Validation(Vec<Diagnostic>),
    /// The model failed while being simulated.
    Runtime(String),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Usage(_) => Exit::Usage,
            CliError::Validation(_) => Exit::Validation,
            CliError::Runtime(_) => Exit::Runtime,
        }
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            CliError::Usage(m) => vec![Diagnostic::new("usage", m.clone())],
            CliError::Validation(d) => d.clone(),
            CliError::Runtime(m) => vec![Diagnostic::new("runtime", m.clone())],
        }
    }

    pub fn invalid(code: &'static str, e: &ModelError) -> Self {
        CliError::Validation(vec![Diagnostic::new(code, e.to_string())])
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error[usage]: {m}"),
            CliError::Runtime(m) => write!(f, "error[runtime]: {m}"),
            CliError::Validation(ds) => {
                for (i, d) in ds.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{d}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for CliError {}
