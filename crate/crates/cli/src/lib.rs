//! Command-line front end: manifests, model loading, and the `validate`,
//! `trace` and `verify` commands.

pub mod cli;
pub mod commands;
pub mod diagnostics;
pub mod manifest;
pub mod model_file;

pub use cli::{run, Output};
pub use commands::{load, trace, validate, verify, Model, Project, Summary, TraceOptions, VerifyOptions};
pub use diagnostics::{CliError, Diagnostic, Exit};
pub use manifest::{Manifest, SmcOverrides};
pub use model_file::ModelFile;
