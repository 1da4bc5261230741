//! Restricted state-chart front end: parses flat SCXML documents and compiles a
//! set of them into one timed probabilistic channel system.

pub mod atoms;
pub mod catalog;
pub mod compile;
pub mod error;
mod expr;
pub mod model;
pub mod parse;
pub mod trace;

pub use atoms::ScxmlAtoms;
pub use catalog::{build_catalog, EventCatalog, EventInfo};
pub use compile::{compile, compile_automata, ChannelLayout, ChannelRole, CompileOptions, CompiledModel, RANDOM_RESOLUTION};
pub use error::ScxmlError;
pub use expr::is_random_call;
pub use model::{DataDecl, Exec, Expression, ScxmlAutomaton, ScxmlState, ScxmlTransition, Send, SendTarget};
pub use parse::{parse_delay, parse_scxml, DELAY_UNITS};
pub use trace::{map_trace, MessageEvent, MessageKind};
