//! Metric temporal logic with past operators over finite timed traces.

mod atom;
mod formula;
mod monitor;
mod property;

pub use atom::{label, AtomDef};
pub use formula::{Formula, Interval, Verdict};
pub use monitor::{end_of_trace, evaluate, evaluate_complete, online_update, Monitor, OracleState};
pub use property::{parse_properties, parse_sexp, AtomScope, CsAtoms, Property, PropertySet, Sexp};
