//! Timed probabilistic channel systems, MTL monitoring over their traces, and
//! statistical estimation of property probabilities.

pub mod channel_system;
pub mod error;
pub mod kernel;
pub mod mtl;
pub mod program_graph;
pub mod smc;

pub use error::{ModelError, Result};
