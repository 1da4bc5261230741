//! Values, clocks, traces and the random stream shared by every semantics layer.

mod clock;
mod rational;
mod rng;
mod trace;
mod value;

pub use clock::{advance, earliest_delay, eval_constraint, reset, ClockConstraint, ClockId, ClockValuation, Delay};
pub use rational::Rational;
pub use rng::Rng;
pub use trace::{ChannelId, EventKind, EventRecord, Observation, PgId, TimedTrace};
pub use value::{value_in_domain, Type, Value, VarDomain};
