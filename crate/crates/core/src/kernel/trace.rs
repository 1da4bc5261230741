use serde::Serialize;

use super::{Rational, Value};
use crate::error::ModelError;

/// Index of a program graph inside a channel system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PgId(pub usize);

/// Index of a channel inside a channel system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ChannelId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Internal,
    Send,
    Receive,
    Handshake,
}

/// What happened in one step of an execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_pg: Option<PgId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_pg: Option<PgId>,
    /// The program graph whose transition fired (the sender, for handshakes).
    pub pg: PgId,
    /// Index of the fired transition within `pg`.
    pub transition: usize,
    /// Receiver transition of a handshake.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partner_transition: Option<usize>,
}

impl EventRecord {
    pub fn internal(pg: PgId, transition: usize) -> Self {
        EventRecord {
            kind: EventKind::Internal,
            channel: None,
            payload: None,
            source_pg: None,
            target_pg: None,
            pg,
            transition,
            partner_transition: None,
        }
    }

    /// Checks the shape constraints of each kind.
    pub fn well_formed(&self) -> bool {
        match self.kind {
            EventKind::Send | EventKind::Receive => self.channel.is_some(),
            EventKind::Handshake => {
                self.channel.is_some() && self.source_pg.is_some() && self.target_pg.is_some()
            }
            EventKind::Internal => true,
        }
    }
}

/// One timestamped step: the event, when it happened, and which propositions hold afterwards.
/// The initial state of a run is observed with no event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Observation {
    pub time: Rational,
    pub event: Option<EventRecord>,
    /// Truth of each declared proposition, indexed by proposition id.
    pub labels: Vec<bool>,
}

/// Finite timed trace with non-decreasing timestamps.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct TimedTrace {
    observations: Vec<Observation>,
}

impl TimedTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_observations(observations: Vec<Observation>) -> Result<Self, ModelError> {
        let mut trace = TimedTrace::new();
        for obs in observations {
            trace.push(obs)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, obs: Observation) -> Result<(), ModelError> {
        if obs.time.is_negative() {
            return Err(ModelError::Argument(format!("negative timestamp {}", obs.time)));
        }
        if let Some(last) = self.observations.last() {
            if obs.time < last.time {
                return Err(ModelError::Argument(format!(
                    "timestamp {} precedes previous timestamp {}",
                    obs.time, last.time
                )));
            }
        }
        self.observations.push(obs);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn get(&self, i: usize) -> Option<&Observation> {
        self.observations.get(i)
    }

    pub fn last_time(&self) -> Option<Rational> {
        self.observations.last().map(|o| o.time)
    }
}
