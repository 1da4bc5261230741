use crate::channel_system::{ChannelSystem, CsState};
use crate::error::ModelError;
use crate::kernel::{ChannelId, EventKind, EventRecord, PgId};
use crate::program_graph::{Expr, LocationId};

/// Atomic proposition read at one observation.
///
/// Payload predicates see the message as variable 0 (`msg` in property files).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AtomDef {
    /// A message was put on one of the channels (buffered send or handshake).
    Sent { channels: Vec<ChannelId>, pred: Option<Expr> },
    /// A message was taken from one of the channels (buffered receive or handshake).
    Received { channels: Vec<ChannelId>, pred: Option<Expr> },
    /// Guard over the joint valuation after the step.
    State(Expr),
    /// A graph sits at a location after the step.
    At(PgId, LocationId),
}

impl AtomDef {
    pub fn holds(&self, state: &CsState, event: Option<&EventRecord>) -> Result<bool, ModelError> {
        match self {
            AtomDef::Sent { channels, pred } => {
                let Some(event) = event else { return Ok(false) };
                let kind_ok = matches!(event.kind, EventKind::Send | EventKind::Handshake);
                message_matches(kind_ok, channels, pred.as_ref(), event)
            }
            AtomDef::Received { channels, pred } => {
                let Some(event) = event else { return Ok(false) };
                let kind_ok = matches!(event.kind, EventKind::Receive | EventKind::Handshake);
                message_matches(kind_ok, channels, pred.as_ref(), event)
            }
            AtomDef::State(g) => g.eval_bool(&state.valuation),
            AtomDef::At(pg, l) => Ok(state.locations[pg.0] == *l),
        }
    }

    /// Checks references against `cs`.
    pub fn validate(&self, cs: &ChannelSystem) -> Result<(), ModelError> {
        match self {
            AtomDef::Sent { channels, .. } | AtomDef::Received { channels, .. } => {
                if let Some(c) = channels.iter().find(|c| c.0 >= cs.channels().len()) {
                    return Err(ModelError::Invalid(format!("undeclared channel #{}", c.0)));
                }
            }
            AtomDef::State(g) => {
                let mut bad = None;
                g.for_each_var(&mut |v| {
                    if v.0 >= cs.domains().len() {
                        bad = Some(v.0);
                    }
                });
                if let Some(v) = bad {
                    return Err(ModelError::Invalid(format!("undeclared variable #{v}")));
                }
            }
            AtomDef::At(pg, l) => {
                if pg.0 >= cs.pgs().len() || l.0 >= cs.pg(*pg).locations().len() {
                    return Err(ModelError::Invalid("undeclared location".into()));
                }
            }
        }
        Ok(())
    }
}

fn message_matches(
    kind_ok: bool,
    channels: &[ChannelId],
    pred: Option<&Expr>,
    event: &EventRecord,
) -> Result<bool, ModelError> {
    if !kind_ok || !event.channel.is_some_and(|c| channels.contains(&c)) {
        return Ok(false);
    }
    match (pred, &event.payload) {
        (None, _) => Ok(true),
        (Some(p), Some(msg)) => p.eval_bool(std::slice::from_ref(msg)),
        (Some(_), None) => Ok(false),
    }
}

/// Label vector for an observation; `None` for the initial state, where no
/// message atom holds.
pub fn label(atoms: &[AtomDef], state: &CsState, event: Option<&EventRecord>) -> Result<Vec<bool>, ModelError> {
    atoms.iter().map(|a| a.holds(state, event)).collect()
}
