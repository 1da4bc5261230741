use std::collections::BTreeMap;

use serde::Serialize;
use tpsmc_core::kernel::{EventKind, EventRecord, Rational, Value};

use crate::compile::{ChannelRole, CompiledModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// Put on the receiver's external queue.
    Send,
    /// Put on the raiser's own internal queue.
    Raise,
    /// Taken from a queue by its owner.
    Receive,
}

/// One step of a run, told in terms of the charts' events.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageEvent {
    pub t: Rational,
    pub kind: MessageKind,
    /// The queue the event went through.
    pub channel: String,
    pub event: String,
    pub origin: String,
    pub target: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, Value>,
}

fn int(v: &Value) -> Option<usize> {
    v.as_int().and_then(|i| usize::try_from(i).ok())
}

/// Maps low-level steps to chart events. Parameter transfers are folded into the
/// event they belong to; all other internal steps are dropped.
pub fn map_trace(model: &CompiledModel, steps: &[(Rational, EventRecord)]) -> Vec<MessageEvent> {
    let cat = &model.catalog;
    let mut out = Vec::new();
    for (i, (t, ev)) in steps.iter().enumerate() {
        let (Some(c), Some(payload)) = (ev.channel, ev.payload.as_ref()) else { continue };
        let Some(role) = model.layout.role(c) else { continue };
        let sending = ev.kind == EventKind::Send;
        let (kind, e, origin, target) = match role {
            ChannelRole::Internal(a) => {
                let Some(e) = int(payload) else { continue };
                (if sending { MessageKind::Raise } else { MessageKind::Receive }, e, a, a)
            }
            ChannelRole::External(a) => {
                let Value::Tuple(items) = payload else { continue };
                let (Some(e), Some(o)) = (items.first().and_then(int), items.get(1).and_then(int)) else { continue };
                (if sending { MessageKind::Send } else { MessageKind::Receive }, e, o, a)
            }
            ChannelRole::Param(..) => continue,
        };
        let mut params = BTreeMap::new();
        if matches!(role, ChannelRole::External(_)) && !cat.events[e].params.is_empty() {
            let transfer = steps[i + 1..].iter().find(|(_, x)| {
                x.kind == ev.kind && x.channel.and_then(|c| model.layout.role(c)) == Some(ChannelRole::Param(e, origin, target))
            });
            if let Some((_, x)) = transfer {
                if let Some(Value::Tuple(values)) = &x.payload {
                    params = cat.events[e].params.iter().cloned().zip(values.iter().cloned()).collect();
                }
            }
        }
        out.push(MessageEvent {
            t: *t,
            kind,
            channel: model.system.channel(c).name.clone(),
            event: cat.events[e].name.clone(),
            origin: cat.automata[origin].clone(),
            target: cat.automata[target].clone(),
            params,
        });
    }
    out
}
