//! Hand-written channel systems in JSON.
//!
//! ```json
//! {
//!   "graphs": [{
//!     "name": "M",
//!     "locations": ["run"],
//!     "initial": ["run"],
//!     "variables": [{"name": "s", "domain": {"int": {"lo": 0, "hi": 2}}, "init": 0}],
//!     "clocks": ["x"],
//!     "transitions": [{
//!       "from": "run", "action": "step", "to": "run",
//!       "guard": "s == 0", "clock_guard": "x >= 1", "resets": ["x"],
//!       "effect": [{"probability": "1/2", "assign": {"s": "1"}}, {"probability": "1/2"}]
//!     }]
//!   }],
//!   "channels": []
//! }
//! ```
//!
//! Expressions use the graph's own variable names; clock guards compare its
//! clocks with constants. The same format is written by `--emit-model`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tpsmc_core::channel_system::{ChannelDecl, ChannelSystem, CommAction};
use tpsmc_core::error::ModelError;
use tpsmc_core::kernel::{ChannelId, PgId, Rational, Value, VarDomain};
use tpsmc_core::program_graph::{
    parse_clock_constraint, parse_guard, Branch, Effect, Expr, PgTransition, ProgramGraph, ProgramGraphBuilder,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub graphs: Vec<GraphSpec>,
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub name: String,
    pub locations: Vec<String>,
    pub initial: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variables: Vec<VariableSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clocks: Vec<String>,
    /// Declared up front to fix action ids; actions used by transitions are added.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_condition: Option<String>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub domain: VarDomain,
    /// Absent: the variable starts anywhere in its domain allowed by the initial condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub from: String,
    pub action: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_guard: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comm: Option<CommSpec>,
    /// Probabilistic branches; empty means no update.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effect: Vec<BranchSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    #[serde(default = "one")]
    pub probability: Rational,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub assign: BTreeMap<String, String>,
}

fn one() -> Rational {
    Rational::ONE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CommSpec {
    SendVar { channel: String, var: String },
    SendConst { channel: String, value: Value },
    SendExpr { channel: String, expr: String },
    RecvVar { channel: String, var: String },
    RecvTuple { channel: String, vars: Vec<String> },
    RecvConst { channel: String, value: Value },
    ProbeEmpty { channel: String },
    ProbeNonEmpty { channel: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub name: String,
    pub senders: Vec<String>,
    pub receiver: String,
    /// 0 declares a handshake channel.
    pub capacity: usize,
    pub domain: VarDomain,
}

fn invalid(msg: String) -> ModelError {
    ModelError::Invalid(msg)
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(format!("model file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    /// Builds the channel system.
    pub fn build(&self) -> Result<ChannelSystem, ModelError> {
        let channel = |name: &str| {
            self.channels
                .iter()
                .position(|c| c.name == name)
                .map(ChannelId)
                .ok_or_else(|| invalid(format!("undeclared channel `{name}`")))
        };
        let graph = |name: &str| {
            self.graphs
                .iter()
                .position(|g| g.name == name)
                .map(PgId)
                .ok_or_else(|| invalid(format!("undeclared graph `{name}`")))
        };
        let pgs = self
            .graphs
            .iter()
            .map(|g| build_graph(g, &channel).map_err(|e| e.context(format!("graph `{}`", g.name))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut channels = Vec::new();
        for c in &self.channels {
            channels.push(ChannelDecl {
                name: c.name.clone(),
                senders: c.senders.iter().map(|s| graph(s)).collect::<Result<_, _>>()?,
                receiver: graph(&c.receiver)?,
                capacity: c.capacity,
                message_domain: c.domain.clone(),
            });
        }
        ChannelSystem::new(pgs, channels)
    }

    /// Describes an existing channel system in this format.
    pub fn describe(cs: &ChannelSystem) -> Self {
        let channel_name = |c: ChannelId| cs.channel(c).name.clone();
        let graphs = cs.pgs().iter().map(|pg| describe_graph(pg, &channel_name)).collect();
        let channels = cs
            .channels()
            .iter()
            .map(|c| ChannelSpec {
                name: c.name.clone(),
                senders: c.senders.iter().map(|p| cs.pg(*p).name().to_string()).collect(),
                receiver: cs.pg(c.receiver).name().to_string(),
                capacity: c.capacity,
                domain: c.message_domain.clone(),
            })
            .collect();
        ModelFile { graphs, channels }
    }
}

fn build_graph(g: &GraphSpec, channel: &dyn Fn(&str) -> Result<ChannelId, ModelError>) -> Result<ProgramGraph, ModelError> {
    let mut b = ProgramGraphBuilder::new(g.name.clone());
    for l in &g.locations {
        b.location(l.clone());
    }
    for v in &g.variables {
        let init = v.init.clone().map(|x| v.domain.coerce(x));
        b.variable(v.name.clone(), v.domain.clone(), init)?;
    }
    for c in &g.clocks {
        b.clock(c.clone())?;
    }
    for a in &g.actions {
        b.action(a.clone());
    }
    let location = |b: &mut ProgramGraphBuilder, name: &str| {
        if g.locations.iter().any(|l| l == name) {
            Ok(b.location(name))
        } else {
            Err(invalid(format!("undeclared location `{name}`")))
        }
    };
    for l in &g.initial {
        let id = location(&mut b, l)?;
        b.initial(id);
    }
    let var = |b: &ProgramGraphBuilder, name: &str| b.var_id(name).ok_or_else(|| ModelError::UnknownVariable(name.to_string()));
    if let Some(src) = &g.initial_condition {
        let e = parse_guard(src, &|n: &str| b.var_id(n))?;
        b.initial_condition(e);
    }
    for (k, t) in g.transitions.iter().enumerate() {
        let at = |e: ModelError| e.context(format!("transition {k} ({} -{}-> {})", t.from, t.action, t.to));
        let build = |b: &mut ProgramGraphBuilder| -> Result<PgTransition, ModelError> {
            let source = location(b, &t.from)?;
            let target = location(b, &t.to)?;
            let action = b.action(t.action.clone());
            let mut tr = PgTransition::new(source, action, target);
            let scope = |n: &str| b.var_id(n);
            if let Some(src) = &t.guard {
                tr = tr.with_guard(parse_guard(src, &scope)?);
            }
            if let Some(src) = &t.clock_guard {
                tr = tr.with_clock_guard(parse_clock_constraint(src, &|n: &str| b.clock_id(n))?);
            }
            let resets = t
                .resets
                .iter()
                .map(|c| b.clock_id(c).ok_or_else(|| invalid(format!("undeclared clock `{c}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            if !resets.is_empty() {
                tr = tr.with_resets(resets);
            }
            if !t.effect.is_empty() {
                let mut branches = Vec::new();
                for br in &t.effect {
                    let mut updates = Vec::new();
                    for (v, src) in &br.assign {
                        updates.push((var(b, v)?, parse_guard(src, &scope)?));
                    }
                    branches.push(Branch {
                        probability: br.probability,
                        updates,
                    });
                }
                tr = tr.with_effect(Effect::new(branches)?);
            }
            if let Some(c) = &t.comm {
                tr = tr.with_comm(comm(c, channel, &|n| var(b, n), &scope)?);
            }
            Ok(tr)
        };
        let tr = build(&mut b).map_err(at)?;
        b.transition(tr);
    }
    b.build()
}

fn comm(
    c: &CommSpec,
    channel: &dyn Fn(&str) -> Result<ChannelId, ModelError>,
    var: &dyn Fn(&str) -> Result<tpsmc_core::program_graph::VarId, ModelError>,
    scope: &dyn tpsmc_core::program_graph::NameScope,
) -> Result<CommAction, ModelError> {
    Ok(match c {
        CommSpec::SendVar { channel: ch, var: v } => CommAction::SendVar {
            channel: channel(ch)?,
            var: var(v)?,
        },
        CommSpec::SendConst { channel: ch, value } => CommAction::SendConst {
            channel: channel(ch)?,
            value: value.clone(),
        },
        CommSpec::SendExpr { channel: ch, expr } => CommAction::SendExpr {
            channel: channel(ch)?,
            expr: parse_guard(expr, scope)?,
        },
        CommSpec::RecvVar { channel: ch, var: v } => CommAction::RecvVar {
            channel: channel(ch)?,
            var: var(v)?,
        },
        CommSpec::RecvTuple { channel: ch, vars } => CommAction::RecvTuple {
            channel: channel(ch)?,
            vars: vars.iter().map(|v| var(v)).collect::<Result<_, _>>()?,
        },
        CommSpec::RecvConst { channel: ch, value } => CommAction::RecvConst {
            channel: channel(ch)?,
            value: value.clone(),
        },
        CommSpec::ProbeEmpty { channel: ch } => CommAction::ProbeEmpty(channel(ch)?),
        CommSpec::ProbeNonEmpty { channel: ch } => CommAction::ProbeNonEmpty(channel(ch)?),
    })
}

fn describe_graph(pg: &ProgramGraph, channel: &dyn Fn(ChannelId) -> String) -> GraphSpec {
    let var = |v: tpsmc_core::program_graph::VarId| pg.variables()[v.0].name.clone();
    let expr = |e: &Expr| e.display(var).to_string();
    let transitions = pg
        .transitions()
        .iter()
        .map(|t| TransitionSpec {
            from: pg.location_name(t.source).to_string(),
            action: pg.action_name(t.action).to_string(),
            to: pg.location_name(t.target).to_string(),
            guard: (!t.guard.is_true()).then(|| expr(&t.guard)),
            clock_guard: (!t.clock_guard.is_trivially_true())
                .then(|| t.clock_guard.display(|c| pg.clocks()[c.0].clone()).to_string()),
            resets: t.resets.iter().map(|c| pg.clocks()[c.0].clone()).collect(),
            comm: t.comm.as_ref().map(|c| describe_comm(c, channel, &var, &expr)),
            effect: if t.effect.is_identity() {
                Vec::new()
            } else {
                t.effect
                    .branches()
                    .iter()
                    .map(|b| BranchSpec {
                        probability: b.probability,
                        assign: b.updates.iter().map(|(v, e)| (var(*v), expr(e))).collect(),
                    })
                    .collect()
            },
        })
        .collect();
    GraphSpec {
        name: pg.name().to_string(),
        locations: pg.locations().to_vec(),
        initial: pg.initial_locations().iter().map(|l| pg.location_name(*l).to_string()).collect(),
        variables: pg
            .variables()
            .iter()
            .map(|v| VariableSpec {
                name: v.name.clone(),
                domain: v.domain.clone(),
                init: v.init.clone(),
            })
            .collect(),
        clocks: pg.clocks().to_vec(),
        actions: pg.actions().to_vec(),
        initial_condition: (!pg.initial_condition().is_true()).then(|| expr(pg.initial_condition())),
        transitions,
    }
}

fn describe_comm(
    c: &CommAction,
    channel: &dyn Fn(ChannelId) -> String,
    var: &dyn Fn(tpsmc_core::program_graph::VarId) -> String,
    expr: &dyn Fn(&Expr) -> String,
) -> CommSpec {
    match c {
        CommAction::SendVar { channel: ch, var: v } => CommSpec::SendVar {
            channel: channel(*ch),
            var: var(*v),
        },
        CommAction::SendConst { channel: ch, value } => CommSpec::SendConst {
            channel: channel(*ch),
            value: value.clone(),
        },
        CommAction::SendExpr { channel: ch, expr: e } => CommSpec::SendExpr {
            channel: channel(*ch),
            expr: expr(e),
        },
        CommAction::RecvVar { channel: ch, var: v } => CommSpec::RecvVar {
            channel: channel(*ch),
            var: var(*v),
        },
        CommAction::RecvTuple { channel: ch, vars } => CommSpec::RecvTuple {
            channel: channel(*ch),
            vars: vars.iter().map(|v| var(*v)).collect(),
        },
        CommAction::RecvConst { channel: ch, value } => CommSpec::RecvConst {
            channel: channel(*ch),
            value: value.clone(),
        },
        CommAction::ProbeEmpty(ch) => CommSpec::ProbeEmpty { channel: channel(*ch) },
        CommAction::ProbeNonEmpty(ch) => CommSpec::ProbeNonEmpty { channel: channel(*ch) },
    }
}
