//! Probabilistic timed program graphs.
//!
//! One structure covers plain, probabilistic, timed and probabilistic-timed
//! program graphs: deterministic effects are single branches of probability 1
//! and untimed graphs simply declare no clocks.

mod expr;
mod semantics;
pub mod syntax;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::channel_system::CommAction;
use crate::error::ModelError;
use crate::kernel::{ClockConstraint, ClockId, Rational, Value, VarDomain};

pub use expr::{Expr, VarId};
pub use semantics::{
    apply_effect, enabled_transitions, eval_guard, initial_states, pg_step, trace_probability, transition_probability,
    Choice, PgState, PolicyResolver, Resolver, Step, TimeGrid, UniformResolver,
};
pub(crate) use semantics::{apply_branch, initial_valuations, sample_branch};
pub use syntax::{parse_clock_constraint, parse_expr, parse_guard, NameScope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocationId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub domain: VarDomain,
    /// Fixed initial value; when absent the variable ranges over its whole domain
    /// (filtered by the initial condition).
    pub init: Option<Value>,
}

/// One outcome of a probabilistic effect: assignments applied simultaneously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub probability: Rational,
    pub updates: Vec<(VarId, Expr)>,
}

/// Probability distribution over simultaneous updates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Effect {
    branches: Vec<Branch>,
    /// Integer weights proportional to the branch probabilities, for exact sampling.
    weights: Vec<u64>,
}

impl Effect {
    pub fn new(branches: Vec<Branch>) -> Result<Self, ModelError> {
        if branches.is_empty() {
            return Err(ModelError::Invalid("effect without branches".into()));
        }
        let mut total = Rational::ZERO;
        let mut lcm: i64 = 1;
        for b in &branches {
            let p = b.probability;
            if p.is_negative() || p.is_zero() || p > Rational::ONE {
                return Err(ModelError::Invalid(format!("branch probability {p} outside (0, 1]")));
            }
            total = total.checked_add(&p)?;
            lcm = num_integer::Integer::lcm(&lcm, &p.denom());
            if lcm > (1 << 53) {
                return Err(ModelError::Overflow.context("branch probability denominators"));
            }
        }
        if total != Rational::ONE {
            return Err(ModelError::Invalid(format!("branch probabilities sum to {total}, not 1")));
        }
        let weights = branches
            .iter()
            .map(|b| (b.probability.numer() * (lcm / b.probability.denom())) as u64)
            .collect();
        Ok(Effect { branches, weights })
    }

    /// The single probability-1 branch with the given updates.
    pub fn deterministic(updates: Vec<(VarId, Expr)>) -> Self {
        Effect {
            branches: vec![Branch {
                probability: Rational::ONE,
                updates,
            }],
            weights: vec![1],
        }
    }

    /// Leaves every variable unchanged.
    pub fn identity() -> Self {
        Self::deterministic(Vec::new())
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn is_deterministic(&self) -> bool {
        self.branches.len() == 1
    }

    pub fn is_identity(&self) -> bool {
        self.is_deterministic() && self.branches[0].updates.is_empty()
    }
}

impl Default for Effect {
    fn default() -> Self {
        Effect::identity()
    }
}

/// A guarded, possibly timed and probabilistic edge.
///
/// A transition may carry a communication action; in that case the communication
/// happens first and the effect is applied to the resulting valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgTransition {
    pub source: LocationId,
    pub action: ActionId,
    pub guard: Expr,
    pub clock_guard: ClockConstraint,
    pub resets: Vec<ClockId>,
    pub effect: Effect,
    pub target: LocationId,
    pub comm: Option<CommAction>,
}

impl PgTransition {
    pub fn new(source: LocationId, action: ActionId, target: LocationId) -> Self {
        PgTransition {
            source,
            action,
            guard: Expr::TRUE,
            clock_guard: ClockConstraint::True,
            resets: Vec::new(),
            effect: Effect::identity(),
            target,
            comm: None,
        }
    }

    pub fn with_guard(mut self, guard: Expr) -> Self {
        self.guard = guard;
        self
    }

    pub fn with_clock_guard(mut self, guard: ClockConstraint) -> Self {
        self.clock_guard = guard;
        self
    }

    pub fn with_resets(mut self, resets: Vec<ClockId>) -> Self {
        self.resets = resets;
        self
    }

    pub fn with_effect(mut self, effect: Effect) -> Self {
        self.effect = effect;
        self
    }

    pub fn with_comm(mut self, comm: CommAction) -> Self {
        self.comm = Some(comm);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramGraph {
    name: String,
    locations: Vec<String>,
    initial_locations: Vec<LocationId>,
    variables: Vec<VarDecl>,
    clocks: Vec<String>,
    actions: Vec<String>,
    initial_condition: Expr,
    transitions: Vec<PgTransition>,
    outgoing: Vec<Vec<usize>>,
    domains: Vec<VarDomain>,
}

impl ProgramGraph {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn location_name(&self, l: LocationId) -> &str {
        &self.locations[l.0]
    }

    pub fn location_id(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().position(|n| n == name).map(LocationId)
    }

    pub fn initial_locations(&self) -> &[LocationId] {
        &self.initial_locations
    }

    pub fn variables(&self) -> &[VarDecl] {
        &self.variables
    }

    pub fn domains(&self) -> &[VarDomain] {
        &self.domains
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn clocks(&self) -> &[String] {
        &self.clocks
    }

    pub fn clock_id(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(ClockId)
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        &self.actions[a.0]
    }

    pub fn initial_condition(&self) -> &Expr {
        &self.initial_condition
    }

    pub fn transitions(&self) -> &[PgTransition] {
        &self.transitions
    }

    /// Indices of the transitions leaving `l`, in declaration order.
    pub fn outgoing(&self, l: LocationId) -> &[usize] {
        &self.outgoing[l.0]
    }

    /// True when no location has two transitions labelled with the same action.
    pub fn is_action_deterministic(&self) -> bool {
        self.outgoing.iter().all(|ts| {
            let mut seen = std::collections::HashSet::new();
            ts.iter().all(|t| seen.insert(self.transitions[*t].action))
        })
    }

    /// Locations with no outgoing transitions at all.
    pub fn sink_locations(&self) -> Vec<LocationId> {
        (0..self.locations.len())
            .filter(|l| self.outgoing[*l].is_empty())
            .map(LocationId)
            .collect()
    }
}

/// Incremental constructor for [`ProgramGraph`].
#[derive(Debug, Clone, Default)]
pub struct ProgramGraphBuilder {
    name: String,
    locations: Vec<String>,
    location_index: HashMap<String, LocationId>,
    initial_locations: Vec<LocationId>,
    variables: Vec<VarDecl>,
    clocks: Vec<String>,
    actions: Vec<String>,
    action_index: HashMap<String, ActionId>,
    initial_condition: Option<Expr>,
    transitions: Vec<PgTransition>,
}

impl ProgramGraphBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ProgramGraphBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Declares (or looks up) a location by name.
    pub fn location(&mut self, name: impl Into<String>) -> LocationId {
        let name = name.into();
        if let Some(id) = self.location_index.get(&name) {
            return *id;
        }
        let id = LocationId(self.locations.len());
        self.locations.push(name.clone());
        self.location_index.insert(name, id);
        id
    }

    /// A location with a fresh name derived from `hint`.
    pub fn fresh_location(&mut self, hint: &str) -> LocationId {
        let mut name = hint.to_string();
        let mut k = 1;
        while self.location_index.contains_key(&name) {
            name = format!("{hint}#{k}");
            k += 1;
        }
        self.location(name)
    }

    pub fn initial(&mut self, l: LocationId) -> &mut Self {
        if !self.initial_locations.contains(&l) {
            self.initial_locations.push(l);
        }
        self
    }

    pub fn variable(&mut self, name: impl Into<String>, domain: VarDomain, init: Option<Value>) -> Result<VarId, ModelError> {
        let name = name.into();
        if self.variables.iter().any(|v| v.name == name) {
            return Err(ModelError::Invalid(format!("variable `{name}` declared twice")));
        }
        domain.validate()?;
        let init = match init {
            Some(v) => {
                let v = domain.coerce(v);
                if !domain.contains(&v) {
                    return Err(ModelError::OutOfDomain {
                        target: name,
                        value: v.to_string(),
                    });
                }
                Some(v)
            }
            None => None,
        };
        self.variables.push(VarDecl { name, domain, init });
        Ok(VarId(self.variables.len() - 1))
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn variables(&self) -> &[VarDecl] {
        &self.variables
    }

    pub fn clock(&mut self, name: impl Into<String>) -> Result<ClockId, ModelError> {
        let name = name.into();
        if self.clocks.contains(&name) {
            return Err(ModelError::Invalid(format!("clock `{name}` declared twice")));
        }
        self.clocks.push(name);
        Ok(ClockId(self.clocks.len() - 1))
    }

    pub fn clock_id(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(ClockId)
    }

    /// Declares (or looks up) an action by name.
    pub fn action(&mut self, name: impl Into<String>) -> ActionId {
        let name = name.into();
        if let Some(id) = self.action_index.get(&name) {
            return *id;
        }
        let id = ActionId(self.actions.len());
        self.actions.push(name.clone());
        self.action_index.insert(name, id);
        id
    }

    pub fn initial_condition(&mut self, g: Expr) -> &mut Self {
        self.initial_condition = Some(g);
        self
    }

    pub fn transition(&mut self, t: PgTransition) -> usize {
        self.transitions.push(t);
        self.transitions.len() - 1
    }

    pub fn build(self) -> Result<ProgramGraph, ModelError> {
        let name = self.name.clone();
        self.build_inner().map_err(|e| e.context(format!("program graph `{name}`")))
    }

    fn build_inner(self) -> Result<ProgramGraph, ModelError> {
        if self.locations.is_empty() {
            return Err(ModelError::Invalid("no locations".into()));
        }
        if self.initial_locations.is_empty() {
            return Err(ModelError::Invalid("no initial location".into()));
        }
        let domains: Vec<VarDomain> = self.variables.iter().map(|v| v.domain.clone()).collect();
        let initial_condition = self.initial_condition.unwrap_or(Expr::TRUE);
        check_bool(&initial_condition, &domains).map_err(|e| e.context("initial condition"))?;
        let n_locs = self.locations.len();
        let mut outgoing = vec![Vec::new(); n_locs];
        for (i, t) in self.transitions.iter().enumerate() {
            let ctx = || format!("transition #{i} from `{}`", self.locations.get(t.source.0).map_or("?", |s| s));
            if t.source.0 >= n_locs || t.target.0 >= n_locs {
                return Err(ModelError::Invalid("unknown location".into()).context(ctx()));
            }
            if t.action.0 >= self.actions.len() {
                return Err(ModelError::Invalid("unknown action".into()).context(ctx()));
            }
            check_bool(&t.guard, &domains).map_err(|e| e.context(ctx()))?;
            t.clock_guard.validate(self.clocks.len()).map_err(|e| e.context(ctx()))?;
            if let Some(c) = t.resets.iter().find(|c| c.0 >= self.clocks.len()) {
                return Err(ModelError::UnknownClock(c.0).context(ctx()));
            }
            for (b, branch) in t.effect.branches.iter().enumerate() {
                for (v, e) in &branch.updates {
                    let d = domains
                        .get(v.0)
                        .ok_or_else(|| ModelError::UnknownVariable(format!("#{}", v.0)).context(ctx()))?;
                    let ty = e.type_of(&domains).map_err(|e| e.context(ctx()))?;
                    if !d.value_type().accepts(&ty) {
                        return Err(ModelError::Type(format!(
                            "branch {b} assigns {ty} to `{}` of type {}",
                            self.variables[v.0].name,
                            d.value_type()
                        ))
                        .context(ctx()));
                    }
                }
            }
            outgoing[t.source.0].push(i);
        }
        Ok(ProgramGraph {
            name: self.name,
            locations: self.locations,
            initial_locations: self.initial_locations,
            variables: self.variables,
            clocks: self.clocks,
            actions: self.actions,
            initial_condition,
            transitions: self.transitions,
            outgoing,
            domains,
        })
    }
}

fn check_bool(e: &Expr, domains: &[VarDomain]) -> Result<(), ModelError> {
    match e.type_of(domains)? {
        crate::kernel::Type::Bool => Ok(()),
        t => Err(ModelError::Type(format!("guard has type {t}, expected bool"))),
    }
}
