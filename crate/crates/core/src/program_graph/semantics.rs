use std::collections::HashSet;

use crate::error::ModelError;
use crate::kernel::{earliest_delay, ClockValuation, Delay, EventRecord, PgId, Rational, Rng, Value, VarDomain};

use super::{ActionId, Expr, LocationId, PgTransition, ProgramGraph, VarDecl};

/// Location, variable valuation and clock valuation of a single program graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PgState {
    pub location: LocationId,
    pub valuation: Vec<Value>,
    pub clocks: ClockValuation,
}

/// Discrete time grid used to pick firing instants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    pub quantum: Rational,
    /// Longest wait, in quanta, before a state is declared time-locked.
    pub horizon: u64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            quantum: Rational::ONE,
            horizon: 10_000,
        }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.quantum.is_zero() || self.quantum.is_negative() {
            return Err(ModelError::Argument(format!("time quantum must be positive, got {}", self.quantum)));
        }
        Ok(())
    }
}

/// Result of one simulation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step<S> {
    Fired { state: S, event: EventRecord, time: Rational },
    /// No transition can ever become enabled.
    Terminal,
    /// Something becomes enabled, but only after the horizon.
    TimeLocked,
}

/// One alternative offered to a [`Resolver`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    pub pg: PgId,
    pub location: LocationId,
    pub transition: usize,
    pub action: ActionId,
}

/// Picks one of several simultaneously enabled alternatives.
pub trait Resolver {
    fn choose(&mut self, options: &[Choice], rng: &mut Rng) -> Result<usize, ModelError>;
}

/// Uniform choice among all alternatives.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformResolver;

impl Resolver for UniformResolver {
    fn choose(&mut self, options: &[Choice], rng: &mut Rng) -> Result<usize, ModelError> {
        Ok(rng.below(options.len()))
    }
}

/// Follows a memoryless policy: the action is fixed by the acting graph's location,
/// and transitions sharing that action are chosen uniformly.
pub struct PolicyResolver<F> {
    pub policy: F,
}

impl<F: FnMut(PgId, LocationId) -> Option<ActionId>> Resolver for PolicyResolver<F> {
    fn choose(&mut self, options: &[Choice], rng: &mut Rng) -> Result<usize, ModelError> {
        let mut matching = Vec::new();
        for (i, c) in options.iter().enumerate() {
            let Some(a) = (self.policy)(c.pg, c.location) else {
                return Err(ModelError::Argument(format!("policy undefined at location #{}", c.location.0)));
            };
            if a == c.action {
                matching.push(i);
            }
        }
        if matching.is_empty() {
            return Err(ModelError::Argument("policy selects an action with no enabled transition".into()));
        }
        Ok(matching[rng.below(matching.len())])
    }
}

/// `η ⊨ g`.
pub fn eval_guard(g: &Expr, valuation: &[Value]) -> Result<bool, ModelError> {
    g.eval_bool(valuation)
}

/// Transitions leaving the current location whose data and clock guards both hold, in
/// declaration order.
pub fn enabled_transitions(pg: &ProgramGraph, s: &PgState) -> Result<Vec<usize>, ModelError> {
    let mut out = Vec::new();
    for &t in pg.outgoing(s.location) {
        let tr = &pg.transitions()[t];
        if eval_guard(&tr.guard, &s.valuation)? && s.clocks.satisfies(&tr.clock_guard)? {
            out.push(t);
        }
    }
    Ok(out)
}

pub(crate) fn sample_branch(tr: &PgTransition, rng: &mut Rng) -> usize {
    rng.weighted(tr.effect.weights())
}

/// Applies branch `b` of transition `t` to `env` (the graph's own variables), all
/// right-hand sides read in the pre-state.
pub(crate) fn apply_branch(pg: &ProgramGraph, t: usize, b: usize, env: &mut [Value]) -> Result<(), ModelError> {
    let tr = &pg.transitions()[t];
    let branch = &tr.effect.branches()[b];
    let ctx = || format!("transition #{t} of `{}`, branch {b}", pg.name());
    let values = branch
        .updates
        .iter()
        .map(|(_, e)| e.eval(env))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.context(ctx()))?;
    for ((v, _), value) in branch.updates.iter().zip(values) {
        let decl = &pg.variables()[v.0];
        let value = decl.domain.coerce(value);
        if !decl.domain.contains(&value) {
            return Err(ModelError::OutOfDomain {
                target: decl.name.clone(),
                value: value.to_string(),
            }
            .context(ctx()));
        }
        env[v.0] = value;
    }
    Ok(())
}

/// Fires `t` from `s`: samples a branch, updates variables, resets clocks and moves
/// to the target location.
pub fn apply_effect(pg: &ProgramGraph, t: usize, s: &PgState, rng: &mut Rng) -> Result<PgState, ModelError> {
    let tr = &pg.transitions()[t];
    let mut next = s.clone();
    let b = sample_branch(tr, rng);
    apply_branch(pg, t, b, &mut next.valuation)?;
    next.clocks.reset_in_place(&tr.resets)?;
    next.location = tr.target;
    Ok(next)
}

const INITIAL_STATE_LIMIT: u128 = 1_000_000;

/// Valuations satisfying the initial condition: declared initial values are fixed,
/// other variables range over their (finite) domains.
pub(crate) fn initial_valuations(vars: &[VarDecl], g0: &Expr) -> Result<Vec<Vec<Value>>, ModelError> {
    let mut choices: Vec<Vec<Value>> = Vec::with_capacity(vars.len());
    let mut total: u128 = 1;
    for v in vars {
        let options = match &v.init {
            Some(init) => vec![init.clone()],
            None => enumerate_domain(&v.domain, &v.name)?,
        };
        total = total.saturating_mul(options.len() as u128);
        if total > INITIAL_STATE_LIMIT {
            return Err(ModelError::Invalid(format!(
                "more than {INITIAL_STATE_LIMIT} candidate initial valuations; give variables explicit initial values"
            )));
        }
        choices.push(options);
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(vars.len());
    product(&choices, &mut current, &mut |vals| {
        if g0.eval_bool(vals)? {
            out.push(vals.to_vec());
        }
        Ok(())
    })?;
    Ok(out)
}

fn enumerate_domain(d: &VarDomain, name: &str) -> Result<Vec<Value>, ModelError> {
    d.enumerate(INITIAL_STATE_LIMIT).ok_or_else(|| {
        ModelError::Invalid(format!("variable `{name}` has no initial value and its domain {d} is too large to enumerate"))
    })
}

fn product(
    choices: &[Vec<Value>],
    current: &mut Vec<Value>,
    f: &mut impl FnMut(&[Value]) -> Result<(), ModelError>,
) -> Result<(), ModelError> {
    if current.len() == choices.len() {
        return f(current);
    }
    for v in &choices[current.len()] {
        current.push(v.clone());
        product(choices, current, f)?;
        current.pop();
    }
    Ok(())
}

/// All initial states: initial locations × valuations satisfying the initial condition,
/// clocks at zero.
pub fn initial_states(pg: &ProgramGraph) -> Result<Vec<PgState>, ModelError> {
    let vals = initial_valuations(pg.variables(), pg.initial_condition())?;
    if vals.is_empty() {
        return Err(ModelError::Invalid(format!("initial condition of `{}` is unsatisfiable", pg.name())));
    }
    let mut out = Vec::new();
    for &l in pg.initial_locations() {
        for v in &vals {
            out.push(PgState {
                location: l,
                valuation: v.clone(),
                clocks: ClockValuation::zero(pg.clocks().len()),
            });
        }
    }
    Ok(out)
}

/// Probability that taking action `alpha` in `s` leads to `next`.
///
/// When several enabled transitions carry `alpha`, the step picks one of them
/// uniformly, so the result is the average of their effect probabilities. With a
/// single `alpha`-transition this is exactly the effect probability.
pub fn transition_probability(
    pg: &ProgramGraph,
    s: &PgState,
    alpha: ActionId,
    next: &PgState,
) -> Result<Rational, ModelError> {
    let candidates: Vec<usize> = enabled_transitions(pg, s)?
        .into_iter()
        .filter(|t| pg.transitions()[*t].action == alpha)
        .collect();
    if candidates.is_empty() {
        return Ok(Rational::ZERO);
    }
    let mut total = Rational::ZERO;
    for &t in &candidates {
        let tr = &pg.transitions()[t];
        if tr.target != next.location || s.clocks.reset(&tr.resets)? != next.clocks {
            continue;
        }
        for (b, branch) in tr.effect.branches().iter().enumerate() {
            let mut env = s.valuation.clone();
            apply_branch(pg, t, b, &mut env)?;
            if env.iter().zip(&next.valuation).all(|(x, y)| x.sem_eq(y)) {
                total = total.checked_add(&branch.probability)?;
            }
        }
    }
    total.checked_div(&Rational::from_int(candidates.len() as i64))
}

/// Probability of the execution fragment `rho` under the memoryless policy `pi`, with
/// the initial distribution uniform over [`initial_states`].
pub fn trace_probability(
    pg: &ProgramGraph,
    pi: &dyn Fn(LocationId) -> Option<ActionId>,
    rho: &[PgState],
) -> Result<Rational, ModelError> {
    let Some(first) = rho.first() else {
        return Err(ModelError::Argument("empty execution fragment".into()));
    };
    let init = initial_states(pg)?;
    let distinct: HashSet<&PgState> = init.iter().collect();
    let mut p = if distinct.contains(first) {
        Rational::new(1, distinct.len() as i64)?
    } else {
        Rational::ZERO
    };
    for w in rho.windows(2) {
        let alpha = pi(w[0].location).ok_or_else(|| {
            ModelError::Argument(format!("policy undefined at location `{}`", pg.location_name(w[0].location)))
        })?;
        p = p.checked_mul(&transition_probability(pg, &w[0], alpha, &w[1])?)?;
    }
    Ok(p)
}

/// One step of a single program graph at time `now`.
///
/// Fires at the earliest grid instant at which some transition is enabled; among
/// the transitions enabled then, `resolver` picks one. Transitions that carry a
/// communication action have no partner outside a channel system and never fire here.
pub fn pg_step(
    pg: &ProgramGraph,
    s: &PgState,
    now: Rational,
    rng: &mut Rng,
    resolver: &mut dyn Resolver,
    grid: TimeGrid,
) -> Result<Step<PgState>, ModelError> {
    grid.validate()?;
    let mut best: Option<u64> = None;
    let mut enabled = Vec::new();
    let mut locked = false;
    for &t in pg.outgoing(s.location) {
        let tr = &pg.transitions()[t];
        if tr.comm.is_some() || !eval_guard(&tr.guard, &s.valuation)? {
            continue;
        }
        match earliest_delay(&[(&tr.clock_guard, &s.clocks)], grid.quantum, grid.horizon)? {
            Delay::At(k) => match best {
                Some(b) if k > b => {}
                Some(b) if k == b => enabled.push(t),
                _ => {
                    best = Some(k);
                    enabled = vec![t];
                }
            },
            Delay::BeyondHorizon => locked = true,
            Delay::Never => {}
        }
    }
    let Some(k) = best else {
        return Ok(if locked { Step::TimeLocked } else { Step::Terminal });
    };
    let delay = grid.quantum.checked_mul(&Rational::from_int(k as i64))?;
    let time = now.checked_add(&delay)?;
    let options: Vec<Choice> = enabled
        .iter()
        .map(|&t| Choice {
            pg: PgId(0),
            location: s.location,
            transition: t,
            action: pg.transitions()[t].action,
        })
        .collect();
    let pick = options[resolver.choose(&options, rng)?].transition;
    let waited = PgState {
        location: s.location,
        valuation: s.valuation.clone(),
        clocks: s.clocks.advance(delay)?,
    };
    let state = apply_effect(pg, pick, &waited, rng)?;
    Ok(Step::Fired {
        state,
        event: EventRecord::internal(PgId(0), pick),
        time,
    })
}
