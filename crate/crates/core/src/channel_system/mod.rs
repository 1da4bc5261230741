//! Parallel composition of program graphs communicating over FIFO channels.
//!
//! Channels with capacity 0 synchronize a sender and a receiver in a single
//! handshake step; channels with positive capacity buffer messages. Probes test
//! a buffered channel for emptiness without touching it.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::ModelError;
use crate::kernel::{
    earliest_delay, ChannelId, ClockConstraint, ClockValuation, Delay, EventKind, EventRecord, PgId, Rational, Rng,
    Value, VarDomain,
};
use crate::program_graph::{
    apply_branch, initial_valuations, sample_branch, Choice, Expr, LocationId, ProgramGraph, Resolver, Step, TimeGrid,
    VarId,
};

const INITIAL_STATE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelDecl {
    pub name: String,
    /// Graphs allowed to send; a handshake channel has exactly one.
    pub senders: Vec<PgId>,
    pub receiver: PgId,
    /// 0 for a handshake channel.
    pub capacity: usize,
    pub message_domain: VarDomain,
}

impl ChannelDecl {
    /// Point-to-point channel.
    pub fn new(name: impl Into<String>, sender: PgId, receiver: PgId, capacity: usize, message_domain: VarDomain) -> Self {
        ChannelDecl {
            name: name.into(),
            senders: vec![sender],
            receiver,
            capacity,
            message_domain,
        }
    }

    pub fn sole_sender(&self) -> Option<PgId> {
        match self.senders.as_slice() {
            [p] => Some(*p),
            _ => None,
        }
    }
}

/// Communication label of a transition. Variables are local to the owning graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CommAction {
    /// `c!x`
    SendVar { channel: ChannelId, var: VarId },
    /// `c!m`
    SendConst { channel: ChannelId, value: Value },
    /// `c!e` for an arbitrary expression, evaluated in the pre-state.
    SendExpr { channel: ChannelId, expr: Expr },
    /// `c?x`
    RecvVar { channel: ChannelId, var: VarId },
    /// `c?(x₁, …, xₖ)`: receives a tuple and spreads it over the variables.
    RecvTuple { channel: ChannelId, vars: Vec<VarId> },
    /// `c?m`: only enabled when the front message equals `m`.
    RecvConst { channel: ChannelId, value: Value },
    ProbeEmpty(ChannelId),
    ProbeNonEmpty(ChannelId),
}

impl CommAction {
    pub fn channel(&self) -> ChannelId {
        match self {
            CommAction::SendVar { channel, .. }
            | CommAction::SendConst { channel, .. }
            | CommAction::SendExpr { channel, .. }
            | CommAction::RecvVar { channel, .. }
            | CommAction::RecvTuple { channel, .. }
            | CommAction::RecvConst { channel, .. }
            | CommAction::ProbeEmpty(channel)
            | CommAction::ProbeNonEmpty(channel) => *channel,
        }
    }

    pub fn is_send(&self) -> bool {
        matches!(
            self,
            CommAction::SendVar { .. } | CommAction::SendConst { .. } | CommAction::SendExpr { .. }
        )
    }

    pub fn is_receive(&self) -> bool {
        matches!(
            self,
            CommAction::RecvVar { .. } | CommAction::RecvTuple { .. } | CommAction::RecvConst { .. }
        )
    }

    pub fn is_probe(&self) -> bool {
        matches!(self, CommAction::ProbeEmpty(_) | CommAction::ProbeNonEmpty(_))
    }

    /// Message produced by a send action under `env`.
    fn message(&self, env: &[Value]) -> Result<Value, ModelError> {
        match self {
            CommAction::SendVar { var, .. } => Ok(env[var.0].clone()),
            CommAction::SendConst { value, .. } => Ok(value.clone()),
            CommAction::SendExpr { expr, .. } => expr.eval(env),
            _ => Err(ModelError::Contract("not a send action".into())),
        }
    }
}

/// Contents of every channel, front first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ChannelEvaluation {
    contents: Vec<VecDeque<Value>>,
}

impl ChannelEvaluation {
    pub fn empty(n: usize) -> Self {
        ChannelEvaluation {
            contents: vec![VecDeque::new(); n],
        }
    }

    pub fn get(&self, c: ChannelId) -> &VecDeque<Value> {
        &self.contents[c.0]
    }

    pub fn get_mut(&mut self, c: ChannelId) -> &mut VecDeque<Value> {
        &mut self.contents[c.0]
    }

    pub fn len(&self, c: ChannelId) -> usize {
        self.contents[c.0].len()
    }

    pub fn channel_count(&self) -> usize {
        self.contents.len()
    }

    pub fn all_empty(&self) -> bool {
        self.contents.iter().all(VecDeque::is_empty)
    }
}

/// Global state: one location per graph, the joint valuation (graph slices laid
/// end to end), per-graph clocks, and channel contents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CsState {
    pub locations: Vec<LocationId>,
    pub valuation: Vec<Value>,
    pub clocks: Vec<ClockValuation>,
    pub channels: ChannelEvaluation,
}

/// State proposition: a graph is at a location, or a condition over the joint
/// valuation holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Proposition {
    At(PgId, LocationId),
    Holds(Expr),
}

/// A way for the system to make progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    /// One graph fires one transition: an internal step, a buffered send or
    /// receive, or a probe.
    Local { pg: PgId, transition: usize },
    /// Synchronous transfer over a capacity-0 channel.
    Handshake {
        channel: ChannelId,
        sender: PgId,
        send: usize,
        receiver: PgId,
        recv: usize,
    },
}

/// `[PG₁ | … | PGₙ]` over declared channels.
#[derive(Debug, Clone)]
pub struct ChannelSystem {
    pgs: Vec<ProgramGraph>,
    channels: Vec<ChannelDecl>,
    offsets: Vec<usize>,
    var_index: HashMap<String, VarId>,
    var_names: Vec<String>,
    domains: Vec<VarDomain>,
    /// Per handshake channel: indices of its send transitions (in the sender) and
    /// receive transitions (in the receiver).
    handshake_sends: Vec<Vec<usize>>,
    handshake_recvs: Vec<Vec<usize>>,
}

impl ChannelSystem {
    pub fn new(pgs: Vec<ProgramGraph>, channels: Vec<ChannelDecl>) -> Result<Self, ModelError> {
        if pgs.is_empty() {
            return Err(ModelError::Invalid("channel system without program graphs".into()));
        }
        let mut names = HashSet::new();
        for pg in &pgs {
            if !names.insert(pg.name()) {
                return Err(ModelError::Invalid(format!("program graph `{}` declared twice", pg.name())));
            }
        }
        let mut offsets = Vec::with_capacity(pgs.len());
        let mut var_index = HashMap::new();
        let mut var_names = Vec::new();
        let mut domains = Vec::new();
        for pg in &pgs {
            offsets.push(var_names.len());
            for v in pg.variables() {
                if var_index.insert(v.name.clone(), VarId(var_names.len())).is_some() {
                    return Err(ModelError::Invalid(format!(
                        "variable `{}` of `{}` collides with another graph's variable",
                        v.name,
                        pg.name()
                    )));
                }
                var_names.push(v.name.clone());
                domains.push(v.domain.clone());
            }
        }
        let mut channel_names = HashSet::new();
        for c in &channels {
            if !channel_names.insert(c.name.as_str()) {
                return Err(ModelError::Invalid(format!("channel `{}` declared twice", c.name)));
            }
            if c.senders.iter().any(|p| p.0 >= pgs.len()) || c.receiver.0 >= pgs.len() {
                return Err(ModelError::Invalid(format!("channel `{}` connects unknown graphs", c.name)));
            }
            if c.senders.iter().collect::<HashSet<_>>().len() != c.senders.len() {
                return Err(ModelError::Invalid(format!("channel `{}` needs distinct senders", c.name)));
            }
            if c.capacity == 0 && (c.sole_sender().is_none() || c.senders[0] == c.receiver) {
                return Err(ModelError::Invalid(format!(
                    "handshake channel `{}` needs one sender distinct from its receiver",
                    c.name
                )));
            }
            c.message_domain.validate().map_err(|e| e.context(format!("channel `{}`", c.name)))?;
        }
        let mut handshake_sends = vec![Vec::new(); channels.len()];
        let mut handshake_recvs = vec![Vec::new(); channels.len()];
        for (i, pg) in pgs.iter().enumerate() {
            for (t, tr) in pg.transitions().iter().enumerate() {
                if let Some(a) = &tr.comm {
                    check_comm(pg, PgId(i), a, &channels)
                        .map_err(|e| e.context(format!("transition #{t} of `{}`", pg.name())))?;
                    let c = a.channel();
                    if channels[c.0].capacity == 0 {
                        if a.is_send() {
                            handshake_sends[c.0].push(t);
                        } else {
                            handshake_recvs[c.0].push(t);
                        }
                    }
                }
            }
        }
        Ok(ChannelSystem {
            pgs,
            channels,
            offsets,
            var_index,
            var_names,
            domains,
            handshake_sends,
            handshake_recvs,
        })
    }

    pub fn pgs(&self) -> &[ProgramGraph] {
        &self.pgs
    }

    pub fn pg(&self, id: PgId) -> &ProgramGraph {
        &self.pgs[id.0]
    }

    pub fn pg_id(&self, name: &str) -> Option<PgId> {
        self.pgs.iter().position(|p| p.name() == name).map(PgId)
    }

    pub fn channels(&self) -> &[ChannelDecl] {
        &self.channels
    }

    pub fn channel(&self, id: ChannelId) -> &ChannelDecl {
        &self.channels[id.0]
    }

    pub fn channel_id(&self, name: &str) -> Option<ChannelId> {
        self.channels.iter().position(|c| c.name == name).map(ChannelId)
    }

    /// Index of a variable in the joint valuation.
    pub fn global_var(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn global_var_of(&self, pg: PgId, local: VarId) -> VarId {
        VarId(self.offsets[pg.0] + local.0)
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    /// Domains of the joint valuation.
    pub fn domains(&self) -> &[VarDomain] {
        &self.domains
    }

    fn slice_range(&self, pg: PgId) -> std::ops::Range<usize> {
        let start = self.offsets[pg.0];
        start..start + self.pgs[pg.0].variables().len()
    }

    /// The part of the joint valuation owned by `pg`.
    pub fn local<'a>(&self, s: &'a CsState, pg: PgId) -> &'a [Value] {
        &s.valuation[self.slice_range(pg)]
    }

    /// Which of `props` hold in `s`.
    pub fn labels(&self, s: &CsState, props: &[Proposition]) -> Result<Vec<bool>, ModelError> {
        props
            .iter()
            .map(|p| match p {
                Proposition::At(pg, l) => Ok(s.locations[pg.0] == *l),
                Proposition::Holds(g) => g.eval_bool(&s.valuation),
            })
            .collect()
    }

    /// Table-3 enabledness of a buffered communication action.
    pub fn comm_enabled(&self, a: &CommAction, xi: &ChannelEvaluation, _env: &[Value]) -> Result<bool, ModelError> {
        let c = a.channel();
        let decl = &self.channels[c.0];
        if decl.capacity == 0 {
            return Err(ModelError::Contract(format!(
                "`{}` is a handshake channel; it has no buffer to test",
                decl.name
            )));
        }
        let q = xi.get(c);
        Ok(match a {
            CommAction::SendVar { .. } | CommAction::SendConst { .. } | CommAction::SendExpr { .. } => {
                q.len() < decl.capacity
            }
            CommAction::RecvVar { .. } | CommAction::RecvTuple { .. } => !q.is_empty(),
            CommAction::RecvConst { value, .. } => q.front().is_some_and(|m| m.sem_eq(value)),
            CommAction::ProbeEmpty(_) => q.is_empty(),
            CommAction::ProbeNonEmpty(_) => !q.is_empty(),
        })
    }

    /// Table-3 effect of a buffered communication action performed by `pg`,
    /// whose own variables are `env`.
    pub fn comm_effect(
        &self,
        pg: PgId,
        a: &CommAction,
        xi: &ChannelEvaluation,
        env: &[Value],
    ) -> Result<(ChannelEvaluation, Vec<Value>, EventRecord), ModelError> {
        let mut xi = xi.clone();
        let mut env = env.to_vec();
        let mut event = EventRecord::internal(pg, usize::MAX);
        self.comm_effect_in_place(pg, a, &mut xi, &mut env, &mut event)?;
        Ok((xi, env, event))
    }

    fn comm_effect_in_place(
        &self,
        pg: PgId,
        a: &CommAction,
        xi: &mut ChannelEvaluation,
        env: &mut [Value],
        event: &mut EventRecord,
    ) -> Result<(), ModelError> {
        let c = a.channel();
        let decl = &self.channels[c.0];
        event.channel = Some(c);
        if a.is_send() {
            let m = decl.message_domain.coerce(a.message(env)?);
            if !decl.message_domain.contains(&m) {
                return Err(ModelError::OutOfDomain {
                    target: format!("channel `{}`", decl.name),
                    value: m.to_string(),
                });
            }
            if xi.len(c) >= decl.capacity {
                return Err(ModelError::Contract(format!("send on full channel `{}`", decl.name)));
            }
            xi.get_mut(c).push_back(m.clone());
            event.kind = EventKind::Send;
            event.payload = Some(m);
            event.source_pg = Some(pg);
            event.target_pg = Some(decl.receiver);
        } else if a.is_receive() {
            let m = xi
                .get_mut(c)
                .pop_front()
                .ok_or_else(|| ModelError::Contract(format!("receive on empty channel `{}`", decl.name)))?;
            store(self.pg(pg), a, &m, env)?;
            event.kind = EventKind::Receive;
            event.payload = Some(m);
            event.source_pg = decl.sole_sender();
            event.target_pg = Some(pg);
        } else {
            event.kind = EventKind::Internal;
        }
        Ok(())
    }

    /// Moves enabled in `s` without letting time pass, in canonical order:
    /// graph index, declaration order, handshakes last.
    pub fn enabled_moves(&self, s: &CsState) -> Result<Vec<Move>, ModelError> {
        Ok(self
            .candidate_moves(s)?
            .into_iter()
            .filter(|(_, _, d)| *d == Some(0))
            .map(|(m, _, _)| m)
            .collect())
    }

    /// Every move whose data and channel conditions hold, with its earliest delay
    /// in quanta (`None` if it only becomes enabled beyond the horizon).
    fn candidate_moves_timed(
        &self,
        s: &CsState,
        grid: TimeGrid,
    ) -> Result<(Vec<(Move, Choice, u64)>, bool), ModelError> {
        let mut out = Vec::new();
        let mut locked = false;
        self.for_each_candidate(s, &mut |mv, choice, guards| {
            match earliest_delay(guards, grid.quantum, grid.horizon)? {
                Delay::At(k) => out.push((mv, choice, k)),
                Delay::BeyondHorizon => locked = true,
                Delay::Never => {}
            }
            Ok(())
        })?;
        Ok((out, locked))
    }

    fn candidate_moves(&self, s: &CsState) -> Result<Vec<(Move, Choice, Option<u64>)>, ModelError> {
        let mut out = Vec::new();
        self.for_each_candidate(s, &mut |mv, choice, guards| {
            let now = guards.iter().try_fold(true, |acc, (g, nu)| Ok::<_, ModelError>(acc && nu.satisfies(g)?))?;
            out.push((mv, choice, now.then_some(0)));
            Ok(())
        })?;
        Ok(out)
    }

    fn for_each_candidate(
        &self,
        s: &CsState,
        f: &mut dyn FnMut(
            Move,
            Choice,
            &[(&ClockConstraint, &ClockValuation)],
        ) -> Result<(), ModelError>,
    ) -> Result<(), ModelError> {
        for (i, pg) in self.pgs.iter().enumerate() {
            let id = PgId(i);
            let env = self.local(s, id);
            let loc = s.locations[i];
            for &t in pg.outgoing(loc) {
                let tr = &pg.transitions()[t];
                if let Some(a) = &tr.comm {
                    if self.channels[a.channel().0].capacity == 0 || !self.comm_enabled(a, &s.channels, env)? {
                        continue;
                    }
                }
                if !tr.guard.eval_bool(env)? {
                    continue;
                }
                let choice = Choice {
                    pg: id,
                    location: loc,
                    transition: t,
                    action: tr.action,
                };
                f(Move::Local { pg: id, transition: t }, choice, &[(&tr.clock_guard, &s.clocks[i])])?;
            }
        }
        for (c, decl) in self.channels.iter().enumerate() {
            if decl.capacity != 0 {
                continue;
            }
            let (p, q) = (decl.senders[0], decl.receiver);
            let (sp, rp) = (&self.pgs[p.0], &self.pgs[q.0]);
            let (senv, renv) = (self.local(s, p), self.local(s, q));
            for &st in &self.handshake_sends[c] {
                let str_ = &sp.transitions()[st];
                if str_.source != s.locations[p.0] || !str_.guard.eval_bool(senv)? {
                    continue;
                }
                let msg = str_.comm.as_ref().expect("send transition").message(senv)?;
                for &rt in &self.handshake_recvs[c] {
                    let rtr = &rp.transitions()[rt];
                    if rtr.source != s.locations[q.0] || !rtr.guard.eval_bool(renv)? {
                        continue;
                    }
                    if let Some(CommAction::RecvConst { value, .. }) = &rtr.comm {
                        if !value.sem_eq(&msg) {
                            continue;
                        }
                    }
                    let mv = Move::Handshake {
                        channel: ChannelId(c),
                        sender: p,
                        send: st,
                        receiver: q,
                        recv: rt,
                    };
                    let choice = Choice {
                        pg: p,
                        location: s.locations[p.0],
                        transition: st,
                        action: str_.action,
                    };
                    f(mv, choice, &[(&str_.clock_guard, &s.clocks[p.0]), (&rtr.clock_guard, &s.clocks[q.0])])?;
                }
            }
        }
        Ok(())
    }

    /// Executes `mv` after waiting `delay`, using the given effect branches (sender
    /// branch, and receiver branch for handshakes).
    pub fn execute(
        &self,
        s: &CsState,
        mv: Move,
        delay: Rational,
        branches: (usize, usize),
    ) -> Result<(CsState, EventRecord), ModelError> {
        let mut next = s.clone();
        if !delay.is_zero() {
            for nu in &mut next.clocks {
                *nu = nu.advance(delay)?;
            }
        }
        let event = match mv {
            Move::Local { pg, transition } => {
                let graph = &self.pgs[pg.0];
                let tr = &graph.transitions()[transition];
                let range = self.slice_range(pg);
                let mut event = EventRecord::internal(pg, transition);
                if let Some(a) = &tr.comm {
                    self.comm_effect_in_place(pg, a, &mut next.channels, &mut next.valuation[range.clone()], &mut event)?;
                }
                apply_branch(graph, transition, branches.0, &mut next.valuation[range])?;
                next.clocks[pg.0].reset_in_place(&tr.resets)?;
                next.locations[pg.0] = tr.target;
                event
            }
            Move::Handshake {
                channel,
                sender,
                send,
                receiver,
                recv,
            } => {
                let (sp, rp) = (&self.pgs[sender.0], &self.pgs[receiver.0]);
                let (str_, rtr) = (&sp.transitions()[send], &rp.transitions()[recv]);
                let decl = &self.channels[channel.0];
                let msg = decl
                    .message_domain
                    .coerce(str_.comm.as_ref().expect("send").message(self.local(s, sender))?);
                if !decl.message_domain.contains(&msg) {
                    return Err(ModelError::OutOfDomain {
                        target: format!("channel `{}`", decl.name),
                        value: msg.to_string(),
                    });
                }
                let rrange = self.slice_range(receiver);
                store(rp, rtr.comm.as_ref().expect("receive"), &msg, &mut next.valuation[rrange.clone()])?;
                apply_branch(sp, send, branches.0, &mut next.valuation[self.slice_range(sender)])?;
                apply_branch(rp, recv, branches.1, &mut next.valuation[rrange])?;
                next.clocks[sender.0].reset_in_place(&str_.resets)?;
                next.clocks[receiver.0].reset_in_place(&rtr.resets)?;
                next.locations[sender.0] = str_.target;
                next.locations[receiver.0] = rtr.target;
                EventRecord {
                    kind: EventKind::Handshake,
                    channel: Some(channel),
                    payload: Some(msg),
                    source_pg: Some(sender),
                    target_pg: Some(receiver),
                    pg: sender,
                    transition: send,
                    partner_transition: Some(recv),
                }
            }
        };
        Ok((next, event))
    }

    fn branch_counts(&self, mv: Move) -> (usize, usize) {
        match mv {
            Move::Local { pg, transition } => (self.pgs[pg.0].transitions()[transition].effect.branches().len(), 1),
            Move::Handshake {
                sender,
                send,
                receiver,
                recv,
                ..
            } => (
                self.pgs[sender.0].transitions()[send].effect.branches().len(),
                self.pgs[receiver.0].transitions()[recv].effect.branches().len(),
            ),
        }
    }

    /// One step at time `now`: waits until the earliest grid instant at which some
    /// move is enabled, lets `resolver` pick among the moves enabled then, and
    /// samples the effect branches.
    pub fn step(
        &self,
        s: &CsState,
        now: Rational,
        rng: &mut Rng,
        resolver: &mut dyn Resolver,
        grid: TimeGrid,
    ) -> Result<Step<CsState>, ModelError> {
        let (candidates, locked) = self.candidate_moves_timed(s, grid)?;
        let Some(k) = candidates.iter().map(|(_, _, k)| *k).min() else {
            return Ok(if locked { Step::TimeLocked } else { Step::Terminal });
        };
        let (moves, choices): (Vec<Move>, Vec<Choice>) = candidates
            .into_iter()
            .filter(|(_, _, d)| *d == k)
            .map(|(m, c, _)| (m, c))
            .unzip();
        let mv = moves[resolver.choose(&choices, rng)?];
        let b0 = match mv {
            Move::Local { pg, transition } => sample_branch(&self.pgs[pg.0].transitions()[transition], rng),
            Move::Handshake { sender, send, .. } => sample_branch(&self.pgs[sender.0].transitions()[send], rng),
        };
        let b1 = match mv {
            Move::Handshake { receiver, recv, .. } => sample_branch(&self.pgs[receiver.0].transitions()[recv], rng),
            Move::Local { .. } => 0,
        };
        let delay = grid.quantum.checked_mul(&Rational::from_int(k as i64))?;
        let (state, event) = self.execute(s, mv, delay, (b0, b1))?;
        Ok(Step::Fired {
            state,
            event,
            time: now.checked_add(&delay)?,
        })
    }

    /// Every state one step can lead to, over all resolver choices and effect
    /// branches, together with the delay taken.
    pub fn successors(&self, s: &CsState, grid: TimeGrid) -> Result<Vec<(CsState, Rational)>, ModelError> {
        let (candidates, _) = self.candidate_moves_timed(s, grid)?;
        let Some(k) = candidates.iter().map(|(_, _, k)| *k).min() else {
            return Ok(Vec::new());
        };
        let delay = grid.quantum.checked_mul(&Rational::from_int(k as i64))?;
        let mut out = Vec::new();
        for (mv, _, d) in candidates {
            if d != k {
                continue;
            }
            let (n0, n1) = self.branch_counts(mv);
            for b0 in 0..n0 {
                for b1 in 0..n1 {
                    out.push((self.execute(s, mv, delay, (b0, b1))?.0, delay));
                }
            }
        }
        Ok(out)
    }

    /// All initial states: initial locations × valuations satisfying every graph's
    /// initial condition, empty channels, clocks at zero.
    pub fn initial_states(&self) -> Result<Vec<CsState>, ModelError> {
        let mut per_pg: Vec<Vec<(LocationId, Vec<Value>)>> = Vec::new();
        for pg in &self.pgs {
            let vals = initial_valuations(pg.variables(), pg.initial_condition())
                .map_err(|e| e.context(format!("program graph `{}`", pg.name())))?;
            let mut options = Vec::new();
            for &l in pg.initial_locations() {
                for v in &vals {
                    options.push((l, v.clone()));
                }
            }
            per_pg.push(options);
        }
        let total = per_pg.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len()));
        match total {
            Some(0) => return Err(ModelError::Invalid("the initial conditions are unsatisfiable".into())),
            Some(n) if n <= INITIAL_STATE_LIMIT => {}
            _ => return Err(ModelError::Invalid("too many initial states to enumerate".into())),
        }
        let mut out = vec![CsState {
            locations: Vec::new(),
            valuation: Vec::new(),
            clocks: self.pgs.iter().map(|pg| ClockValuation::zero(pg.clocks().len())).collect(),
            channels: ChannelEvaluation::empty(self.channels.len()),
        }];
        for options in per_pg {
            out = out
                .into_iter()
                .flat_map(|s| {
                    options.iter().map(move |(l, v)| {
                        let mut next = s.clone();
                        next.locations.push(*l);
                        next.valuation.extend(v.iter().cloned());
                        next
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

/// Stores a received message into the receiving graph's variables.
fn store(pg: &ProgramGraph, a: &CommAction, m: &Value, env: &mut [Value]) -> Result<(), ModelError> {
    let put = |env: &mut [Value], v: VarId, value: &Value| -> Result<(), ModelError> {
        let decl = &pg.variables()[v.0];
        let value = decl.domain.coerce(value.clone());
        if !decl.domain.contains(&value) {
            return Err(ModelError::OutOfDomain {
                target: decl.name.clone(),
                value: value.to_string(),
            });
        }
        env[v.0] = value;
        Ok(())
    };
    match a {
        CommAction::RecvVar { var, .. } => put(env, *var, m),
        CommAction::RecvTuple { vars, .. } => match m {
            Value::Tuple(items) if items.len() == vars.len() => {
                vars.iter().zip(items).try_for_each(|(v, item)| put(env, *v, item))
            }
            _ => Err(ModelError::Type(format!("expected a {}-tuple, received {m}", vars.len()))),
        },
        _ => Ok(()),
    }
}

fn check_comm(pg: &ProgramGraph, id: PgId, a: &CommAction, channels: &[ChannelDecl]) -> Result<(), ModelError> {
    let c = a.channel();
    let decl = channels
        .get(c.0)
        .ok_or_else(|| ModelError::Invalid(format!("unknown channel #{}", c.0)))?;
    let dom_type = decl.message_domain.value_type();
    let var = |v: &VarId| -> Result<&VarDomain, ModelError> {
        pg.domains()
            .get(v.0)
            .ok_or_else(|| ModelError::UnknownVariable(format!("#{}", v.0)))
    };
    let role = |who: &[PgId], what: &str| -> Result<(), ModelError> {
        if !who.contains(&id) {
            return Err(ModelError::Invalid(format!(
                "`{}` is not the {what} of channel `{}`",
                pg.name(),
                decl.name
            )));
        }
        Ok(())
    };
    match a {
        CommAction::SendVar { var: v, .. } => {
            role(&decl.senders, "sender")?;
            let t = var(v)?.value_type();
            if !dom_type.accepts(&t) {
                return Err(ModelError::Type(format!("cannot send {t} on channel `{}` of {dom_type}", decl.name)));
            }
        }
        CommAction::SendConst { value, .. } => {
            role(&decl.senders, "sender")?;
            if !decl.message_domain.contains(&decl.message_domain.coerce(value.clone())) {
                return Err(ModelError::OutOfDomain {
                    target: format!("channel `{}`", decl.name),
                    value: value.to_string(),
                });
            }
        }
        CommAction::SendExpr { expr, .. } => {
            role(&decl.senders, "sender")?;
            let t = expr.type_of(pg.domains())?;
            if !dom_type.accepts(&t) {
                return Err(ModelError::Type(format!("cannot send {t} on channel `{}` of {dom_type}", decl.name)));
            }
        }
        CommAction::RecvVar { var: v, .. } => {
            role(&[decl.receiver], "receiver")?;
            let d = var(v)?;
            if !includes_coerced(d, &decl.message_domain) {
                return Err(ModelError::Type(format!(
                    "variable domain {d} does not include the domain {} of channel `{}`",
                    decl.message_domain, decl.name
                )));
            }
        }
        CommAction::RecvTuple { vars, .. } => {
            role(&[decl.receiver], "receiver")?;
            let VarDomain::Tuple(parts) = &decl.message_domain else {
                return Err(ModelError::Type(format!("channel `{}` does not carry tuples", decl.name)));
            };
            if parts.len() != vars.len() {
                return Err(ModelError::Type(format!(
                    "channel `{}` carries {}-tuples, not {}-tuples",
                    decl.name,
                    parts.len(),
                    vars.len()
                )));
            }
            for (v, part) in vars.iter().zip(parts) {
                let d = var(v)?;
                if !includes_coerced(d, part) {
                    return Err(ModelError::Type(format!(
                        "variable domain {d} does not include {part} on channel `{}`",
                        decl.name
                    )));
                }
            }
        }
        CommAction::RecvConst { value, .. } => {
            role(&[decl.receiver], "receiver")?;
            if value.type_of().join(&dom_type).is_none() {
                return Err(ModelError::Type(format!("cannot match {value} against channel `{}`", decl.name)));
            }
        }
        CommAction::ProbeEmpty(_) | CommAction::ProbeNonEmpty(_) => {
            if decl.capacity == 0 {
                return Err(ModelError::Invalid(format!("cannot probe handshake channel `{}`", decl.name)));
            }
            if !decl.senders.contains(&id) && id != decl.receiver {
                return Err(ModelError::Invalid(format!("`{}` is not connected to channel `{}`", pg.name(), decl.name)));
            }
        }
    }
    Ok(())
}

/// `d ⊇ m`, allowing rational variables to hold integer messages.
fn includes_coerced(d: &VarDomain, m: &VarDomain) -> bool {
    match (d, m) {
        (VarDomain::Rational, VarDomain::Int { .. }) => true,
        (VarDomain::Tuple(a), VarDomain::Tuple(b)) => {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| includes_coerced(x, y))
        }
        _ => d.includes(m),
    }
}
