//! Compilation of state charts into one channel system.
//!
//! Each automaton `A` becomes a program graph with variables `A.event` and
//! `A.origin` for the event being processed, `A.<event>.<param>` for incoming
//! parameters and `A.<loc>` for each datamodel location. Channels are the
//! internal queue `q_int.A` (event ids), the external queue `q_ext.A`
//! ((event id, origin id) pairs) and one channel `param.<event>.<origin>.<target>`
//! per parameterized route, carrying the parameter tuple.
//!
//! Per state `s` the graph has a location `s` followed by the entry chain, the
//! eventless transitions tested in document order, and the event-reading loop:
//! dequeue an internal event, or, when the internal queue is empty, an external
//! one along with its parameters; then the eventful transitions are tested in
//! document order and an unmatched event is discarded.

use std::collections::{BTreeMap, HashMap};

use tpsmc_core::channel_system::{ChannelDecl, ChannelSystem, CommAction};
use tpsmc_core::kernel::{ChannelId, ClockConstraint, PgId, Rational, Type, Value, VarDomain};
use tpsmc_core::program_graph::syntax::{lower_expr, Ast, AstKind};
use tpsmc_core::program_graph::{ActionId, Branch, Effect, Expr, LocationId, PgTransition, ProgramGraph, ProgramGraphBuilder, VarId};

use crate::catalog::{build_catalog, static_target, EventCatalog};
use crate::error::{Result, ScxmlError};
use crate::expr::{check_names, extract_random, is_random_call, random_name, resolve, untranslatable, Name, Scope};
use crate::model::{for_each_exec, Exec, Expression, ScxmlAutomaton, Send};

/// Resolution of `Math.random()` when assigned to a location.
pub const RANDOM_RESOLUTION: i64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub internal_capacity: usize,
    /// Also the capacity of parameter channels.
    pub external_capacity: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            internal_capacity: 8,
            external_capacity: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelRole {
    Internal(usize),
    External(usize),
    /// `(event, origin, target)`
    Param(usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelLayout {
    pub q_int: Vec<ChannelId>,
    pub q_ext: Vec<ChannelId>,
    pub params: BTreeMap<(usize, usize, usize), ChannelId>,
}

impl ChannelLayout {
    fn new(cat: &EventCatalog) -> Self {
        let n = cat.automata.len();
        ChannelLayout {
            q_int: (0..n).map(ChannelId).collect(),
            q_ext: (n..2 * n).map(ChannelId).collect(),
            params: cat
                .param_routes()
                .into_iter()
                .enumerate()
                .map(|(k, r)| (r, ChannelId(2 * n + k)))
                .collect(),
        }
    }

    pub fn role(&self, c: ChannelId) -> Option<ChannelRole> {
        let n = self.q_int.len();
        if c.0 < n {
            Some(ChannelRole::Internal(c.0))
        } else if c.0 < 2 * n {
            Some(ChannelRole::External(c.0 - n))
        } else {
            self.params.iter().find(|(_, id)| **id == c).map(|(&(e, o, t), _)| ChannelRole::Param(e, o, t))
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub system: ChannelSystem,
    pub catalog: EventCatalog,
    pub layout: ChannelLayout,
}

/// Builds the catalog and compiles in one go.
pub fn compile_automata(automata: &[ScxmlAutomaton], opts: &CompileOptions) -> Result<CompiledModel> {
    let cat = build_catalog(automata)?;
    compile(automata, &cat, opts)
}

struct DataVar {
    id: String,
    domain: VarDomain,
    init: Value,
}

fn domain_of(t: &Type) -> Option<VarDomain> {
    match t {
        Type::Bool => Some(VarDomain::Bool),
        Type::Int => Some(VarDomain::INT),
        Type::Rat => Some(VarDomain::Rational),
        Type::Tuple(_) => None,
    }
}

fn contains_decimal(ast: &Ast) -> bool {
    let mut found = false;
    ast.walk(&mut |a| found |= matches!(a.kind, AstKind::Decimal(_)));
    found
}

/// Datamodel locations with their domains. Numbers are integers unless the
/// location is ever given a fractional value.
fn datamodel(aut: &ScxmlAutomaton, cat: &EventCatalog) -> Result<Vec<DataVar>> {
    let mut out = Vec::new();
    for d in &aut.datamodel {
        let none = |_: &str| None;
        let init = lower_expr(&d.expr.ast, &Scope { lookup: &none, cat })
            .and_then(|e| e.eval(&[]))
            .map_err(|e| untranslatable(&d.expr, format!("initial values must be constant ({e})")))?;
        let mut fractional = false;
        for block in aut.blocks() {
            for_each_exec(block, &mut |x| {
                if let Exec::Assign { location, expr } = x {
                    if *location == d.id && (is_random_call(&expr.ast) || contains_decimal(&expr.ast)) {
                        fractional = true;
                    }
                }
            });
        }
        let domain = match (&init, fractional) {
            (Value::Bool(_), _) => VarDomain::Bool,
            (Value::Int(_), false) => VarDomain::INT,
            (Value::Int(_), true) | (Value::Rat(_), _) => VarDomain::Rational,
            (Value::Tuple(_), _) => return Err(untranslatable(&d.expr, "arrays are not supported")),
        };
        out.push(DataVar {
            id: d.id.clone(),
            init: domain.coerce(init),
            domain,
        });
    }
    Ok(out)
}

/// A `<send>` together with the events that may be loaded when it executes.
struct SendSite<'a> {
    aid: usize,
    scope: Vec<usize>,
    send: &'a Send,
}

fn send_sites<'a>(aut: &'a ScxmlAutomaton, aid: usize, cat: &EventCatalog) -> Vec<SendSite<'a>> {
    let mut out = Vec::new();
    fn collect<'a>(block: &'a [Exec], aid: usize, scope: &[usize], out: &mut Vec<SendSite<'a>>) {
        for_each_exec(block, &mut |x| {
            if let Exec::Send(send) = x {
                out.push(SendSite {
                    aid,
                    scope: scope.to_vec(),
                    send,
                });
            }
        });
    }
    for s in &aut.states {
        collect(&s.onentry, aid, &[], &mut out);
        for t in &s.transitions {
            let scope: Vec<usize> = t.events.iter().filter_map(|e| cat.event_id(e)).collect();
            if t.target.is_some() {
                collect(&s.onexit, aid, &scope, &mut out);
            }
            collect(&t.body, aid, &scope, &mut out);
        }
    }
    out
}

/// Infers parameter types from the expressions senders use, iterating because
/// a parameter may forward another event's parameter.
fn param_types(automata: &[ScxmlAutomaton], cat: &EventCatalog, data: &[Vec<DataVar>]) -> Result<HashMap<(usize, String), Type>> {
    let sites: Vec<SendSite> = automata
        .iter()
        .enumerate()
        .flat_map(|(aid, a)| send_sites(a, aid, cat))
        .collect();
    let mut types: HashMap<(usize, String), Type> = HashMap::new();
    loop {
        let mut changed = false;
        for site in &sites {
            let e = cat.event_id(&site.send.event).expect("catalogued");
            for (p, expr) in &site.send.params {
                let Some(t) = type_in(expr, site, cat, &data[site.aid], &types)? else { continue };
                let key = (e, p.clone());
                let joined = match types.get(&key) {
                    None => t,
                    Some(old) => old.join(&t).ok_or_else(|| {
                        untranslatable(expr, format!("parameter `{p}` of `{}` is {old} elsewhere but {t} here", cat.events[e].name))
                    })?,
                };
                if types.get(&key) != Some(&joined) {
                    types.insert(key, joined);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for site in &sites {
        let e = cat.event_id(&site.send.event).expect("catalogued");
        for (p, expr) in &site.send.params {
            if !types.contains_key(&(e, p.clone())) {
                return Err(untranslatable(expr, format!("cannot infer the type of parameter `{p}`")));
            }
        }
    }
    Ok(types)
}

fn type_in(
    expr: &Expression,
    site: &SendSite,
    cat: &EventCatalog,
    data: &[DataVar],
    types: &HashMap<(usize, String), Type>,
) -> Result<Option<Type>> {
    let ast = extract_random(expr.ast.clone(), &mut |_| Ok(random_name(0))).map_err(|e| untranslatable(expr, e))?;
    let is_data = |n: &str| data.iter().any(|d| d.id == n);
    let mut names: Vec<String> = Vec::new();
    let mut domains: Vec<VarDomain> = Vec::new();
    let mut pending = false;
    check_names(&ast, &mut |n| {
        let dom = match resolve(n, &site.scope, site.aid, cat, &is_data)? {
            Name::Data(x) => data.iter().find(|d| d.id == x).expect("resolved").domain.clone(),
            Name::Origin => VarDomain::INT,
            Name::Random(_) => VarDomain::Bool,
            Name::Param(e, p) => match types.get(&(e, p)).and_then(domain_of) {
                Some(d) => d,
                None => {
                    pending = true;
                    VarDomain::INT
                }
            },
        };
        names.push(n.to_string());
        domains.push(dom);
        Ok(())
    })
    .map_err(|m| untranslatable(expr, m))?;
    if pending {
        return Ok(None);
    }
    let lookup = |n: &str| names.iter().position(|x| x == n).map(VarId);
    let lowered = lower_expr(&ast, &Scope { lookup: &lookup, cat }).map_err(|e| untranslatable(expr, e))?;
    lowered.type_of(&domains).map(Some).map_err(|e| untranslatable(expr, e))
}

/// Compiles `automata` (in catalog order) into a channel system.
pub fn compile(automata: &[ScxmlAutomaton], cat: &EventCatalog, opts: &CompileOptions) -> Result<CompiledModel> {
    if opts.internal_capacity == 0 || opts.external_capacity == 0 {
        return Err(ScxmlError::Config("queue capacities must be at least 1".into()));
    }
    if automata.len() != cat.automata.len() || automata.iter().zip(&cat.automata).any(|(a, n)| a.name != *n) {
        return Err(ScxmlError::Catalog("the catalog was built for different automata".into()));
    }
    let data: Vec<Vec<DataVar>> = automata.iter().map(|a| datamodel(a, cat)).collect::<Result<_>>()?;
    let ptypes = param_types(automata, cat, &data)?;
    let param_domains = |e: usize| -> Vec<VarDomain> {
        cat.events[e]
            .params
            .iter()
            .map(|p| ptypes.get(&(e, p.clone())).and_then(domain_of).unwrap_or(VarDomain::INT))
            .collect()
    };
    let layout = ChannelLayout::new(cat);
    let n = automata.len() as i64;
    let m = cat.events.len().max(1) as i64;

    let mut channels = Vec::new();
    for (a, name) in cat.automata.iter().enumerate() {
        channels.push(ChannelDecl::new(
            format!("q_int.{name}"),
            PgId(a),
            PgId(a),
            opts.internal_capacity,
            VarDomain::int(0, m - 1),
        ));
    }
    for (a, name) in cat.automata.iter().enumerate() {
        let mut senders: Vec<PgId> = cat
            .events
            .iter()
            .flat_map(|e| e.routes.iter().filter(|r| r.1 == a).map(|r| PgId(r.0)))
            .collect();
        senders.sort();
        senders.dedup();
        channels.push(ChannelDecl {
            name: format!("q_ext.{name}"),
            senders,
            receiver: PgId(a),
            capacity: opts.external_capacity,
            message_domain: VarDomain::Tuple(vec![VarDomain::int(0, m - 1), VarDomain::int(0, (n - 1).max(0))]),
        });
    }
    for &(e, o, t) in layout.params.keys() {
        channels.push(ChannelDecl::new(
            format!("param.{}.{}.{}", cat.events[e].name, cat.automata[o], cat.automata[t]),
            PgId(o),
            PgId(t),
            opts.external_capacity,
            VarDomain::Tuple(param_domains(e)),
        ));
    }

    let mut pgs = Vec::new();
    for (aid, aut) in automata.iter().enumerate() {
        let pg = Lowerer::new(aid, aut, cat, &layout, &data[aid], &param_domains)?.run()?;
        pgs.push(pg);
    }
    let system = ChannelSystem::new(pgs, channels)?;
    Ok(CompiledModel {
        system,
        catalog: cat.clone(),
        layout,
    })
}

struct Lowerer<'a> {
    aid: usize,
    aut: &'a ScxmlAutomaton,
    cat: &'a EventCatalog,
    layout: &'a ChannelLayout,
    b: ProgramGraphBuilder,
    tau: ActionId,
    event: VarId,
    origin: VarId,
    data: HashMap<String, VarId>,
    params: HashMap<(usize, String), VarId>,
    random: Vec<VarId>,
    delays: usize,
    state_loc: Vec<LocationId>,
}

type Draws = Vec<(VarId, Rational)>;

impl<'a> Lowerer<'a> {
    fn new(
        aid: usize,
        aut: &'a ScxmlAutomaton,
        cat: &'a EventCatalog,
        layout: &'a ChannelLayout,
        data: &[DataVar],
        param_domains: &dyn Fn(usize) -> Vec<VarDomain>,
    ) -> Result<Self> {
        let name = &aut.name;
        let mut b = ProgramGraphBuilder::new(name.clone());
        let n = cat.automata.len() as i64;
        let m = cat.events.len().max(1) as i64;
        let event = b.variable(format!("{name}.event"), VarDomain::int(-1, m - 1), Some(Value::Int(-1)))?;
        let origin = b.variable(format!("{name}.origin"), VarDomain::int(-1, (n - 1).max(0)), Some(Value::Int(-1)))?;
        let mut params = HashMap::new();
        for e in cat.incoming(aid) {
            for (p, dom) in cat.events[e].params.iter().zip(param_domains(e)) {
                let init = dom.default_value();
                let v = b.variable(format!("{name}.{}.{p}", cat.events[e].name), dom, Some(init))?;
                params.insert((e, p.clone()), v);
            }
        }
        let mut vars = HashMap::new();
        for d in data {
            let v = b.variable(format!("{name}.{}", d.id), d.domain.clone(), Some(d.init.clone()))?;
            vars.insert(d.id.clone(), v);
        }
        let tau = b.action("tau");
        let state_loc = aut.states.iter().map(|s| b.location(s.id.clone())).collect();
        Ok(Lowerer {
            aid,
            aut,
            cat,
            layout,
            b,
            tau,
            event,
            origin,
            data: vars,
            params,
            random: Vec::new(),
            delays: 0,
            state_loc,
        })
    }

    fn edge(&mut self, from: LocationId, to: LocationId) -> PgTransition {
        PgTransition::new(from, self.tau, to)
    }

    fn add(&mut self, t: PgTransition) {
        self.b.transition(t);
    }

    fn dest(&mut self, exit: Option<LocationId>, hint: &str) -> LocationId {
        exit.unwrap_or_else(|| self.b.fresh_location(hint))
    }

    fn run(mut self) -> Result<ProgramGraph> {
        let init = self.aut.state_index(&self.aut.initial).expect("checked by the parser");
        self.b.initial(self.state_loc[init]);
        for si in 0..self.aut.states.len() {
            self.state(si)?;
        }
        Ok(self.b.build()?)
    }

    fn state(&mut self, si: usize) -> Result<()> {
        let st = &self.aut.states[si];
        let sid = st.id.clone();
        let entry = self.state_loc[si];
        let ready = if st.onentry.is_empty() {
            entry
        } else {
            let ready = self.b.fresh_location(&format!("{sid}.ready"));
            self.block(&st.onentry, entry, Some(ready), &[], &sid)?;
            ready
        };

        // Eventless transitions, tested before any event is read.
        let mut cur = Some(ready);
        for (k, t) in st.transitions.iter().enumerate().filter(|(_, t)| t.is_eventless()) {
            let Some(at) = cur else { break };
            let (guard, draws) = self.condition(t.cond.as_ref(), &[])?;
            let at = self.draw(at, &draws, &sid);
            let hat = self.b.fresh_location(&format!("{sid}.t{k}"));
            let g = self.edge(at, hat).with_guard(guard.clone());
            self.add(g);
            self.take(si, t, hat, &[], ready)?;
            cur = if guard.is_true() {
                None
            } else {
                let next = self.b.fresh_location(&format!("{sid}.t{k}.no"));
                let g = self.edge(at, next).with_guard(Expr::not(guard));
                self.add(g);
                Some(next)
            };
        }
        let Some(wait) = cur else { return Ok(()) };

        // Event-reading loop. Queues that can never fill are not polled, so a
        // chart that exchanges no events has no communication at all.
        let has_int = self.cat.events.iter().any(|e| e.raised_by.contains(&self.aid));
        let has_ext = !self.cat.incoming(self.aid).is_empty();
        if !has_int && !has_ext {
            return Ok(());
        }
        let eventful: Vec<usize> = (0..st.transitions.len()).filter(|&k| !st.transitions[k].is_eventless()).collect();
        let loaded = if eventful.is_empty() {
            wait
        } else {
            self.b.fresh_location(&format!("{sid}.event"))
        };
        let q_int = self.layout.q_int[self.aid];
        let mut external = wait;
        if has_int {
            let t = self
                .edge(wait, loaded)
                .with_comm(CommAction::RecvVar {
                    channel: q_int,
                    var: self.event,
                })
                .with_effect(Effect::deterministic(vec![(self.origin, Expr::int(self.aid as i64))]));
            self.add(t);
            if has_ext {
                external = self.b.fresh_location(&format!("{sid}.external"));
                let t = self.edge(wait, external).with_comm(CommAction::ProbeEmpty(q_int));
                self.add(t);
            }
        }
        if has_ext {
            self.read_external(&sid, external, loaded);
        }

        // Eventful transitions on the loaded event; an unmatched one is dropped.
        let mut at = loaded;
        for (i, &k) in eventful.iter().enumerate() {
            let t = &st.transitions[k];
            let ids: Vec<usize> = t.events.iter().map(|e| self.cat.event_id(e).expect("catalogued")).collect();
            let (cond, draws) = self.condition(t.cond.as_ref(), &ids)?;
            let from = self.draw(at, &draws, &sid);
            let guard = Expr::and([
                Expr::or(ids.iter().map(|&e| Expr::eq(Expr::var(self.event), Expr::int(e as i64)))),
                cond,
            ]);
            let hat = self.b.fresh_location(&format!("{sid}.t{k}"));
            let g = self.edge(from, hat).with_guard(guard.clone());
            self.add(g);
            self.take(si, t, hat, &ids, ready)?;
            let next = if i + 1 == eventful.len() {
                wait
            } else {
                self.b.fresh_location(&format!("{sid}.t{k}.no"))
            };
            let g = self.edge(from, next).with_guard(Expr::not(guard));
            self.add(g);
            at = next;
        }
        Ok(())
    }

    /// Dequeues `(event, origin)` from the external queue, then the parameters of
    /// a parameterized event from the channel of its route.
    fn read_external(&mut self, sid: &str, external: LocationId, loaded: LocationId) {
        let q_ext = self.layout.q_ext[self.aid];
        let routes: Vec<((usize, usize, usize), ChannelId)> = self
            .layout
            .params
            .iter()
            .filter(|((_, _, target), _)| *target == self.aid)
            .map(|(r, c)| (*r, *c))
            .collect();
        let vars = vec![self.event, self.origin];
        if routes.is_empty() {
            let t = self.edge(external, loaded).with_comm(CommAction::RecvTuple { channel: q_ext, vars });
            self.add(t);
        } else {
            let params = self.b.fresh_location(&format!("{sid}.params"));
            let t = self.edge(external, params).with_comm(CommAction::RecvTuple { channel: q_ext, vars });
            self.add(t);
            let mut with_params: Vec<usize> = routes.iter().map(|r| r.0 .0).collect();
            with_params.dedup();
            for ((e, o, _), c) in routes {
                let vars: Vec<VarId> = self.cat.events[e]
                    .params
                    .iter()
                    .map(|p| self.params[&(e, p.clone())])
                    .collect();
                let guard = Expr::and([
                    Expr::eq(Expr::var(self.event), Expr::int(e as i64)),
                    Expr::eq(Expr::var(self.origin), Expr::int(o as i64)),
                ]);
                let t = self
                    .edge(params, loaded)
                    .with_guard(guard)
                    .with_comm(CommAction::RecvTuple { channel: c, vars });
                self.add(t);
            }
            let plain = Expr::and(
                with_params
                    .iter()
                    .map(|&e| Expr::ne(Expr::var(self.event), Expr::int(e as i64))),
            );
            let t = self.edge(params, loaded).with_guard(plain);
            self.add(t);
        }
    }

    /// Body of a transition enabled at `hat`: exit content (when leaving the
    /// state), the transition's own content, then the target's entry location.
    /// A targetless transition returns to `ready`, where eventless transitions are
    /// tested again.
    fn take(&mut self, si: usize, t: &crate::model::ScxmlTransition, hat: LocationId, scope: &[usize], ready: LocationId) -> Result<()> {
        let sid = self.aut.states[si].id.clone();
        match &t.target {
            Some(target) => {
                let to = self.state_loc[self.aut.state_index(target).expect("checked by the parser")];
                let items: Vec<Exec> = self.aut.states[si].onexit.iter().chain(&t.body).cloned().collect();
                self.block(&items, hat, Some(to), scope, &sid)?;
            }
            None => {
                self.block(&t.body, hat, Some(ready), scope, &sid)?;
            }
        }
        Ok(())
    }

    /// Lowers `items` starting at `from`; the last transition ends in `exit`
    /// when given. Returns the final location.
    fn block(&mut self, items: &[Exec], from: LocationId, exit: Option<LocationId>, scope: &[usize], hint: &str) -> Result<LocationId> {
        if items.is_empty() {
            if let Some(to) = exit {
                let t = self.edge(from, to);
                self.add(t);
                return Ok(to);
            }
            return Ok(from);
        }
        let mut cur = from;
        for (k, item) in items.iter().enumerate() {
            let last = k + 1 == items.len();
            cur = self.exec(item, cur, if last { exit } else { None }, scope, hint)?;
        }
        Ok(cur)
    }

    fn exec(&mut self, item: &Exec, from: LocationId, exit: Option<LocationId>, scope: &[usize], hint: &str) -> Result<LocationId> {
        match item {
            Exec::Assign { location, expr } => {
                let var = *self
                    .data
                    .get(location)
                    .ok_or_else(|| untranslatable(expr, format!("assignment to undeclared location `{location}`")))?;
                if is_random_call(&expr.ast) {
                    let step = Rational::new(1, RANDOM_RESOLUTION)?;
                    let branches = (0..RANDOM_RESOLUTION)
                        .map(|k| Branch {
                            probability: step,
                            updates: vec![(var, Expr::rat(Rational::new(k, RANDOM_RESOLUTION).expect("nonzero")))],
                        })
                        .collect();
                    let to = self.dest(exit, hint);
                    let t = self.edge(from, to).with_effect(Effect::new(branches)?);
                    self.add(t);
                    return Ok(to);
                }
                let (e, draws) = self.translate(expr, scope)?;
                let at = self.draw(from, &draws, hint);
                let to = self.dest(exit, hint);
                let t = self.edge(at, to).with_effect(Effect::deterministic(vec![(var, e)]));
                self.add(t);
                Ok(to)
            }
            Exec::If { branches } => {
                let mut guards = Vec::new();
                let mut draws = Vec::new();
                for (g, _) in branches {
                    let (e, d) = self.condition(g.as_ref(), scope)?;
                    guards.push(e);
                    draws.extend(d);
                }
                let at = self.draw(from, &draws, hint);
                let join = self.dest(exit, hint);
                let mut earlier: Vec<Expr> = Vec::new();
                for ((_, body), g) in branches.iter().zip(&guards) {
                    let guard = Expr::and(earlier.iter().cloned().chain([g.clone()]));
                    if body.is_empty() {
                        let t = self.edge(at, join).with_guard(guard);
                        self.add(t);
                    } else {
                        let start = self.b.fresh_location(hint);
                        let t = self.edge(at, start).with_guard(guard);
                        self.add(t);
                        self.block(body, start, Some(join), scope, hint)?;
                    }
                    earlier.push(Expr::not(g.clone()));
                }
                if branches.last().is_some_and(|b| b.0.is_some()) {
                    let t = self.edge(at, join).with_guard(Expr::and(earlier));
                    self.add(t);
                }
                Ok(join)
            }
            Exec::Raise { event } => {
                let id = self.cat.event_id(event).expect("catalogued");
                let to = self.dest(exit, hint);
                let t = self.edge(from, to).with_comm(CommAction::SendConst {
                    channel: self.layout.q_int[self.aid],
                    value: Value::Int(id as i64),
                });
                self.add(t);
                Ok(to)
            }
            Exec::Send(send) => self.send(send, from, exit, scope, hint),
        }
    }

    fn send(&mut self, send: &Send, from: LocationId, exit: Option<LocationId>, scope: &[usize], hint: &str) -> Result<LocationId> {
        let e = self.cat.event_id(&send.event).expect("catalogued");
        let mut draws = Vec::new();
        let mut values = Vec::new();
        for p in &self.cat.events[e].params {
            let (_, expr) = send.params.iter().find(|(q, _)| q == p).expect("checked by the catalog");
            let (v, d) = self.translate(expr, scope)?;
            values.push(v);
            draws.extend(d);
        }
        let receivers = self.cat.receivers(e, &send.target)?;
        let selector = match (&send.target, static_target(&send.target)) {
            (crate::model::SendTarget::Expr(t), None) => Some(self.translate(t, scope)?),
            _ => None,
        };
        let mut at = from;
        if let Some((_, d)) = &selector {
            draws.extend(d.iter().cloned());
        }
        at = self.draw(at, &draws, hint);

        let mut clock_guard = ClockConstraint::True;
        if let Some(d) = send.delay.filter(|d| !d.is_zero()) {
            let clock = self.b.clock(format!("{}.__delay{}", self.aut.name, self.delays))?;
            self.delays += 1;
            let armed = self.b.fresh_location(hint);
            let t = self.edge(at, armed).with_resets(vec![clock]);
            self.add(t);
            at = armed;
            clock_guard = ClockConstraint::at_least(clock, d);
        }

        let to = self.dest(exit, hint);
        let mut matched = Vec::new();
        for r in receivers {
            let guard = match &selector {
                Some((sel, _)) => {
                    let g = Expr::eq(sel.clone(), Expr::int(r as i64));
                    matched.push(g.clone());
                    g
                }
                None => Expr::TRUE,
            };
            let message = Value::Tuple(vec![Value::Int(e as i64), Value::Int(self.aid as i64)]);
            let enqueue = CommAction::SendConst {
                channel: self.layout.q_ext[r],
                value: message,
            };
            if values.is_empty() {
                let t = self.edge(at, to).with_guard(guard).with_clock_guard(clock_guard.clone()).with_comm(enqueue);
                self.add(t);
            } else {
                let mid = self.b.fresh_location(hint);
                let t = self.edge(at, mid).with_guard(guard).with_clock_guard(clock_guard.clone()).with_comm(enqueue);
                self.add(t);
                let channel = self.layout.params[&(e, self.aid, r)];
                let t = self.edge(mid, to).with_comm(CommAction::SendExpr {
                    channel,
                    expr: Expr::Tuple(values.clone()),
                });
                self.add(t);
            }
        }
        // A computed target matching no receiver drops the event.
        if selector.is_some() {
            let t = self.edge(at, to).with_guard(Expr::not(Expr::or(matched))).with_clock_guard(clock_guard);
            self.add(t);
        }
        Ok(to)
    }

    /// Chains one Bernoulli pre-transition per draw.
    fn draw(&mut self, from: LocationId, draws: &[(VarId, Rational)], hint: &str) -> LocationId {
        let mut at = from;
        for &(v, p) in draws {
            let next = self.b.fresh_location(&format!("{hint}.draw"));
            let effect = if p.is_zero() {
                Effect::deterministic(vec![(v, Expr::bool(false))])
            } else if p == Rational::ONE {
                Effect::deterministic(vec![(v, Expr::bool(true))])
            } else {
                Effect::new(vec![
                    Branch {
                        probability: p,
                        updates: vec![(v, Expr::bool(true))],
                    },
                    Branch {
                        probability: Rational::ONE.checked_sub(&p).expect("p in (0, 1)"),
                        updates: vec![(v, Expr::bool(false))],
                    },
                ])
                .expect("probabilities sum to one")
            };
            let t = self.edge(at, next).with_effect(effect);
            self.add(t);
            at = next;
        }
        at
    }

    fn condition(&mut self, cond: Option<&Expression>, scope: &[usize]) -> Result<(Expr, Draws)> {
        match cond {
            None => Ok((Expr::TRUE, Vec::new())),
            Some(c) => self.translate(c, scope),
        }
    }

    /// Translates an expression; each `Math.random()` comparison becomes a fresh
    /// boolean set by a returned draw.
    fn translate(&mut self, expr: &Expression, scope: &[usize]) -> Result<(Expr, Draws)> {
        let mut draws = Vec::new();
        let ast = {
            let b = &mut self.b;
            let random = &mut self.random;
            let name = &self.aut.name;
            extract_random(expr.ast.clone(), &mut |p| {
                let k = random.len();
                let v = b.variable(format!("{name}.{}", random_name(k)), VarDomain::Bool, Some(Value::Bool(false)))?;
                random.push(v);
                draws.push((v, p));
                Ok(random_name(k))
            })
            .map_err(|e| untranslatable(expr, e))?
        };
        let is_data = |n: &str| self.data.contains_key(n);
        let mut map: HashMap<String, VarId> = HashMap::new();
        check_names(&ast, &mut |n| {
            let v = match resolve(n, scope, self.aid, self.cat, &is_data)? {
                Name::Data(x) => self.data[&x],
                Name::Origin => self.origin,
                Name::Random(k) => self.random[k],
                Name::Param(e, p) => self.params[&(e, p)],
            };
            map.insert(n.to_string(), v);
            Ok(())
        })
        .map_err(|m| untranslatable(expr, m))?;
        let lookup = |n: &str| map.get(n).copied();
        let lowered = lower_expr(&ast, &Scope { lookup: &lookup, cat: self.cat }).map_err(|e| untranslatable(expr, e))?;
        Ok((lowered, draws))
    }
}
