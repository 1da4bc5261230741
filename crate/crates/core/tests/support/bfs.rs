//! Reachable states of an untimed channel system, computed from the rule set
//! directly: one rule per communication kind, evaluated on raw structures.

use std::collections::{HashSet, VecDeque};

use tpsmc_core::channel_system::{ChannelSystem, CommAction, CsState};
use tpsmc_core::kernel::Value;
use tpsmc_core::program_graph::{LocationId, PgTransition, ProgramGraph};

pub type State = (Vec<LocationId>, Vec<Value>, Vec<Vec<Value>>);

pub fn project(s: &CsState) -> State {
    let chans = (0..s.channels.channel_count())
        .map(|c| s.channels.get(tpsmc_core::kernel::ChannelId(c)).iter().cloned().collect())
        .collect();
    (s.locations.clone(), s.valuation.clone(), chans)
}

struct Layout {
    offsets: Vec<usize>,
}

impl Layout {
    fn new(cs: &ChannelSystem) -> Self {
        let mut offsets = Vec::new();
        let mut at = 0;
        for pg in cs.pgs() {
            offsets.push(at);
            at += pg.variables().len();
        }
        Layout { offsets }
    }

    fn slice<'a>(&self, cs: &ChannelSystem, vals: &'a [Value], i: usize) -> &'a [Value] {
        &vals[self.offsets[i]..self.offsets[i] + cs.pgs()[i].variables().len()]
    }
}

fn guard_holds(t: &PgTransition, env: &[Value]) -> bool {
    assert!(t.clock_guard.is_trivially_true(), "oracle covers untimed systems only");
    t.guard.eval_bool(env).unwrap()
}

/// Every outcome of the effect of `t` on `env`.
fn effects(t: &PgTransition, env: &[Value]) -> Vec<Vec<Value>> {
    t.effect
        .branches()
        .iter()
        .map(|b| {
            let rhs: Vec<Value> = b.updates.iter().map(|(_, e)| e.eval(env).unwrap()).collect();
            let mut out = env.to_vec();
            for ((v, _), x) in b.updates.iter().zip(rhs) {
                out[v.0] = x;
            }
            out
        })
        .collect()
}

fn message(a: &CommAction, env: &[Value]) -> Option<Value> {
    match a {
        CommAction::SendVar { var, .. } => Some(env[var.0].clone()),
        CommAction::SendConst { value, .. } => Some(value.clone()),
        CommAction::SendExpr { expr, .. } => Some(expr.eval(env).unwrap()),
        _ => None,
    }
}

/// Stores a received `v` into the receiver's variables; `None` when a constant
/// pattern does not match.
fn receive(a: &CommAction, env: &[Value], v: &Value) -> Option<Vec<Value>> {
    let mut out = env.to_vec();
    match a {
        CommAction::RecvVar { var, .. } => out[var.0] = v.clone(),
        CommAction::RecvTuple { vars, .. } => {
            let Value::Tuple(items) = v else { panic!("tuple expected") };
            for (x, item) in vars.iter().zip(items) {
                out[x.0] = item.clone();
            }
        }
        CommAction::RecvConst { value, .. } => {
            if value != v {
                return None;
            }
        }
        _ => unreachable!(),
    }
    Some(out)
}

fn with(
    cs: &ChannelSystem,
    layout: &Layout,
    s: &State,
    i: usize,
    loc: LocationId,
    env: &[Value],
    chans: Vec<Vec<Value>>,
) -> State {
    let mut locs = s.0.clone();
    locs[i] = loc;
    let mut vals = s.1.clone();
    let start = layout.offsets[i];
    vals[start..start + cs.pgs()[i].variables().len()].clone_from_slice(env);
    (locs, vals, chans)
}

pub fn successors(cs: &ChannelSystem, s: &State) -> Vec<State> {
    let layout = Layout::new(cs);
    let mut out = Vec::new();
    for (i, pg) in cs.pgs().iter().enumerate() {
        let env = layout.slice(cs, &s.1, i);
        for t in pg.transitions().iter().filter(|t| t.source == s.0[i]) {
            if !guard_holds(t, env) {
                continue;
            }
            let (env1, chans) = match &t.comm {
                None => (env.to_vec(), s.2.clone()),
                Some(a) => {
                    let c = a.channel().0;
                    let cap = cs.channels()[c].capacity;
                    if cap == 0 {
                        continue;
                    }
                    let q = &s.2[c];
                    let mut chans = s.2.clone();
                    match a {
                        CommAction::ProbeEmpty(_) if q.is_empty() => (env.to_vec(), chans),
                        CommAction::ProbeNonEmpty(_) if !q.is_empty() => (env.to_vec(), chans),
                        CommAction::ProbeEmpty(_) | CommAction::ProbeNonEmpty(_) => continue,
                        _ if a.is_send() => {
                            if q.len() >= cap {
                                continue;
                            }
                            chans[c].push(message(a, env).unwrap());
                            (env.to_vec(), chans)
                        }
                        _ => {
                            let Some(front) = q.first() else { continue };
                            let Some(env1) = receive(a, env, front) else { continue };
                            chans[c].remove(0);
                            (env1, chans)
                        }
                    }
                }
            };
            for env2 in effects(t, &env1) {
                out.push(with(cs, &layout, s, i, t.target, &env2, chans.clone()));
            }
        }
    }
    for (c, decl) in cs.channels().iter().enumerate() {
        if decl.capacity != 0 {
            continue;
        }
        let (p, q) = (decl.senders[0].0, decl.receiver.0);
        let (pp, qq): (&ProgramGraph, &ProgramGraph) = (&cs.pgs()[p], &cs.pgs()[q]);
        let env_p = layout.slice(cs, &s.1, p);
        let env_q = layout.slice(cs, &s.1, q);
        for ts in pp.transitions().iter().filter(|t| t.source == s.0[p]) {
            let Some(a) = ts.comm.as_ref().filter(|a| a.channel().0 == c && a.is_send()) else { continue };
            if !guard_holds(ts, env_p) {
                continue;
            }
            let v = message(a, env_p).unwrap();
            for tr in qq.transitions().iter().filter(|t| t.source == s.0[q]) {
                let Some(b) = tr.comm.as_ref().filter(|b| b.channel().0 == c && b.is_receive()) else { continue };
                if !guard_holds(tr, env_q) {
                    continue;
                }
                let Some(env_q1) = receive(b, env_q, &v) else { continue };
                for ep in effects(ts, env_p) {
                    for eq in effects(tr, &env_q1) {
                        let mid = with(cs, &layout, s, p, ts.target, &ep, s.2.clone());
                        out.push(with(cs, &layout, &mid, q, tr.target, &eq, s.2.clone()));
                    }
                }
            }
        }
    }
    out
}

/// Breadth-first closure from the initial states.
pub fn reachable(cs: &ChannelSystem) -> HashSet<State> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for s in cs.initial_states().unwrap() {
        let s = project(&s);
        if seen.insert(s.clone()) {
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        for n in successors(cs, &s) {
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen
}
