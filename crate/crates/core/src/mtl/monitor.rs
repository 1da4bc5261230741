//! Incremental three-valued evaluation over a growing trace.
//!
//! Values are defined by the usual finite-trace recursion, read with Kleene
//! connectives:
//!
//! ```text
//! (φ U_I ψ)(i) = ⋁_{i ≤ j < n} [τⱼ-τᵢ ∈ I ∧ ψ(j) ∧ ⋀_{i ≤ k < j} φ(k)]
//!              ∨ [open(i) ∧ ⋀_{i ≤ k < n} φ(k) ∧ unknown]
//! (φ S_I ψ)(i) = ⋁_{0 ≤ j ≤ i} [τᵢ-τⱼ ∈ I ∧ ψ(j) ∧ ⋀_{j < k ≤ i} φ(k)]
//! ```
//!
//! where `open(i)` says a later observation could still fall inside `I`: the trace
//! is not complete and `τ_{n-1} - τᵢ ≤ sup I`. Once the trace is declared complete
//! the last disjunct vanishes and every verdict becomes definite.
//!
//! Definite values never change as the trace grows, so they are cached per
//! (subformula, position). Until nodes also keep a per-position cursor past the
//! prefix already known to contribute nothing, which makes repeated queries at the
//! same position amortized constant time.

use crate::error::ModelError;
use crate::kernel::{Observation, Rational, TimedTrace};

use super::{Formula, Interval, Verdict};

#[derive(Debug, Clone, Copy)]
enum Node {
    True,
    Atom(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Until(usize, Interval, usize),
    Since(usize, Interval, usize),
}

const UNSET: u8 = 0;
const FALSE: u8 = 1;
const TRUE: u8 = 2;

fn encode(v: Verdict) -> u8 {
    match v {
        Verdict::True => TRUE,
        Verdict::False => FALSE,
        Verdict::Unknown => UNSET,
    }
}

/// Evaluation state for one formula over one growing trace.
#[derive(Debug, Clone)]
pub struct Monitor {
    nodes: Vec<Node>,
    root: usize,
    atoms: usize,
    cache: Vec<Vec<u8>>,
    cursor: Vec<Vec<usize>>,
}

impl Monitor {
    pub fn new(formula: &Formula) -> Self {
        let mut nodes = Vec::new();
        let root = flatten(formula, &mut nodes);
        let n = nodes.len();
        Monitor {
            nodes,
            root,
            atoms: formula.max_atom().map_or(0, |a| a + 1),
            cache: vec![Vec::new(); n],
            cursor: vec![Vec::new(); n],
        }
    }

    /// Number of labels each observation must carry.
    pub fn atoms_needed(&self) -> usize {
        self.atoms
    }

    /// Verdict at position `i` of `trace`, which must extend every trace previously
    /// passed to this monitor.
    pub fn verdict_at(&mut self, trace: &TimedTrace, i: usize, complete: bool) -> Verdict {
        let obs = trace.observations();
        if i >= obs.len() {
            return if complete { Verdict::False } else { Verdict::Unknown };
        }
        let n = obs.len();
        for (k, c) in self.cursor.iter_mut().enumerate() {
            if matches!(self.nodes[k], Node::Until(..)) {
                let start = c.len();
                c.extend(start..n);
            }
        }
        for c in &mut self.cache {
            c.resize(n, UNSET);
        }
        let view = View { obs, complete };
        self.eval(self.root, i, &view)
    }

    fn eval(&mut self, node: usize, i: usize, tr: &View) -> Verdict {
        match self.cache[node][i] {
            TRUE => return Verdict::True,
            FALSE => return Verdict::False,
            _ => {}
        }
        let v = match self.nodes[node] {
            Node::True => Verdict::True,
            Node::Atom(a) => Verdict::from_bool(tr.obs[i].labels[a]),
            Node::Not(a) => self.eval(a, i, tr).not(),
            Node::And(a, b) => {
                let va = self.eval(a, i, tr);
                if va == Verdict::False {
                    Verdict::False
                } else {
                    va.and(self.eval(b, i, tr))
                }
            }
            Node::Or(a, b) => {
                let va = self.eval(a, i, tr);
                if va == Verdict::True {
                    Verdict::True
                } else {
                    va.or(self.eval(b, i, tr))
                }
            }
            Node::Until(a, iv, b) => self.until(node, a, iv, b, i, tr),
            Node::Since(a, iv, b) if iv.lo().is_zero() && iv.hi().is_none() => self.since_unbounded(node, a, b, i, tr),
            Node::Since(a, iv, b) => self.since(a, iv, b, i, tr),
        };
        self.cache[node][i] = encode(v);
        v
    }

    fn until(&mut self, node: usize, a: usize, iv: Interval, b: usize, i: usize, tr: &View) -> Verdict {
        let n = tr.obs.len();
        let ti = tr.obs[i].time;
        let mut c = self.cursor[node][i];
        while c < n {
            let d = diff(tr.obs[c].time, ti);
            if iv.exceeded_by(d) {
                return Verdict::False;
            }
            let term = if iv.contains(d) { self.eval(b, c, tr) } else { Verdict::False };
            if term == Verdict::True {
                return Verdict::True;
            }
            let guard = self.eval(a, c, tr);
            match (term, guard) {
                (Verdict::False, Verdict::True) => {
                    c += 1;
                    self.cursor[node][i] = c;
                }
                (Verdict::False, Verdict::False) => return Verdict::False,
                _ => return self.until_rescan(a, iv, b, i, c, term, guard, tr),
            }
        }
        tr.open_tail(ti, iv)
    }

    /// Scans from `c` without moving the cursor, once an undecided position is met.
    #[allow(clippy::too_many_arguments)]
    fn until_rescan(
        &mut self,
        a: usize,
        iv: Interval,
        b: usize,
        i: usize,
        c: usize,
        term: Verdict,
        guard: Verdict,
        tr: &View,
    ) -> Verdict {
        let n = tr.obs.len();
        let ti = tr.obs[i].time;
        let mut acc = term;
        let mut conj = guard;
        let mut k = c + 1;
        while k < n && conj != Verdict::False {
            let d = diff(tr.obs[k].time, ti);
            if iv.exceeded_by(d) {
                return acc;
            }
            if iv.contains(d) {
                acc = acc.or(conj.and(self.eval(b, k, tr)));
                if acc == Verdict::True {
                    return acc;
                }
            }
            conj = conj.and(self.eval(a, k, tr));
            k += 1;
        }
        if k == n {
            acc = acc.or(conj.and(tr.open_tail(ti, iv)));
        }
        acc
    }

    fn since(&mut self, a: usize, iv: Interval, b: usize, i: usize, tr: &View) -> Verdict {
        let ti = tr.obs[i].time;
        let mut acc = Verdict::False;
        let mut conj = Verdict::True;
        for j in (0..=i).rev() {
            let d = diff(ti, tr.obs[j].time);
            if iv.exceeded_by(d) {
                break;
            }
            if iv.contains(d) {
                acc = acc.or(conj.and(self.eval(b, j, tr)));
                if acc == Verdict::True {
                    break;
                }
            }
            conj = conj.and(self.eval(a, j, tr));
            if conj == Verdict::False {
                break;
            }
        }
        acc
    }

    /// `(φ S ψ)(i) = ψ(i) ∨ (φ(i) ∧ (φ S ψ)(i-1))` for the interval `[0, ∞)`.
    fn since_unbounded(&mut self, node: usize, a: usize, b: usize, i: usize, tr: &View) -> Verdict {
        let mut start = i;
        while start > 0 && self.cache[node][start - 1] == UNSET {
            start -= 1;
        }
        let mut prev = if start == 0 {
            Verdict::False
        } else if self.cache[node][start - 1] == TRUE {
            Verdict::True
        } else {
            Verdict::False
        };
        for j in start..=i {
            let here = self.eval(b, j, tr);
            let v = if here == Verdict::True {
                Verdict::True
            } else {
                here.or(self.eval(a, j, tr).and(prev))
            };
            if j < i {
                self.cache[node][j] = encode(v);
            }
            prev = v;
        }
        prev
    }
}

struct View<'a> {
    obs: &'a [Observation],
    complete: bool,
}

impl View<'_> {
    /// Value contributed by observations not yet seen.
    fn open_tail(&self, ti: Rational, iv: Interval) -> Verdict {
        let last = self.obs.last().expect("non-empty trace").time;
        if self.complete || iv.exceeded_by(diff(last, ti)) {
            Verdict::False
        } else {
            Verdict::Unknown
        }
    }
}

fn diff(later: Rational, earlier: Rational) -> Rational {
    later.checked_sub(&earlier).expect("timestamp difference overflows")
}

fn flatten(f: &Formula, nodes: &mut Vec<Node>) -> usize {
    let node = match f {
        Formula::True => Node::True,
        Formula::Atom(a) => Node::Atom(*a),
        Formula::Not(a) => Node::Not(flatten(a, nodes)),
        Formula::And(a, b) => Node::And(flatten(a, nodes), flatten(b, nodes)),
        Formula::Or(a, b) => Node::Or(flatten(a, nodes), flatten(b, nodes)),
        Formula::Until(a, iv, b) => Node::Until(flatten(a, nodes), *iv, flatten(b, nodes)),
        Formula::Since(a, iv, b) => Node::Since(flatten(a, nodes), *iv, flatten(b, nodes)),
    };
    nodes.push(node);
    nodes.len() - 1
}

/// Online oracle: owns the trace seen so far and the monitor evaluating it.
#[derive(Debug, Clone)]
pub struct OracleState {
    trace: TimedTrace,
    monitor: Monitor,
}

impl OracleState {
    pub fn new(formula: &Formula) -> Self {
        OracleState {
            trace: TimedTrace::new(),
            monitor: Monitor::new(formula),
        }
    }

    pub fn trace(&self) -> &TimedTrace {
        &self.trace
    }

    /// Appends an observation and returns the verdict on the trace so far.
    pub fn update(&mut self, obs: Observation) -> Result<Verdict, ModelError> {
        if obs.labels.len() < self.monitor.atoms_needed() {
            return Err(ModelError::Argument(format!(
                "observation carries {} labels, formula needs {}",
                obs.labels.len(),
                self.monitor.atoms_needed()
            )));
        }
        self.trace.push(obs)?;
        Ok(self.monitor.verdict_at(&self.trace, 0, false))
    }

    /// Verdict once no more observations will arrive.
    pub fn end_of_trace(&mut self) -> Verdict {
        self.monitor.verdict_at(&self.trace, 0, true)
    }
}

/// Feeds one observation; returns the verdict when it is conclusive.
pub fn online_update(state: &mut OracleState, obs: Observation) -> Result<Option<Verdict>, ModelError> {
    let v = state.update(obs)?;
    Ok(v.is_conclusive().then_some(v))
}

/// Resolves the verdict of a finished trace.
pub fn end_of_trace(state: &mut OracleState) -> Verdict {
    state.end_of_trace()
}

fn check_trace(formula: &Formula, trace: &TimedTrace, i: usize) -> Result<(), ModelError> {
    if i >= trace.len() {
        return Err(ModelError::Argument(format!("position {i} outside a trace of length {}", trace.len())));
    }
    let needed = formula.max_atom().map_or(0, |a| a + 1);
    if trace.observations().iter().any(|o| o.labels.len() < needed) {
        return Err(ModelError::Argument(format!("formula reads {needed} labels per observation")));
    }
    Ok(())
}

/// Verdict of `formula` at position `i` of a trace that may still grow.
pub fn evaluate(formula: &Formula, trace: &TimedTrace, i: usize) -> Result<Verdict, ModelError> {
    check_trace(formula, trace, i)?;
    Ok(Monitor::new(formula).verdict_at(trace, i, false))
}

/// Verdict of `formula` at position `i` of a finished trace.
pub fn evaluate_complete(formula: &Formula, trace: &TimedTrace, i: usize) -> Result<Verdict, ModelError> {
    check_trace(formula, trace, i)?;
    Ok(Monitor::new(formula).verdict_at(trace, i, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{EventRecord, PgId};

    fn obs(t: i64, p: bool) -> Observation {
        Observation {
            time: Rational::from_int(t),
            event: Some(EventRecord::internal(PgId(0), 0)),
            labels: vec![p],
        }
    }

    fn trace(points: &[(i64, bool)]) -> TimedTrace {
        TimedTrace::from_observations(points.iter().map(|(t, p)| obs(*t, *p)).collect()).unwrap()
    }

    fn p() -> Formula {
        Formula::atom(0)
    }

    #[test]
    fn eventually_with_witness() {
        let f = Formula::eventually(Interval::bounded(0, 3).unwrap(), p());
        let tr = trace(&[(0, false), (2, true)]);
        assert_eq!(evaluate(&f, &tr, 0).unwrap(), Verdict::True);
    }

    #[test]
    fn unbounded_globally_is_unknown_until_completion() {
        let f = Formula::globally(Interval::UNBOUNDED, p());
        let tr = trace(&[(0, true), (1, true), (5, true)]);
        assert_eq!(evaluate(&f, &tr, 0).unwrap(), Verdict::Unknown);
        assert_eq!(evaluate_complete(&f, &tr, 0).unwrap(), Verdict::True);
        let f = Formula::eventually(Interval::UNBOUNDED, p());
        let tr = trace(&[(0, false), (1, false)]);
        assert_eq!(evaluate_complete(&f, &tr, 0).unwrap(), Verdict::False);
        let f = Formula::True.until(Interval::UNBOUNDED, Formula::falsity());
        assert_eq!(evaluate_complete(&f, &tr, 0).unwrap(), Verdict::False);
    }

    #[test]
    fn online_eventually() {
        let f = Formula::eventually(Interval::bounded(0, 5).unwrap(), p());
        let mut st = OracleState::new(&f);
        assert_eq!(online_update(&mut st, obs(0, false)).unwrap(), None);
        assert_eq!(online_update(&mut st, obs(1, false)).unwrap(), None);
        assert_eq!(online_update(&mut st, obs(2, true)).unwrap(), Some(Verdict::True));
    }

    #[test]
    fn online_globally_violation() {
        let f = Formula::globally(Interval::bounded(0, 5).unwrap(), p());
        let mut st = OracleState::new(&f);
        assert_eq!(online_update(&mut st, obs(0, true)).unwrap(), None);
        assert_eq!(online_update(&mut st, obs(3, false)).unwrap(), Some(Verdict::False));
    }

    #[test]
    fn bounded_future_resolves_when_time_passes() {
        let f = Formula::eventually(Interval::bounded(0, 2).unwrap(), p());
        let mut st = OracleState::new(&f);
        assert_eq!(st.update(obs(0, false)).unwrap(), Verdict::Unknown);
        assert_eq!(st.update(obs(3, true)).unwrap(), Verdict::False);
    }

    #[test]
    fn out_of_order_rejected() {
        let mut st = OracleState::new(&p());
        st.update(obs(4, true)).unwrap();
        assert!(st.update(obs(3, true)).is_err());
    }

    #[test]
    fn past_operators() {
        let f = Formula::once(Interval::bounded(1, 2).unwrap(), p());
        let tr = trace(&[(0, true), (1, false), (3, false)]);
        assert_eq!(evaluate(&f, &tr, 1).unwrap(), Verdict::True);
        assert_eq!(evaluate(&f, &tr, 2).unwrap(), Verdict::False);
        let h = Formula::historically(Interval::UNBOUNDED, p());
        assert_eq!(evaluate(&h, &tr, 0).unwrap(), Verdict::True);
        assert_eq!(evaluate(&h, &tr, 2).unwrap(), Verdict::False);
    }
}
