//! Direct transcription of the finite-trace semantics, with no caching or cut-offs.

use rand::Rng as _;
use rand_chacha::ChaCha8Rng;
use tpsmc_core::kernel::{EventRecord, Observation, PgId, Rational, TimedTrace};
use tpsmc_core::mtl::{Formula, Interval, Verdict};

type V = Option<bool>;

fn not(a: V) -> V {
    a.map(|x| !x)
}

fn and(a: V, b: V) -> V {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or(a: V, b: V) -> V {
    not(and(not(a), not(b)))
}

fn inside(iv: &Interval, d: Rational) -> bool {
    d >= iv.lo() && iv.hi().map_or(true, |h| d <= h)
}

pub fn naive(f: &Formula, tr: &[(Rational, Vec<bool>)], i: usize, complete: bool) -> V {
    let n = tr.len();
    let t = |k: usize| tr[k].0;
    let d = |a: usize, b: usize| t(a).checked_sub(&t(b)).unwrap();
    match f {
        Formula::True => Some(true),
        Formula::Atom(a) => Some(tr[i].1[*a]),
        Formula::Not(a) => not(naive(a, tr, i, complete)),
        Formula::And(a, b) => and(naive(a, tr, i, complete), naive(b, tr, i, complete)),
        Formula::Or(a, b) => or(naive(a, tr, i, complete), naive(b, tr, i, complete)),
        Formula::Until(a, iv, b) => {
            let mut acc = Some(false);
            for j in i..n {
                let mut term = Some(inside(iv, d(j, i)));
                term = and(term, naive(b, tr, j, complete));
                for k in i..j {
                    term = and(term, naive(a, tr, k, complete));
                }
                acc = or(acc, term);
            }
            let open = !complete && iv.hi().map_or(true, |h| d(n - 1, i) <= h);
            if open {
                let mut term = None;
                for k in i..n {
                    term = and(term, naive(a, tr, k, complete));
                }
                acc = or(acc, term);
            }
            acc
        }
        Formula::Since(a, iv, b) => {
            let mut acc = Some(false);
            for j in 0..=i {
                let mut term = Some(inside(iv, d(i, j)));
                term = and(term, naive(b, tr, j, complete));
                for k in j + 1..=i {
                    term = and(term, naive(a, tr, k, complete));
                }
                acc = or(acc, term);
            }
            acc
        }
    }
}

pub fn to_verdict(v: V) -> Verdict {
    match v {
        Some(true) => Verdict::True,
        Some(false) => Verdict::False,
        None => Verdict::Unknown,
    }
}

pub const ATOMS: usize = 3;

fn interval(rng: &mut ChaCha8Rng) -> Interval {
    if rng.random_bool(0.3) {
        return Interval::UNBOUNDED;
    }
    let lo = Rational::new(rng.random_range(0..5), 2).unwrap();
    let hi = if rng.random_bool(0.25) {
        None
    } else {
        Some(lo.checked_add(&Rational::new(rng.random_range(0..6), 2).unwrap()).unwrap())
    };
    Interval::new(lo, hi).unwrap()
}

/// Random formula of depth at most `depth`, mixing primitive and derived operators.
pub fn formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..8) {
            0 => Formula::True,
            1 => Formula::falsity(),
            _ => Formula::atom(rng.random_range(0..ATOMS)),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| formula(rng, depth - 1);
    match rng.random_range(0..10) {
        0 => sub(rng).negate(),
        1 => sub(rng).and(sub(rng)),
        2 => sub(rng).or(sub(rng)),
        3 | 4 => {
            let iv = interval(rng);
            sub(rng).until(iv, sub(rng))
        }
        5 | 6 => {
            let iv = interval(rng);
            sub(rng).since(iv, sub(rng))
        }
        7 => {
            let iv = interval(rng);
            Formula::eventually(iv, sub(rng))
        }
        8 => {
            let iv = interval(rng);
            Formula::globally(iv, sub(rng))
        }
        _ => {
            let iv = interval(rng);
            if rng.random_bool(0.5) {
                Formula::once(iv, sub(rng))
            } else {
                Formula::historically(iv, sub(rng))
            }
        }
    }
}

/// Random trace of length `1..=max_len` with non-decreasing half-integer timestamps.
pub fn trace(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<(Rational, Vec<bool>)> {
    let len = rng.random_range(1..=max_len);
    let mut t = Rational::new(rng.random_range(0..3), 2).unwrap();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((t, (0..ATOMS).map(|_| rng.random_bool(0.5)).collect()));
        t = t.checked_add(&Rational::new(rng.random_range(0..4), 2).unwrap()).unwrap();
    }
    out
}

pub fn observation(t: Rational, labels: &[bool]) -> Observation {
    Observation {
        time: t,
        event: Some(EventRecord::internal(PgId(0), 0)),
        labels: labels.to_vec(),
    }
}

pub fn timed_trace(tr: &[(Rational, Vec<bool>)]) -> TimedTrace {
    TimedTrace::from_observations(tr.iter().map(|(t, l)| observation(*t, l)).collect()).unwrap()
}

pub fn has_future(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::Atom(_) => false,
        Formula::Not(a) => has_future(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Since(a, _, b) => has_future(a) || has_future(b),
        Formula::Until(..) => true,
    }
}
