mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::naive_mtl::{formula, has_future, naive, observation, timed_trace, to_verdict, trace};
use tpsmc_core::mtl::{end_of_trace, evaluate, evaluate_complete, online_update, Formula, Interval, OracleState, Verdict};

const CASES: usize = 10_000;

#[test]
fn offline_matches_naive_at_every_position() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..CASES {
        let f = formula(&mut rng, 3);
        let tr = trace(&mut rng, 8);
        let tt = timed_trace(&tr);
        for i in 0..tr.len() {
            assert_eq!(evaluate(&f, &tt, i).unwrap(), to_verdict(naive(&f, &tr, i, false)), "{f} at {i} on {tr:?}");
            assert_eq!(
                evaluate_complete(&f, &tt, i).unwrap(),
                to_verdict(naive(&f, &tr, i, true)),
                "{f} at {i} on completed {tr:?}"
            );
        }
    }
}

#[test]
fn online_matches_offline_and_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..CASES {
        let f = formula(&mut rng, 3);
        let tr = trace(&mut rng, 8);
        let mut st = OracleState::new(&f);
        let mut history = Vec::new();
        for (k, (t, labels)) in tr.iter().enumerate() {
            let v = st.update(observation(*t, labels)).unwrap();
            assert_eq!(v, to_verdict(naive(&f, &tr[..=k], 0, false)), "{f} on prefix {k} of {tr:?}");
            history.push(v);
        }
        let last = end_of_trace(&mut st);
        assert_eq!(last, to_verdict(naive(&f, &tr, 0, true)));
        assert!(last.is_conclusive());
        history.push(last);
        for (a, va) in history.iter().enumerate() {
            if va.is_conclusive() {
                for vb in &history[a..] {
                    assert_eq!(va, vb, "{f} changed its verdict on {tr:?}");
                }
            }
        }
    }
}

#[test]
fn past_only_formulas_are_always_conclusive() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    while checked < 2_000 {
        let f = formula(&mut rng, 3);
        if has_future(&f) {
            continue;
        }
        checked += 1;
        let tr = trace(&mut rng, 8);
        let tt = timed_trace(&tr);
        for i in 0..tr.len() {
            assert!(evaluate(&f, &tt, i).unwrap().is_conclusive());
        }
    }
}

#[test]
fn derived_operators_agree_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..2_000 {
        let phi = formula(&mut rng, 2);
        let tr = trace(&mut rng, 8);
        let tt = timed_trace(&tr);
        let iv = Interval::bounded(0, 2).unwrap();
        let g = Formula::globally(iv, phi.clone());
        let dual = Formula::eventually(iv, phi.clone().negate()).negate();
        let h = Formula::historically(iv, phi.clone());
        let hdual = Formula::once(iv, phi.clone().negate()).negate();
        for i in 0..tr.len() {
            assert_eq!(evaluate(&g, &tt, i).unwrap(), evaluate(&dual, &tt, i).unwrap());
            assert_eq!(evaluate(&h, &tt, i).unwrap(), evaluate(&hdual, &tt, i).unwrap());
            let a = evaluate(&phi.clone().and(g.clone()), &tt, i).unwrap();
            let b = evaluate(&phi.clone().negate().or(g.clone().negate()).negate(), &tt, i).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn online_examples() {
    let p = Formula::atom(0);
    let t = |n| tpsmc_core::kernel::Rational::from_int(n);
    let mut st = OracleState::new(&Formula::eventually(Interval::bounded(0, 5).unwrap(), p.clone()));
    assert_eq!(online_update(&mut st, observation(t(0), &[false])).unwrap(), None);
    assert_eq!(online_update(&mut st, observation(t(1), &[false])).unwrap(), None);
    assert_eq!(online_update(&mut st, observation(t(2), &[true])).unwrap(), Some(Verdict::True));

    let mut st = OracleState::new(&Formula::globally(Interval::UNBOUNDED, p.clone()));
    for k in 0..4 {
        assert_eq!(online_update(&mut st, observation(t(k), &[true])).unwrap(), None);
    }
    assert_eq!(end_of_trace(&mut st), Verdict::True);

    let mut st = OracleState::new(&p.clone().until(Interval::UNBOUNDED, Formula::atom(1)));
    online_update(&mut st, observation(t(0), &[true, false])).unwrap();
    assert_eq!(end_of_trace(&mut st), Verdict::False);

    let mut st = OracleState::new(&p);
    online_update(&mut st, observation(t(3), &[true])).unwrap();
    assert!(online_update(&mut st, observation(t(2), &[true])).is_err());
}
