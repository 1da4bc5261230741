mod support;

use support::fixtures::{chain, chain_matrix, coin};
use support::paths::reach_within;
use tpsmc_core::channel_system::ChannelSystem;
use tpsmc_core::kernel::{Observation, Rational, TimedTrace};
use tpsmc_core::mtl::{evaluate, label, CsAtoms, PropertySet, Verdict};
use tpsmc_core::smc::{estimate, required_samples, run_trial, Run, RunStep, SmcConfig, SmcReport, TerminalReason};

fn props(cs: &ChannelSystem, list: &[(&str, &str)]) -> PropertySet {
    let mut set = PropertySet::new();
    for (name, src) in list {
        set.add(name, src, &CsAtoms::new(cs)).unwrap();
    }
    set
}

fn cfg(seed: u64, workers: usize) -> SmcConfig {
    SmcConfig {
        seed,
        workers,
        ..SmcConfig::default()
    }
}

fn stripped(mut r: SmcReport) -> SmcReport {
    r.wall_time_secs = None;
    r
}

#[test]
fn chain_estimate_is_within_epsilon_of_enumeration() {
    let cs = chain();
    let set = props(&cs, &[("goal", r#"(eventually [0 6] (state "M.s == 2"))"#)]);
    let exact = reach_within(&chain_matrix(), 0, 2, 6).to_f64();
    let report = estimate(&cs, &set, &cfg(3, 4)).unwrap();
    let p = &report.properties[0];
    assert!(p.converged && !report.budget_exhausted);
    assert!(p.samples <= 738);
    assert!((p.estimate - exact).abs() <= 0.05, "{} vs {exact}", p.estimate);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let cs = chain();
    let set = props(
        &cs,
        &[
            ("goal", r#"(eventually [0 4] (state "M.s == 2"))"#),
            ("stay", r#"(globally [0 3] (state "M.s != 1"))"#),
        ],
    );
    let base = stripped(estimate(&cs, &set, &cfg(9, 1)).unwrap());
    for w in [2, 4, 8, 16] {
        assert_eq!(stripped(estimate(&cs, &set, &cfg(9, w)).unwrap()), base, "workers = {w}");
    }
}

#[test]
fn trial_stops_at_first_conclusive_step() {
    let cs = coin(Rational::ONE);
    let set = props(&cs, &[("flip", r#"(eventually (state "C.r"))"#)]);
    let r = run_trial(&cs, &set, &cfg(0, 1), 0).unwrap();
    assert_eq!(r.trace_length, 1);
    assert_eq!(r.reason, TerminalReason::PropertyResolved);
    assert_eq!(r.verdicts, vec![Verdict::True]);
}

#[test]
fn deterministic_model_gives_the_same_trial_everywhere() {
    let cs = coin(Rational::ONE);
    let set = props(&cs, &[("never", r#"(globally (not (state "C.r")))"#), ("at", "(eventually (at C done))")]);
    let first = run_trial(&cs, &set, &cfg(0, 1), 0).unwrap();
    for t in 1..50 {
        let r = run_trial(&cs, &set, &cfg(t, 1), t).unwrap();
        assert_eq!((r.verdicts, r.trace_length, r.reason), (first.verdicts.clone(), first.trace_length, first.reason));
    }
}

#[test]
fn certain_property_needs_only_the_adaptive_bound() {
    let cs = coin(Rational::ONE);
    let set = props(&cs, &[("flip", r#"(eventually (state "C.r"))"#)]);
    let report = estimate(&cs, &set, &cfg(1, 2)).unwrap();
    let p = &report.properties[0];
    assert_eq!(p.estimate, 1.0);
    assert_eq!(p.samples, required_samples(0.05, 0.05, Some(1.0)));
    assert_eq!(report.trials, p.samples);
}

#[test]
fn fair_coin_coverage() {
    let cs = coin(Rational::new(1, 2).unwrap());
    let set = props(&cs, &[("heads", r#"(eventually (state "C.r"))"#)]);
    let hits = (0..100)
        .filter(|seed| {
            let r = estimate(&cs, &set, &cfg(1000 + seed, 4)).unwrap();
            (r.properties[0].estimate - 0.5).abs() <= 0.05
        })
        .count();
    assert!(hits >= 95, "{hits} of 100 runs within epsilon");
}

#[test]
fn budget_and_inconclusive_flags() {
    let cs = coin(Rational::new(1, 2).unwrap());
    let set = props(&cs, &[("heads", r#"(eventually (state "C.r"))"#)]);
    let report = estimate(
        &cs,
        &set,
        &SmcConfig {
            max_samples: 10,
            ..cfg(0, 1)
        },
    )
    .unwrap();
    assert!(report.budget_exhausted);
    assert_eq!(report.trials, 10);

    let cs = chain();
    let set = props(&cs, &[("late", r#"(eventually [100 200] (state "M.s == 2"))"#)]);
    let report = estimate(
        &cs,
        &set,
        &SmcConfig {
            max_samples: 200,
            max_trace_length: 3,
            ..cfg(0, 1)
        },
    )
    .unwrap();
    let p = &report.properties[0];
    assert!(p.inconclusive > 0 && p.inconclusive_flag);
    assert!(p.samples + p.inconclusive <= report.trials);
}

#[test]
fn early_stop_matches_offline_verdict_on_the_same_prefix() {
    let cs = chain();
    let set = props(&cs, &[("goal", r#"(eventually [0 5] (state "M.s == 2"))"#)]);
    let config = cfg(21, 1);
    let init = cs.initial_states().unwrap();
    for t in 0..200 {
        let r = run_trial(&cs, &set, &config, t).unwrap();
        let mut run = Run::new(&cs, &init, config.seed, t, config.grid);
        let mut tr = TimedTrace::new();
        let labels = label(&set.atoms, run.state(), None).unwrap();
        tr.push(Observation { time: run.now(), event: None, labels }).unwrap();
        while run.steps() < r.trace_length {
            let RunStep::Fired { event, time } = run.step().unwrap() else { panic!("run ended early") };
            let labels = label(&set.atoms, run.state(), Some(&event)).unwrap();
            tr.push(Observation { time, event: Some(event), labels }).unwrap();
        }
        let offline = if r.reason == TerminalReason::TraceComplete {
            tpsmc_core::mtl::evaluate_complete(&set.properties[0].formula, &tr, 0).unwrap()
        } else {
            evaluate(&set.properties[0].formula, &tr, 0).unwrap()
        };
        assert_eq!(offline, r.verdicts[0], "trial {t}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let cs = coin(Rational::ONE);
    let set = props(&cs, &[("flip", "(eventually (at C done))")]);
    let bad = SmcConfig {
        epsilon: Rational::new(3, 5).unwrap(),
        ..cfg(0, 1)
    };
    assert!(estimate(&cs, &set, &bad).is_err());
    let bad = SmcConfig { workers: 0, ..cfg(0, 1) };
    assert!(estimate(&cs, &set, &bad).is_err());
}

#[test]
fn initial_state_is_the_first_observation() {
    let cs = chain();
    let set = props(
        &cs,
        &[
            ("start", r#"(state "M.s == 0")"#),
            ("first_step", r#"(eventually [0 1] (state "M.s == 2"))"#),
        ],
    );
    let report = estimate(&cs, &set, &cfg(4, 2)).unwrap();
    assert_eq!(report.properties[0].estimate, 1.0);
    assert!((report.properties[1].estimate - 0.25).abs() <= 0.05, "{}", report.properties[1].estimate);
}
