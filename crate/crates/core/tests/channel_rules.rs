mod support;

use std::collections::HashSet;

use support::bfs::{project, reachable};
use support::fixtures::{producer_consumer, table_system, RECEIVER_VAR, SENDER_VAR};
use tpsmc_core::channel_system::{ChannelEvaluation, CommAction};
use tpsmc_core::kernel::{ChannelId, EventKind, Value};
use tpsmc_core::program_graph::TimeGrid;
use tpsmc_core::smc::{Run, RunStep};

const CAP: usize = 3;

#[derive(Debug, Clone, Copy)]
enum Fill {
    Empty,
    Partial,
    Full,
}

/// Buffer whose front message is 7, followed by 2s.
fn buffer(fill: Fill) -> ChannelEvaluation {
    let mut xi = ChannelEvaluation::empty(1);
    let n = match fill {
        Fill::Empty => 0,
        Fill::Partial => 2,
        Fill::Full => CAP,
    };
    for k in 0..n {
        xi.get_mut(ChannelId(0)).push_back(Value::Int(if k == 0 { 7 } else { 2 }));
    }
    xi
}

fn contents(xi: &ChannelEvaluation) -> Vec<Value> {
    xi.get(ChannelId(0)).iter().cloned().collect()
}

#[test]
fn communication_table_grid() {
    let cs = table_system(CAP);
    let c = ChannelId(0);
    let actions = [
        ("send var", CommAction::SendVar { channel: c, var: SENDER_VAR }),
        ("send const", CommAction::SendConst { channel: c, value: Value::Int(5) }),
        ("recv var", CommAction::RecvVar { channel: c, var: RECEIVER_VAR }),
        ("recv const", CommAction::RecvConst { channel: c, value: Value::Int(7) }),
    ];
    let mut passed = 0;
    for (name, a) in &actions {
        for fill in [Fill::Empty, Fill::Partial, Fill::Full] {
            let xi = buffer(fill);
            let before = contents(&xi);
            let (pg, env) = if a.is_send() {
                (tpsmc_core::kernel::PgId(0), vec![Value::Int(4)])
            } else {
                (tpsmc_core::kernel::PgId(1), vec![Value::Int(0)])
            };
            let enabled = cs.comm_enabled(a, &xi, &env).unwrap();
            let expect_enabled = if a.is_send() {
                !matches!(fill, Fill::Full)
            } else {
                !matches!(fill, Fill::Empty)
            };
            assert_eq!(enabled, expect_enabled, "{name} on {fill:?}");
            if !enabled {
                passed += 1;
                continue;
            }
            let (xi2, env2, ev) = cs.comm_effect(pg, a, &xi, &env).unwrap();
            let after = contents(&xi2);
            match a {
                CommAction::SendVar { .. } | CommAction::SendConst { .. } => {
                    let sent = if matches!(a, CommAction::SendVar { .. }) { 4 } else { 5 };
                    let mut expect = before.clone();
                    expect.push(Value::Int(sent));
                    assert_eq!(after, expect, "{name} enqueues at the back");
                    assert_eq!(env2, env);
                    assert_eq!(ev.kind, EventKind::Send);
                    assert_eq!(ev.payload, Some(Value::Int(sent)));
                }
                CommAction::RecvVar { .. } => {
                    assert_eq!(after, before[1..]);
                    assert_eq!(env2, vec![before[0].clone()], "front is assigned");
                    assert_eq!(ev.kind, EventKind::Receive);
                }
                _ => {
                    assert_eq!(after, before[1..]);
                    assert_eq!(env2, env, "matching receive leaves variables alone");
                }
            }
            passed += 1;
        }
    }
    assert_eq!(passed, 12);

    let mut xi = ChannelEvaluation::empty(1);
    xi.get_mut(c).push_back(Value::Int(3));
    assert!(!cs.comm_enabled(&actions[3].1, &xi, &[Value::Int(0)]).unwrap(), "value mismatch disables");
}

#[test]
fn handshake_channels_have_no_buffer_semantics() {
    let cs = table_system(0);
    let a = CommAction::SendVar { channel: ChannelId(0), var: SENDER_VAR };
    assert!(cs.comm_enabled(&a, &ChannelEvaluation::empty(1), &[Value::Int(1)]).is_err());
}

#[test]
fn successor_closure_equals_rule_oracle() {
    let cs = producer_consumer();
    let oracle = reachable(&cs);
    assert!(oracle.len() <= 500, "fixture has {} states", oracle.len());

    let mut seen = HashSet::new();
    let mut frontier: Vec<_> = cs.initial_states().unwrap();
    for s in &frontier {
        seen.insert(project(s));
    }
    while let Some(s) = frontier.pop() {
        for (n, _) in cs.successors(&s, TimeGrid::default()).unwrap() {
            if seen.insert(project(&n)) {
                frontier.push(n);
            }
        }
    }
    assert_eq!(seen, oracle);
}

#[test]
fn simulation_stays_inside_the_oracle() {
    let cs = producer_consumer();
    let oracle = reachable(&cs);
    let init = cs.initial_states().unwrap();
    let mut visited = HashSet::new();
    let mut trial = 0;
    let mut run = Run::new(&cs, &init, 5, trial, TimeGrid::default());
    visited.insert(project(run.state()));
    for _ in 0..100_000 {
        match run.step().unwrap() {
            RunStep::Fired { .. } => {
                visited.insert(project(run.state()));
            }
            RunStep::Terminal | RunStep::TimeLocked => {
                trial += 1;
                run = Run::new(&cs, &init, 5, trial, TimeGrid::default());
            }
        }
    }
    assert!(visited.is_subset(&oracle));
    // Rare interleavings need not show up in one walk; the successor closure above
    // is what must match exactly.
    assert!(visited.len() * 100 >= oracle.len() * 95, "walk covered {} of {}", visited.len(), oracle.len());
}
