use tpsmc_core::channel_system::{ChannelDecl, ChannelSystem, CommAction};
use tpsmc_core::kernel::{ChannelId, ClockConstraint, PgId, Rational, Value, VarDomain};
use tpsmc_core::program_graph::{Branch, Effect, Expr, PgTransition, ProgramGraph, ProgramGraphBuilder, VarId};

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d).unwrap()
}

/// Transition matrix of the three-state chain; state 2 is absorbing.
pub fn chain_matrix() -> Vec<Vec<Rational>> {
    vec![
        vec![r(1, 4), r(1, 2), r(1, 4)],
        vec![r(1, 3), r(1, 3), r(1, 3)],
        vec![r(0, 1), r(0, 1), r(1, 1)],
    ]
}

/// Graph `M` walking the chain one step per time unit, its state in `s` and
/// starting from 0. Reaching 2 ends the execution.
pub fn chain() -> ChannelSystem {
    let p = chain_matrix();
    let mut b = ProgramGraphBuilder::new("M");
    let l = b.location("run");
    b.initial(l);
    let s = b.variable("s", VarDomain::int(0, 2), Some(Value::Int(0))).unwrap();
    let x = b.clock("x").unwrap();
    let step = b.action("step");
    for from in 0..2 {
        let branches = (0..3)
            .filter(|to| !p[from][*to].is_zero())
            .map(|to| Branch {
                probability: p[from][to],
                updates: vec![(s, Expr::int(to as i64))],
            })
            .collect();
        b.transition(
            PgTransition::new(l, step, l)
                .with_guard(Expr::eq(Expr::var(s), Expr::int(from as i64)))
                .with_clock_guard(ClockConstraint::at_least(x, Rational::ONE))
                .with_resets(vec![x])
                .with_effect(Effect::new(branches).unwrap()),
        );
    }
    ChannelSystem::new(vec![b.build().unwrap()], vec![]).unwrap()
}

/// Graph `C` that sets `r` with probability `p` and stops.
pub fn coin(p: Rational) -> ChannelSystem {
    let mut b = ProgramGraphBuilder::new("C");
    let start = b.location("start");
    let done = b.location("done");
    b.initial(start);
    let v = b.variable("r", VarDomain::Bool, Some(Value::Bool(false))).unwrap();
    let flip = b.action("flip");
    let mut branches = vec![Branch {
        probability: p,
        updates: vec![(v, Expr::bool(true))],
    }];
    if p != Rational::ONE {
        branches.push(Branch {
            probability: Rational::ONE.checked_sub(&p).unwrap(),
            updates: vec![],
        });
    }
    b.transition(PgTransition::new(start, flip, done).with_effect(Effect::new(branches).unwrap()));
    ChannelSystem::new(vec![b.build().unwrap()], vec![]).unwrap()
}

/// Producer `P` and consumer `Q` over a buffered channel `c` (capacity 2) and a
/// handshake channel `h` on which `Q` releases `P` once the counter saturates.
pub fn producer_consumer() -> ChannelSystem {
    let c = ChannelId(0);
    let h = ChannelId(1);

    let mut b = ProgramGraphBuilder::new("P");
    let p0 = b.location("p0");
    let p1 = b.location("p1");
    b.initial(p0);
    let x = b.variable("x", VarDomain::int(0, 3), Some(Value::Int(0))).unwrap();
    let (work, send, wait) = (b.action("work"), b.action("send"), b.action("wait"));
    let bump = Effect::new(vec![
        Branch {
            probability: r(1, 2),
            updates: vec![(x, Expr::add(Expr::var(x), Expr::int(1)))],
        },
        Branch {
            probability: r(1, 2),
            updates: vec![],
        },
    ])
    .unwrap();
    b.transition(
        PgTransition::new(p0, work, p1)
            .with_guard(Expr::lt(Expr::var(x), Expr::int(3)))
            .with_effect(bump),
    );
    b.transition(PgTransition::new(p1, send, p0).with_comm(CommAction::SendVar { channel: c, var: x }));
    b.transition(
        PgTransition::new(p0, wait, p0)
            .with_guard(Expr::eq(Expr::var(x), Expr::int(3)))
            .with_comm(CommAction::RecvConst {
                channel: h,
                value: Value::Int(1),
            })
            .with_effect(Effect::deterministic(vec![(x, Expr::int(0))])),
    );
    let producer = b.build().unwrap();

    let mut b = ProgramGraphBuilder::new("Q");
    let q0 = b.location("q0");
    let q1 = b.location("q1");
    b.initial(q0);
    let y = b.variable("y", VarDomain::int(0, 3), Some(Value::Int(0))).unwrap();
    let n = b.variable("n", VarDomain::int(0, 2), Some(Value::Int(0))).unwrap();
    let (take, count, release, idle) = (b.action("take"), b.action("count"), b.action("release"), b.action("idle"));
    b.transition(PgTransition::new(q0, take, q1).with_comm(CommAction::RecvVar { channel: c, var: y }));
    b.transition(
        PgTransition::new(q1, count, q0)
            .with_guard(Expr::lt(Expr::var(n), Expr::int(2)))
            .with_effect(Effect::deterministic(vec![(n, Expr::add(Expr::var(n), Expr::int(1)))])),
    );
    b.transition(
        PgTransition::new(q1, release, q0)
            .with_guard(Expr::eq(Expr::var(n), Expr::int(2)))
            .with_comm(CommAction::SendConst {
                channel: h,
                value: Value::Int(1),
            })
            .with_effect(Effect::deterministic(vec![(n, Expr::int(0))])),
    );
    b.transition(
        PgTransition::new(q0, idle, q0)
            .with_guard(Expr::eq(Expr::var(y), Expr::int(3)))
            .with_comm(CommAction::ProbeEmpty(c))
            .with_effect(Effect::deterministic(vec![(y, Expr::int(0))])),
    );
    let consumer = b.build().unwrap();

    ChannelSystem::new(
        vec![producer, consumer],
        vec![
            ChannelDecl::new("c", PgId(0), PgId(1), 2, VarDomain::int(0, 3)),
            ChannelDecl::new("h", PgId(1), PgId(0), 0, VarDomain::int(0, 1)),
        ],
    )
    .unwrap()
}

/// Sender `S` with variable `v` and receiver `R` with variable `x` over channel `c`.
pub fn table_system(capacity: usize) -> ChannelSystem {
    let c = ChannelId(0);
    let mut b = ProgramGraphBuilder::new("S");
    let l = b.location("l");
    b.initial(l);
    let v = b.variable("v", VarDomain::int(0, 9), Some(Value::Int(4))).unwrap();
    let a = b.action("a");
    b.transition(PgTransition::new(l, a, l).with_comm(CommAction::SendVar { channel: c, var: v }));
    b.transition(PgTransition::new(l, a, l).with_comm(CommAction::SendConst {
        channel: c,
        value: Value::Int(7),
    }));
    let s = b.build().unwrap();

    let mut b = ProgramGraphBuilder::new("R");
    let l = b.location("l");
    b.initial(l);
    let x = b.variable("x", VarDomain::int(0, 9), Some(Value::Int(0))).unwrap();
    let a = b.action("a");
    b.transition(PgTransition::new(l, a, l).with_comm(CommAction::RecvVar { channel: c, var: x }));
    b.transition(PgTransition::new(l, a, l).with_comm(CommAction::RecvConst {
        channel: c,
        value: Value::Int(7),
    }));
    let rcv = b.build().unwrap();

    ChannelSystem::new(
        vec![s, rcv],
        vec![ChannelDecl::new("c", PgId(0), PgId(1), capacity, VarDomain::int(0, 9))],
    )
    .unwrap()
}

pub const SENDER_VAR: VarId = VarId(0);
pub const RECEIVER_VAR: VarId = VarId(0);

/// Graph `W` with three locations and two actions; each transition is one of
/// several equally likely targets for its action.
pub fn markov_walk() -> ProgramGraph {
    let mut b = ProgramGraphBuilder::new("W");
    let l: Vec<_> = (0..3).map(|i| b.location(format!("L{i}"))).collect();
    b.initial(l[0]);
    let a = b.action("a");
    let bb = b.action("b");
    let edges: [(usize, _, &[usize]); 6] = [
        (0, a, &[0, 1, 1]),
        (0, bb, &[2]),
        (1, a, &[0, 1, 2, 2]),
        (1, bb, &[1, 2]),
        (2, a, &[0, 0, 1]),
        (2, bb, &[2, 1]),
    ];
    for (from, act, targets) in edges {
        for &to in targets {
            b.transition(PgTransition::new(l[from], act, l[to]));
        }
    }
    b.build().unwrap()
}
