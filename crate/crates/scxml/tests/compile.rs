use std::collections::{HashSet, VecDeque};

use tpsmc_core::channel_system::CommAction;
use tpsmc_core::kernel::{EventRecord, Rational, Value};
use tpsmc_core::program_graph::{Expr, LocationId, ProgramGraph, TimeGrid, VarId};
use tpsmc_core::smc::{Run, RunStep};
use tpsmc_scxml::{compile_automata, map_trace, parse_scxml, CompileOptions, CompiledModel, MessageKind, ScxmlAutomaton, ScxmlError};

fn fixture(name: &str) -> ScxmlAutomaton {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_scxml(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn chart(name: &str, body: &str) -> ScxmlAutomaton {
    parse_scxml(&format!(r#"<scxml name="{name}">{body}</scxml>"#)).unwrap()
}

fn ping_pong() -> CompiledModel {
    compile_automata(&[fixture("ping.scxml"), fixture("pong.scxml")], &CompileOptions::default()).unwrap()
}

fn simulate(model: &CompiledModel, seed: u64, trial: u64, steps: usize) -> Vec<(Rational, EventRecord)> {
    let init = model.system.initial_states().unwrap();
    let mut run = Run::new(&model.system, &init, seed, trial, TimeGrid::default());
    let mut out = Vec::new();
    for _ in 0..steps {
        match run.step().unwrap() {
            RunStep::Fired { event, time } => out.push((time, event)),
            _ => break,
        }
    }
    out
}

fn r(n: i64) -> Rational {
    Rational::from_int(n)
}

#[test]
fn ping_pong_has_five_channels() {
    let m = ping_pong();
    let names: Vec<&str> = m.system.channels().iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["q_int.A", "q_int.B", "q_ext.A", "q_ext.B", "param.ping.A.B"]);
    assert_eq!(names.len(), 2 * 2 + m.catalog.param_routes().len());
}

#[test]
fn ping_pong_trace_is_deterministic() {
    let m = ping_pong();
    let expect = [
        (0, MessageKind::Send, "ping", "A", "B", Some(1)),
        (0, MessageKind::Receive, "ping", "A", "B", Some(1)),
        (5, MessageKind::Send, "pong", "B", "A", None),
        (5, MessageKind::Receive, "pong", "B", "A", None),
        (5, MessageKind::Send, "ping", "A", "B", Some(2)),
        (5, MessageKind::Receive, "ping", "A", "B", Some(2)),
    ];
    for trial in 0..20 {
        let events = map_trace(&m, &simulate(&m, 7, trial, 200));
        assert!(events.len() >= 6, "trial {trial}");
        for (got, (t, kind, event, origin, target, n)) in events.iter().zip(expect) {
            assert_eq!(got.t, r(t), "trial {trial}: {got:?}");
            assert_eq!((got.kind, got.event.as_str()), (kind, event));
            assert_eq!((got.origin.as_str(), got.target.as_str()), (origin, target));
            assert_eq!(got.params.get("n").cloned(), n.map(Value::Int));
        }
    }
}

#[test]
fn delayed_send_lands_after_the_delay() {
    let a = chart(
        "A",
        r#"<state id="s">
             <onentry><send event="tick" target="A" delay="4"/></onentry>
             <transition event="tick" target="done"><send event="e2" target="B" delay="3"/></transition>
           </state>
           <state id="done"/>"#,
    );
    let b = chart("B", r#"<state id="w"><transition event="e2" target="w"/></state>"#);
    let m = compile_automata(&[a, b], &CompileOptions::default()).unwrap();
    for trial in 0..10 {
        let events = map_trace(&m, &simulate(&m, 1, trial, 100));
        let send = |name: &str| events.iter().find(|e| e.kind == MessageKind::Send && e.event == name).unwrap().t;
        assert_eq!(send("tick"), r(4));
        assert_eq!(send("e2"), r(7));
    }
}

fn outgoing(pg: &ProgramGraph, l: LocationId) -> Vec<&tpsmc_core::program_graph::PgTransition> {
    pg.outgoing(l).iter().map(|&i| &pg.transitions()[i]).collect()
}

#[test]
fn silent_chart_has_no_communication() {
    let m = compile_automata(&[chart("A", r#"<state id="s"/>"#)], &CompileOptions::default()).unwrap();
    assert!(m.system.pgs()[0].transitions().iter().all(|t| t.comm.is_none()));
}

#[test]
fn entry_assignment_is_a_chain_of_one() {
    let a = chart(
        "A",
        r#"<datamodel><data id="x" expr="0"/></datamodel>
           <state id="s"><onentry><assign location="x" expr="x + 1"/></onentry></state>"#,
    );
    let m = compile_automata(&[a], &CompileOptions::default()).unwrap();
    let pg = &m.system.pgs()[0];
    let s = pg.location_id("s").unwrap();
    let out = outgoing(pg, s);
    assert_eq!(out.len(), 1);
    assert_eq!(pg.location_name(out[0].target), "s.ready");
    let x = pg.var_id("A.x").unwrap();
    let updates = &out[0].effect.branches()[0].updates;
    assert_eq!(updates, &vec![(x, Expr::add(Expr::var(x), Expr::int(1)))]);
}

#[test]
fn if_else_fans_out_and_joins() {
    let a = chart(
        "A",
        r#"<datamodel><data id="a" expr="0"/><data id="c" expr="true"/></datamodel>
           <state id="s"><onentry><if cond="c"><assign location="a" expr="1"/><else/><assign location="a" expr="2"/></if></onentry></state>"#,
    );
    let m = compile_automata(&[a], &CompileOptions::default()).unwrap();
    let pg = &m.system.pgs()[0];
    let out = outgoing(pg, pg.location_id("s").unwrap());
    assert_eq!(out.len(), 2);
    let c = pg.var_id("A.c").unwrap();
    assert_eq!(out[0].guard, Expr::var(c));
    assert_eq!(out[1].guard, Expr::not(Expr::var(c)));
    let joins: HashSet<LocationId> = out
        .iter()
        .flat_map(|t| outgoing(pg, t.target))
        .map(|t| t.target)
        .collect();
    assert_eq!(joins.len(), 1);
}

#[test]
fn random_comparison_becomes_a_bernoulli_draw() {
    let a = chart(
        "A",
        r#"<state id="s"><transition cond="Math.random() &lt; 0.3" target="yes"/><transition target="no"/></state>
           <state id="yes"/><state id="no"/>"#,
    );
    let m = compile_automata(&[a], &CompileOptions::default()).unwrap();
    let pg = &m.system.pgs()[0];
    let draws: Vec<_> = pg.transitions().iter().filter(|t| t.effect.branches().len() == 2).collect();
    assert_eq!(draws.len(), 1);
    assert_eq!(draws[0].effect.branches()[0].probability, Rational::new(3, 10).unwrap());

    let (yes, no) = (pg.location_id("yes").unwrap(), pg.location_id("no").unwrap());
    let init = m.system.initial_states().unwrap();
    let n = 10_000;
    let mut hits = 0;
    for trial in 0..n {
        let mut run = Run::new(&m.system, &init, 99, trial, TimeGrid::default());
        loop {
            let RunStep::Fired { .. } = run.step().unwrap() else { panic!("stuck") };
            let l = run.state().locations[0];
            if l == yes {
                hits += 1;
                break;
            }
            if l == no {
                break;
            }
        }
    }
    let freq = hits as f64 / n as f64;
    let sigma = (0.3f64 * 0.7 / n as f64).sqrt();
    assert!((freq - 0.3).abs() <= 3.0 * sigma, "frequency {freq}");
}

#[test]
fn assigned_random_is_uniform_on_thousandths() {
    let a = chart(
        "A",
        r#"<datamodel><data id="u" expr="0"/></datamodel>
           <state id="s"><onentry><assign location="u" expr="Math.random()"/></onentry>
           <transition cond="u &lt; 0.25" target="low"/></state><state id="low"/>"#,
    );
    let m = compile_automata(&[a], &CompileOptions::default()).unwrap();
    let pg = &m.system.pgs()[0];
    let t = &outgoing(pg, pg.location_id("s").unwrap())[0];
    assert_eq!(t.effect.branches().len(), 1000);
    let low = t
        .effect
        .branches()
        .iter()
        .filter(|b| b.updates[0].1.eval(&[]).unwrap().as_rational().unwrap() < Rational::new(1, 4).unwrap())
        .count();
    assert_eq!(low, 250);
}

#[test]
fn untranslatable_expressions_are_reported() {
    let cases = [
        r#"<datamodel><data id="x" expr="0"/></datamodel><state id="s"><onentry><assign location="x" expr="Math.random() * 3"/></onentry></state>"#,
        r#"<state id="s"><transition cond="y == 1" target="s"/></state>"#,
        r#"<state id="s"><onentry><assign location="nope" expr="1"/></onentry></state>"#,
        r#"<state id="s"><transition cond="_event.data.v == 1" target="s"/></state>"#,
        r#"<datamodel><data id="x" expr="f(1)"/></datamodel><state id="s"/>"#,
    ];
    for body in cases {
        match compile_automata(&[chart("A", body)], &CompileOptions::default()) {
            Err(ScxmlError::Untranslatable { .. }) => {}
            other => panic!("{body}: {other:?}"),
        }
    }
    let opts = CompileOptions {
        internal_capacity: 0,
        ..CompileOptions::default()
    };
    assert!(matches!(compile_automata(&[chart("A", r#"<state id="s"/>"#)], &opts), Err(ScxmlError::Config(_))));
}

#[test]
fn computed_targets_replicate_per_receiver() {
    let a = chart(
        "A",
        r#"<datamodel><data id="to" expr="1"/></datamodel>
           <state id="s"><onentry><send event="go" targetexpr="to"/></onentry></state>"#,
    );
    let listener = |n: &str| chart(n, r#"<state id="w"><transition event="go" target="got"/></state><state id="got"/>"#);
    let m = compile_automata(&[a, listener("B"), listener("C")], &CompileOptions::default()).unwrap();
    let pg = &m.system.pgs()[0];
    let sends: Vec<_> = pg.transitions().iter().filter(|t| t.comm.as_ref().is_some_and(CommAction::is_send)).collect();
    assert_eq!(sends.len(), 2);
    for trial in 0..5 {
        let events = map_trace(&m, &simulate(&m, 3, trial, 50));
        let got: Vec<_> = events.iter().filter(|e| e.kind == MessageKind::Receive).map(|e| e.target.as_str()).collect();
        assert_eq!(got, ["B"]);
    }
}

/// A chart exercising most constructs, for the structural checks below.
fn busy() -> Vec<ScxmlAutomaton> {
    vec![
        chart(
            "A",
            r#"<datamodel><data id="k" expr="0"/><data id="mode" expr="'idle'"/></datamodel>
               <state id="a0">
                 <onentry><raise event="self"/><assign location="k" expr="k + 1"/></onentry>
                 <transition cond="k &gt; 3" target="a1"/>
                 <transition event="self" cond="Math.random() &lt; 0.5" target="a0">
                   <send event="job" target="B"><param name="size" expr="k"/></send>
                 </transition>
                 <transition event="self done" target="a1"><assign location="mode" expr="'busy'"/></transition>
                 <transition event="ack"/>
               </state>
               <state id="a1"><onexit><send event="job" target="B"><param name="size" expr="0"/></send></onexit>
                 <transition event="ack" target="a0"/></state>"#,
        ),
        chart(
            "B",
            r#"<datamodel><data id="total" expr="0"/></datamodel>
               <state id="b0">
                 <transition event="job" target="b0">
                   <if cond="_event.data.size &gt; 2"><assign location="total" expr="total + _event.data.size"/>
                   <elseif cond="_event.data.size == 0"/><send event="done" target="A"/>
                   <else/><send event="ack" targetexpr="_event.origin" delay="2"/></if>
                 </transition>
               </state>"#,
        ),
    ]
}

fn reach(pg: &ProgramGraph, from: LocationId, skip: &dyn Fn(&tpsmc_core::program_graph::PgTransition) -> bool) -> HashSet<LocationId> {
    let mut seen = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(l) = queue.pop_front() {
        for t in outgoing(pg, l) {
            if !skip(t) && seen.insert(t.target) {
                queue.push_back(t.target);
            }
        }
    }
    seen
}

fn reads(e: &Expr, v: VarId) -> bool {
    let mut found = false;
    e.for_each_var(&mut |x| found |= x == v);
    found
}

#[test]
fn structural_invariants() {
    for automata in [busy(), vec![fixture("ping.scxml"), fixture("pong.scxml")]] {
        let m = compile_automata(&automata, &CompileOptions::default()).unwrap();
        let again = compile_automata(&automata, &CompileOptions::default()).unwrap();
        assert_eq!(format!("{:?}", m.system.pgs()), format!("{:?}", again.system.pgs()), "compilation is deterministic");
        assert_eq!(m.system.channels(), again.system.channels());
        assert_eq!(m.system.channels().len(), 2 * automata.len() + m.catalog.param_routes().len());

        for (aid, (pg, aut)) in m.system.pgs().iter().zip(&automata).enumerate() {
            let q_int = m.layout.q_int[aid];
            let q_ext = m.layout.q_ext[aid];
            let is_dequeue = |t: &tpsmc_core::program_graph::PgTransition| {
                matches!(&t.comm, Some(CommAction::RecvVar { channel, .. }) if *channel == q_int)
                    || matches!(&t.comm, Some(CommAction::RecvTuple { channel, .. }) if *channel == q_ext)
            };
            let waits: HashSet<LocationId> = pg.transitions().iter().filter(|t| is_dequeue(t)).map(|t| t.source).collect();
            let start = pg.initial_locations()[0];
            for l in reach(pg, start, &|_| false) {
                assert!(!reach(pg, l, &|_| false).is_disjoint(&waits), "{}: stuck at {}", pg.name(), pg.location_name(l));
            }

            let event = pg.var_id(&format!("{}.event", aut.name)).unwrap();
            for s in &aut.states {
                let p = pg.location_id(&s.id).unwrap();
                for l in reach(pg, p, &is_dequeue) {
                    for t in outgoing(pg, l) {
                        assert!(!reads(&t.guard, event), "{}: event read before dequeue in {}", pg.name(), s.id);
                    }
                }
                // eventful guards are tested in document order
                let Some(loaded) = pg.location_id(&format!("{}.event", s.id)) else { continue };
                let mut order = Vec::new();
                let mut at = loaded;
                loop {
                    let out = outgoing(pg, at);
                    let Some(test) = out.iter().find(|t| reads(&t.guard, event)) else {
                        at = out.iter().find(|t| t.effect.branches().len() == 2).map(|t| t.target).unwrap();
                        continue;
                    };
                    order.push(pg.location_name(test.target).to_string());
                    let Some(next) = out.iter().find(|t| t.guard == Expr::not(test.guard.clone())) else { break };
                    if waits.contains(&next.target) {
                        break;
                    }
                    at = next.target;
                }
                let expect: Vec<String> = s
                    .transitions
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| !t.is_eventless())
                    .map(|(k, _)| format!("{}.t{k}", s.id))
                    .collect();
                assert_eq!(order, expect);
            }
        }
    }
}

#[test]
fn busy_chart_runs() {
    let m = compile_automata(&busy(), &CompileOptions::default()).unwrap();
    for trial in 0..50 {
        let steps = simulate(&m, 11, trial, 500);
        assert!(!steps.is_empty());
        let events = map_trace(&m, &steps);
        for e in events.iter().filter(|e| e.event == "job") {
            assert!(e.params.contains_key("size"), "{e:?}");
        }
    }
}
