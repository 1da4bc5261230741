use tpsmc_core::kernel::Rational;
use tpsmc_scxml::{build_catalog, parse_delay, parse_scxml, Exec, ScxmlError, SendTarget};

fn doc(body: &str) -> String {
    format!(r#"<scxml xmlns="http://www.w3.org/2005/07/scxml" version="1.0" name="A">{body}</scxml>"#)
}

#[test]
fn minimal_document() {
    let a = parse_scxml(&doc(r#"<state id="s"/>"#)).unwrap();
    assert_eq!(a.states.len(), 1);
    assert_eq!(a.initial, "s");
    assert!(a.states[0].transitions.is_empty());
}

#[test]
fn restricted_elements_are_named() {
    let cases = [
        (r#"<state id="s"><history id="h"/></state>"#, "history"),
        (r#"<parallel id="p"/>"#, "parallel"),
        (r#"<state id="s"/><final id="f"/>"#, "final"),
        (r#"<state id="s"><onentry><script>x = 1</script></onentry></state>"#, "script"),
        (r#"<state id="s"><onentry><cancel sendid="x"/></onentry></state>"#, "cancel"),
        (r#"<state id="s"><invoke src="x"/></state>"#, "invoke"),
        (r#"<state id="s"><onentry><send event="e" target="A"><content>x</content></send></onentry></state>"#, "content"),
        (r#"<state id="s"><state id="t"/></state>"#, "state"),
    ];
    for (body, element) in cases {
        match parse_scxml(&doc(body)) {
            Err(ScxmlError::Restricted { element: e, restriction, .. }) => {
                assert_eq!(e, element);
                assert!(!restriction.is_empty());
            }
            other => panic!("{element}: {other:?}"),
        }
    }
}

#[test]
fn diagnostics_for_bad_documents() {
    assert!(matches!(parse_scxml("<scxml"), Err(ScxmlError::Xml(_))));
    assert!(matches!(
        parse_scxml(&doc(r#"<state id="s"><transition target="nowhere"/></state>"#)),
        Err(ScxmlError::UnknownTarget { .. })
    ));
    assert!(matches!(
        parse_scxml(&doc(r#"<state id="s"><transition cond="x +" target="s"/></state>"#)),
        Err(ScxmlError::Untranslatable { .. })
    ));
    match parse_scxml(&doc(r#"<state id="s"><transition cond="_sessionid == 1" target="s"/></state>"#)) {
        Err(ScxmlError::Untranslatable { reason, line, .. }) => {
            assert!(reason.contains("_sessionid"));
            assert_eq!(line, 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn send_delay_in_time_units() {
    let a = parse_scxml(&doc(r#"<state id="s"><onentry><send event="e" target="A" delay="5s"/></onentry></state>"#)).unwrap();
    let Exec::Send(s) = &a.states[0].onentry[0] else { panic!() };
    assert_eq!(s.delay, Some(Rational::from_int(5)));
    assert_eq!(s.target, SendTarget::Automaton("A".into()));
    assert_eq!(parse_delay("5").unwrap(), Rational::from_int(5));
    assert_eq!(parse_delay("500ms").unwrap(), Rational::new(1, 2).unwrap());
    assert_eq!(parse_delay("2min").unwrap(), Rational::from_int(120));
    assert!(parse_delay("5 parsecs").is_err());
    assert!(parse_delay("-1").is_err());
}

#[test]
fn if_chains_keep_their_branches() {
    let a = parse_scxml(&doc(
        r#"<datamodel><data id="x" expr="0"/></datamodel>
        <state id="s"><onentry>
          <if cond="x == 0"><assign location="x" expr="1"/>
          <elseif cond="x == 1"/><assign location="x" expr="2"/>
          <else/><assign location="x" expr="3"/><raise event="r"/></if>
        </onentry></state>"#,
    ))
    .unwrap();
    let Exec::If { branches } = &a.states[0].onentry[0] else { panic!() };
    assert_eq!(branches.iter().map(|b| b.1.len()).collect::<Vec<_>>(), [1, 1, 2]);
    assert!(branches[2].0.is_none());
}

fn chart(name: &str, body: &str) -> tpsmc_scxml::ScxmlAutomaton {
    parse_scxml(&format!(r#"<scxml name="{name}">{body}</scxml>"#)).unwrap()
}

#[test]
fn catalog_ids_and_routes() {
    let a = chart("A", r#"<state id="s"><onentry><send event="e1" target="C"/><raise event="e2"/></onentry></state>"#);
    let b = chart("B", r#"<state id="s"><onentry><send event="e1" target="C"/></onentry></state>"#);
    let c = chart("C", r#"<state id="s"><transition event="e1 e2" target="s"/></state>"#);
    let cat = build_catalog(&[a, b, c]).unwrap();
    assert_eq!(cat.automata, ["A", "B", "C"]);
    assert_eq!(cat.event_id("e1"), Some(0));
    assert_eq!(cat.event_id("e2"), Some(1));
    assert_eq!(cat.events[0].sources().into_iter().collect::<Vec<_>>(), [0, 1]);
    assert_eq!(cat.events[0].targets().into_iter().collect::<Vec<_>>(), [2]);
    assert!(cat.events[1].routes.is_empty());
    assert_eq!(cat.events[1].raised_by.iter().copied().collect::<Vec<_>>(), [0]);
}

#[test]
fn inconsistent_parameters_are_rejected() {
    let a = chart(
        "A",
        r#"<state id="s"><onentry>
          <send event="e" target="B"><param name="x" expr="1"/><param name="y" expr="2"/></send>
          <send event="e" target="B"><param name="x" expr="1"/><param name="y" expr="2"/><param name="z" expr="3"/></send>
        </onentry></state>"#,
    );
    let b = chart("B", r#"<state id="s"/>"#);
    assert!(matches!(build_catalog(&[a, b]), Err(ScxmlError::Catalog(_))));
    let a = chart("A", r#"<state id="s"/>"#);
    assert!(matches!(build_catalog(&[a.clone(), a]), Err(ScxmlError::Catalog(_))));
}
