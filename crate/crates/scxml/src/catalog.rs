use std::collections::{BTreeSet, HashMap};

use tpsmc_core::program_graph::syntax::AstKind;

use crate::error::{Result, ScxmlError};
use crate::model::{for_each_exec, Exec, ScxmlAutomaton, Send, SendTarget};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventInfo {
    pub name: String,
    /// Parameter names in the order they are packed into a tuple.
    pub params: Vec<String>,
    /// `(origin, target)` automaton pairs over which the event may travel.
    pub routes: BTreeSet<(usize, usize)>,
    /// Automata raising the event on their own internal queue.
    pub raised_by: BTreeSet<usize>,
    /// Automata with a transition triggered by the event.
    pub listeners: BTreeSet<usize>,
}

impl EventInfo {
    pub fn sources(&self) -> BTreeSet<usize> {
        self.routes.iter().map(|r| r.0).collect()
    }

    pub fn targets(&self) -> BTreeSet<usize> {
        self.routes.iter().map(|r| r.1).collect()
    }
}

/// Integer ids for automata, events and interned string literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventCatalog {
    pub automata: Vec<String>,
    pub events: Vec<EventInfo>,
    pub strings: Vec<String>,
}

impl EventCatalog {
    pub fn automaton_id(&self, name: &str) -> Option<usize> {
        self.automata.iter().position(|a| a == name)
    }

    pub fn event_id(&self, name: &str) -> Option<usize> {
        self.events.iter().position(|e| e.name == name)
    }

    pub fn string_id(&self, literal: &str) -> Option<usize> {
        self.strings.iter().position(|s| s == literal)
    }

    /// Parameterized routes `(event, origin, target)`, sorted; each gets its own channel.
    pub fn param_routes(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (e, info) in self.events.iter().enumerate() {
            if !info.params.is_empty() {
                out.extend(info.routes.iter().map(|&(o, t)| (e, o, t)));
            }
        }
        out
    }

    /// Events that may arrive on the external queue of `a`.
    pub fn incoming(&self, a: usize) -> Vec<usize> {
        (0..self.events.len()).filter(|&e| self.events[e].routes.iter().any(|r| r.1 == a)).collect()
    }

    /// Possible receivers of event `e` sent through `target`. A literal target
    /// names its automaton; a computed one may reach any automaton listening to `e`.
    pub fn receivers(&self, e: usize, target: &SendTarget) -> Result<Vec<usize>> {
        match static_target(target) {
            Some(name) => self
                .automaton_id(name)
                .map(|a| vec![a])
                .ok_or_else(|| ScxmlError::Catalog(format!("event `{}` is sent to unknown automaton `{name}`", self.events[e].name))),
            None => Ok(self.events[e].listeners.iter().copied().collect()),
        }
    }
}

/// The automaton named by a target, when it is known without evaluation.
pub fn static_target(target: &SendTarget) -> Option<&str> {
    match target {
        SendTarget::Automaton(name) => Some(name),
        SendTarget::Expr(e) => match &e.ast.kind {
            AstKind::Str(s) => Some(s),
            _ => None,
        },
    }
}

struct Builder {
    cat: EventCatalog,
    index: HashMap<String, usize>,
}

impl Builder {
    fn event(&mut self, name: &str) -> usize {
        if let Some(&e) = self.index.get(name) {
            return e;
        }
        self.cat.events.push(EventInfo {
            name: name.to_string(),
            params: Vec::new(),
            routes: BTreeSet::new(),
            raised_by: BTreeSet::new(),
            listeners: BTreeSet::new(),
        });
        self.index.insert(name.to_string(), self.cat.events.len() - 1);
        self.cat.events.len() - 1
    }

    fn strings(&mut self, ast: &tpsmc_core::program_graph::syntax::Ast) {
        ast.walk(&mut |a| {
            if let AstKind::Str(s) = &a.kind {
                if !self.cat.strings.contains(s) {
                    self.cat.strings.push(s.clone());
                }
            }
        });
    }
}

fn visit<'a>(b: &mut Builder, block: &'a [Exec], aid: usize, sends: &mut Vec<(usize, usize, &'a Send)>) {
    for_each_exec(block, &mut |x| match x {
        Exec::Raise { event } => {
            let e = b.event(event);
            b.cat.events[e].raised_by.insert(aid);
        }
        Exec::Send(s) => {
            let e = b.event(&s.event);
            sends.push((e, aid, s));
            for (_, p) in &s.params {
                b.strings(&p.ast);
            }
            if let SendTarget::Expr(t) = &s.target {
                b.strings(&t.ast);
            }
        }
        Exec::Assign { expr, .. } => b.strings(&expr.ast),
        Exec::If { branches } => {
            for (g, _) in branches {
                if let Some(g) = g {
                    b.strings(&g.ast);
                }
            }
        }
    });
}

/// Assigns ids in first-occurrence order: automata in input order; events and
/// strings by walking each automaton's datamodel, then per state its entry and
/// exit blocks and its transitions (events, guard, body).
pub fn build_catalog(automata: &[ScxmlAutomaton]) -> Result<EventCatalog> {
    let mut b = Builder {
        cat: EventCatalog {
            automata: Vec::new(),
            events: Vec::new(),
            strings: Vec::new(),
        },
        index: HashMap::new(),
    };
    for a in automata {
        if b.cat.automata.contains(&a.name) {
            return Err(ScxmlError::Catalog(format!("automaton name `{}` is used twice", a.name)));
        }
        b.cat.automata.push(a.name.clone());
    }
    let mut sends = Vec::new();
    for (aid, a) in automata.iter().enumerate() {
        for d in &a.datamodel {
            b.strings(&d.expr.ast);
        }
        for s in &a.states {
            visit(&mut b, &s.onentry, aid, &mut sends);
            visit(&mut b, &s.onexit, aid, &mut sends);
            for t in &s.transitions {
                for ev in &t.events {
                    let e = b.event(ev);
                    b.cat.events[e].listeners.insert(aid);
                }
                if let Some(c) = &t.cond {
                    b.strings(&c.ast);
                }
                visit(&mut b, &t.body, aid, &mut sends);
            }
        }
    }

    // parameter names of the first send of each event, which fix the tuple order
    let mut first: HashMap<usize, Vec<String>> = HashMap::new();
    for (e, _, s) in &sends {
        let names: Vec<String> = s.params.iter().map(|(n, _)| n.clone()).collect();
        match first.get(e) {
            None => {
                first.insert(*e, names.clone());
                b.cat.events[*e].params = names;
            }
            Some(known) => {
                let same = known.len() == names.len() && names.iter().all(|n| known.contains(n));
                if !same {
                    return Err(ScxmlError::Catalog(format!(
                        "event `{}` is sent with parameters ({}) at line {} but with ({}) elsewhere",
                        b.cat.events[*e].name,
                        names.join(", "),
                        s.line,
                        known.join(", ")
                    )));
                }
            }
        }
    }
    for (e, aid, s) in &sends {
        for r in b.cat.receivers(*e, &s.target)? {
            b.cat.events[*e].routes.insert((*aid, r));
        }
    }
    for info in &b.cat.events {
        if !info.params.is_empty() && !info.raised_by.is_empty() {
            return Err(ScxmlError::Catalog(format!(
                "event `{}` carries parameters when sent but none when raised",
                info.name
            )));
        }
    }
    Ok(b.cat)
}
