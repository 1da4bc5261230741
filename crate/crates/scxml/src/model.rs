use tpsmc_core::kernel::Rational;
use tpsmc_core::program_graph::syntax::Ast;

/// An expression attribute together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub src: String,
    pub ast: Ast,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataDecl {
    pub id: String,
    pub expr: Expression,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SendTarget {
    /// Name of the receiving automaton.
    Automaton(String),
    /// Evaluated at run time; must yield an automaton id.
    Expr(Expression),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Send {
    pub event: String,
    pub target: SendTarget,
    pub params: Vec<(String, Expression)>,
    /// Delay in time units.
    pub delay: Option<Rational>,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Exec {
    Assign { location: String, expr: Expression },
    /// `if`/`elseif`/`else`; a `None` guard is the `else` branch and is always last.
    If { branches: Vec<(Option<Expression>, Vec<Exec>)> },
    Raise { event: String },
    Send(Send),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScxmlTransition {
    /// Event names the transition listens to; empty for eventless transitions.
    pub events: Vec<String>,
    pub cond: Option<Expression>,
    pub target: Option<String>,
    pub body: Vec<Exec>,
}

impl ScxmlTransition {
    pub fn is_eventless(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScxmlState {
    pub id: String,
    pub onentry: Vec<Exec>,
    pub onexit: Vec<Exec>,
    /// In document order.
    pub transitions: Vec<ScxmlTransition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScxmlAutomaton {
    pub name: String,
    pub initial: String,
    pub datamodel: Vec<DataDecl>,
    pub states: Vec<ScxmlState>,
}

impl ScxmlAutomaton {
    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s.id == id)
    }

    /// Every executable block in canonical order: per state, entry, exit, then
    /// each transition body.
    pub fn blocks(&self) -> impl Iterator<Item = &[Exec]> {
        self.states.iter().flat_map(|s| {
            [s.onentry.as_slice(), s.onexit.as_slice()]
                .into_iter()
                .chain(s.transitions.iter().map(|t| t.body.as_slice()))
        })
    }
}

/// Calls `f` on every executable element of `block`, nested ones included, in
/// document order.
pub fn for_each_exec<'a>(block: &'a [Exec], f: &mut impl FnMut(&'a Exec)) {
    for e in block {
        f(e);
        if let Exec::If { branches } = e {
            for (_, body) in branches {
                for_each_exec(body, f);
            }
        }
    }
}
