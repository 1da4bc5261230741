//! Property files.
//!
//! ```xml
//! <properties>
//!   <property name="answered">
//!     <formula>(globally (implies (sent ping) (eventually [0 10] (received pong))))</formula>
//!   </property>
//! </properties>
//! ```
//!
//! Formula grammar (s-expressions, intervals default to `[0 inf]`):
//!
//! ```text
//! f := true | false
//!    | (not f) | (and f f ...) | (or f f ...) | (implies f f)
//!    | (until I? f f) | (since I? f f)
//!    | (eventually I? f) | (globally I? f) | (once I? f) | (historically I? f)
//!    | atom
//! I := [lo hi]          lo, hi rationals ("3", "1.5", "7/2"); hi may be inf
//! atom := (sent CHANNEL "pred"?) | (received CHANNEL "pred"?)
//!       | (state "guard") | (at GRAPH LOCATION)
//! ```
//!
//! `pred` is an expression over `msg`, the transmitted value; `guard` is an
//! expression over the model's variables. Front ends may add atom forms through
//! [`AtomScope`].

use std::fmt;
use std::str::FromStr;

use crate::channel_system::ChannelSystem;
use crate::error::ModelError;
use crate::kernel::{Rational, Value};
use crate::program_graph::{parse_guard, NameScope, VarId};

use super::{AtomDef, Formula, Interval};

/// Parsed s-expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Symbol(String),
    Str(String),
    Interval(String, String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Sexp::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Symbol(s) => f.write_str(s),
            Sexp::Str(s) => write!(f, "\"{s}\""),
            Sexp::Interval(a, b) => write!(f, "[{a} {b}]"),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub fn parse_sexp(src: &str) -> Result<Sexp, ModelError> {
    let mut p = SexpParser { src, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

struct SexpParser<'a> {
    src: &'a str,
    pos: usize,
}

impl SexpParser<'_> {
    fn error(&self, msg: &str) -> ModelError {
        ModelError::Parse(format!("{msg} at offset {} of `{}`", self.pos, self.src.trim()))
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn atom_text(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || "()[]\"".contains(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn expr(&mut self) -> Result<Sexp, ModelError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end")),
            Some('(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        None => return Err(self.error("unclosed `(`")),
                        _ => items.push(self.expr()?),
                    }
                }
            }
            Some('[') => {
                self.pos += 1;
                self.skip_ws();
                let lo = self.atom_text().to_string();
                self.skip_ws();
                let hi = self.atom_text().to_string();
                self.skip_ws();
                if lo.is_empty() || hi.is_empty() || self.peek() != Some(']') {
                    return Err(self.error("interval must read `[lo hi]`"));
                }
                self.pos += 1;
                Ok(Sexp::Interval(lo, hi))
            }
            Some('"') => {
                self.pos += 1;
                let Some(end) = self.src[self.pos..].find('"') else {
                    return Err(self.error("unterminated string"));
                };
                let s = self.src[self.pos..self.pos + end].to_string();
                self.pos += end + 1;
                Ok(Sexp::Str(s))
            }
            Some(')') | Some(']') => Err(self.error("unexpected closing bracket")),
            Some(_) => Ok(Sexp::Symbol(self.atom_text().to_string())),
        }
    }
}

/// Resolves atom forms `(head args...)` to atom definitions.
pub trait AtomScope {
    /// `Ok(None)` when `head` is not an atom form known to this scope.
    fn atom(&self, head: &str, args: &[Sexp]) -> Result<Option<AtomDef>, ModelError>;
}

/// The built-in atom forms over a channel system.
pub struct CsAtoms<'a> {
    cs: &'a ChannelSystem,
    strings: Option<&'a dyn Fn(&str) -> Option<Value>>,
}

impl<'a> CsAtoms<'a> {
    pub fn new(cs: &'a ChannelSystem) -> Self {
        CsAtoms { cs, strings: None }
    }

    /// Lets string literals in predicates denote values, as interned by a front end.
    pub fn with_strings(mut self, f: &'a dyn Fn(&str) -> Option<Value>) -> Self {
        self.strings = Some(f);
        self
    }

    pub fn system(&self) -> &ChannelSystem {
        self.cs
    }

    /// Parses an expression where `msg` is the transmitted value.
    pub fn message_predicate(&self, src: &str) -> Result<crate::program_graph::Expr, ModelError> {
        parse_guard(
            src,
            &Scope {
                vars: &|n| (n == "msg").then_some(VarId(0)),
                strings: self.strings,
            },
        )
    }

    /// Parses an expression over the model's variables, named either as declared
    /// or qualified as `graph.variable`.
    pub fn state_predicate(&self, src: &str) -> Result<crate::program_graph::Expr, ModelError> {
        let lookup = |n: &str| {
            self.cs.global_var(n).or_else(|| {
                let (g, v) = n.split_once('.')?;
                let pg = self.cs.pg_id(g)?;
                Some(self.cs.global_var_of(pg, self.cs.pg(pg).var_id(v)?))
            })
        };
        parse_guard(
            src,
            &Scope {
                vars: &lookup,
                strings: self.strings,
            },
        )
    }
}

struct Scope<'s> {
    vars: &'s dyn Fn(&str) -> Option<VarId>,
    strings: Option<&'s dyn Fn(&str) -> Option<Value>>,
}

impl NameScope for Scope<'_> {
    fn variable(&self, name: &str) -> Option<VarId> {
        (self.vars)(name)
    }

    fn string(&self, literal: &str) -> Option<Value> {
        self.strings.and_then(|f| f(literal))
    }
}

fn symbol_arg<'s>(head: &str, args: &'s [Sexp], i: usize) -> Result<&'s str, ModelError> {
    args.get(i)
        .and_then(Sexp::as_symbol)
        .ok_or_else(|| ModelError::Parse(format!("`{head}` expects a name as argument {}", i + 1)))
}

impl AtomScope for CsAtoms<'_> {
    fn atom(&self, head: &str, args: &[Sexp]) -> Result<Option<AtomDef>, ModelError> {
        Ok(Some(match head {
            "sent" | "received" => {
                if args.is_empty() || args.len() > 2 {
                    return Err(ModelError::Parse(format!("`{head}` takes a channel and an optional predicate")));
                }
                let name = symbol_arg(head, args, 0)?;
                let c = self
                    .cs
                    .channel_id(name)
                    .ok_or_else(|| ModelError::Invalid(format!("undeclared channel `{name}`")))?;
                let pred = match args.get(1) {
                    Some(Sexp::Str(src)) => Some(self.message_predicate(src)?),
                    Some(other) => return Err(ModelError::Parse(format!("expected a quoted predicate, found {other}"))),
                    None => None,
                };
                if head == "sent" {
                    AtomDef::Sent { channels: vec![c], pred }
                } else {
                    AtomDef::Received { channels: vec![c], pred }
                }
            }
            "state" => {
                let [Sexp::Str(src)] = args else {
                    return Err(ModelError::Parse("`state` takes one quoted guard".into()));
                };
                AtomDef::State(self.state_predicate(src)?)
            }
            "at" => {
                if args.len() != 2 {
                    return Err(ModelError::Parse("`at` takes a graph and a location".into()));
                }
                let g = symbol_arg(head, args, 0)?;
                let l = symbol_arg(head, args, 1)?;
                let pg = self
                    .cs
                    .pg_id(g)
                    .ok_or_else(|| ModelError::Invalid(format!("undeclared graph `{g}`")))?;
                let loc = self
                    .cs
                    .pg(pg)
                    .location_id(l)
                    .ok_or_else(|| ModelError::Invalid(format!("graph `{g}` has no location `{l}`")))?;
                AtomDef::At(pg, loc)
            }
            _ => return Ok(None),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub formula: Formula,
}

/// Named formulas sharing one atom table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropertySet {
    pub properties: Vec<Property>,
    pub atoms: Vec<AtomDef>,
}

impl PropertySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a formula and adds it under `name`.
    pub fn add(&mut self, name: &str, src: &str, scope: &dyn AtomScope) -> Result<(), ModelError> {
        if self.properties.iter().any(|p| p.name == name) {
            return Err(ModelError::Invalid(format!("duplicate property `{name}`")));
        }
        let sexp = parse_sexp(src)?;
        let formula = self
            .formula(&sexp, scope)
            .map_err(|e| e.context(format!("property `{name}`")))?;
        self.properties.push(Property {
            name: name.to_string(),
            formula,
        });
        Ok(())
    }

    /// Index of `atom`, adding it if new.
    pub fn intern(&mut self, atom: AtomDef) -> usize {
        match self.atoms.iter().position(|a| *a == atom) {
            Some(i) => i,
            None => {
                self.atoms.push(atom);
                self.atoms.len() - 1
            }
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.properties.iter().map(|p| p.name.as_str())
    }

    fn formula(&mut self, e: &Sexp, scope: &dyn AtomScope) -> Result<Formula, ModelError> {
        let items = match e {
            Sexp::Symbol(s) if s == "true" => return Ok(Formula::True),
            Sexp::Symbol(s) if s == "false" => return Ok(Formula::falsity()),
            Sexp::List(items) if !items.is_empty() => items,
            _ => return Err(ModelError::Parse(format!("expected a formula, found `{e}`"))),
        };
        let Some(head) = items[0].as_symbol() else {
            return Err(ModelError::Parse(format!("operator expected in `{e}`")));
        };
        let mut args = &items[1..];
        let temporal = matches!(
            head,
            "until" | "since" | "eventually" | "globally" | "once" | "historically"
        );
        let interval = match args.first() {
            Some(Sexp::Interval(lo, hi)) if temporal => {
                args = &args[1..];
                parse_interval(lo, hi)?
            }
            _ => Interval::UNBOUNDED,
        };
        let arity = |n: usize| -> Result<(), ModelError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(ModelError::Parse(format!("`{head}` takes {n} operand(s) in `{e}`")))
            }
        };
        Ok(match head {
            "not" => {
                arity(1)?;
                self.formula(&args[0], scope)?.negate()
            }
            "and" | "or" => {
                if args.len() < 2 {
                    return Err(ModelError::Parse(format!("`{head}` takes at least 2 operands in `{e}`")));
                }
                let mut acc = self.formula(&args[0], scope)?;
                for a in &args[1..] {
                    let f = self.formula(a, scope)?;
                    acc = if head == "and" { acc.and(f) } else { acc.or(f) };
                }
                acc
            }
            "implies" => {
                arity(2)?;
                let a = self.formula(&args[0], scope)?;
                a.implies(self.formula(&args[1], scope)?)
            }
            "until" | "since" => {
                arity(2)?;
                let a = self.formula(&args[0], scope)?;
                let b = self.formula(&args[1], scope)?;
                if head == "until" {
                    a.until(interval, b)
                } else {
                    a.since(interval, b)
                }
            }
            "eventually" | "globally" | "once" | "historically" => {
                arity(1)?;
                let a = self.formula(&args[0], scope)?;
                match head {
                    "eventually" => Formula::eventually(interval, a),
                    "globally" => Formula::globally(interval, a),
                    "once" => Formula::once(interval, a),
                    _ => Formula::historically(interval, a),
                }
            }
            _ => match scope.atom(head, args)? {
                Some(atom) => Formula::atom(self.intern(atom)),
                None => return Err(ModelError::Parse(format!("unknown operator `{head}`"))),
            },
        })
    }
}

fn parse_interval(lo: &str, hi: &str) -> Result<Interval, ModelError> {
    let lo = Rational::from_str(lo)?;
    let hi = match hi {
        "inf" => None,
        h => Some(Rational::from_str(h)?),
    };
    Interval::new(lo, hi)
}

/// Reads a property file.
pub fn parse_properties(xml: &str, scope: &dyn AtomScope) -> Result<PropertySet, ModelError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| ModelError::Parse(format!("property file: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "properties" {
        return Err(ModelError::Parse(format!(
            "property file root is <{}>, expected <properties>",
            root.tag_name().name()
        )));
    }
    let mut set = PropertySet::new();
    for p in root.children().filter(|n| n.is_element()) {
        if p.tag_name().name() != "property" {
            return Err(ModelError::Parse(format!("unexpected <{}> in <properties>", p.tag_name().name())));
        }
        let name = p
            .attribute("name")
            .ok_or_else(|| ModelError::Parse("<property> without a name".into()))?;
        let formula = p
            .children()
            .find(|n| n.has_tag_name("formula"))
            .and_then(|n| n.text())
            .ok_or_else(|| ModelError::Parse(format!("property `{name}` has no <formula>")))?;
        set.add(name, formula, scope)?;
    }
    if set.properties.is_empty() {
        return Err(ModelError::Parse("property file declares no properties".into()));
    }
    Ok(set)
}
