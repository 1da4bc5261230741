//! Name resolution for state-chart expressions and the `Math.random()` idioms.

use tpsmc_core::error::ModelError;
use tpsmc_core::kernel::{Rational, Value};
use tpsmc_core::program_graph::syntax::{Ast, AstKind, BinOp, NameScope};
use tpsmc_core::program_graph::VarId;

use crate::catalog::EventCatalog;
use crate::error::ScxmlError;
use crate::model::Expression;

/// What a name in an expression stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Name {
    Data(String),
    Origin,
    Param(usize, String),
    Random(usize),
}

const RANDOM_PREFIX: &str = "__rand";

pub(crate) fn untranslatable(expr: &Expression, reason: impl std::fmt::Display) -> ScxmlError {
    ScxmlError::Untranslatable {
        src: expr.src.clone(),
        reason: reason.to_string(),
        line: expr.line,
    }
}

pub fn is_random_call(ast: &Ast) -> bool {
    matches!(&ast.kind, AstKind::Call(name, args) if name == "Math.random" && args.is_empty())
}

fn constant(ast: &Ast) -> Option<Rational> {
    match &ast.kind {
        AstKind::Int(n) => Some(Rational::from_int(*n)),
        AstKind::Decimal(r) => Some(*r),
        AstKind::Unary(tpsmc_core::program_graph::syntax::UnOp::Neg, a) => constant(a)?.checked_neg().ok(),
        AstKind::Binary(BinOp::Div, a, b) => constant(a)?.checked_div(&constant(b)?).ok(),
        _ => None,
    }
}

/// Probability that a uniform draw on [0, 1) is below `c`.
fn below(c: Rational) -> Rational {
    if c.is_negative() {
        Rational::ZERO
    } else if c > Rational::ONE {
        Rational::ONE
    } else {
        c
    }
}

/// Replaces every comparison `Math.random() OP c` (or `c OP Math.random()`) by
/// a fresh boolean name obtained from `fresh(p)`, where `p` is the probability
/// that the comparison holds.
pub(crate) fn extract_random(ast: Ast, fresh: &mut impl FnMut(Rational) -> Result<String, ModelError>) -> Result<Ast, ModelError> {
    ast.rewrite(&mut |a| {
        let AstKind::Binary(op, x, y) = &a.kind else { return Ok(a) };
        let (op, c) = if is_random_call(x) {
            (*op, constant(y))
        } else if is_random_call(y) {
            let flipped = match op {
                BinOp::Lt => BinOp::Gt,
                BinOp::Le => BinOp::Ge,
                BinOp::Gt => BinOp::Lt,
                BinOp::Ge => BinOp::Le,
                other => *other,
            };
            (flipped, constant(x))
        } else {
            return Ok(a);
        };
        let Some(c) = c else { return Ok(a) };
        let p = match op {
            BinOp::Lt | BinOp::Le => below(c),
            BinOp::Gt | BinOp::Ge => Rational::ONE.checked_sub(&below(c))?,
            _ => return Ok(a),
        };
        Ok(Ast {
            kind: AstKind::Name(fresh(p)?),
            span: a.span,
        })
    })
}

pub(crate) fn random_name(k: usize) -> String {
    format!("{RANDOM_PREFIX}{k}")
}

/// Resolves `name` inside automaton `aid`, where `scope` lists the events that
/// may have triggered the surrounding transition.
pub(crate) fn resolve(
    name: &str,
    scope: &[usize],
    aid: usize,
    cat: &EventCatalog,
    is_data: &dyn Fn(&str) -> bool,
) -> Result<Name, String> {
    if let Some(k) = name.strip_prefix(RANDOM_PREFIX).and_then(|k| k.parse().ok()) {
        return Ok(Name::Random(k));
    }
    if name == "_event.origin" {
        return Ok(Name::Origin);
    }
    if let Some(p) = name.strip_prefix("_event.data.") {
        let carriers: Vec<usize> = scope
            .iter()
            .copied()
            .filter(|&e| cat.events[e].params.iter().any(|q| q == p))
            .collect();
        return match carriers.as_slice() {
            [] => Err(format!("no event handled here carries a parameter `{p}`")),
            [e] if cat.events[*e].routes.iter().any(|r| r.1 == aid) => Ok(Name::Param(*e, p.to_string())),
            [e] => Err(format!(
                "event `{}` never reaches `{}` from another automaton, so `{p}` is never set",
                cat.events[*e].name, cat.automata[aid]
            )),
            _ => Err(format!("parameter `{p}` is ambiguous between several events of this transition")),
        };
    }
    if is_data(name) {
        Ok(Name::Data(name.to_string()))
    } else {
        Err(format!("`{name}` is not a datamodel location"))
    }
}

/// Checks every name of `ast` with `resolve`, reporting the first failure.
pub(crate) fn check_names(ast: &Ast, check: &mut dyn FnMut(&str) -> Result<(), String>) -> Result<(), String> {
    let mut err = None;
    ast.walk(&mut |a| {
        if let AstKind::Name(n) = &a.kind {
            if err.is_none() {
                err = check(n).err();
            }
        }
    });
    err.map_or(Ok(()), Err)
}

/// Lowering scope: variables via `lookup`, string literals via the catalog.
pub(crate) struct Scope<'a> {
    pub lookup: &'a dyn Fn(&str) -> Option<VarId>,
    pub cat: &'a EventCatalog,
}

impl NameScope for Scope<'_> {
    fn variable(&self, name: &str) -> Option<VarId> {
        (self.lookup)(name)
    }

    fn string(&self, literal: &str) -> Option<Value> {
        self.cat.string_id(literal).map(|i| Value::Int(i as i64))
    }
}
