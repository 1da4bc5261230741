use tpsmc_core::error::ModelError;
use tpsmc_core::kernel::Value;
use tpsmc_core::mtl::{AtomDef, AtomScope, CsAtoms, Sexp};
use tpsmc_core::program_graph::{Expr, VarId};

use crate::compile::CompiledModel;

/// Atom forms for compiled state charts. On top of the channel-system forms
/// (`sent`, `received`, `state`, `at`, with string literals interned as in the
/// charts) it offers `(event NAME [FROM [TO]])`, which holds when `NAME` is put
/// on an external queue, optionally restricted to its sender and receiver, and
/// `(consumed NAME [BY])` for the matching dequeue.
pub struct ScxmlAtoms<'a> {
    model: &'a CompiledModel,
}

impl<'a> ScxmlAtoms<'a> {
    pub fn new(model: &'a CompiledModel) -> Self {
        ScxmlAtoms { model }
    }

    fn automaton(&self, s: &Sexp) -> Result<usize, ModelError> {
        let name = s.as_symbol().ok_or_else(|| ModelError::Parse(format!("expected an automaton name, found {s}")))?;
        self.model
            .catalog
            .automaton_id(name)
            .ok_or_else(|| ModelError::Invalid(format!("unknown automaton `{name}`")))
    }

    fn event_atom(&self, head: &str, args: &[Sexp]) -> Result<AtomDef, ModelError> {
        let cat = &self.model.catalog;
        let max = if head == "event" { 3 } else { 2 };
        if args.is_empty() || args.len() > max {
            return Err(ModelError::Parse(format!("`{head}` takes an event name and up to {} automata", max - 1)));
        }
        let name = args[0]
            .as_symbol()
            .ok_or_else(|| ModelError::Parse(format!("`{head}` expects an event name")))?;
        let e = cat
            .event_id(name)
            .ok_or_else(|| ModelError::Invalid(format!("unknown event `{name}`")))?;
        let (from, to) = if head == "event" {
            (args.get(1).map(|a| self.automaton(a)).transpose()?, args.get(2).map(|a| self.automaton(a)).transpose()?)
        } else {
            (None, args.get(1).map(|a| self.automaton(a)).transpose()?)
        };
        let msg = || Expr::Var(VarId(0));
        let mut pred = vec![Expr::eq(Expr::Proj(Box::new(msg()), 0), Expr::int(e as i64))];
        if let Some(a) = from {
            pred.push(Expr::eq(Expr::Proj(Box::new(msg()), 1), Expr::int(a as i64)));
        }
        let channels = (0..cat.automata.len())
            .filter(|a| to.is_none_or(|t| t == *a))
            .map(|a| self.model.layout.q_ext[a])
            .collect();
        let pred = Some(Expr::and(pred));
        Ok(if head == "event" {
            AtomDef::Sent { channels, pred }
        } else {
            AtomDef::Received { channels, pred }
        })
    }
}

impl AtomScope for ScxmlAtoms<'_> {
    fn atom(&self, head: &str, args: &[Sexp]) -> Result<Option<AtomDef>, ModelError> {
        match head {
            "event" | "consumed" => self.event_atom(head, args).map(Some),
            _ => {
                let strings = |s: &str| self.model.catalog.string_id(s).map(|i| Value::Int(i as i64));
                CsAtoms::new(&self.model.system).with_strings(&strings).atom(head, args)
            }
        }
    }
}
