//! Reading state-chart documents into [`ScxmlAutomaton`]s.
//!
//! Only flat charts are accepted: top-level `<state>`s with `<onentry>`,
//! `<onexit>` and `<transition>`, a document-level `<datamodel>`, and the
//! executable elements `<assign>`, `<if>`/`<elseif>`/`<else>`, `<raise>`,
//! `<send>` (with `<param>`) and `<log>` (ignored).

use roxmltree::{Document, Node};
use tpsmc_core::kernel::Rational;
use tpsmc_core::program_graph::parse_expr;
use tpsmc_core::program_graph::syntax::AstKind;

use crate::error::{Result, ScxmlError};
use crate::model::{DataDecl, Exec, Expression, ScxmlAutomaton, ScxmlState, ScxmlTransition, Send, SendTarget};

/// Delay suffixes and their length in time units. A bare number is in time units.
pub const DELAY_UNITS: [(&str, i64, i64); 4] = [("ms", 1, 1000), ("s", 1, 1), ("min", 60, 1), ("h", 3600, 1)];

fn restriction(element: &str) -> Option<&'static str> {
    Some(match element {
        "parallel" => "parallel regions are outside the supported subset",
        "final" => "final states are outside the supported subset",
        "history" => "history pseudo-states are outside the supported subset",
        "script" => "script blocks are outside the supported subset",
        "cancel" => "cancelling delayed sends is outside the supported subset",
        "invoke" => "invoking external services is outside the supported subset",
        "content" | "donedata" => "message bodies are outside the supported subset; use <param>",
        "initial" => "hierarchical states are outside the supported subset",
        "foreach" => "loops are outside the supported subset",
        _ => return None,
    })
}

struct Reader<'a> {
    doc: &'a Document<'a>,
}

impl<'a> Reader<'a> {
    fn line(&self, n: Node) -> u32 {
        self.doc.text_pos_at(n.range().start).row
    }

    fn malformed(&self, n: Node, message: impl Into<String>) -> ScxmlError {
        ScxmlError::Malformed {
            message: message.into(),
            line: self.line(n),
        }
    }

    fn reject(&self, n: Node, fallback: &'static str) -> ScxmlError {
        let element = n.tag_name().name();
        ScxmlError::Restricted {
            element: element.to_string(),
            restriction: restriction(element).unwrap_or(fallback),
            line: self.line(n),
        }
    }

    fn attr(&self, n: Node<'a, 'a>, name: &str) -> Result<&'a str> {
        n.attribute(name)
            .ok_or_else(|| self.malformed(n, format!("<{}> needs a `{name}` attribute", n.tag_name().name())))
    }

    fn expression(&self, n: Node, src: &str) -> Result<Expression> {
        let line = self.line(n);
        let ast = parse_expr(src).map_err(|e| ScxmlError::Untranslatable {
            src: src.to_string(),
            reason: e.to_string(),
            line,
        })?;
        let mut bad = None;
        ast.walk(&mut |a| {
            if let AstKind::Name(name) = &a.kind {
                if bad.is_none() && !system_name_allowed(name) {
                    bad = Some(name.clone());
                }
            }
        });
        if let Some(name) = bad {
            return Err(ScxmlError::Untranslatable {
                src: src.to_string(),
                reason: format!("`{name}`: the only system variables are _event.data.<param> and _event.origin"),
                line,
            });
        }
        Ok(Expression {
            src: src.to_string(),
            ast,
            line,
        })
    }

    fn elements(n: Node<'a, 'a>) -> impl Iterator<Item = Node<'a, 'a>> {
        n.children().filter(|c| c.is_element())
    }

    fn automaton(&self, root: Node<'a, 'a>) -> Result<ScxmlAutomaton> {
        if root.tag_name().name() != "scxml" {
            return Err(self.malformed(root, "the root element must be <scxml>"));
        }
        let name = self.attr(root, "name")?.to_string();
        let mut datamodel = Vec::new();
        let mut states = Vec::new();
        for c in Self::elements(root) {
            match c.tag_name().name() {
                "state" => states.push(self.state(c)?),
                "datamodel" => self.datamodel(c, &mut datamodel)?,
                _ => return Err(self.reject(c, "not allowed at document level")),
            }
        }
        if states.is_empty() {
            return Err(self.malformed(root, "the document declares no <state>"));
        }
        let initial = match root.attribute("initial") {
            Some(s) => s.to_string(),
            None => states[0].id.clone(),
        };
        let aut = ScxmlAutomaton {
            name,
            initial,
            datamodel,
            states,
        };
        check_references(&aut)?;
        Ok(aut)
    }

    fn datamodel(&self, n: Node<'a, 'a>, out: &mut Vec<DataDecl>) -> Result<()> {
        for d in Self::elements(n) {
            if d.tag_name().name() != "data" {
                return Err(self.reject(d, "only <data> may appear in a <datamodel>"));
            }
            if d.attribute("src").is_some() {
                return Err(self.malformed(d, "external data sources are not supported"));
            }
            let id = self.attr(d, "id")?.to_string();
            let src = match d.attribute("expr") {
                Some(e) => e.to_string(),
                None => d.text().map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).ok_or_else(|| {
                    self.malformed(d, format!("data `{id}` needs an initial value"))
                })?,
            };
            if out.iter().any(|x: &DataDecl| x.id == id) {
                return Err(self.malformed(d, format!("data `{id}` declared twice")));
            }
            let expr = self.expression(d, &src)?;
            out.push(DataDecl { id, expr });
        }
        Ok(())
    }

    fn state(&self, n: Node<'a, 'a>) -> Result<ScxmlState> {
        let id = self.attr(n, "id")?.to_string();
        if n.attribute("initial").is_some() {
            return Err(ScxmlError::Restricted {
                element: "state".into(),
                restriction: "hierarchical states are outside the supported subset",
                line: self.line(n),
            });
        }
        let mut st = ScxmlState {
            id,
            onentry: Vec::new(),
            onexit: Vec::new(),
            transitions: Vec::new(),
        };
        for c in Self::elements(n) {
            match c.tag_name().name() {
                "onentry" => st.onentry.extend(self.block(c)?),
                "onexit" => st.onexit.extend(self.block(c)?),
                "transition" => st.transitions.push(self.transition(c)?),
                "state" => {
                    return Err(ScxmlError::Restricted {
                        element: "state".into(),
                        restriction: "hierarchical states are outside the supported subset",
                        line: self.line(c),
                    })
                }
                _ => return Err(self.reject(c, "not allowed inside a <state>")),
            }
        }
        Ok(st)
    }

    fn transition(&self, n: Node<'a, 'a>) -> Result<ScxmlTransition> {
        let events: Vec<String> = n.attribute("event").unwrap_or("").split_whitespace().map(str::to_string).collect();
        if let Some(e) = events.iter().find(|e| e.contains('*') || e.ends_with('.')) {
            return Err(self.malformed(n, format!("event descriptor `{e}`: only plain event names are supported")));
        }
        let target = match n.attribute("target").map(str::split_whitespace) {
            Some(mut parts) => {
                let first = parts.next().map(str::to_string);
                if parts.next().is_some() {
                    return Err(self.malformed(n, "a transition may have one target state"));
                }
                first
            }
            None => None,
        };
        let cond = n.attribute("cond").map(|c| self.expression(n, c)).transpose()?;
        Ok(ScxmlTransition {
            events,
            cond,
            target,
            body: self.block(n)?,
        })
    }

    fn block(&self, n: Node<'a, 'a>) -> Result<Vec<Exec>> {
        let mut out = Vec::new();
        for c in Self::elements(n) {
            if let Some(e) = self.exec(c)? {
                out.push(e);
            }
        }
        Ok(out)
    }

    fn exec(&self, n: Node<'a, 'a>) -> Result<Option<Exec>> {
        Ok(Some(match n.tag_name().name() {
            "assign" => {
                let location = self.attr(n, "location")?.to_string();
                let src = match n.attribute("expr") {
                    Some(e) => e,
                    None => n.text().map(str::trim).filter(|t| !t.is_empty()).ok_or_else(|| {
                        self.malformed(n, "<assign> needs an `expr` attribute")
                    })?,
                };
                Exec::Assign {
                    location,
                    expr: self.expression(n, src)?,
                }
            }
            "raise" => Exec::Raise {
                event: self.attr(n, "event")?.to_string(),
            },
            "send" => Exec::Send(self.send(n)?),
            "if" => self.conditional(n)?,
            "log" => return Ok(None),
            "elseif" | "else" => return Err(self.malformed(n, "<elseif>/<else> outside of <if>")),
            _ => return Err(self.reject(n, "not executable content of the supported subset")),
        }))
    }

    fn conditional(&self, n: Node<'a, 'a>) -> Result<Exec> {
        let mut branches: Vec<(Option<Expression>, Vec<Exec>)> = vec![(Some(self.expression(n, self.attr(n, "cond")?)?), Vec::new())];
        for c in Self::elements(n) {
            match c.tag_name().name() {
                "elseif" => {
                    if branches.last().is_some_and(|b| b.0.is_none()) {
                        return Err(self.malformed(c, "<elseif> after <else>"));
                    }
                    branches.push((Some(self.expression(c, self.attr(c, "cond")?)?), Vec::new()));
                }
                "else" => {
                    if branches.last().is_some_and(|b| b.0.is_none()) {
                        return Err(self.malformed(c, "two <else> branches"));
                    }
                    branches.push((None, Vec::new()));
                }
                _ => {
                    if let Some(e) = self.exec(c)? {
                        branches.last_mut().expect("at least one branch").1.push(e);
                    }
                }
            }
        }
        Ok(Exec::If { branches })
    }

    fn send(&self, n: Node<'a, 'a>) -> Result<Send> {
        for attr in ["eventexpr", "delayexpr", "typeexpr", "idlocation"] {
            if n.attribute(attr).is_some() {
                return Err(self.malformed(n, format!("<send {attr}=...> is not supported")));
            }
        }
        if let Some(t) = n.attribute("type") {
            if !t.is_empty() && t != "scxml" && !t.ends_with("SCXMLEventProcessor") {
                return Err(self.malformed(n, format!("send type `{t}` is not supported")));
            }
        }
        let event = self.attr(n, "event")?.to_string();
        let target = match (n.attribute("target"), n.attribute("targetexpr")) {
            (Some(t), None) => SendTarget::Automaton(t.trim_start_matches("#_").trim_start_matches("scxml_").to_string()),
            (None, Some(e)) => SendTarget::Expr(self.expression(n, e)?),
            (Some(_), Some(_)) => return Err(self.malformed(n, "<send> has both `target` and `targetexpr`")),
            (None, None) => return Err(self.malformed(n, "<send> needs a `target` or `targetexpr`")),
        };
        let delay = n.attribute("delay").map(|d| parse_delay(d).map_err(|m| self.malformed(n, m))).transpose()?;
        let mut params = Vec::new();
        if let Some(list) = n.attribute("namelist") {
            for name in list.split_whitespace() {
                params.push((name.to_string(), self.expression(n, name)?));
            }
        }
        for c in Self::elements(n) {
            if c.tag_name().name() != "param" {
                return Err(self.reject(c, "only <param> may appear in a <send>"));
            }
            let name = self.attr(c, "name")?.to_string();
            let src = match (c.attribute("expr"), c.attribute("location")) {
                (Some(e), None) | (None, Some(e)) => e,
                _ => return Err(self.malformed(c, "<param> needs exactly one of `expr` and `location`")),
            };
            if params.iter().any(|(p, _)| *p == name) {
                return Err(self.malformed(c, format!("parameter `{name}` given twice")));
            }
            params.push((name, self.expression(c, src)?));
        }
        Ok(Send {
            event,
            target,
            params,
            delay,
            line: self.line(n),
        })
    }
}

fn system_name_allowed(name: &str) -> bool {
    if !name.starts_with('_') {
        return true;
    }
    if name == "_event.origin" {
        return true;
    }
    match name.strip_prefix("_event.data.") {
        Some(rest) => !rest.is_empty() && !rest.contains('.'),
        None => false,
    }
}

/// Parses a delay such as `5`, `5s`, `500ms` or `1.5min` into time units.
pub fn parse_delay(text: &str) -> Result<Rational, String> {
    let t = text.trim();
    let split = t.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(t.len());
    let (num, unit) = (&t[..split], t[split..].trim());
    if num.is_empty() {
        return Err(format!("delay `{text}` is not a number"));
    }
    let value = Rational::from_decimal(num).map_err(|_| format!("delay `{text}` is not a number"))?;
    let scale = if unit.is_empty() {
        Rational::ONE
    } else {
        let (_, n, d) = DELAY_UNITS
            .iter()
            .find(|(u, _, _)| *u == unit)
            .ok_or_else(|| format!("unknown delay unit `{unit}`"))?;
        Rational::new(*n, *d).map_err(|e| e.to_string())?
    };
    value.checked_mul(&scale).map_err(|e| e.to_string())
}

fn check_references(aut: &ScxmlAutomaton) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for s in &aut.states {
        if !seen.insert(s.id.as_str()) {
            return Err(ScxmlError::Malformed {
                message: format!("state `{}` declared twice", s.id),
                line: 0,
            });
        }
    }
    if aut.state_index(&aut.initial).is_none() {
        return Err(ScxmlError::UnknownTarget {
            state: aut.name.clone(),
            target: aut.initial.clone(),
        });
    }
    for s in &aut.states {
        for t in &s.transitions {
            if let Some(target) = &t.target {
                if aut.state_index(target).is_none() {
                    return Err(ScxmlError::UnknownTarget {
                        state: s.id.clone(),
                        target: target.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Parses one document.
pub fn parse_scxml(text: &str) -> Result<ScxmlAutomaton> {
    let doc = Document::parse(text).map_err(|e| ScxmlError::Xml(e.to_string()))?;
    let reader = Reader { doc: &doc };
    reader.automaton(doc.root_element())
}
