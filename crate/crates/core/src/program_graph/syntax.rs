//! Concrete syntax for guards, updates and clock constraints.
//!
//! The grammar is the ECMAScript expression subset used in state-chart documents:
//! literals, dotted names, `[a, b]` tuples, `e[i]` projection, calls, unary `!`/`-`,
//! `* /`, `+ -`, comparisons, (strict) equality, `&&` and `||`. Parsing produces an
//! [`Ast`]; lowering resolves names and rejects what the model cannot express.

use std::ops::Range;

use crate::error::ModelError;
use crate::kernel::{ClockConstraint, ClockId, Rational, Value};

use super::{Expr, VarId};

pub type Span = Range<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct Ast {
    pub kind: AstKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AstKind {
    Int(i64),
    Decimal(Rational),
    Bool(bool),
    Str(String),
    /// Possibly dotted identifier such as `count` or `_event.data.v`.
    Name(String),
    Call(String, Vec<Ast>),
    Unary(UnOp, Box<Ast>),
    Binary(BinOp, Box<Ast>, Box<Ast>),
    Tuple(Vec<Ast>),
    Index(Box<Ast>, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

impl Ast {
    fn new(kind: AstKind, span: Span) -> Self {
        Ast { kind, span }
    }

    /// Rewrites every node bottom-up through `f`.
    pub fn rewrite(self, f: &mut impl FnMut(Ast) -> Result<Ast, ModelError>) -> Result<Ast, ModelError> {
        let Ast { kind, span } = self;
        let kind = match kind {
            AstKind::Call(name, args) => {
                AstKind::Call(name, args.into_iter().map(|a| a.rewrite(f)).collect::<Result<_, _>>()?)
            }
            AstKind::Unary(op, a) => AstKind::Unary(op, Box::new(a.rewrite(f)?)),
            AstKind::Binary(op, a, b) => AstKind::Binary(op, Box::new(a.rewrite(f)?), Box::new(b.rewrite(f)?)),
            AstKind::Tuple(items) => {
                AstKind::Tuple(items.into_iter().map(|a| a.rewrite(f)).collect::<Result<_, _>>()?)
            }
            AstKind::Index(a, i) => AstKind::Index(Box::new(a.rewrite(f)?), i),
            leaf => leaf,
        };
        f(Ast { kind, span })
    }

    /// Visits every node, parents before children.
    pub fn walk(&self, f: &mut impl FnMut(&Ast)) {
        f(self);
        match &self.kind {
            AstKind::Call(_, items) | AstKind::Tuple(items) => items.iter().for_each(|a| a.walk(f)),
            AstKind::Unary(_, a) | AstKind::Index(a, _) => a.walk(f),
            AstKind::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Decimal(Rational),
    Str(String),
    Ident(String),
    Op(&'static str),
}

fn parse_error(msg: impl std::fmt::Display, span: &Span) -> ModelError {
    ModelError::Parse(format!("{msg} at offset {}", span.start))
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ModelError> {
    const OPS: [&str; 22] = [
        "===", "!==", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "+", "-", "*", "/", "!", "(", ")", "[", "]",
        ",", "=", ".",
    ];
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let ident_start = |b: u8| b.is_ascii_alphabetic() || b == b'_' || b == b'$';
    let ident_char = |b: u8| b.is_ascii_alphanumeric() || b == b'_' || b == b'$';
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
        } else if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let text = &src[start..i];
            let tok = if text.contains('.') {
                Tok::Decimal(Rational::from_decimal(text).map_err(|_| parse_error(format!("bad number `{text}`"), &(start..i)))?)
            } else {
                Tok::Int(text.parse().map_err(|_| parse_error(format!("integer `{text}` too large"), &(start..i)))?)
            };
            out.push((tok, start..i));
        } else if ident_start(b) {
            let start = i;
            loop {
                while i < bytes.len() && ident_char(bytes[i]) {
                    i += 1;
                }
                if i + 1 < bytes.len() && bytes[i] == b'.' && ident_start(bytes[i + 1]) {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(src[start..i].to_string()), start..i));
        } else if b == b'\'' || b == b'"' {
            let start = i;
            i += 1;
            let body_start = i;
            while i < bytes.len() && bytes[i] != b {
                if bytes[i] == b'\\' {
                    return Err(parse_error("escape sequences are not supported", &(i..i + 1)));
                }
                i += 1;
            }
            if i >= bytes.len() {
                return Err(parse_error("unterminated string", &(start..i)));
            }
            out.push((Tok::Str(src[body_start..i].to_string()), start..i + 1));
            i += 1;
        } else {
            let op = OPS
                .iter()
                .find(|op| src[i..].starts_with(*op))
                .ok_or_else(|| parse_error(format!("unexpected character `{}`", &src[i..].chars().next().unwrap()), &(i..i + 1)))?;
            out.push((Tok::Op(op), i..i + op.len()));
            i += op.len();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|(_, s)| s.clone()).unwrap_or(self.end..self.end)
    }

    fn eat(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), ModelError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(parse_error(format!("expected `{op}`"), &self.span()))
        }
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek()? {
            Tok::Op("||") => BinOp::Or,
            Tok::Op("&&") => BinOp::And,
            Tok::Op("==") | Tok::Op("===") => BinOp::Eq,
            Tok::Op("!=") | Tok::Op("!==") => BinOp::Ne,
            Tok::Op("<") => BinOp::Lt,
            Tok::Op("<=") => BinOp::Le,
            Tok::Op(">") => BinOp::Gt,
            Tok::Op(">=") => BinOp::Ge,
            Tok::Op("+") => BinOp::Add,
            Tok::Op("-") => BinOp::Sub,
            Tok::Op("*") => BinOp::Mul,
            Tok::Op("/") => BinOp::Div,
            _ => return None,
        })
    }

    fn expr(&mut self, min_prec: u8) -> Result<Ast, ModelError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(prec + 1)?;
            let span = lhs.span.start..rhs.span.end;
            lhs = Ast::new(AstKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast, ModelError> {
        let start = self.span().start;
        let op = if self.eat("!") {
            UnOp::Not
        } else if self.eat("-") {
            UnOp::Neg
        } else {
            return self.postfix();
        };
        let inner = self.unary()?;
        let span = start..inner.span.end;
        // Fold `-literal` so negative constants stay constants.
        Ok(match (op, inner.kind) {
            (UnOp::Neg, AstKind::Int(n)) => Ast::new(AstKind::Int(-n), span),
            (UnOp::Neg, AstKind::Decimal(r)) => Ast::new(AstKind::Decimal(r.checked_neg()?), span),
            (op, kind) => Ast::new(AstKind::Unary(op, Box::new(Ast::new(kind, inner.span))), span),
        })
    }

    fn postfix(&mut self) -> Result<Ast, ModelError> {
        let mut e = self.primary()?;
        while self.eat("[") {
            let span = self.span();
            let index = match self.toks.get(self.pos) {
                Some((Tok::Int(n), _)) if *n >= 0 => *n as usize,
                _ => return Err(parse_error("tuple index must be a non-negative integer literal", &span)),
            };
            self.pos += 1;
            let end = self.span().end;
            self.expect("]")?;
            let full = e.span.start..end;
            e = Ast::new(AstKind::Index(Box::new(e), index), full);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Ast, ModelError> {
        let span = self.span();
        let Some((tok, _)) = self.toks.get(self.pos).cloned() else {
            return Err(parse_error("unexpected end of expression", &span));
        };
        self.pos += 1;
        Ok(match tok {
            Tok::Int(n) => Ast::new(AstKind::Int(n), span),
            Tok::Decimal(r) => Ast::new(AstKind::Decimal(r), span),
            Tok::Str(s) => Ast::new(AstKind::Str(s), span),
            Tok::Ident(name) if name == "true" => Ast::new(AstKind::Bool(true), span),
            Tok::Ident(name) if name == "false" => Ast::new(AstKind::Bool(false), span),
            Tok::Ident(name) => {
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        loop {
                            args.push(self.expr(0)?);
                            if self.eat(")") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                    let end = self.toks[self.pos - 1].1.end;
                    Ast::new(AstKind::Call(name, args), span.start..end)
                } else {
                    Ast::new(AstKind::Name(name), span)
                }
            }
            Tok::Op("(") => {
                let inner = self.expr(0)?;
                self.expect(")")?;
                inner
            }
            Tok::Op("[") => {
                let mut items = Vec::new();
                if !self.eat("]") {
                    loop {
                        items.push(self.expr(0)?);
                        if self.eat("]") {
                            break;
                        }
                        self.expect(",")?;
                    }
                }
                let end = self.toks[self.pos - 1].1.end;
                Ast::new(AstKind::Tuple(items), span.start..end)
            }
            Tok::Op(op) => return Err(parse_error(format!("unexpected `{op}`"), &span)),
        })
    }
}

/// Parses one expression.
pub fn parse_expr(src: &str) -> Result<Ast, ModelError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let ast = p.expr(0)?;
    if p.pos != p.toks.len() {
        return Err(parse_error("unexpected trailing input", &p.span()));
    }
    Ok(ast)
}

/// Name resolution used while lowering an [`Ast`].
pub trait NameScope {
    fn variable(&self, name: &str) -> Option<VarId>;

    /// Value of a string literal; strings are only meaningful when a front end interns them.
    fn string(&self, _literal: &str) -> Option<Value> {
        None
    }
}

impl<F: Fn(&str) -> Option<VarId>> NameScope for F {
    fn variable(&self, name: &str) -> Option<VarId> {
        self(name)
    }
}

/// Resolves names and produces a model expression.
pub fn lower_expr(ast: &Ast, scope: &dyn NameScope) -> Result<Expr, ModelError> {
    let b = |a: &Ast| lower_expr(a, scope).map(Box::new);
    Ok(match &ast.kind {
        AstKind::Int(n) => Expr::int(*n),
        AstKind::Decimal(r) => Expr::rat(*r),
        AstKind::Bool(v) => Expr::bool(*v),
        AstKind::Str(s) => Expr::Const(
            scope
                .string(s)
                .ok_or_else(|| parse_error(format!("string literal '{s}' is not supported here"), &ast.span))?,
        ),
        AstKind::Name(name) => Expr::Var(
            scope
                .variable(name)
                .ok_or_else(|| ModelError::UnknownVariable(name.clone()).context(format!("at offset {}", ast.span.start)))?,
        ),
        AstKind::Call(name, _) => return Err(parse_error(format!("unsupported call `{name}(...)`"), &ast.span)),
        AstKind::Unary(UnOp::Not, a) => Expr::Not(b(a)?),
        AstKind::Unary(UnOp::Neg, a) => match lower_expr(a, scope)? {
            Expr::Const(Value::Int(n)) => Expr::int(n.checked_neg().ok_or(ModelError::Overflow)?),
            Expr::Const(Value::Rat(r)) => Expr::rat(r.checked_neg()?),
            e => Expr::Neg(Box::new(e)),
        },
        AstKind::Binary(op, x, y) => match op {
            BinOp::Or => Expr::Or(vec![lower_expr(x, scope)?, lower_expr(y, scope)?]),
            BinOp::And => Expr::And(vec![lower_expr(x, scope)?, lower_expr(y, scope)?]),
            BinOp::Eq => Expr::Eq(b(x)?, b(y)?),
            BinOp::Ne => Expr::Ne(b(x)?, b(y)?),
            BinOp::Lt => Expr::Lt(b(x)?, b(y)?),
            BinOp::Le => Expr::Le(b(x)?, b(y)?),
            BinOp::Gt => Expr::Lt(b(y)?, b(x)?),
            BinOp::Ge => Expr::Le(b(y)?, b(x)?),
            BinOp::Add => Expr::Add(b(x)?, b(y)?),
            BinOp::Sub => Expr::Sub(b(x)?, b(y)?),
            BinOp::Mul => Expr::Mul(b(x)?, b(y)?),
            BinOp::Div => fold_division(lower_expr(x, scope)?, lower_expr(y, scope)?, &ast.span)?,
        },
        AstKind::Tuple(items) => Expr::Tuple(items.iter().map(|a| lower_expr(a, scope)).collect::<Result<_, _>>()?),
        AstKind::Index(a, i) => Expr::Proj(b(a)?, *i),
    })
}

/// Division is only allowed between constants, where it denotes a rational literal.
fn fold_division(x: Expr, y: Expr, span: &Span) -> Result<Expr, ModelError> {
    match (&x, &y) {
        (Expr::Const(a), Expr::Const(b)) => match (a.as_rational(), b.as_rational()) {
            (Some(p), Some(q)) => {
                let r = p.checked_div(&q)?;
                Ok(match (a, b) {
                    (Value::Int(_), Value::Int(_)) if r.is_integer() => Expr::int(r.numer()),
                    _ => Expr::rat(r),
                })
            }
            _ => Err(parse_error("division of non-numbers", span)),
        },
        _ => Err(parse_error("division is only supported between constants", span)),
    }
}

/// Parses and lowers in one go.
pub fn parse_guard(src: &str, scope: &dyn NameScope) -> Result<Expr, ModelError> {
    lower_expr(&parse_expr(src)?, scope).map_err(|e| e.context(format!("in `{src}`")))
}

fn constant(ast: &Ast) -> Option<Rational> {
    match &ast.kind {
        AstKind::Int(n) => Some(Rational::from_int(*n)),
        AstKind::Decimal(r) => Some(*r),
        AstKind::Binary(BinOp::Div, a, b) => constant(a)?.checked_div(&constant(b)?).ok(),
        _ => None,
    }
}

/// Lowers a clock constraint: comparisons between a clock and a constant,
/// combined with `!`, `&&`, `||`, `true` and `false`.
pub fn lower_clock_constraint(ast: &Ast, clock: &dyn Fn(&str) -> Option<ClockId>) -> Result<ClockConstraint, ModelError> {
    Ok(match &ast.kind {
        AstKind::Bool(true) => ClockConstraint::True,
        AstKind::Bool(false) => ClockConstraint::falsity(),
        AstKind::Unary(UnOp::Not, a) => lower_clock_constraint(a, clock)?.negate(),
        AstKind::Binary(BinOp::And, a, b) => lower_clock_constraint(a, clock)?.and(lower_clock_constraint(b, clock)?),
        AstKind::Binary(BinOp::Or, a, b) => lower_clock_constraint(a, clock)?.or(lower_clock_constraint(b, clock)?),
        AstKind::Binary(op, a, b) => {
            let bad = || parse_error("clock comparisons must relate a clock and a constant", &ast.span);
            // Normalize to `clock op constant`.
            let (x, c, op) = match (&a.kind, constant(b), constant(a), &b.kind) {
                (AstKind::Name(x), Some(c), _, _) => (x, c, *op),
                (_, _, Some(c), AstKind::Name(x)) => {
                    let flipped = match op {
                        BinOp::Lt => BinOp::Gt,
                        BinOp::Le => BinOp::Ge,
                        BinOp::Gt => BinOp::Lt,
                        BinOp::Ge => BinOp::Le,
                        other => *other,
                    };
                    (x, c, flipped)
                }
                _ => return Err(bad()),
            };
            let id = clock(x).ok_or_else(|| parse_error(format!("unknown clock `{x}`"), &ast.span))?;
            if c.is_negative() {
                return Err(parse_error("clock constants must be non-negative", &ast.span));
            }
            match op {
                BinOp::Le => ClockConstraint::at_most(id, c),
                BinOp::Lt => ClockConstraint::less_than(id, c),
                BinOp::Ge => ClockConstraint::at_least(id, c),
                BinOp::Gt => ClockConstraint::greater_than(id, c),
                BinOp::Eq => ClockConstraint::equals(id, c),
                BinOp::Ne => ClockConstraint::equals(id, c).negate(),
                _ => return Err(bad()),
            }
        }
        _ => return Err(parse_error("not a clock constraint", &ast.span)),
    })
}

/// Parses a clock constraint from text.
pub fn parse_clock_constraint(src: &str, clock: &dyn Fn(&str) -> Option<ClockId>) -> Result<ClockConstraint, ModelError> {
    lower_clock_constraint(&parse_expr(src)?, clock).map_err(|e| e.context(format!("in `{src}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ClockValuation;

    fn scope(name: &str) -> Option<VarId> {
        match name {
            "x" => Some(VarId(0)),
            "y" => Some(VarId(1)),
            "t" => Some(VarId(2)),
            _ => None,
        }
    }

    fn env() -> Vec<Value> {
        vec![Value::Int(3), Value::Bool(true), Value::Tuple(vec![Value::Int(1), Value::Bool(false)])]
    }

    fn eval(src: &str) -> Value {
        parse_guard(src, &scope).unwrap().eval(&env()).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("1 + 2 * x"), Value::Int(7));
        assert_eq!(eval("(1 + 2) * x"), Value::Int(9));
        assert_eq!(eval("x - 1 - 1"), Value::Int(1));
        assert_eq!(eval("x > 2 && !y || false"), Value::Bool(false));
        assert_eq!(eval("x >= 3 === true"), Value::Bool(true));
        assert_eq!(eval("-x + 4"), Value::Int(1));
        assert_eq!(eval("t[0] + 1"), Value::Int(2));
        assert_eq!(eval("[x, y][1]"), Value::Bool(true));
    }

    #[test]
    fn constant_division_folds() {
        assert_eq!(eval("1/4 + 1/4"), Value::Rat(Rational::new(1, 2).unwrap()));
        assert_eq!(eval("6/3"), Value::Int(2));
        assert!(parse_guard("x / 2", &scope).is_err());
    }

    #[test]
    fn errors_name_position() {
        let err = parse_guard("x + foo(1)", &scope).unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
        assert!(err.to_string().contains("offset 4"), "{err}");
        assert!(parse_guard("x +", &scope).is_err());
        assert!(parse_guard("x y", &scope).is_err());
        assert!(parse_guard("'s' == x", &scope).is_err());
        assert!(parse_guard("z", &scope).is_err());
    }

    #[test]
    fn dotted_names() {
        let ast = parse_expr("_event.data.v + A.count").unwrap();
        let mut names = Vec::new();
        ast.walk(&mut |a| {
            if let AstKind::Name(n) = &a.kind {
                names.push(n.clone());
            }
        });
        assert_eq!(names, ["_event.data.v", "A.count"]);
    }

    #[test]
    fn clock_constraints() {
        let clock = |n: &str| (n == "c").then_some(ClockId(0));
        let phi = parse_clock_constraint("c >= 2 && 5 > c", &clock).unwrap();
        let at = |v: i64| phi.eval(&ClockValuation::from_values(vec![Rational::from_int(v)]).unwrap());
        assert_eq!((at(1), at(2), at(4), at(5)), (false, true, true, false));
        assert!(parse_clock_constraint("c + 1 <= 2", &clock).is_err());
        assert!(parse_clock_constraint("d <= 2", &clock).is_err());
        let eq = parse_clock_constraint("c == 1/2", &clock).unwrap();
        assert_eq!(eq, ClockConstraint::equals(ClockId(0), Rational::new(1, 2).unwrap()));
    }

    impl ClockConstraint {
        fn eval(&self, nu: &ClockValuation) -> bool {
            crate::kernel::eval_constraint(self, nu).unwrap()
        }
    }
}
