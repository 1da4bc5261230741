use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::kernel::{Rational, Type, Value, VarDomain};

/// Index of a variable within its program graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

/// Division-free arithmetic and boolean expressions over program variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Value),
    Var(VarId),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Ne(Box<Expr>, Box<Expr>),
    Lt(Box<Expr>, Box<Expr>),
    Le(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Tuple(Vec<Expr>),
    /// Component `i` of a tuple.
    Proj(Box<Expr>, usize),
}

impl Expr {
    pub const TRUE: Expr = Expr::Const(Value::Bool(true));
    pub const FALSE: Expr = Expr::Const(Value::Bool(false));

    pub fn var(v: VarId) -> Self {
        Expr::Var(v)
    }

    pub fn int(n: i64) -> Self {
        Expr::Const(Value::Int(n))
    }

    pub fn bool(b: bool) -> Self {
        Expr::Const(Value::Bool(b))
    }

    pub fn rat(r: Rational) -> Self {
        Expr::Const(Value::Rat(r))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Self {
        Expr::Eq(Box::new(a), Box::new(b))
    }

    pub fn ne(a: Expr, b: Expr) -> Self {
        Expr::Ne(Box::new(a), Box::new(b))
    }

    pub fn lt(a: Expr, b: Expr) -> Self {
        Expr::Lt(Box::new(a), Box::new(b))
    }

    pub fn le(a: Expr, b: Expr) -> Self {
        Expr::Le(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Expr) -> Self {
        Expr::Not(Box::new(a))
    }

    /// Conjunction, flattening nested conjunctions and dropping `true`.
    pub fn and(items: impl IntoIterator<Item = Expr>) -> Self {
        let mut out = Vec::new();
        for e in items {
            match e {
                Expr::And(inner) => out.extend(inner),
                Expr::Const(Value::Bool(true)) => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Expr::TRUE,
            1 => out.pop().unwrap(),
            _ => Expr::And(out),
        }
    }

    /// Disjunction, flattening nested disjunctions and dropping `false`.
    pub fn or(items: impl IntoIterator<Item = Expr>) -> Self {
        let mut out = Vec::new();
        for e in items {
            match e {
                Expr::Or(inner) => out.extend(inner),
                Expr::Const(Value::Bool(false)) => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Expr::FALSE,
            1 => out.pop().unwrap(),
            _ => Expr::Or(out),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Const(Value::Bool(true)))
    }

    /// Static type under the given variable domains.
    pub fn type_of(&self, domains: &[VarDomain]) -> Result<Type, ModelError> {
        let numeric = |e: &Expr| -> Result<Type, ModelError> {
            let t = e.type_of(domains)?;
            if t.is_numeric() {
                Ok(t)
            } else {
                Err(ModelError::Type(format!("expected a number, found {t} in `{}`", e.debug_text())))
            }
        };
        let boolean = |e: &Expr| -> Result<(), ModelError> {
            match e.type_of(domains)? {
                Type::Bool => Ok(()),
                t => Err(ModelError::Type(format!("expected a boolean, found {t} in `{}`", e.debug_text()))),
            }
        };
        Ok(match self {
            Expr::Const(v) => v.type_of(),
            Expr::Var(v) => domains
                .get(v.0)
                .ok_or_else(|| ModelError::UnknownVariable(format!("#{}", v.0)))?
                .value_type(),
            Expr::Neg(a) => numeric(a)?,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                let (ta, tb) = (numeric(a)?, numeric(b)?);
                ta.join(&tb).expect("numeric types join")
            }
            Expr::Lt(a, b) | Expr::Le(a, b) => {
                numeric(a)?;
                numeric(b)?;
                Type::Bool
            }
            Expr::Eq(a, b) | Expr::Ne(a, b) => {
                let (ta, tb) = (a.type_of(domains)?, b.type_of(domains)?);
                if ta.join(&tb).is_none() {
                    return Err(ModelError::Type(format!("cannot compare {ta} with {tb}")));
                }
                Type::Bool
            }
            Expr::Not(a) => {
                boolean(a)?;
                Type::Bool
            }
            Expr::And(items) | Expr::Or(items) => {
                items.iter().try_for_each(boolean)?;
                Type::Bool
            }
            Expr::Tuple(items) => Type::Tuple(items.iter().map(|e| e.type_of(domains)).collect::<Result<_, _>>()?),
            Expr::Proj(e, i) => match e.type_of(domains)? {
                Type::Tuple(items) => items
                    .get(*i)
                    .cloned()
                    .ok_or_else(|| ModelError::Type(format!("tuple has no component {i}")))?,
                t => return Err(ModelError::Type(format!("cannot project component {i} of {t}"))),
            },
        })
    }

    /// Evaluates under `env`, indexed by [`VarId`]. Type-correct expressions only
    /// fail on arithmetic overflow.
    pub fn eval(&self, env: &[Value]) -> Result<Value, ModelError> {
        Ok(match self {
            Expr::Const(v) => v.clone(),
            Expr::Var(v) => env
                .get(v.0)
                .cloned()
                .ok_or_else(|| ModelError::UnknownVariable(format!("#{}", v.0)))?,
            Expr::Neg(a) => match a.eval(env)? {
                Value::Int(n) => Value::Int(n.checked_neg().ok_or(ModelError::Overflow)?),
                Value::Rat(r) => Value::Rat(r.checked_neg()?),
                v => return Err(type_error("negate", &v)),
            },
            Expr::Add(a, b) => arith(a.eval(env)?, b.eval(env)?, i64::checked_add, Rational::checked_add)?,
            Expr::Sub(a, b) => arith(a.eval(env)?, b.eval(env)?, i64::checked_sub, Rational::checked_sub)?,
            Expr::Mul(a, b) => arith(a.eval(env)?, b.eval(env)?, i64::checked_mul, Rational::checked_mul)?,
            Expr::Eq(a, b) => Value::Bool(a.eval(env)?.sem_eq(&b.eval(env)?)),
            Expr::Ne(a, b) => Value::Bool(!a.eval(env)?.sem_eq(&b.eval(env)?)),
            Expr::Lt(a, b) => Value::Bool(num(a.eval(env)?)? < num(b.eval(env)?)?),
            Expr::Le(a, b) => Value::Bool(num(a.eval(env)?)? <= num(b.eval(env)?)?),
            Expr::Not(a) => Value::Bool(!a.eval_bool(env)?),
            Expr::And(items) => {
                for e in items {
                    if !e.eval_bool(env)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            Expr::Or(items) => {
                for e in items {
                    if e.eval_bool(env)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
            Expr::Tuple(items) => Value::Tuple(items.iter().map(|e| e.eval(env)).collect::<Result<_, _>>()?),
            Expr::Proj(e, i) => match e.eval(env)? {
                Value::Tuple(mut items) if *i < items.len() => items.swap_remove(*i),
                v => return Err(type_error("project", &v)),
            },
        })
    }

    pub fn eval_bool(&self, env: &[Value]) -> Result<bool, ModelError> {
        match self.eval(env)? {
            Value::Bool(b) => Ok(b),
            v => Err(type_error("branch on", &v)),
        }
    }

    /// Variables read by the expression.
    pub fn for_each_var(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Not(a) | Expr::Proj(a, _) => a.for_each_var(f),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Eq(a, b)
            | Expr::Ne(a, b)
            | Expr::Lt(a, b)
            | Expr::Le(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Expr::And(items) | Expr::Or(items) | Expr::Tuple(items) => {
                items.iter().for_each(|e| e.for_each_var(f))
            }
        }
    }

    /// Renames every variable through `f`.
    pub fn map_vars(&self, f: &impl Fn(VarId) -> VarId) -> Expr {
        let b = |e: &Expr| Box::new(e.map_vars(f));
        match self {
            Expr::Const(v) => Expr::Const(v.clone()),
            Expr::Var(v) => Expr::Var(f(*v)),
            Expr::Neg(a) => Expr::Neg(b(a)),
            Expr::Not(a) => Expr::Not(b(a)),
            Expr::Proj(a, i) => Expr::Proj(b(a), *i),
            Expr::Add(x, y) => Expr::Add(b(x), b(y)),
            Expr::Sub(x, y) => Expr::Sub(b(x), b(y)),
            Expr::Mul(x, y) => Expr::Mul(b(x), b(y)),
            Expr::Eq(x, y) => Expr::Eq(b(x), b(y)),
            Expr::Ne(x, y) => Expr::Ne(b(x), b(y)),
            Expr::Lt(x, y) => Expr::Lt(b(x), b(y)),
            Expr::Le(x, y) => Expr::Le(b(x), b(y)),
            Expr::And(items) => Expr::And(items.iter().map(|e| e.map_vars(f)).collect()),
            Expr::Or(items) => Expr::Or(items.iter().map(|e| e.map_vars(f)).collect()),
            Expr::Tuple(items) => Expr::Tuple(items.iter().map(|e| e.map_vars(f)).collect()),
        }
    }

    /// Source text using the given variable names; parseable back by [`super::parse_expr`].
    pub fn display<'a, F: Fn(VarId) -> String + 'a>(&'a self, name: F) -> impl fmt::Display + 'a {
        struct Show<'a, F>(&'a Expr, F);
        impl<F: Fn(VarId) -> String> fmt::Display for Show<'_, F> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_expr(self.0, &self.1, f)
            }
        }
        Show(self, name)
    }

    fn debug_text(&self) -> String {
        self.display(|v| format!("#{}", v.0)).to_string()
    }
}

fn type_error(op: &str, v: &Value) -> ModelError {
    ModelError::Type(format!("cannot {op} {} value {v}", v.type_of()))
}

fn num(v: Value) -> Result<Rational, ModelError> {
    v.as_rational().ok_or_else(|| type_error("compare", &v))
}

fn arith(
    a: Value,
    b: Value,
    int_op: fn(i64, i64) -> Option<i64>,
    rat_op: fn(&Rational, &Rational) -> Result<Rational, ModelError>,
) -> Result<Value, ModelError> {
    match (&a, &b) {
        (Value::Int(x), Value::Int(y)) => int_op(*x, *y).map(Value::Int).ok_or(ModelError::Overflow),
        _ => Ok(Value::Rat(rat_op(&num(a)?, &num(b)?)?)),
    }
}

fn write_value(v: &Value, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match v {
        Value::Bool(b) => write!(f, "{b}"),
        Value::Int(n) if *n < 0 => write!(f, "({n})"),
        Value::Int(n) => write!(f, "{n}"),
        Value::Rat(r) if r.is_integer() => write!(f, "({r} / 1)"),
        Value::Rat(r) => write!(f, "({} / {})", r.numer(), r.denom()),
        Value::Tuple(items) => {
            f.write_str("[")?;
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_value(v, f)?;
            }
            f.write_str("]")
        }
    }
}

fn write_expr(e: &Expr, name: &impl Fn(VarId) -> String, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let bin = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr| {
        f.write_str("(")?;
        write_expr(a, name, f)?;
        write!(f, " {op} ")?;
        write_expr(b, name, f)?;
        f.write_str(")")
    };
    let list = |f: &mut fmt::Formatter<'_>, items: &[Expr], sep: &str, open: &str, close: &str| {
        f.write_str(open)?;
        for (i, e) in items.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            write_expr(e, name, f)?;
        }
        f.write_str(close)
    };
    match e {
        Expr::Const(v) => write_value(v, f),
        Expr::Var(v) => f.write_str(&name(*v)),
        Expr::Neg(a) => {
            f.write_str("-(")?;
            write_expr(a, name, f)?;
            f.write_str(")")
        }
        Expr::Not(a) => {
            f.write_str("!(")?;
            write_expr(a, name, f)?;
            f.write_str(")")
        }
        Expr::Add(a, b) => bin(f, a, "+", b),
        Expr::Sub(a, b) => bin(f, a, "-", b),
        Expr::Mul(a, b) => bin(f, a, "*", b),
        Expr::Eq(a, b) => bin(f, a, "==", b),
        Expr::Ne(a, b) => bin(f, a, "!=", b),
        Expr::Lt(a, b) => bin(f, a, "<", b),
        Expr::Le(a, b) => bin(f, a, "<=", b),
        Expr::And(items) if items.is_empty() => f.write_str("true"),
        Expr::Or(items) if items.is_empty() => f.write_str("false"),
        Expr::And(items) => list(f, items, " && ", "(", ")"),
        Expr::Or(items) => list(f, items, " || ", "(", ")"),
        Expr::Tuple(items) => list(f, items, ", ", "[", "]"),
        Expr::Proj(a, i) => {
            write_expr(a, name, f)?;
            write!(f, "[{i}]")
        }
    }
}
