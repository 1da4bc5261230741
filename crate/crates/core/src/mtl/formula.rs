use std::fmt;

use crate::error::ModelError;
use crate::kernel::Rational;

/// Closed interval `[lo, hi]` of time differences; `hi = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Option<Rational>,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval {
        lo: Rational::ZERO,
        hi: None,
    };

    pub fn new(lo: Rational, hi: Option<Rational>) -> Result<Self, ModelError> {
        if lo.is_negative() {
            return Err(ModelError::Argument(format!("interval lower bound {lo} is negative")));
        }
        if let Some(h) = hi {
            if h < lo {
                return Err(ModelError::Argument(format!("empty interval [{lo}, {h}]")));
            }
        }
        Ok(Interval { lo, hi })
    }

    pub fn bounded(lo: i64, hi: i64) -> Result<Self, ModelError> {
        Self::new(Rational::from_int(lo), Some(Rational::from_int(hi)))
    }

    pub fn lo(&self) -> Rational {
        self.lo
    }

    pub fn hi(&self) -> Option<Rational> {
        self.hi
    }

    pub fn contains(&self, d: Rational) -> bool {
        self.lo <= d && self.hi.is_none_or(|h| d <= h)
    }

    /// `d > hi`.
    pub fn exceeded_by(&self, d: Rational) -> bool {
        self.hi.is_some_and(|h| d > h)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(h) => write!(f, "[{} {}]", self.lo, h),
            None => write!(f, "[{} inf]", self.lo),
        }
    }
}

/// Metric temporal formula with future and past operators.
///
/// Only the primitive connectives are represented; `false`, `implies`,
/// `eventually`, `globally`, `once` and `historically` are built by the
/// constructors below.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    /// Index into the property set's atom table.
    Atom(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Interval, Box<Formula>),
    Since(Box<Formula>, Interval, Box<Formula>),
}

impl Formula {
    pub fn atom(i: usize) -> Self {
        Formula::Atom(i)
    }

    pub fn falsity() -> Self {
        Formula::True.negate()
    }

    pub fn negate(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Self {
        self.negate().or(other)
    }

    pub fn until(self, interval: Interval, other: Formula) -> Self {
        Formula::Until(Box::new(self), interval, Box::new(other))
    }

    pub fn since(self, interval: Interval, other: Formula) -> Self {
        Formula::Since(Box::new(self), interval, Box::new(other))
    }

    /// `F_I φ = true U_I φ`
    pub fn eventually(interval: Interval, f: Formula) -> Self {
        Formula::True.until(interval, f)
    }

    /// `G_I φ = ¬F_I ¬φ`
    pub fn globally(interval: Interval, f: Formula) -> Self {
        Self::eventually(interval, f.negate()).negate()
    }

    /// `O_I φ = true S_I φ`
    pub fn once(interval: Interval, f: Formula) -> Self {
        Formula::True.since(interval, f)
    }

    /// `H_I φ = ¬O_I ¬φ`
    pub fn historically(interval: Interval, f: Formula) -> Self {
        Self::once(interval, f.negate()).negate()
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 0,
            Formula::Not(a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, _, b) | Formula::Since(a, _, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Largest atom index used, if any.
    pub fn max_atom(&self) -> Option<usize> {
        match self {
            Formula::True => None,
            Formula::Atom(i) => Some(*i),
            Formula::Not(a) => a.max_atom(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, _, b) | Formula::Since(a, _, b) => {
                a.max_atom().max(b.max_atom())
            }
        }
    }
}

/// S-expression rendering in the property-file syntax, atoms written as `pN`.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::Atom(i) => write!(f, "p{i}"),
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::And(a, b) => write!(f, "(and {a} {b})"),
            Formula::Or(a, b) => write!(f, "(or {a} {b})"),
            Formula::Until(a, i, b) => write!(f, "(until {i} {a} {b})"),
            Formula::Since(a, i, b) => write!(f, "(since {i} {a} {b})"),
        }
    }
}

/// Three-valued verdict of a formula on a finite trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn is_conclusive(self) -> bool {
        self != Verdict::Unknown
    }

    /// Kleene negation.
    pub fn not(self) -> Self {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Unknown => Verdict::Unknown,
        }
    }

    /// Kleene conjunction.
    pub fn and(self, other: Verdict) -> Self {
        match (self, other) {
            (Verdict::False, _) | (_, Verdict::False) => Verdict::False,
            (Verdict::True, Verdict::True) => Verdict::True,
            _ => Verdict::Unknown,
        }
    }

    /// Kleene disjunction.
    pub fn or(self, other: Verdict) -> Self {
        self.not().and(other.not()).not()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        })
    }
}
