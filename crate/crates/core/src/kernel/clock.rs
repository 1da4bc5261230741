use std::fmt;

use serde::{Deserialize, Serialize};

use super::Rational;
use crate::error::ModelError;

/// Index of a clock within its owning model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClockId(pub usize);

/// Clock interpretation: one non-negative rational reading per declared clock.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ClockValuation {
    values: Vec<Rational>,
}

impl ClockValuation {
    /// All `n` clocks at zero.
    pub fn zero(n: usize) -> Self {
        ClockValuation {
            values: vec![Rational::ZERO; n],
        }
    }

    pub fn from_values(values: Vec<Rational>) -> Result<Self, ModelError> {
        if let Some(v) = values.iter().find(|v| v.is_negative()) {
            return Err(ModelError::Argument(format!("negative clock reading {v}")));
        }
        Ok(ClockValuation { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, clock: ClockId) -> Result<Rational, ModelError> {
        self.values
            .get(clock.0)
            .copied()
            .ok_or(ModelError::UnknownClock(clock.0))
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// `ν + t`: every clock advanced by `t`.
    pub fn advance(&self, t: Rational) -> Result<Self, ModelError> {
        if t.is_negative() {
            return Err(ModelError::Argument(format!("negative delay {t}")));
        }
        let values = self
            .values
            .iter()
            .map(|v| v.checked_add(&t))
            .collect::<Result<_, _>>()?;
        Ok(ClockValuation { values })
    }

    /// `[Y ↦ 0]ν`.
    pub fn reset(&self, clocks: &[ClockId]) -> Result<Self, ModelError> {
        let mut next = self.clone();
        next.reset_in_place(clocks)?;
        Ok(next)
    }

    pub(crate) fn reset_in_place(&mut self, clocks: &[ClockId]) -> Result<(), ModelError> {
        for c in clocks {
            *self
                .values
                .get_mut(c.0)
                .ok_or(ModelError::UnknownClock(c.0))? = Rational::ZERO;
        }
        Ok(())
    }

    /// Concatenates two valuations (used when composing models).
    pub fn concat(&self, other: &ClockValuation) -> ClockValuation {
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        ClockValuation { values }
    }

    pub fn satisfies(&self, constraint: &ClockConstraint) -> Result<bool, ModelError> {
        eval_constraint(constraint, self)
    }
}

/// Clock constraint built from `x <= c`, `c <= x`, negation and conjunction.
///
/// `True` is kept as a leaf because clock-free guards need a tautology that does
/// not mention any clock. Every other derived form (`or`, `false`, `x = c`,
/// strict comparisons) is expanded by the constructors below.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ClockConstraint {
    True,
    /// `x <= c`
    AtMost(ClockId, Rational),
    /// `c <= x`
    AtLeast(ClockId, Rational),
    Not(Box<ClockConstraint>),
    And(Box<ClockConstraint>, Box<ClockConstraint>),
}

impl Default for ClockConstraint {
    fn default() -> Self {
        ClockConstraint::True
    }
}

impl ClockConstraint {
    pub fn at_most(clock: ClockId, c: Rational) -> Self {
        ClockConstraint::AtMost(clock, c)
    }

    pub fn at_least(clock: ClockId, c: Rational) -> Self {
        ClockConstraint::AtLeast(clock, c)
    }

    /// `x = c := x <= c ∧ c <= x`
    pub fn equals(clock: ClockId, c: Rational) -> Self {
        Self::at_most(clock, c).and(Self::at_least(clock, c))
    }

    /// `x < c := ¬(c <= x)`
    pub fn less_than(clock: ClockId, c: Rational) -> Self {
        Self::at_least(clock, c).negate()
    }

    /// `x > c := ¬(x <= c)`
    pub fn greater_than(clock: ClockId, c: Rational) -> Self {
        Self::at_most(clock, c).negate()
    }

    pub fn negate(self) -> Self {
        ClockConstraint::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (ClockConstraint::True, o) | (o, ClockConstraint::True) => o,
            (a, b) => ClockConstraint::And(Box::new(a), Box::new(b)),
        }
    }

    /// `φ₁ ∨ φ₂ := ¬(¬φ₁ ∧ ¬φ₂)`
    pub fn or(self, other: Self) -> Self {
        ClockConstraint::And(Box::new(self.negate()), Box::new(other.negate())).negate()
    }

    /// `false := ¬true`
    pub fn falsity() -> Self {
        ClockConstraint::True.negate()
    }

    pub fn is_trivially_true(&self) -> bool {
        matches!(self, ClockConstraint::True)
    }

    /// Calls `f` on every `(clock, constant)` leaf.
    pub fn for_each_atom(&self, f: &mut impl FnMut(ClockId, Rational)) {
        match self {
            ClockConstraint::True => {}
            ClockConstraint::AtMost(x, c) | ClockConstraint::AtLeast(x, c) => f(*x, *c),
            ClockConstraint::Not(inner) => inner.for_each_atom(f),
            ClockConstraint::And(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    /// Constants must be non-negative and clocks below `num_clocks`.
    pub fn validate(&self, num_clocks: usize) -> Result<(), ModelError> {
        let mut result = Ok(());
        self.for_each_atom(&mut |x, c| {
            if result.is_ok() {
                if x.0 >= num_clocks {
                    result = Err(ModelError::UnknownClock(x.0));
                } else if c.is_negative() {
                    result = Err(ModelError::Invalid(format!("negative clock constant {c}")));
                }
            }
        });
        result
    }

    /// Renames clocks through `f` (used when relocating into a composed system).
    pub fn map_clocks(&self, f: &impl Fn(ClockId) -> ClockId) -> Self {
        match self {
            ClockConstraint::True => ClockConstraint::True,
            ClockConstraint::AtMost(x, c) => ClockConstraint::AtMost(f(*x), *c),
            ClockConstraint::AtLeast(x, c) => ClockConstraint::AtLeast(f(*x), *c),
            ClockConstraint::Not(inner) => ClockConstraint::Not(Box::new(inner.map_clocks(f))),
            ClockConstraint::And(a, b) => {
                ClockConstraint::And(Box::new(a.map_clocks(f)), Box::new(b.map_clocks(f)))
            }
        }
    }

    /// Pretty-printer that names clocks through `name`.
    pub fn display<'a, F: Fn(ClockId) -> String>(&'a self, name: F) -> impl fmt::Display + 'a
    where
        F: 'a,
    {
        struct Show<'a, F>(&'a ClockConstraint, F);
        impl<F: Fn(ClockId) -> String> fmt::Display for Show<'_, F> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_constraint(self.0, &self.1, f)
            }
        }
        Show(self, name)
    }
}

fn write_constraint(
    c: &ClockConstraint,
    name: &impl Fn(ClockId) -> String,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    match c {
        ClockConstraint::True => f.write_str("true"),
        ClockConstraint::AtMost(x, k) => write!(f, "{} <= {}", name(*x), show_const(k)),
        ClockConstraint::AtLeast(x, k) => write!(f, "{} >= {}", name(*x), show_const(k)),
        ClockConstraint::Not(inner) => {
            f.write_str("!(")?;
            write_constraint(inner, name, f)?;
            f.write_str(")")
        }
        ClockConstraint::And(a, b) => {
            f.write_str("(")?;
            write_constraint(a, name, f)?;
            f.write_str(") && (")?;
            write_constraint(b, name, f)?;
            f.write_str(")")
        }
    }
}

fn show_const(k: &Rational) -> String {
    if k.is_integer() {
        k.to_string()
    } else {
        format!("({} / {})", k.numer(), k.denom())
    }
}

/// `ν ⊨ φ`, by structural recursion with exact comparisons.
pub fn eval_constraint(constraint: &ClockConstraint, valuation: &ClockValuation) -> Result<bool, ModelError> {
    Ok(match constraint {
        ClockConstraint::True => true,
        ClockConstraint::AtMost(x, c) => valuation.get(*x)? <= *c,
        ClockConstraint::AtLeast(x, c) => *c <= valuation.get(*x)?,
        ClockConstraint::Not(inner) => !eval_constraint(inner, valuation)?,
        ClockConstraint::And(a, b) => eval_constraint(a, valuation)? && eval_constraint(b, valuation)?,
    })
}

/// `ν + t`.
pub fn advance(valuation: &ClockValuation, t: Rational) -> Result<ClockValuation, ModelError> {
    valuation.advance(t)
}

/// `[Y ↦ 0]ν`.
pub fn reset(valuation: &ClockValuation, clocks: &[ClockId]) -> Result<ClockValuation, ModelError> {
    valuation.reset(clocks)
}

/// Outcome of searching the time grid for the first instant satisfying a set of constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delay {
    /// Satisfied after this many quanta (within the horizon).
    At(u64),
    /// Satisfiable, but only after the horizon.
    BeyondHorizon,
    /// Never satisfied, however long we wait.
    Never,
}

/// Least `k` such that every constraint holds once its valuation is advanced by `k·quantum`.
///
/// Each constraint comes with the valuation it reads; all valuations advance together.
///
/// Each leaf `x <= c` / `c <= x` flips its truth value at most once as time grows,
/// at `floor((c - ν(x)) / q) + 1` and `ceil((c - ν(x)) / q)` respectively. The
/// conjunction is therefore constant between consecutive flip points and only
/// those points (plus 0) need to be checked.
pub fn earliest_delay(
    constraints: &[(&ClockConstraint, &ClockValuation)],
    quantum: Rational,
    horizon: u64,
) -> Result<Delay, ModelError> {
    if quantum.is_zero() || quantum.is_negative() {
        return Err(ModelError::Argument(format!("time quantum must be positive, got {quantum}")));
    }
    let mut candidates: Vec<i64> = vec![0];
    let mut failure = None;
    for (c, valuation) in constraints {
        c.for_each_atom(&mut |x, k| {
            let steps = valuation
                .get(x)
                .and_then(|v| k.checked_sub(&v))
                .and_then(|d| d.checked_div(&quantum));
            match steps {
                Ok(s) => {
                    for cand in [s.ceil(), s.floor().saturating_add(1)] {
                        if cand > 0 {
                            candidates.push(cand);
                        }
                    }
                }
                Err(e) => failure = Some(e),
            }
        });
    }
    if let Some(e) = failure {
        return Err(e);
    }
    candidates.sort_unstable();
    candidates.dedup();
    for k in candidates {
        let delay = quantum.checked_mul(&Rational::from_int(k))?;
        let mut ok = true;
        for (c, valuation) in constraints {
            if !c.is_trivially_true() && !eval_constraint(c, &valuation.advance(delay)?)? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(if (k as u64) <= horizon {
                Delay::At(k as u64)
            } else {
                Delay::BeyondHorizon
            });
        }
    }
    Ok(Delay::Never)
}
