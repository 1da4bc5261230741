use std::fmt;

use serde::{Deserialize, Serialize};

use super::Rational;
use crate::error::ModelError;

/// A runtime value held by a variable or carried by a message.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Rat(Rational),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    /// Numeric view; integers are promoted.
    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Value::Int(n) => Some(Rational::from_int(*n)),
            Value::Rat(r) => Some(*r),
            _ => None,
        }
    }

    pub fn type_of(&self) -> Type {
        match self {
            Value::Bool(_) => Type::Bool,
            Value::Int(_) => Type::Int,
            Value::Rat(_) => Type::Rat,
            Value::Tuple(items) => Type::Tuple(items.iter().map(Value::type_of).collect()),
        }
    }

    /// Semantic equality: numbers compare by value regardless of representation.
    pub fn sem_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Tuple(a), Value::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.sem_eq(y))
            }
            (Value::Bool(a), Value::Bool(b)) => a == b,
            _ => match (self.as_rational(), other.as_rational()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Rat(r) => write!(f, "{r}"),
            Value::Tuple(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<Rational> for Value {
    fn from(r: Rational) -> Self {
        Value::Rat(r)
    }
}

/// Static type of expressions and values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Bool,
    Int,
    Rat,
    Tuple(Vec<Type>),
}

impl Type {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int | Type::Rat)
    }

    /// Whether a value of type `other` may be stored where `self` is expected.
    pub fn accepts(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Rat, Type::Int) => true,
            (Type::Tuple(a), Type::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.accepts(y))
            }
            _ => self == other,
        }
    }

    /// Smallest common type, if the two are compatible.
    pub fn join(&self, other: &Type) -> Option<Type> {
        if self.accepts(other) {
            Some(self.clone())
        } else if other.accepts(self) {
            Some(other.clone())
        } else {
            None
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => f.write_str("bool"),
            Type::Int => f.write_str("int"),
            Type::Rat => f.write_str("rational"),
            Type::Tuple(items) => {
                f.write_str("(")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// The set of values a variable (or channel) may hold.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarDomain {
    Bool,
    /// Closed integer range `[lo, hi]`.
    Int { lo: i64, hi: i64 },
    Rational,
    Tuple(Vec<VarDomain>),
}

impl VarDomain {
    /// The full 64-bit integer range.
    pub const INT: VarDomain = VarDomain::Int { lo: i64::MIN, hi: i64::MAX };

    pub fn int(lo: i64, hi: i64) -> Self {
        VarDomain::Int { lo, hi }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            VarDomain::Int { lo, hi } if lo > hi => {
                Err(ModelError::Invalid(format!("empty integer range [{lo}, {hi}]")))
            }
            VarDomain::Tuple(items) => items.iter().try_for_each(VarDomain::validate),
            _ => Ok(()),
        }
    }

    pub fn value_type(&self) -> Type {
        match self {
            VarDomain::Bool => Type::Bool,
            VarDomain::Int { .. } => Type::Int,
            VarDomain::Rational => Type::Rat,
            VarDomain::Tuple(items) => Type::Tuple(items.iter().map(VarDomain::value_type).collect()),
        }
    }

    /// Membership test; tuples are checked componentwise.
    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (VarDomain::Bool, Value::Bool(_)) => true,
            (VarDomain::Int { lo, hi }, Value::Int(n)) => lo <= n && n <= hi,
            (VarDomain::Rational, Value::Rat(_)) => true,
            (VarDomain::Tuple(ds), Value::Tuple(vs)) => {
                ds.len() == vs.len() && ds.iter().zip(vs).all(|(d, v)| d.contains(v))
            }
            _ => false,
        }
    }

    /// `self ⊇ other` as value sets.
    pub fn includes(&self, other: &VarDomain) -> bool {
        match (self, other) {
            (VarDomain::Bool, VarDomain::Bool) | (VarDomain::Rational, VarDomain::Rational) => true,
            (VarDomain::Int { lo, hi }, VarDomain::Int { lo: l2, hi: h2 }) => lo <= l2 && h2 <= hi,
            (VarDomain::Tuple(a), VarDomain::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.includes(y))
            }
            _ => false,
        }
    }

    /// Brings a type-compatible value into this domain's representation
    /// (integers stored in rational variables become rationals).
    pub fn coerce(&self, value: Value) -> Value {
        match (self, value) {
            (VarDomain::Rational, Value::Int(n)) => Value::Rat(Rational::from_int(n)),
            (VarDomain::Tuple(ds), Value::Tuple(vs)) if ds.len() == vs.len() => {
                Value::Tuple(ds.iter().zip(vs).map(|(d, v)| d.coerce(v)).collect())
            }
            (_, v) => v,
        }
    }

    /// A canonical member: `false`, the integer closest to zero, `0`, or the tuple of defaults.
    pub fn default_value(&self) -> Value {
        match self {
            VarDomain::Bool => Value::Bool(false),
            VarDomain::Int { lo, hi } => Value::Int(0i64.clamp(*lo, *hi)),
            VarDomain::Rational => Value::Rat(Rational::ZERO),
            VarDomain::Tuple(items) => Value::Tuple(items.iter().map(VarDomain::default_value).collect()),
        }
    }

    /// Number of members, when finite and representable.
    pub fn cardinality(&self) -> Option<u128> {
        match self {
            VarDomain::Bool => Some(2),
            VarDomain::Int { lo, hi } => Some((*hi as i128 - *lo as i128 + 1) as u128),
            VarDomain::Rational => None,
            VarDomain::Tuple(items) => items
                .iter()
                .try_fold(1u128, |acc, d| acc.checked_mul(d.cardinality()?)),
        }
    }

    /// Enumerates all members, if there are at most `limit` of them.
    pub fn enumerate(&self, limit: u128) -> Option<Vec<Value>> {
        if self.cardinality()? > limit {
            return None;
        }
        Some(match self {
            VarDomain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            VarDomain::Int { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            VarDomain::Rational => unreachable!("rational domains are infinite"),
            VarDomain::Tuple(items) => {
                let mut acc = vec![Vec::new()];
                for d in items {
                    let members = d.enumerate(limit)?;
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            members.iter().map(move |m| {
                                let mut next = prefix.clone();
                                next.push(m.clone());
                                next
                            })
                        })
                        .collect();
                }
                acc.into_iter().map(Value::Tuple).collect()
            }
        })
    }
}

impl fmt::Display for VarDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarDomain::Bool => f.write_str("bool"),
            VarDomain::Int { lo: i64::MIN, hi: i64::MAX } => f.write_str("int"),
            VarDomain::Int { lo, hi } => write!(f, "int[{lo}, {hi}]"),
            VarDomain::Rational => f.write_str("rational"),
            VarDomain::Tuple(items) => {
                f.write_str("(")?;
                for (i, d) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{d}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Membership of `value` in `domain`.
pub fn value_in_domain(value: &Value, domain: &VarDomain) -> bool {
    domain.contains(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        assert!(value_in_domain(&Value::Int(5), &VarDomain::int(0, 10)));
        assert!(!value_in_domain(&Value::Int(11), &VarDomain::int(0, 10)));
        let pair = VarDomain::Tuple(vec![VarDomain::Bool, VarDomain::int(0, 3)]);
        assert!(value_in_domain(&Value::Tuple(vec![true.into(), 2.into()]), &pair));
        assert!(!value_in_domain(&Value::Tuple(vec![true.into(), 4.into()]), &pair));
        assert!(!value_in_domain(&Value::Tuple(vec![true.into()]), &pair));
        assert!(!value_in_domain(&Value::Bool(true), &VarDomain::int(0, 1)));
    }

    #[test]
    fn empty_range_rejected() {
        assert!(VarDomain::int(3, 2).validate().is_err());
        assert!(VarDomain::Tuple(vec![VarDomain::int(1, 0)]).validate().is_err());
    }

    #[test]
    fn enumeration() {
        let d = VarDomain::Tuple(vec![VarDomain::Bool, VarDomain::int(0, 2)]);
        assert_eq!(d.cardinality(), Some(6));
        let all = d.enumerate(100).unwrap();
        assert_eq!(all.len(), 6);
        assert!(all.iter().all(|v| d.contains(v)));
        assert!(VarDomain::INT.enumerate(1000).is_none());
    }

    #[test]
    fn inclusion() {
        assert!(VarDomain::int(0, 10).includes(&VarDomain::int(2, 3)));
        assert!(!VarDomain::int(0, 10).includes(&VarDomain::int(2, 11)));
        assert!(!VarDomain::Rational.includes(&VarDomain::int(0, 1)));
    }
}
