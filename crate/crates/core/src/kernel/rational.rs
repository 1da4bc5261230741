use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ModelError;

/// Exact rational number with 64-bit numerator and denominator.
///
/// Always stored in lowest terms with a positive denominator. Arithmetic is
/// checked: overflow surfaces as [`ModelError::Overflow`] instead of wrapping.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(Ratio<i64>);

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));

    /// Builds `numer / denom`, normalized. Fails on a zero denominator.
    pub fn new(numer: i64, denom: i64) -> Result<Self, ModelError> {
        if denom == 0 {
            return Err(ModelError::Arithmetic("zero denominator".into()));
        }
        if numer == i64::MIN || denom == i64::MIN {
            return Err(ModelError::Overflow);
        }
        Ok(Rational(Ratio::new(numer, denom)))
    }

    pub const fn from_int(n: i64) -> Self {
        Rational(Ratio::new_raw(n, 1))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, ModelError> {
        self.0.checked_add(&rhs.0).map(Rational).ok_or(ModelError::Overflow)
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, ModelError> {
        self.0.checked_sub(&rhs.0).map(Rational).ok_or(ModelError::Overflow)
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self, ModelError> {
        self.0.checked_mul(&rhs.0).map(Rational).ok_or(ModelError::Overflow)
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, ModelError> {
        if rhs.is_zero() {
            return Err(ModelError::Arithmetic("division by zero".into()));
        }
        self.0.checked_div(&rhs.0).map(Rational).ok_or(ModelError::Overflow)
    }

    pub fn checked_neg(&self) -> Result<Self, ModelError> {
        self.numer()
            .checked_neg()
            .map(|n| Rational(Ratio::new_raw(n, self.denom())))
            .ok_or(ModelError::Overflow)
    }

    /// Largest integer `k` with `k <= self`.
    pub fn floor(&self) -> i64 {
        self.0.floor().to_integer()
    }

    /// Smallest integer `k` with `k >= self`.
    pub fn ceil(&self) -> i64 {
        self.0.ceil().to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Parses a finite decimal literal such as `0.25` or `-3` exactly.
    pub fn from_decimal(text: &str) -> Result<Self, ModelError> {
        let bad = || ModelError::Parse(format!("invalid number `{text}`"));
        let (neg, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| ModelError::Overflow)? };
        let denom = 10i64
            .checked_pow(frac_part.len() as u32)
            .ok_or(ModelError::Overflow)?;
        let r = Rational::new(numer, denom)?;
        if neg {
            r.checked_neg()
        } else {
            Ok(r)
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `n`, `n/d` and finite decimals (`0.3`).
impl FromStr for Rational {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| ModelError::Parse(format!("invalid rational `{s}`")))?;
                let d: i64 = d.trim().parse().map_err(|_| ModelError::Parse(format!("invalid rational `{s}`")))?;
                Rational::new(n, d)
            }
            None => Rational::from_decimal(s),
        }
    }
}

// Integers serialize as JSON numbers, everything else as "n/d" strings.
impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.is_integer() {
            serializer.serialize_i64(self.numer())
        } else {
            serializer.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Rational;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a rational string such as \"3/10\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::from_int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                i64::try_from(v).map(Rational::from_int).map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
                // Only finite decimals survive the round trip through text.
                Rational::from_decimal(&format!("{v}")).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes() {
        let r = Rational::new(6, -4).unwrap();
        assert_eq!((r.numer(), r.denom()), (-3, 2));
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!("0.3".parse::<Rational>().unwrap(), Rational::new(3, 10).unwrap());
        assert_eq!("7/3".parse::<Rational>().unwrap(), Rational::new(7, 3).unwrap());
        assert_eq!("-2".parse::<Rational>().unwrap(), Rational::from_int(-2));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let big = Rational::from_int(i64::MAX);
        assert!(matches!(big.checked_add(&Rational::ONE), Err(ModelError::Overflow)));
        assert!(matches!(big.checked_mul(&Rational::from_int(2)), Err(ModelError::Overflow)));
    }

    #[test]
    fn floor_ceil() {
        let r = Rational::new(7, 2).unwrap();
        assert_eq!((r.floor(), r.ceil()), (3, 4));
        let r = Rational::new(-7, 2).unwrap();
        assert_eq!((r.floor(), r.ceil()), (-4, -3));
    }

    #[test]
    fn serde_shape() {
        let v = serde_json::to_string(&vec![Rational::from_int(4), Rational::new(1, 3).unwrap()]).unwrap();
        assert_eq!(v, r#"[4,"1/3"]"#);
        let back: Vec<Rational> = serde_json::from_str(&v).unwrap();
        assert_eq!(back[1], Rational::new(1, 3).unwrap());
    }
}
