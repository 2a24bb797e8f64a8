//! Exact rationals and their wire format.
//!
//! Every rational that leaves the library is written as `"p/q"` in lowest
//! terms with a positive denominator, including integers (`"3/1"`) and zero
//! (`"0/1"`). Parsing additionally accepts bare integers and finite decimals
//! (`"0.25"`), both converted exactly.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if negative { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Lowest common multiple of the denominators of `values` (1 when empty).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

pub fn to_i64(n: &BigInt) -> Result<i64> {
    n.to_i64().ok_or(Error::CoordinateOverflow)
}

pub fn pow(r: &Rational, e: usize) -> Rational {
    num_traits::pow(r.clone(), e)
}

/// Serde adapter: a single rational as a `"p/q"` string.
pub mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: a vector of rationals as `["p/q", ...]`.
pub mod serde_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter: a list of rational points.
pub mod serde_points {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &[Vec<Rational>],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = v
            .iter()
            .map(|p| p.iter().map(format_rational).collect())
            .collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
        let strs = Vec::<Vec<String>>::deserialize(d)?;
        strs.iter()
            .map(|p| {
                p.iter()
                    .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// Serde adapter: `{name: "p/q"}` maps.
pub mod serde_map {
    use super::*;
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<String, Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let strs: BTreeMap<&String, String> =
            m.iter().map(|(k, v)| (k, format_rational(v))).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<String, Rational>, D::Error> {
        let strs = BTreeMap::<String, String>::deserialize(d)?;
        strs.into_iter()
            .map(|(k, v)| {
                parse_rational(&v)
                    .map(|r| (k, r))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

/// A small exact scalar `p/r` in lowest terms, used for the interpolation
/// parameter `t` and for set dilations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalScalar {
    numer: i64,
    denom: i64,
}

impl RationalScalar {
    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::invalid("zero denominator"));
        }
        let g = numer.gcd(&denom);
        let sign = if denom < 0 { -1 } else { 1 };
        Ok(RationalScalar {
            numer: sign * numer / g,
            denom: sign * denom / g,
        })
    }

    pub fn numer(&self) -> i64 {
        self.numer
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn to_rational(&self) -> Rational {
        rat(self.numer, self.denom)
    }

    /// `1 - t`.
    pub fn complement(&self) -> Self {
        RationalScalar::new(self.denom - self.numer, self.denom).expect("nonzero denominator")
    }

    /// True when `0 < t < 1`.
    pub fn in_open_unit(&self) -> bool {
        self.numer > 0 && self.numer < self.denom
    }

    pub(crate) fn require_open_unit(&self) -> Result<()> {
        if self.in_open_unit() {
            Ok(())
        } else {
            Err(Error::invalid(format!("t = {self} must lie in (0, 1)")))
        }
    }

    pub fn try_from_rational(r: &Rational) -> Result<Self> {
        let n = r.numer().to_i64().ok_or(Error::CoordinateOverflow)?;
        let d = r.denom().to_i64().ok_or(Error::CoordinateOverflow)?;
        RationalScalar::new(n, d)
    }
}

impl fmt::Display for RationalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

impl FromStr for RationalScalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RationalScalar::try_from_rational(&parse_rational(s)?)
    }
}

impl Serialize for RationalScalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_integers_with_denominator() {
        assert_eq!(format_rational(&int(0)), "0/1");
        assert_eq!(format_rational(&int(3)), "3/1");
        assert_eq!(format_rational(&rat(2, -4)), "-1/2");
    }

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("6/8").unwrap(), rat(3, 4));
        assert_eq!(parse_rational(" -7 ").unwrap(), int(-7));
        assert_eq!(parse_rational("2.7").unwrap(), rat(27, 10));
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn scalar_is_reduced() {
        let t = RationalScalar::new(2, 4).unwrap();
        assert_eq!((t.numer(), t.denom()), (1, 2));
        let t = RationalScalar::new(1, -3).unwrap();
        assert_eq!((t.numer(), t.denom()), (-1, 3));
        assert_eq!("1/3".parse::<RationalScalar>().unwrap().complement().to_string(), "2/3");
        assert!(!RationalScalar::new(1, 1).unwrap().in_open_unit());
    }
}
