//! Extended reals `[-∞, +∞]`.
//!
//! Arithmetic is checked: `(+∞) + (-∞)` and `0 · (±∞)` are domain errors.
//! The one place where `0 · (-∞) = 0` is allowed is
//! [`ExtReal::mul_zero_convention`], used by the limit-target formula.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

pub use ExtReal::{NegInf, PosInf};

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Converts an `f64`, mapping IEEE infinities to the extended ones.
    pub fn new(x: f64) -> Result<Self> {
        if x.is_nan() {
            Err(Error::Domain("NaN is not an extended real".into()))
        } else {
            Ok(Self::from_f64_unchecked(x))
        }
    }

    pub(crate) fn from_f64_unchecked(x: f64) -> Self {
        debug_assert!(!x.is_nan(), "NaN reached ExtReal");
        if x == f64::INFINITY {
            PosInf
        } else if x == f64::NEG_INFINITY {
            NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    /// IEEE view: `±∞` map to the float infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        self == PosInf
    }

    pub fn is_neg_inf(self) -> bool {
        self == NegInf
    }

    pub fn checked_add(self, rhs: ExtReal) -> Result<ExtReal> {
        match (self, rhs) {
            (PosInf, NegInf) | (NegInf, PosInf) => {
                Err(Error::Domain("(+inf) + (-inf) is undefined".into()))
            }
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Ok(Self::from_f64_unchecked(a + b)),
        }
    }

    pub fn checked_sub(self, rhs: ExtReal) -> Result<ExtReal> {
        self.checked_add(-rhs)
    }

    pub fn checked_mul(self, rhs: ExtReal) -> Result<ExtReal> {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Ok(Self::from_f64_unchecked(a * b)),
            (ExtReal::Finite(a), inf) | (inf, ExtReal::Finite(a)) => {
                if a == 0.0 {
                    Err(Error::Domain("0 * inf is undefined".into()))
                } else if (a > 0.0) == (inf == PosInf) {
                    Ok(PosInf)
                } else {
                    Ok(NegInf)
                }
            }
            (a, b) => Ok(if a == b { PosInf } else { NegInf }),
        }
    }

    /// Product with the convention `0 · (±∞) = 0`.
    pub fn mul_zero_convention(self, rhs: ExtReal) -> ExtReal {
        if self == ExtReal::ZERO || rhs == ExtReal::ZERO {
            ExtReal::ZERO
        } else {
            self.checked_mul(rhs)
                .expect("non-zero product is always defined")
        }
    }
}

impl Default for ExtReal {
    fn default() -> Self {
        ExtReal::ZERO
    }
}

impl From<f64> for ExtReal {
    /// Panics in debug builds on NaN.
    fn from(x: f64) -> Self {
        Self::from_f64_unchecked(x)
    }
}

impl std::ops::Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            NegInf => PosInf,
            PosInf => NegInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
        }
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.to_f64(), other.to_f64());
        // -0 and 0 compare equal, as under PartialEq
        a.partial_cmp(&b).unwrap_or_else(|| a.total_cmp(&b))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => f.write_str("-inf"),
            PosInf => f.write_str("+inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
        }
    }
}

impl std::str::FromStr for ExtReal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" | "-Infinity" => Ok(NegInf),
            "+inf" | "inf" | "Infinity" | "+Infinity" => Ok(PosInf),
            other => other
                .parse::<f64>()
                .map_err(|e| Error::Domain(format!("cannot parse {other:?}: {e}")))
                .and_then(ExtReal::new),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            NegInf => s.serialize_str("-inf"),
            PosInf => s.serialize_str("+inf"),
        }
    }
}

struct ExtRealVisitor;

impl Visitor<'_> for ExtRealVisitor {
    type Value = ExtReal;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or one of \"-inf\", \"+inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
        ExtReal::new(v).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
        Ok(ExtReal::Finite(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
        Ok(ExtReal::Finite(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
        v.parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(ExtRealVisitor)
    }
}
