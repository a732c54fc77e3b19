use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error};

/// A norm exponent in `[1, ∞]`.
///
/// `∞` is a distinguished value; its reciprocal is exactly `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormExponent {
    Finite(f64),
    Infinity,
}

impl NormExponent {
    pub const ONE: NormExponent = NormExponent::Finite(1.0);
    pub const TWO: NormExponent = NormExponent::Finite(2.0);

    pub fn finite(p: f64) -> crate::Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(NormExponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(NormExponent::Infinity)
        } else {
            Err(domain(format!("norm exponent must lie in [1, inf], got {p}")))
        }
    }

    /// `1/p` with the convention `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            NormExponent::Finite(p) => 1.0 / p,
            NormExponent::Infinity => 0.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, NormExponent::Infinity)
    }
}

impl fmt::Display for NormExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormExponent::Finite(p) => write!(f, "{p}"),
            NormExponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for NormExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(NormExponent::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| domain(format!("cannot parse norm exponent {s:?}")))?;
                NormExponent::finite(p)
            }
        }
    }
}

// Serialized as a number, or the string "inf".
impl Serialize for NormExponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            NormExponent::Finite(p) => serializer.serialize_f64(*p),
            NormExponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormExponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(p) => NormExponent::finite(p).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
