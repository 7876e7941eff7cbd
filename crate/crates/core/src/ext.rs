//! Extended reals for entropies and dual values.

use std::cmp::Ordering;
use std::fmt;

/// A real number extended with `±∞`.
///
/// Infinite values are kept as distinct variants so that an infinite entropy
/// is never confused with a large finite one.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Finite value or panic; for call sites where infinity is a logic error.
    #[track_caller]
    pub fn expect_finite(self, what: &str) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            other => panic!("{what}: expected a finite value, got {other}"),
        }
    }

    /// Lossy conversion to `f64`, mapping the infinities to IEEE infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInfinity => f64::INFINITY,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedReal::PosInfinity
        } else if v == f64::NEG_INFINITY {
            ExtendedReal::NegInfinity
        } else {
            ExtendedReal::Finite(v)
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (NegInfinity, NegInfinity) | (PosInfinity, PosInfinity) => Some(Ordering::Equal),
            (NegInfinity, _) | (_, PosInfinity) => Some(Ordering::Less),
            (PosInfinity, _) | (_, NegInfinity) => Some(Ordering::Greater),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInfinity => f.write_str("-inf"),
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => f.write_str("+inf"),
        }
    }
}
