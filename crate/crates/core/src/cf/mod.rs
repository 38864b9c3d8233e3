//! The base-`m` Chan continued fraction
//!
//! ```text
//! x = m^{-a1} / (1 + (m-1) m^{-a2} / (1 + (m-1) m^{-a3} / (1 + ...)))  =: [[a1, a2, a3, ...]]
//! ```
//!
//! with natural-number digits `a_n`, generated by the shift `T_m`. Digit
//! intervals are taken right-closed, `(m^{-(i+1)}, m^{-i}]`, so `m^{-i}` has the
//! one-digit expansion `[[i]]` and shifts to exactly zero.
//!
//! Every exact path runs on [`ExactRational`](crate::ExactRational); float
//! variants (suffix `_f64`) exist for the simulation code and correct the
//! logarithmic digit estimate with exact power comparisons.

mod convergents;
mod expansion;
mod interval;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub use convergents::{
    convergents, determinant_closed_form, s_sequence, s_sequence_quotient_form,
    s_sequence_reversed_form, ConvergentState,
};
pub use expansion::{
    digit_first, digit_first_f64, evaluate, evaluate_with_tail, expand, shift, shift_f64,
    Expansion, DEFAULT_MAX_DIGITS,
};
pub use interval::{closed_form_measure, FundamentalInterval};
pub(crate) use expansion::{float_digit, shift_unchecked};

/// An incomplete quotient: a natural number, or the terminal symbol `∞`
/// that ends the expansion of a point reaching zero under the shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Digit {
    Finite(u32),
    Terminal,
}

impl Digit {
    pub fn finite(self) -> Option<u32> {
        match self {
            Digit::Finite(a) => Some(a),
            Digit::Terminal => None,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Digit::Terminal)
    }
}

impl From<u32> for Digit {
    fn from(a: u32) -> Self {
        Digit::Finite(a)
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Digit::Finite(a) => write!(f, "{a}"),
            Digit::Terminal => f.write_str("inf"),
        }
    }
}

impl FromStr for Digit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "inf" | "∞" | "Inf" | "INF" => Ok(Digit::Terminal),
            other => other
                .parse::<u32>()
                .map(Digit::Finite)
                .map_err(|_| Error::Parse(format!("not a digit: {other:?}"))),
        }
    }
}

impl Serialize for Digit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Digit::Finite(a) => serializer.serialize_u32(*a),
            Digit::Terminal => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Digit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(a) => Ok(Digit::Finite(a)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Parses a comma-separated digit list such as `1,2,inf`.
pub fn parse_digits(s: &str) -> Result<Vec<Digit>, Error> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(str::parse).collect()
}

pub(crate) fn finite_digits(digits: &[Digit]) -> Result<Vec<u32>, Error> {
    digits
        .iter()
        .map(|d| {
            d.finite()
                .ok_or_else(|| Error::MalformedExpansion("terminal digit not allowed here".into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_json() {
        let ds = vec![Digit::Finite(1), Digit::Finite(2), Digit::Terminal];
        let json = serde_json::to_string(&ds).unwrap();
        assert_eq!(json, r#"[1,2,"inf"]"#);
        let back: Vec<Digit> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ds);
        assert!(serde_json::from_str::<Digit>("\"x\"").is_err());
    }

    #[test]
    fn digit_list_parsing() {
        assert_eq!(
            parse_digits("1, 2,inf").unwrap(),
            vec![Digit::Finite(1), Digit::Finite(2), Digit::Terminal]
        );
        assert!(parse_digits("1,-2").is_err());
        assert!(parse_digits("").unwrap().is_empty());
    }
}
