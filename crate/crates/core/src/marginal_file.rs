//! Marginal files: one `state,weight` row per state.
//!
//! ```text
//! state,weight
//! 0,0.25
//! 2,0.75
//! ```
//!
//! The header row is optional, `#` starts a comment, states that are not
//! listed get weight zero, and the weights are normalized on reading.

use crate::error::{Error, Result};
use crate::measure::ProbabilityMeasure;

pub fn parse_marginal(text: &str, states: usize) -> Result<ProbabilityMeasure> {
    let mut weights = vec![None; states];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.replace(' ', "") == "state,weight" {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(err("expected `state,weight`".into()));
        }
        let x: usize = fields[0].parse().map_err(|_| err(format!("invalid state `{}`", fields[0])))?;
        if x >= states {
            return Err(err(format!("state {x} out of range (states: {states})")));
        }
        let w: f64 = fields[1].parse().map_err(|_| err(format!("invalid weight `{}`", fields[1])))?;
        if !(w.is_finite() && w >= 0.0) {
            return Err(err(format!("weight must be finite and nonnegative, got {w}")));
        }
        if weights[x].replace(w).is_some() {
            return Err(err(format!("duplicate weight for state {x}")));
        }
    }
    ProbabilityMeasure::from_unnormalized(weights.into_iter().map(|w| w.unwrap_or(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_fills_missing_states() {
        let mu = parse_marginal("state,weight\n0, 1\n2,3 # heavy\n", 3).unwrap();
        assert_eq!(mu.weights(), &[0.25, 0.0, 0.75]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(parse_marginal("0,1\n0,2\n", 2), Err(Error::Parse { line: 2, .. })));
        assert!(parse_marginal("5,1\n", 2).is_err());
        assert!(parse_marginal("0,-1\n", 2).is_err());
        assert!(parse_marginal("0;1\n", 2).is_err());
        assert!(parse_marginal("", 2).is_err());
    }
}
