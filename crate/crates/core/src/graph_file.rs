//! Line-oriented graph description files.
//!
//! ```text
//! # comments and blank lines are ignored
//! states: 3
//! edge 0 1 1.0 0.5      # edge <i> <j> <rate_ij> <rate_ji>
//! edge 1 2 0.5 1.0
//! m 0 1.0               # reversing measure, one line per state
//! m 1 2.0
//! m 2 1.0
//! ```
//!
//! Instead of `m` lines, the keyword `simple` builds the simple random walk on
//! the listed edges; edges are then written `edge <i> <j>` without rates.
//! The header must come first. Unknown directives are rejected.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::markov::{simple_random_walk, RateGraph, ReversibleChain};
use crate::measure::Measure;

pub fn parse_graph(text: &str) -> Result<ReversibleChain> {
    let mut states: Option<usize> = None;
    let mut simple = false;
    let mut edges: Vec<(usize, usize, Option<(f64, f64)>, usize)> = Vec::new();
    let mut masses: Vec<Option<f64>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();

        if let Some(rest) = line.strip_prefix("states:") {
            if states.is_some() {
                return Err(err("duplicate `states:` header".into()));
            }
            let n: usize = rest.trim().parse().map_err(|_| err(format!("invalid state count `{}`", rest.trim())))?;
            if n == 0 {
                return Err(err("state count must be positive".into()));
            }
            states = Some(n);
            masses = vec![None; n];
            continue;
        }
        let n = states.ok_or_else(|| err("`states: <n>` header must precede other directives".into()))?;
        let index = |tok: &str| -> Result<usize> {
            let i: usize = tok.parse().map_err(|_| err(format!("invalid state index `{tok}`")))?;
            if i >= n {
                return Err(err(format!("state index {i} out of range (states: {n})")));
            }
            Ok(i)
        };
        let real = |tok: &str| -> Result<f64> {
            let v: f64 = tok.parse().map_err(|_| err(format!("invalid number `{tok}`")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite number `{tok}`")));
            }
            Ok(v)
        };

        match tokens[0] {
            "edge" => match tokens.len() {
                3 => edges.push((index(tokens[1])?, index(tokens[2])?, None, line_no)),
                5 => {
                    let (i, j) = (index(tokens[1])?, index(tokens[2])?);
                    let (a, b) = (real(tokens[3])?, real(tokens[4])?);
                    if a < 0.0 || b < 0.0 {
                        return Err(err("rates must be nonnegative".into()));
                    }
                    edges.push((i, j, Some((a, b)), line_no));
                }
                _ => return Err(err("expected `edge <i> <j> <rate_ij> <rate_ji>` or `edge <i> <j>`".into())),
            },
            "m" => {
                if tokens.len() != 3 {
                    return Err(err("expected `m <i> <value>`".into()));
                }
                let i = index(tokens[1])?;
                if masses[i].is_some() {
                    return Err(err(format!("duplicate reversing mass for state {i}")));
                }
                masses[i] = Some(real(tokens[2])?);
            }
            "simple" => {
                if tokens.len() != 1 {
                    return Err(err("`simple` takes no arguments".into()));
                }
                simple = true;
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let n = states.ok_or(Error::Parse { line: 0, message: "missing `states: <n>` header".into() })?;
    if simple {
        if masses.iter().any(|m| m.is_some()) {
            return Err(Error::Parse { line: 0, message: "`simple` cannot be combined with `m` lines".into() });
        }
        if let Some(&(_, _, _, line)) = edges.iter().find(|e| e.2.is_some()) {
            return Err(Error::Parse { line, message: "rates are determined by `simple`; write `edge <i> <j>`".into() });
        }
        let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.0, e.1)).collect();
        return simple_random_walk(n, &pairs);
    }

    let mut rates = DMatrix::zeros(n, n);
    for &(i, j, r, line) in &edges {
        let (a, b) = r.ok_or(Error::Parse { line, message: "edge rates are required without `simple`".into() })?;
        if i == j {
            return Err(Error::Parse { line, message: format!("self-loop at state {i}") });
        }
        rates[(i, j)] = a;
        rates[(j, i)] = b;
    }
    let m: Vec<f64> = masses
        .iter()
        .enumerate()
        .map(|(i, m)| m.ok_or(Error::Parse { line: 0, message: format!("missing reversing mass `m {i} <value>`") }))
        .collect::<Result<_>>()?;
    ReversibleChain::new(RateGraph::new(rates)?, Measure::new(m)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_explicit_chain() {
        let text = "states: 3\nedge 0 1 1.0 0.5\nedge 1 2 0.5 1.0\nm 0 1\nm 1 2\nm 2 1 # end\n";
        let c = parse_graph(text).unwrap();
        assert_eq!(c, simple_random_walk(3, &[(0, 1), (1, 2)]).unwrap());
    }

    #[test]
    fn parses_simple_keyword() {
        let c = parse_graph("states: 3\nsimple\nedge 0 1\nedge 1 2\nedge 2 0\n").unwrap();
        assert_eq!(c.m().weights(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn rejects_unknown_directive() {
        let e = parse_graph("states: 2\nedge 0 1 1 1\nvertex 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn rejects_missing_header_and_bad_indices() {
        assert!(parse_graph("edge 0 1 1 1\n").is_err());
        assert!(parse_graph("states: 2\nedge 0 2 1 1\nm 0 1\nm 1 1\n").is_err());
        assert!(parse_graph("states: 2\nedge 0 1 1 1\nm 0 1\n").is_err());
    }

    #[test]
    fn rejects_irreversible_rates() {
        assert!(matches!(
            parse_graph("states: 2\nedge 0 1 1 2\nm 0 1\nm 1 1\n"),
            Err(Error::Construction(_))
        ));
    }
}
