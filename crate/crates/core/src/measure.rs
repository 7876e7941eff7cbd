//! Finite nonnegative measures and probability measures over indexed states.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Relative tolerance on the cached total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A nonnegative measure on `{0, …, n−1}`. The total mass need not be 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    weights: Vec<f64>,
    total_mass: f64,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::Precondition(format!(
                "measure weight at state {i} is {w}, expected a finite nonnegative value"
            )));
        }
        let total_mass = weights.iter().sum();
        Ok(Measure { weights, total_mass })
    }

    /// `n` states of unit mass each.
    pub fn counting(n: usize) -> Self {
        Measure { weights: vec![1.0; n], total_mass: n as f64 }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Indices carrying positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Divide by the total mass.
    pub fn normalized(&self) -> Result<ProbabilityMeasure> {
        if self.total_mass <= 0.0 {
            return Err(Error::Precondition("cannot normalize a zero measure".into()));
        }
        let w = self.weights.iter().map(|w| w / self.total_mass).collect();
        ProbabilityMeasure::new(w)
    }

    /// Image measure under a state map `phi: {0..n} → {0..target_len}`.
    pub fn push_forward(&self, phi: impl Fn(usize) -> usize, target_len: usize) -> Result<Measure> {
        let mut out = vec![0.0; target_len];
        for (i, &w) in self.weights.iter().enumerate() {
            let j = phi(i);
            if j >= target_len {
                return Err(Error::Dimension { expected: target_len, found: j + 1 });
            }
            out[j] += w;
        }
        Measure::new(out)
    }

    pub fn integrate(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.len(), u.len())?;
        Ok(self.weights.iter().zip(u).map(|(w, u)| if *w == 0.0 { 0.0 } else { w * u }).sum())
    }
}

/// A measure of total mass one, within [`MASS_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Measure", into = "Measure")]
pub struct ProbabilityMeasure(Measure);

impl ProbabilityMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Measure::new(weights)?.try_into()
    }

    /// Normalize arbitrary nonnegative weights.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        Measure::new(weights)?.normalized()
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        ProbabilityMeasure(Measure { weights: w, total_mass: 1.0 })
    }

    pub fn uniform(n: usize) -> Self {
        let w = vec![1.0 / n as f64; n];
        let total_mass = w.iter().sum();
        ProbabilityMeasure(Measure { weights: w, total_mass })
    }

    pub fn as_measure(&self) -> &Measure {
        &self.0
    }

    pub fn into_measure(self) -> Measure {
        self.0
    }
}

impl TryFrom<Measure> for ProbabilityMeasure {
    type Error = Error;

    fn try_from(m: Measure) -> Result<Self> {
        if (m.total_mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Precondition(format!(
                "probability measure has total mass {}, expected 1",
                m.total_mass
            )));
        }
        Ok(ProbabilityMeasure(m))
    }
}

impl From<ProbabilityMeasure> for Measure {
    fn from(p: ProbabilityMeasure) -> Self {
        p.0
    }
}

impl Deref for ProbabilityMeasure {
    type Target = Measure;

    fn deref(&self) -> &Measure {
        &self.0
    }
}

/// Total-variation distance `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
