//! Relative entropy of a probability measure with respect to a finite
//! nonnegative reference, together with the variational (Donsker–Varadhan)
//! bound and the disintegration formula along the first coordinate.
//!
//! The reference `r` need not have unit mass, so `H(p|r)` may be negative.
//! Natural logarithms throughout, with `0·log 0 = 0`.

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtendedReal;
use crate::measure::{Measure, ProbabilityMeasure};
use crate::numeric::logsumexp;

/// `H(p|r) = Σ p(x) log(p(x)/r(x))`, or `+∞` when `p` charges a state that `r` does not.
pub fn relative_entropy(p: &ProbabilityMeasure, r: &Measure) -> Result<ExtendedReal> {
    relative_entropy_weights(p.weights(), r.weights())
}

pub(crate) fn relative_entropy_weights(p: &[f64], r: &[f64]) -> Result<ExtendedReal> {
    check_dim(p.len(), r.len())?;
    let mut h = 0.0;
    for (&pi, &ri) in p.iter().zip(r) {
        if pi == 0.0 {
            continue;
        }
        if ri == 0.0 {
            return Ok(ExtendedReal::PosInfinity);
        }
        h += pi * (pi / ri).ln();
    }
    Ok(ExtendedReal::Finite(h))
}

/// `true` when every state charged by `p` is charged by `r`.
pub fn absolutely_continuous(p: &Measure, r: &Measure) -> bool {
    p.len() == r.len() && p.weights().iter().zip(r.weights()).all(|(&a, &b)| a == 0.0 || b > 0.0)
}

/// The lower bound `⟨u, p⟩ − log⟨eᵘ, r⟩ ≤ H(p|r)` for one test function.
pub fn variational_lower_bound(p: &ProbabilityMeasure, r: &Measure, u: &[f64]) -> Result<f64> {
    check_dim(p.len(), u.len())?;
    check_dim(r.len(), u.len())?;
    let linear = p.integrate(u)?;
    let log_partition = logsumexp(
        r.weights()
            .iter()
            .zip(u)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, u)| w.ln() + u),
    );
    Ok(linear - log_partition)
}

/// Outcome of [`verify_variational_formula`].
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalReport {
    pub entropy: f64,
    /// One lower bound per trial function, in input order.
    pub bounds: Vec<f64>,
    /// `max(bound − H)` over the trials; nonpositive up to round-off.
    pub max_violation: f64,
    /// `|bound(u*) − H|` for the optimizer `u* = log(p/r)` on the support of `p`.
    pub optimizer_gap: f64,
}

impl VariationalReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.optimizer_gap <= tol
    }
}

/// Check the variational characterization
/// `H(p|r) = sup_u { ⟨u, p⟩ − log⟨eᵘ, r⟩ }` against a list of trial functions
/// and at the maximizer `u* = log(dp/dr)`.
///
/// The maximizer is undefined off the support of `p`; there it is set to
/// `−∞` (the corresponding terms of `⟨eᵘ, r⟩` vanish).
pub fn verify_variational_formula(
    p: &ProbabilityMeasure,
    r: &Measure,
    trial_functions: &[Vec<f64>],
) -> Result<VariationalReport> {
    check_dim(p.len(), r.len())?;
    if !absolutely_continuous(p, r) {
        return Err(Error::Precondition(
            "p is not absolutely continuous with respect to r; the supremum is +inf".into(),
        ));
    }
    let entropy = relative_entropy(p, r)?.expect_finite("relative entropy under p << r");

    let bounds = trial_functions
        .iter()
        .map(|u| variational_lower_bound(p, r, u))
        .collect::<Result<Vec<_>>>()?;
    let max_violation = bounds.iter().map(|b| b - entropy).fold(f64::NEG_INFINITY, f64::max);

    let mut linear = 0.0;
    let mut log_terms = Vec::new();
    for (&pi, &ri) in p.weights().iter().zip(r.weights()) {
        if pi > 0.0 {
            let u = (pi / ri).ln();
            linear += pi * u;
            log_terms.push(ri.ln() + u);
        }
    }
    let optimizer_gap = (linear - logsumexp(log_terms) - entropy).abs();

    Ok(VariationalReport { entropy, bounds, max_violation, optimizer_gap })
}

/// Shape of a joint measure on `X × Y`, stored row-major (`x * cols + y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointShape {
    pub rows: usize,
    pub cols: usize,
}

impl JointShape {
    pub fn len(self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

/// The two terms of
/// `H(p|r) = H(p_X|r_X) + Σ_x p_X(x) H(p(·|x) | r(·|x))`,
/// where `p_X`, `r_X` are the first-coordinate marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub marginal_term: ExtendedReal,
    pub conditional_term: ExtendedReal,
}

impl Decomposition {
    pub fn total(&self) -> ExtendedReal {
        match (self.marginal_term, self.conditional_term) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::PosInfinity,
        }
    }
}

/// Split `H(joint_p | joint_r)` along the first coordinate.
///
/// Fibers with zero `p`-mass are skipped. A fiber with positive `p`-mass and
/// zero `r`-mass makes the marginal term `+∞`.
pub fn additive_decomposition(
    joint_p: &ProbabilityMeasure,
    joint_r: &Measure,
    shape: JointShape,
) -> Result<Decomposition> {
    check_dim(shape.len(), joint_p.len())?;
    check_dim(shape.len(), joint_r.len())?;
    let p = joint_p.weights();
    let r = joint_r.weights();
    let row = |w: &[f64], x: usize| -> Vec<f64> { w[x * shape.cols..(x + 1) * shape.cols].to_vec() };

    let p_marg: Vec<f64> = (0..shape.rows).map(|x| row(p, x).iter().sum()).collect();
    let r_marg: Vec<f64> = (0..shape.rows).map(|x| row(r, x).iter().sum()).collect();
    let marginal_term = relative_entropy_weights(&p_marg, &r_marg)?;

    let mut conditional = 0.0;
    let mut conditional_infinite = false;
    for x in 0..shape.rows {
        if p_marg[x] == 0.0 || r_marg[x] == 0.0 {
            continue;
        }
        let pc: Vec<f64> = row(p, x).iter().map(|v| v / p_marg[x]).collect();
        let rc: Vec<f64> = row(r, x).iter().map(|v| v / r_marg[x]).collect();
        match relative_entropy_weights(&pc, &rc)? {
            ExtendedReal::Finite(h) => conditional += p_marg[x] * h,
            _ => conditional_infinite = true,
        }
    }
    let conditional_term = if conditional_infinite {
        ExtendedReal::PosInfinity
    } else {
        ExtendedReal::Finite(conditional)
    };
    Ok(Decomposition { marginal_term, conditional_term })
}

/// The probability reference `r_W = e^{−W} r / z_W` with `z_W = ⟨e^{−W}, r⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedReference {
    pub measure: ProbabilityMeasure,
    pub log_normalizer: f64,
}

pub fn weighted_reference(r: &Measure, weight: &[f64]) -> Result<WeightedReference> {
    check_dim(r.len(), weight.len())?;
    let log_terms: Vec<f64> = r
        .weights()
        .iter()
        .zip(weight)
        .map(|(ri, w)| if *ri > 0.0 { ri.ln() - w } else { f64::NEG_INFINITY })
        .collect();
    let log_z = logsumexp(log_terms.iter().copied());
    if !log_z.is_finite() {
        return Err(Error::Precondition("weighted normalizer z_W is not finite and positive".into()));
    }
    let w = log_terms.iter().map(|l| (l - log_z).exp()).collect();
    Ok(WeightedReference { measure: ProbabilityMeasure::new(w)?, log_normalizer: log_z })
}

/// `H(p | r_W) − ⟨W, p⟩ − log z_W`, which must coincide with `H(p|r)`.
pub fn entropy_via_weighted_reference(
    p: &ProbabilityMeasure,
    r: &Measure,
    weight: &[f64],
) -> Result<ExtendedReal> {
    let wr = weighted_reference(r, weight)?;
    Ok(match relative_entropy(p, &wr.measure)? {
        ExtendedReal::Finite(h) => ExtendedReal::Finite(h - p.integrate(weight)? - wr.log_normalizer),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(w: &[f64]) -> ProbabilityMeasure {
        ProbabilityMeasure::new(w.to_vec()).unwrap()
    }

    fn m(w: &[f64]) -> Measure {
        Measure::new(w.to_vec()).unwrap()
    }

    #[test]
    fn equal_measures_have_zero_entropy() {
        let p = pm(&[0.5, 0.5]);
        assert_eq!(relative_entropy(&p, &p).unwrap(), ExtendedReal::Finite(0.0));
    }

    #[test]
    fn mass_two_reference_gives_minus_log_two() {
        let h = relative_entropy(&pm(&[0.5, 0.5]), &m(&[1.0, 1.0])).unwrap();
        assert!((h.expect_finite("h") + 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_pair_matches_direct_sum() {
        // 0.3 ln 0.6 + 0.7 ln 1.4
        let h = relative_entropy(&pm(&[0.3, 0.7]), &m(&[0.5, 0.5])).unwrap();
        assert!((h.expect_finite("h") - 0.08228287850505178).abs() < 1e-15);
    }

    #[test]
    fn missing_support_is_infinite() {
        let h = relative_entropy(&pm(&[0.5, 0.5]), &m(&[1.0, 0.0])).unwrap();
        assert_eq!(h, ExtendedReal::PosInfinity);
        // zero mass on a zero state is fine
        let h = relative_entropy(&pm(&[1.0, 0.0]), &m(&[1.0, 0.0])).unwrap();
        assert_eq!(h, ExtendedReal::Finite(0.0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            relative_entropy(&pm(&[1.0]), &m(&[1.0, 1.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn variational_formula_uniform_zero_trial() {
        let p = pm(&[0.5, 0.5]);
        let rep = verify_variational_formula(&p, &p, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(rep.bounds, vec![0.0]);
        assert!(rep.holds(1e-15));
    }

    #[test]
    fn variational_formula_optimizer_attains() {
        let p = pm(&[0.3, 0.7]);
        let r = m(&[0.5, 0.5]);
        let u_star = vec![(0.3f64 / 0.5).ln(), (0.7f64 / 0.5).ln()];
        let rep = verify_variational_formula(&p, &r, &[u_star]).unwrap();
        assert!((rep.bounds[0] - rep.entropy).abs() < 1e-12);
        assert!(rep.optimizer_gap < 1e-12);
    }

    #[test]
    fn variational_formula_requires_absolute_continuity() {
        let r = m(&[1.0, 0.0]);
        assert!(matches!(
            verify_variational_formula(&pm(&[0.5, 0.5]), &r, &[]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn product_joint_decomposes_to_zeros() {
        let p = pm(&[0.06, 0.14, 0.24, 0.56]);
        let d = additive_decomposition(&p, &p, JointShape { rows: 2, cols: 2 }).unwrap();
        assert_eq!(d.marginal_term, ExtendedReal::Finite(0.0));
        assert_eq!(d.conditional_term, ExtendedReal::Finite(0.0));
    }

    #[test]
    fn reweighted_marginal_has_zero_conditional_term() {
        // r(x,y) on 2×3, p(x,y) = a(x) r(x,y)/r_X(x)
        let r = [0.1, 0.2, 0.3, 0.15, 0.05, 0.2];
        let r_x = [0.6, 0.4];
        let a = [0.25, 0.75];
        let p: Vec<f64> = (0..6).map(|i| a[i / 3] * r[i] / r_x[i / 3]).collect();
        let d = additive_decomposition(&pm(&p), &m(&r), JointShape { rows: 2, cols: 3 }).unwrap();
        assert!(d.conditional_term.expect_finite("c").abs() < 1e-15);
        let h = relative_entropy(&pm(&p), &m(&r)).unwrap().expect_finite("h");
        assert!((d.marginal_term.expect_finite("m") - h).abs() < 1e-14);
    }

    #[test]
    fn empty_reference_fiber_gives_infinite_marginal_term() {
        let p = pm(&[0.25, 0.25, 0.25, 0.25]);
        let r = m(&[1.0, 1.0, 0.0, 0.0]);
        let d = additive_decomposition(&p, &r, JointShape { rows: 2, cols: 2 }).unwrap();
        assert_eq!(d.marginal_term, ExtendedReal::PosInfinity);
        assert_eq!(d.total(), ExtendedReal::PosInfinity);
    }

    #[test]
    fn weighted_reference_is_coherent() {
        let p = pm(&[0.2, 0.5, 0.3]);
        let r = m(&[2.0, 0.5, 1.5]);
        let w = [0.3, -1.2, 2.0];
        let direct = relative_entropy(&p, &r).unwrap().expect_finite("h");
        let via = entropy_via_weighted_reference(&p, &r, &w).unwrap().expect_finite("h");
        assert!((direct - via).abs() < 1e-12);
    }
}
