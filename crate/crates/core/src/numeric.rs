//! Small numerical helpers shared across modules.

/// `log Σ exp(x_i)`, returning `-∞` for an empty or all `-∞` input.
pub fn logsumexp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Median of a nonempty slice; the mean of the two central values for even length.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `θ(a) = eᵃ − a − 1`.
pub fn theta(a: f64) -> f64 {
    a.exp_m1() - a
}

/// Convex conjugate of [`theta`]:
/// `(b+1) log(b+1) − b` for `b > −1`, `1` at `b = −1`, `+∞` below.
pub fn theta_star(b: f64) -> f64 {
    if b > -1.0 {
        let c = b + 1.0;
        c * c.ln() - b
    } else if b == -1.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_is_stable() {
        let v = logsumexp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn theta_star_reference_values() {
        assert_eq!(theta_star(0.0), 0.0);
        assert_eq!(theta_star(-1.0), 1.0);
        assert_eq!(theta_star(-1.5), f64::INFINITY);
        // continuity at the boundary
        assert!((theta_star(-1.0 + 1e-12) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn theta_star_is_the_conjugate() {
        // θ*(b) = sup_a { a b − θ(a) } attained at a = log(1+b)
        for &b in &[-0.9, -0.3, 0.0, 0.7, 3.0] {
            let a = (1.0f64 + b).ln();
            let sup = (-2000..2000)
                .map(|i| i as f64 * 0.005)
                .map(|t| t * b - theta(t))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((a * b - theta(a) - theta_star(b)).abs() < 1e-12);
            assert!(sup <= theta_star(b) + 1e-12 && theta_star(b) - sup < 1e-4);
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
