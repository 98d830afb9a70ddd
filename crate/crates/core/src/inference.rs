//! Heavy-tail (deconvolvability) test and its asymptotic power.
//!
//! Under the null, every entry of `C + Z` is normal, so the fourth-moment
//! estimate of `sigma^4_c` is centered at zero; the test rejects when its
//! standardized value exceeds the normal quantile.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use libm::erfc;

use crate::error::{LanovaError, Result};
use crate::nuisance::{estimate_nuisance, NuisanceEstimates};
use crate::tensor::DenseTensor;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Phi(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    let x = Normal::standard().inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    // One Newton step against the erfc-based cdf recovers full precision.
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let err = if p > 0.5 { (1.0 - p) - normal_sf(x) } else { normal_cdf(x) - p };
    x - err / pdf
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LanovaError::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Test statistic from precomputed estimates on a tensor with `cells` entries.
///
/// The numerator keeps the unclipped fourth-moment estimate so that negative
/// evidence gives a negative statistic.
pub fn heavy_tail_statistic(est: &NuisanceEstimates, cells: usize) -> Result<f64> {
    let total = est.sigma2_c + est.sigma2_z;
    if !(total > 0.0) {
        return Err(LanovaError::ZeroTotalVariance);
    }
    Ok((cells as f64).sqrt() * est.sigma4_c_raw / ((8.0f64 / 3.0).sqrt() * total * total))
}

pub fn test_from_estimates(est: &NuisanceEstimates, cells: usize, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let statistic = heavy_tail_statistic(est, cells)?;
    Ok(TestResult {
        statistic,
        p_value: normal_sf(statistic),
        reject: statistic > normal_quantile(1.0 - alpha),
        alpha,
    })
}

/// Level-`alpha` test of normally distributed `C + Z` against heavy tails.
pub fn heavy_tail_test(y: &DenseTensor, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let est = estimate_nuisance(y)?;
    test_from_estimates(&est, y.len(), alpha)
}

/// Asymptotic power when the interactions are Laplace with
/// `phi2 = sigma2_c / sigma2_z`, for a tensor with `cells` entries.
pub fn power_laplace(phi2: f64, cells: usize, alpha: f64) -> f64 {
    let z = normal_quantile(1.0 - alpha);
    let ratio = phi2 / (phi2 + 1.0);
    let shift = (3.0 * cells as f64 / 8.0).sqrt() * ratio * ratio;
    let (p4, p6, p8) = (phi2.powi(2), phi2.powi(3), phi2.powi(4));
    let spread = (1.0 + (68.0 * p8 + 36.0 * p6 + 9.0 * p4) / (1.0 + phi2).powi(4)).sqrt();
    normal_sf((z - shift) / spread)
}

/// Asymptotic power when the interactions are zero with probability
/// `1 - pi_c` and `N(0, tau2_c)` otherwise, with `phi2 = tau2_c / sigma2_z`.
pub fn power_bernoulli_normal(phi2: f64, pi_c: f64, cells: usize, alpha: f64) -> f64 {
    let z = normal_quantile(1.0 - alpha);
    let mix = pi_c * (1.0 - pi_c);
    let d = pi_c * phi2 + 1.0;
    let shift = mix * (3.0 * cells as f64 / 8.0).sqrt() * (phi2 / d).powi(2);
    let (p4, p6, p8) = (phi2.powi(2), phi2.powi(3), phi2.powi(4));
    let inner = ((20.0 * pi_c * pi_c - 28.0 * pi_c + 35.0) * p8 + 16.0 * (5.0 - pi_c) * p6 + 72.0 * p4)
        / (8.0 * d.powi(4));
    let spread = (1.0 + mix * inner).sqrt();
    normal_sf((z - shift) / spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_helpers() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(normal_quantile(0.95), 1.6448536269514722, epsilon = 1e-14);
        assert_abs_diff_eq!(normal_cdf(1.6448536269514722), 0.95, epsilon = 1e-14);
        for &p in &[1e-8, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert_abs_diff_eq!(normal_cdf(normal_quantile(p)), p, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(normal_sf(3.99), 3.3037e-5, epsilon = 1e-8);
    }

    #[test]
    fn non_positive_fourth_moment_never_rejects() {
        let y = DenseTensor::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let t = heavy_tail_test(&y, 0.05).unwrap();
        assert!(t.statistic <= 0.0);
        assert!(!t.reject);
        assert!(t.p_value >= 0.5);
    }

    #[test]
    fn zero_variance_is_an_error() {
        assert!(matches!(
            heavy_tail_test(&DenseTensor::zeros(&[3, 3]), 0.05),
            Err(LanovaError::ZeroTotalVariance)
        ));
        assert!(heavy_tail_test(&DenseTensor::zeros(&[3, 3]), 1.5).is_err());
    }

    #[test]
    fn power_null_cases_equal_alpha() {
        assert_abs_diff_eq!(power_laplace(0.0, 1000, 0.05), 0.05, epsilon = 1e-13);
        assert_abs_diff_eq!(power_bernoulli_normal(1.5, 0.0, 1000, 0.05), 0.05, epsilon = 1e-13);
        assert_abs_diff_eq!(power_bernoulli_normal(1.5, 1.0, 1000, 0.05), 0.05, epsilon = 1e-13);
    }

    #[test]
    fn power_laplace_reference_value() {
        // Closed form at phi2 = 1: shift = sqrt(375)/4, spread = sqrt(1 + 113/16).
        let z = 1.6448536269514722;
        let want = normal_sf((z - 375f64.sqrt() / 4.0) / (1.0 + 113.0 / 16.0f64).sqrt());
        let got = power_laplace(1.0, 1000, 0.05);
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.87, epsilon = 0.01);
    }

    #[test]
    fn power_monotone_in_cells_and_phi2() {
        let mut prev = 0.0;
        for cells in (100..=1000).step_by(100) {
            let p = power_laplace(1.0, cells, 0.05);
            assert!(p >= prev);
            prev = p;
        }
        for pi in [0.1, 0.5, 0.9] {
            let (mut a, mut b) = (0.0, 0.0);
            for i in 0..=40 {
                let phi2 = i as f64 * 0.05;
                let pa = power_laplace(phi2, 400, 0.05);
                let pb = power_bernoulli_normal(phi2, pi, 400, 0.05);
                assert!(pa >= a - 1e-15 && pb >= b - 1e-15, "phi2={phi2} pi={pi}");
                a = pa;
                b = pb;
            }
        }
    }
}
