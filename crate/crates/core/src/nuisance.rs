//! Moment-based empirical Bayes estimates of the interaction and noise variances.
//!
//! Everything here is a function of the fully centered residual tensor `R`,
//! which does not depend on the grand mean or any lower-order effect. The
//! interaction variance is read off the excess fourth moment of `R`: Laplace
//! interactions have excess kurtosis 3 and normal noise has none.

use serde::{Deserialize, Serialize};

use crate::error::{LanovaError, Result};
use crate::tensor::{center_residuals, sample_moments, DenseTensor};

/// Serializes infinite rates as the string `"inf"` so JSON stays lossless.
pub(crate) mod rate_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("invalid rate {s:?}"))),
        }
    }
}

/// `sqrt(2 / variance)`, with `+inf` standing for "shrink everything to zero".
pub fn laplace_rate(variance: f64) -> f64 {
    if variance > 0.0 {
        (2.0 / variance).sqrt()
    } else {
        f64::INFINITY
    }
}

/// Soft threshold `rate * sigma2_z`; an infinite rate always yields `+inf`.
pub fn penalty_threshold(rate: f64, sigma2_z: f64) -> f64 {
    if rate.is_infinite() {
        f64::INFINITY
    } else {
        rate * sigma2_z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuisanceEstimates {
    /// Unclipped fourth-moment estimate; negative values are kept.
    pub sigma4_c_raw: f64,
    pub sigma2_c: f64,
    pub sigma2_z: f64,
    /// Laplace rate of the interactions; `+inf` when `sigma2_c == 0`.
    #[serde(with = "rate_serde")]
    pub lambda_c: f64,
    /// Set when the fourth-moment estimate is not positive.
    pub clipped_c: bool,
    pub clipped_z: bool,
}

impl NuisanceEstimates {
    /// Applies the clipping rules to a raw fourth-moment estimate and the
    /// bias-adjusted total variance.
    fn from_moments(sigma4_c_raw: f64, total_variance: f64) -> Self {
        let clipped_c = sigma4_c_raw <= 0.0;
        let sigma2_c = if clipped_c { 0.0 } else { sigma4_c_raw.sqrt() };
        let z = total_variance - sigma2_c;
        let clipped_z = z < 0.0;
        Self {
            sigma4_c_raw,
            sigma2_c,
            sigma2_z: if clipped_z { 0.0 } else { z },
            lambda_c: laplace_rate(sigma2_c),
            clipped_c,
            clipped_z,
        }
    }

    /// User-supplied variances, e.g. from prior knowledge or a previous fit.
    pub fn from_variances(sigma2_c: f64, sigma2_z: f64) -> Result<Self> {
        if !(sigma2_c >= 0.0 && sigma2_z >= 0.0) {
            return Err(LanovaError::InvalidArgument(format!(
                "variances must be nonnegative, got sigma2_c={sigma2_c}, sigma2_z={sigma2_z}"
            )));
        }
        Ok(Self {
            sigma4_c_raw: sigma2_c * sigma2_c,
            sigma2_c,
            sigma2_z,
            lambda_c: laplace_rate(sigma2_c),
            clipped_c: false,
            clipped_z: false,
        })
    }

    /// The soft threshold applied to each interaction.
    pub fn threshold(&self) -> f64 {
        penalty_threshold(self.lambda_c, self.sigma2_z)
    }
}

/// `prod p_k^3 / ((p_k - 1)(p_k^2 - 3 p_k + 3))`.
pub fn fourth_moment_factor(dims: &[usize]) -> f64 {
    let num: f64 = dims.iter().map(|&p| (p as f64).powi(3)).product();
    let den: f64 = dims
        .iter()
        .map(|&p| {
            let p = p as f64;
            (p - 1.0) * (p * p - 3.0 * p + 3.0)
        })
        .product();
    num / den
}

/// `prod p_k / (p_k - 1)`.
pub fn second_moment_factor(dims: &[usize]) -> f64 {
    let num: f64 = dims.iter().map(|&p| p as f64).product();
    let den: f64 = dims.iter().map(|&p| p as f64 - 1.0).product();
    num / den
}

/// Moment estimates of `sigma^4_c`, `sigma^2_c`, `sigma^2_z` and `lambda_c`.
pub fn estimate_nuisance(y: &DenseTensor) -> Result<NuisanceEstimates> {
    let r = center_residuals(y)?;
    Ok(estimate_from_residuals(&r))
}

/// Same as [`estimate_nuisance`] for an already centered residual tensor.
pub fn estimate_from_residuals(r: &DenseTensor) -> NuisanceEstimates {
    let (m2, m4) = sample_moments(r);
    let sigma4 = fourth_moment_factor(r.dims()) * (m4 / 3.0 - m2 * m2);
    NuisanceEstimates::from_moments(sigma4, second_moment_factor(r.dims()) * m2)
}

/// Expected value of the raw fourth-moment estimate minus `sigma^4_c` under
/// Laplace interactions and normal noise. Never positive.
pub fn bias_sigma4(dims: &[usize], sigma2_c: f64, sigma2_z: f64) -> f64 {
    let prod = |f: &dyn Fn(f64) -> f64| dims.iter().map(|&p| f(p as f64)).product::<f64>();
    let c4 = prod(&|p| (p - 1.0).powi(2)) / prod(&|p| p.powi(3));
    let c2 = prod(&|p| p - 1.0) / prod(&|p| p * p);
    let total = sigma2_c + sigma2_z;
    -fourth_moment_factor(dims) * (3.0 * c4 * sigma2_c * sigma2_c + 2.0 * c2 * total * total)
}

/// Variances of the row and column effects for the two-way model with
/// penalized main effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerOrderVariances {
    pub sigma2_a: f64,
    pub sigma2_b: f64,
    #[serde(with = "rate_serde")]
    pub lambda_a: f64,
    #[serde(with = "rate_serde")]
    pub lambda_b: f64,
    pub clipped_a: bool,
    pub clipped_b: bool,
}

impl LowerOrderVariances {
    /// Clips negative variances to zero and derives the Laplace rates.
    pub fn from_variances(sigma2_a: f64, sigma2_b: f64) -> Self {
        let clip = |v: f64| if v < 0.0 { (0.0, true) } else { (v, false) };
        let (sigma2_a, clipped_a) = clip(sigma2_a);
        let (sigma2_b, clipped_b) = clip(sigma2_b);
        Self {
            sigma2_a,
            sigma2_b,
            lambda_a: laplace_rate(sigma2_a),
            lambda_b: laplace_rate(sigma2_b),
            clipped_a,
            clipped_b,
        }
    }

    /// Explicit rates, bypassing estimation. `0` leaves a block unpenalized.
    pub fn from_rates(lambda_a: f64, lambda_b: f64) -> Self {
        let var = |l: f64| if l.is_infinite() { 0.0 } else if l > 0.0 { 2.0 / (l * l) } else { f64::INFINITY };
        Self {
            sigma2_a: var(lambda_a),
            sigma2_b: var(lambda_b),
            lambda_a,
            lambda_b,
            clipped_a: false,
            clipped_b: false,
        }
    }
}

pub fn estimate_lower_order_variances(y: &DenseTensor) -> Result<LowerOrderVariances> {
    y.require_order(2)?;
    y.check_modes()?;
    let (n, p) = (y.dims()[0], y.dims()[1]);
    let (nf, pf) = (n as f64, p as f64);

    let mut a_check = y.mean_over_mode(1);
    a_check.center_mode(0);
    let mut b_check = y.mean_over_mode(0);
    b_check.center_mode(0);

    let (m2, _) = sample_moments(&center_residuals(y)?);
    let sigma2_a = a_check.sum_sq() / (nf - 1.0) - nf * m2 / ((nf - 1.0) * (pf - 1.0));
    let sigma2_b = b_check.sum_sq() / (pf - 1.0) - pf * m2 / ((nf - 1.0) * (pf - 1.0));
    Ok(LowerOrderVariances::from_variances(sigma2_a, sigma2_b))
}

/// Rescales the estimates for interactions with excess kurtosis `kappa`
/// instead of the Laplace value 3.
pub fn kurtosis_correction(est: &NuisanceEstimates, kappa: f64) -> Result<NuisanceEstimates> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(LanovaError::NormalTailsCorrection(kappa));
    }
    if est.clipped_c {
        return Ok(*est);
    }
    let scale = (3.0 / kappa).sqrt();
    let sigma2_c = scale * est.sigma2_c;
    let sigma2_z = est.sigma2_z - (1.0 - (kappa / 3.0).sqrt()) * scale * est.sigma2_c;
    let clipped_z = est.clipped_z || sigma2_z < 0.0;
    Ok(NuisanceEstimates {
        sigma4_c_raw: sigma2_c * sigma2_c,
        sigma2_c,
        sigma2_z: sigma2_z.max(0.0),
        lambda_c: laplace_rate(sigma2_c),
        clipped_c: false,
        clipped_z,
    })
}

/// Excess kurtosis of a Bernoulli-normal variable that is nonzero with
/// probability `pi_c`.
pub fn bernoulli_normal_kurtosis(pi_c: f64) -> Result<f64> {
    if !(pi_c > 0.0 && pi_c <= 1.0) {
        return Err(LanovaError::InvalidArgument(format!(
            "pi_c must lie in (0, 1], got {pi_c}"
        )));
    }
    Ok(3.0 * (1.0 - pi_c) / pi_c)
}

/// Excess kurtosis of the exponential power distribution with shape `q`.
pub fn exp_power_kurtosis(q: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    (ln_gamma(5.0 / q) + ln_gamma(1.0 / q) - 2.0 * ln_gamma(3.0 / q)).exp() - 3.0
}
