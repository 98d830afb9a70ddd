//! Comparator estimators of the mean matrix.
//!
//! Every estimator here is the strictly additive fit plus some correction built
//! from the doubly centered residuals. The additive, MLE and low-rank fits keep
//! the grand mean and main effects of the data; soft thresholding does not
//! keep the residuals centered, so the minimax fits can move them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LanovaError, Result};
use crate::solver::soft_threshold;
use crate::tensor::{center_residuals, DenseTensor};

/// How the noise scale fed to the thresholding estimators is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// A known noise standard deviation.
    Known(f64),
    /// Median absolute residual divided by 0.6745.
    Mad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimaxVariant {
    Universal,
    Sure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Additive,
    Mle,
    LowRank(usize),
    MinimaxUniversal,
    MinimaxSure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub noise_scale: NoiseScale,
}

impl BaselineSpec {
    pub fn new(kind: BaselineKind) -> Self {
        Self {
            kind,
            noise_scale: NoiseScale::Mad,
        }
    }

    /// Short name used in study outputs, e.g. `low_rank_5`.
    pub fn name(&self) -> String {
        match self.kind {
            BaselineKind::Additive => "additive".into(),
            BaselineKind::Mle => "mle".into(),
            BaselineKind::LowRank(r) => format!("low_rank_{r}"),
            BaselineKind::MinimaxUniversal => "minimax_universal".into(),
            BaselineKind::MinimaxSure => "minimax_sure".into(),
        }
    }

    pub fn estimate(&self, y: &DenseTensor) -> Result<DenseTensor> {
        match self.kind {
            BaselineKind::Additive => estimate_additive(y),
            BaselineKind::Mle => Ok(estimate_mle(y)),
            BaselineKind::LowRank(r) => estimate_low_rank(y, r),
            BaselineKind::MinimaxUniversal => estimate_minimax(y, MinimaxVariant::Universal, self.noise_scale),
            BaselineKind::MinimaxSure => estimate_minimax(y, MinimaxVariant::Sure, self.noise_scale),
        }
    }
}

fn require_matrix(y: &DenseTensor) -> Result<(usize, usize)> {
    y.require_order(2)?;
    y.check_modes()?;
    Ok((y.dims()[0], y.dims()[1]))
}

/// Grand mean plus row and column effects.
pub fn estimate_additive(y: &DenseTensor) -> Result<DenseTensor> {
    require_matrix(y)?;
    Ok(y.sub(&center_residuals(y)?))
}

/// The data itself.
pub fn estimate_mle(y: &DenseTensor) -> DenseTensor {
    y.clone()
}

fn to_matrix(t: &DenseTensor) -> DMatrix<f64> {
    // Both layouts are column-major with rows as mode 1.
    DMatrix::from_column_slice(t.dims()[0], t.dims()[1], t.values())
}

/// Additive fit plus the best rank-`rank` approximation of the residuals.
pub fn estimate_low_rank(y: &DenseTensor, rank: usize) -> Result<DenseTensor> {
    let (n, p) = require_matrix(y)?;
    let max_rank = (n - 1).min(p - 1);
    if rank > max_rank {
        return Err(LanovaError::InvalidArgument(format!(
            "rank {rank} exceeds min(n-1, p-1) = {max_rank}"
        )));
    }
    let r = center_residuals(y)?;
    let mut m = y.sub(&r);
    if rank == 0 {
        return Ok(m);
    }
    let approx = truncated_svd(&to_matrix(&r), rank);
    for (v, a) in m.values_mut().iter_mut().zip(approx.as_slice()) {
        *v += a;
    }
    Ok(m)
}

/// Sum of the `rank` leading singular triplets of `x`.
pub fn truncated_svd(x: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let svd = x.clone().svd(true, true);
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for &k in order.iter().take(rank) {
        out += svd.singular_values[k] * u.column(k) * vt.row(k);
    }
    out
}

/// Median of `|r|` divided by 0.6745.
pub fn mad_scale(r: &[f64]) -> f64 {
    let mut a: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    if a.is_empty() {
        return 0.0;
    }
    a.sort_by(f64::total_cmp);
    let m = a.len();
    let median = if m % 2 == 1 {
        a[m / 2]
    } else {
        0.5 * (a[m / 2 - 1] + a[m / 2])
    };
    median / 0.6745
}

pub fn universal_threshold(sigma: f64, count: usize) -> f64 {
    sigma * (2.0 * (count as f64).ln()).sqrt()
}

/// Stein's unbiased risk estimate of soft thresholding at `t`.
pub fn sure_risk(r: &[f64], sigma: f64, t: f64) -> f64 {
    let s2 = sigma * sigma;
    let inside = r.iter().filter(|v| v.abs() <= t).count() as f64;
    let clipped: f64 = r.iter().map(|v| (v * v).min(t * t)).sum();
    r.len() as f64 * s2 - 2.0 * s2 * inside + clipped
}

/// Minimizer of [`sure_risk`] over `{0} ∪ {|r_i|}`. Ties go to the smaller
/// threshold.
pub fn sure_threshold(r: &[f64], sigma: f64) -> f64 {
    let mut a: Vec<f64> = r.iter().map(|v| v.abs()).collect();
    a.sort_by(f64::total_cmp);
    let n = a.len() as f64;
    let s2 = sigma * sigma;
    // Scan the sorted magnitudes keeping running sums so each candidate is O(1).
    let mut best_t = 0.0;
    let mut best = n * s2 - 2.0 * s2 * a.iter().filter(|&&v| v == 0.0).count() as f64;
    let mut below_sq = 0.0;
    let mut i = 0;
    while i < a.len() {
        let t = a[i];
        // Include every entry equal to t.
        while i < a.len() && a[i] <= t {
            below_sq += a[i] * a[i];
            i += 1;
        }
        let inside = i as f64;
        let risk = n * s2 - 2.0 * s2 * inside + below_sq + (n - inside) * t * t;
        if risk < best {
            best = risk;
            best_t = t;
        }
    }
    best_t
}

/// Additive fit plus soft-thresholded residuals, treating the residuals as
/// independent.
pub fn estimate_minimax(y: &DenseTensor, variant: MinimaxVariant, scale: NoiseScale) -> Result<DenseTensor> {
    require_matrix(y)?;
    let r = center_residuals(y)?;
    let sigma = match scale {
        NoiseScale::Known(s) => s,
        NoiseScale::Mad => mad_scale(r.values()),
    };
    let t = match variant {
        MinimaxVariant::Universal => universal_threshold(sigma, r.len()),
        MinimaxVariant::Sure => sure_threshold(r.values(), sigma),
    };
    let mut m = y.sub(&r);
    for (v, &res) in m.values_mut().iter_mut().zip(r.values()) {
        *v += soft_threshold(res, t);
    }
    Ok(m)
}
