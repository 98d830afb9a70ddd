//! Block coordinate descent for the lasso-penalized ANOVA objective
//!
//! ```text
//! (1 / 2 sigma2_z) ||Y - M||^2 + lambda_c ||C||_1 [+ lambda_a ||a||_1 + lambda_b ||b||_1]
//! ```
//!
//! where `M` is the broadcast sum of the ANOVA blocks. Each sweep refits the
//! lower-order blocks given the current interactions and then soft-thresholds
//! the partial residual to update the interactions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LanovaError, Result};
use crate::nuisance::{penalty_threshold, LowerOrderVariances, NuisanceEstimates};
use crate::tensor::{anova_decompose, center_residuals, AnovaDecomposition, DenseTensor, ModeSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the relative decrease of the objective falls below this.
    pub tol: f64,
    pub max_sweeps: usize,
    /// When set, also require that no fitted effect moved by more than this in
    /// the last sweep. Near the optimum the objective changes quadratically in
    /// the iterates, so this is the way to resolve them beyond about 1e-8.
    #[serde(default)]
    pub step_tol: Option<f64>,
    /// Penalize row and column effects as well (matrices only).
    pub penalize_lower_order: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 500,
            step_tol: None,
            penalize_lower_order: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if matches!(self.step_tol, Some(s) if !(s >= 0.0)) {
            return Err(LanovaError::InvalidArgument(format!(
                "step_tol must be nonnegative, got {:?}",
                self.step_tol
            )));
        }
        if !(self.tol > 0.0) || self.max_sweeps == 0 {
            return Err(LanovaError::InvalidArgument(format!(
                "solver needs tol > 0 and max_sweeps >= 1, got tol={} max_sweeps={}",
                self.tol, self.max_sweeps
            )));
        }
        Ok(())
    }
}

/// Which branch produced the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRoute {
    /// Block coordinate descent ran.
    Penalized,
    /// Interaction variance estimate was not positive: strictly additive fit.
    Additive,
    /// Noise variance estimate was zero: the fit reproduces the data.
    Mle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanovaFit {
    /// Fitted blocks; the top block holds the estimated interactions.
    pub decomposition: AnovaDecomposition,
    pub fitted: DenseTensor,
    pub nonzero_counts: BTreeMap<ModeSet, usize>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub route: FitRoute,
}

impl LanovaFit {
    fn new(
        decomposition: AnovaDecomposition,
        objective_trace: Vec<f64>,
        converged: bool,
        route: FitRoute,
    ) -> Self {
        let nonzero_counts = decomposition
            .blocks()
            .map(|(m, b)| (m, b.count_nonzero()))
            .collect();
        Self {
            fitted: decomposition.reassemble(),
            iterations: objective_trace.len(),
            decomposition,
            nonzero_counts,
            objective_trace,
            converged,
            route,
        }
    }

    pub fn interactions(&self) -> &DenseTensor {
        self.decomposition.top()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }
}

/// `sign(x) * max(|x| - t, 0)`.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn soft_threshold_tensor(x: &DenseTensor, t: f64) -> DenseTensor {
    x.map(|v| soft_threshold(v, t))
}

/// `rate * l1`, reading an infinite rate on an all-zero block as no penalty.
fn penalty(rate: f64, l1: f64) -> f64 {
    if l1 == 0.0 {
        0.0
    } else {
        rate * l1
    }
}

/// Least-squares fit of all lower-order blocks: `x` minus its centered part.
fn lower_order_fit(x: &DenseTensor) -> DenseTensor {
    let mut r = x.clone();
    for mode in 0..r.order() {
        r.center_mode(mode);
    }
    x.sub(&r)
}

/// Splits `lower + interactions` into blocks, putting the zero-sum ANOVA of
/// `lower` in the lower blocks and `interactions` in the top block.
fn assemble(lower: &DenseTensor, interactions: DenseTensor) -> Result<AnovaDecomposition> {
    let mut d = anova_decompose(lower)?;
    let top = ModeSet::full(lower.order());
    *d.effect_mut(top) = interactions;
    Ok(d)
}

fn additive_fit(y: &DenseTensor) -> Result<LanovaFit> {
    let mut d = anova_decompose(y)?;
    let top = ModeSet::full(y.order());
    *d.effect_mut(top) = DenseTensor::zeros(y.dims());
    Ok(LanovaFit::new(d, Vec::new(), true, FitRoute::Additive))
}

fn mle_fit(y: &DenseTensor) -> Result<LanovaFit> {
    Ok(LanovaFit::new(anova_decompose(y)?, Vec::new(), true, FitRoute::Mle))
}

fn rel_decrease(prev: f64, next: f64) -> f64 {
    (prev - next) / prev.abs().max(f64::MIN_POSITIVE)
}

fn settled(opts: &SolverOptions, prev: Option<f64>, obj: f64, step: f64) -> bool {
    prev.is_some_and(|p| rel_decrease(p, obj) < opts.tol) && opts.step_tol.is_none_or(|s| step <= s)
}

/// Fits `Y = mu + lower-order effects + C + Z` with only `C` penalized.
pub fn fit_lanova(y: &DenseTensor, nu: &NuisanceEstimates, opts: &SolverOptions) -> Result<LanovaFit> {
    opts.validate()?;
    y.check_finite()?;
    y.check_modes()?;

    let t = nu.threshold();
    if nu.clipped_c || t.is_infinite() {
        return additive_fit(y);
    }
    if nu.clipped_z || nu.sigma2_z == 0.0 {
        return mle_fit(y);
    }

    let scale = 0.5 / nu.sigma2_z;
    let mut c = center_residuals(y)?;
    let mut lower = lower_order_fit(&y.sub(&c));
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        let partial = y.sub(&lower);
        let next = soft_threshold_tensor(&partial, t);
        let step = next.max_abs_diff(&c);
        c = next;
        lower = lower_order_fit(&y.sub(&c));
        let resid = y.sub(&lower).sub(&c);
        let obj = scale * resid.sum_sq() + penalty(nu.lambda_c, c.sum_abs());
        let done = settled(opts, trace.last().copied(), obj, step);
        trace.push(obj);
        if done {
            converged = true;
            break;
        }
    }
    Ok(LanovaFit::new(assemble(&lower, c)?, trace, converged, FitRoute::Penalized))
}

/// Fits the two-way model with lasso penalties on the row effects, the column
/// effects and the interactions. The grand mean stays unpenalized.
pub fn fit_lanova_full(
    y: &DenseTensor,
    nu: &NuisanceEstimates,
    lo: &LowerOrderVariances,
    opts: &SolverOptions,
) -> Result<LanovaFit> {
    opts.validate()?;
    y.require_order(2)?;
    y.check_finite()?;
    y.check_modes()?;

    if nu.clipped_z || nu.sigma2_z == 0.0 {
        return mle_fit(y);
    }

    let (n, p) = (y.dims()[0], y.dims()[1]);
    let sigma2_z = nu.sigma2_z;
    let t_c = if nu.clipped_c { f64::INFINITY } else { nu.threshold() };
    // Each row effect touches p cells and each column effect n cells.
    let t_a = penalty_threshold(lo.lambda_a, sigma2_z) / p as f64;
    let t_b = penalty_threshold(lo.lambda_b, sigma2_z) / n as f64;
    let lambda_c = if nu.clipped_c { f64::INFINITY } else { nu.lambda_c };

    let mut c = if t_c.is_infinite() {
        DenseTensor::zeros(y.dims())
    } else {
        center_residuals(y)?
    };
    let mut mu = 0.0;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; p];

    let update_lower = |c: &DenseTensor, mu: &mut f64, a: &mut [f64], b: &mut [f64]| {
        let mut s = 0.0;
        for j in 0..p {
            for i in 0..n {
                s += y.at(i, j) - a[i] - b[j] - c.at(i, j);
            }
        }
        *mu = s / (n * p) as f64;
        for (i, ai) in a.iter_mut().enumerate() {
            let m = (0..p).map(|j| y.at(i, j) - *mu - b[j] - c.at(i, j)).sum::<f64>() / p as f64;
            *ai = soft_threshold(m, t_a);
        }
        for (j, bj) in b.iter_mut().enumerate() {
            let m = (0..n).map(|i| y.at(i, j) - *mu - a[i] - c.at(i, j)).sum::<f64>() / n as f64;
            *bj = soft_threshold(m, t_b);
        }
    };
    let lower_tensor = |mu: f64, a: &[f64], b: &[f64]| {
        DenseTensor::from_fn(&[n, p], |ix| mu + a[ix[0]] + b[ix[1]])
    };

    update_lower(&c, &mut mu, &mut a, &mut b);
    let scale = 0.5 / sigma2_z;
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        let before = lower_tensor(mu, &a, &b);
        let next = soft_threshold_tensor(&y.sub(&before), t_c);
        let mut step = next.max_abs_diff(&c);
        c = next;
        update_lower(&c, &mut mu, &mut a, &mut b);
        let after = lower_tensor(mu, &a, &b);
        step = step.max(after.max_abs_diff(&before));
        let resid = y.sub(&after).sub(&c);
        let obj = scale * resid.sum_sq()
            + penalty(lambda_c, c.sum_abs())
            + penalty(lo.lambda_a, l1(&a))
            + penalty(lo.lambda_b, l1(&b));
        let done = settled(opts, trace.last().copied(), obj, step);
        trace.push(obj);
        if done {
            converged = true;
            break;
        }
    }

    let blocks = vec![
        DenseTensor::scalar(mu),
        DenseTensor::new(vec![n], a)?,
        DenseTensor::new(vec![p], b)?,
        c,
    ];
    let d = AnovaDecomposition::from_blocks(&[n, p], blocks)?;
    Ok(LanovaFit::new(d, trace, converged, FitRoute::Penalized))
}

/// Runs [`fit_lanova_full`] when `opts.penalize_lower_order` is set and
/// [`fit_lanova`] otherwise.
pub fn fit_with_options(
    y: &DenseTensor,
    nu: &NuisanceEstimates,
    lo: Option<&LowerOrderVariances>,
    opts: &SolverOptions,
) -> Result<LanovaFit> {
    if opts.penalize_lower_order {
        let lo = lo.ok_or_else(|| {
            LanovaError::InvalidArgument("penalized main effects need lower-order variances".into())
        })?;
        fit_lanova_full(y, nu, lo, opts)
    } else {
        fit_lanova(y, nu, opts)
    }
}

/// The penalized objective evaluated at a fit. Main-effect penalties are
/// included when `lo` is given.
pub fn objective(
    fit: &LanovaFit,
    y: &DenseTensor,
    nu: &NuisanceEstimates,
    lo: Option<&LowerOrderVariances>,
) -> Result<f64> {
    if !(nu.sigma2_z > 0.0) {
        return Err(LanovaError::DegenerateObjective);
    }
    let d = &fit.decomposition;
    let mut obj = 0.5 / nu.sigma2_z * y.sub(&fit.fitted).sum_sq()
        + penalty(nu.lambda_c, d.top().sum_abs());
    if let Some(lo) = lo {
        obj += penalty(lo.lambda_a, d.effect(ModeSet(0b01)).sum_abs());
        obj += penalty(lo.lambda_b, d.effect(ModeSet(0b10)).sum_abs());
    }
    Ok(obj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nuisance::estimate_nuisance;

    fn matrix(n: usize, p: usize, seed: u64) -> DenseTensor {
        // Cheap deterministic pseudo-data with a few large cells.
        let mut s = seed;
        DenseTensor::from_fn(&[n, p], |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (s >> 11) as f64 / (1u64 << 53) as f64;
            let v = (u - 0.5) * 2.0;
            if u > 0.9 {
                v * 8.0
            } else {
                v
            }
        })
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
        assert_eq!(soft_threshold(5.0, f64::INFINITY), 0.0);
    }

    #[test]
    fn zero_noise_reproduces_data() {
        let y = matrix(5, 4, 1);
        let nu = NuisanceEstimates::from_variances(1.0, 0.0).unwrap();
        let fit = fit_lanova(&y, &nu, &SolverOptions::default()).unwrap();
        assert_eq!(fit.route, FitRoute::Mle);
        assert!(fit.fitted.max_abs_diff(&y) < 1e-12);
        assert!(fit.interactions().max_abs_diff(&center_residuals(&y).unwrap()) < 1e-15);
    }

    #[test]
    fn huge_threshold_gives_additive_fit() {
        let y = matrix(5, 4, 2);
        let r = center_residuals(&y).unwrap();
        // lambda * sigma2_z = sqrt(2 / s2c) * s2z exceeds max |r|.
        let s2z = r.max_abs() * 10.0;
        let nu = NuisanceEstimates::from_variances(2.0, s2z).unwrap();
        let fit = fit_lanova(&y, &nu, &SolverOptions::default()).unwrap();
        assert_eq!(fit.route, FitRoute::Penalized);
        assert_eq!(fit.interactions().count_nonzero(), 0);
        assert!(fit.fitted.max_abs_diff(&y.sub(&r)) < 1e-12);
    }

    #[test]
    fn clipped_c_routes_to_additive() {
        let y = DenseTensor::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let nu = estimate_nuisance(&y).unwrap();
        let fit = fit_lanova(&y, &nu, &SolverOptions::default()).unwrap();
        assert_eq!(fit.route, FitRoute::Additive);
        assert_eq!(fit.fitted.max_abs(), 0.0);
    }

    #[test]
    fn objective_examples() {
        let y = matrix(3, 3, 3);
        let nu = NuisanceEstimates::from_variances(2.0, 0.7).unwrap();
        let fit = mle_fit(&y).unwrap();
        let mut zero_c = fit.clone();
        *zero_c.decomposition.effect_mut(ModeSet(0b11)) = DenseTensor::zeros(&[3, 3]);
        zero_c.fitted = y.clone();
        assert_eq!(objective(&zero_c, &y, &nu, None).unwrap(), 0.0);

        let mut one = zero_c.clone();
        let mut c = DenseTensor::zeros(&[3, 3]);
        c.set(&[1, 2], 2.0);
        *one.decomposition.effect_mut(ModeSet(0b11)) = c;
        assert!((objective(&one, &y, &nu, None).unwrap() - 2.0).abs() < 1e-15);

        let nu0 = NuisanceEstimates::from_variances(2.0, 0.0).unwrap();
        assert!(matches!(
            objective(&one, &y, &nu0, None),
            Err(LanovaError::DegenerateObjective)
        ));
    }

    #[test]
    fn solution_beats_additive_start() {
        let y = matrix(6, 5, 4);
        let nu = NuisanceEstimates::from_variances(1.0, 0.5).unwrap();
        let fit = fit_lanova(&y, &nu, &SolverOptions::default()).unwrap();
        let start = additive_fit(&y).unwrap();
        let a = objective(&fit, &y, &nu, None).unwrap();
        let b = objective(&start, &y, &nu, None).unwrap();
        assert!(a <= b, "{a} > {b}");
        assert!(fit.converged);
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut y = matrix(3, 3, 5);
        y.values_mut()[4] = f64::NAN;
        let nu = NuisanceEstimates::from_variances(1.0, 1.0).unwrap();
        assert!(matches!(
            fit_lanova(&y, &nu, &SolverOptions::default()),
            Err(LanovaError::NonFinite { index: 4 })
        ));
    }

    #[test]
    fn invalid_options_rejected() {
        let y = matrix(3, 3, 6);
        let nu = NuisanceEstimates::from_variances(1.0, 1.0).unwrap();
        let opts = SolverOptions { tol: 0.0, ..Default::default() };
        assert!(fit_lanova(&y, &nu, &opts).is_err());
    }

    #[test]
    fn full_with_zero_rates_matches_plain_fit() {
        let y = matrix(6, 5, 7);
        let nu = NuisanceEstimates::from_variances(1.0, 0.5).unwrap();
        let opts = SolverOptions::default();
        let plain = fit_lanova(&y, &nu, &opts).unwrap();
        let full = fit_lanova_full(&y, &nu, &LowerOrderVariances::from_rates(0.0, 0.0), &opts).unwrap();
        assert!(plain.fitted.max_abs_diff(&full.fitted) < 1e-12);
        assert!(plain.interactions().max_abs_diff(full.interactions()) < 1e-12);
    }

    #[test]
    fn full_with_infinite_rates_drops_main_effects() {
        let y = matrix(6, 5, 8);
        let nu = NuisanceEstimates::from_variances(1.0, 0.5).unwrap();
        let lo = LowerOrderVariances::from_rates(f64::INFINITY, f64::INFINITY);
        let opts = SolverOptions {
            tol: 1e-15,
            max_sweeps: 20_000,
            ..SolverOptions::default()
        };
        let fit = fit_lanova_full(&y, &nu, &lo, &opts).unwrap();
        assert_eq!(fit.nonzero_counts[&ModeSet(0b01)], 0);
        assert_eq!(fit.nonzero_counts[&ModeSet(0b10)], 0);
        // With no main effects, the interactions soft-threshold Y - mu.
        let mu = fit.decomposition.grand_mean();
        let t = nu.threshold();
        let want = y.map(|v| soft_threshold(v - mu, t));
        let diff = fit.interactions().max_abs_diff(&want);
        assert!(diff < 1e-8, "{diff}");
    }
}
