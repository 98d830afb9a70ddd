//! Reproducible data generation and Monte Carlo studies.
//!
//! Replicate `rep` of a study draws from its own ChaCha8 stream, keyed by
//! `(seed, rep)`, so results do not depend on thread count or scheduling.
//! Per-replicate values are collected in order and reduced sequentially.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::baselines::BaselineSpec;
use crate::error::{LanovaError, Result};
use crate::inference::test_from_estimates;
use crate::nuisance::{estimate_nuisance, exp_power_kurtosis};
use crate::solver::{fit_lanova, SolverOptions};
use crate::tensor::DenseTensor;

/// Distribution of the interaction entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionDist {
    Laplace { sigma2_c: f64 },
    ExpPower { sigma2_c: f64, q_c: f64 },
    BernoulliNormal { pi_c: f64, tau2_c: f64 },
    Normal { sigma2_c: f64 },
}

impl InteractionDist {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Laplace { sigma2_c } | Self::Normal { sigma2_c } => sigma2_c >= 0.0,
            Self::ExpPower { sigma2_c, q_c } => sigma2_c >= 0.0 && q_c > 0.0,
            Self::BernoulliNormal { pi_c, tau2_c } => (0.0..=1.0).contains(&pi_c) && tau2_c >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(LanovaError::InvalidArgument(format!("invalid interaction distribution {self:?}")))
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Laplace { sigma2_c } | Self::Normal { sigma2_c } | Self::ExpPower { sigma2_c, .. } => sigma2_c,
            Self::BernoulliNormal { pi_c, tau2_c } => pi_c * tau2_c,
        }
    }

    /// Excess kurtosis; `None` when undefined (identically zero entries).
    pub fn excess_kurtosis(&self) -> Option<f64> {
        match *self {
            Self::Laplace { .. } => Some(3.0),
            Self::Normal { .. } => Some(0.0),
            Self::ExpPower { q_c, .. } => Some(exp_power_kurtosis(q_c)),
            Self::BernoulliNormal { pi_c, .. } if pi_c > 0.0 => Some(3.0 * (1.0 - pi_c) / pi_c),
            Self::BernoulliNormal { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Laplace { sigma2_c } => {
                let e: f64 = Exp1.sample(rng);
                let scale = (sigma2_c / 2.0).sqrt();
                if rng.random::<bool>() {
                    scale * e
                } else {
                    -scale * e
                }
            }
            Self::Normal { sigma2_c } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma2_c.sqrt() * z
            }
            Self::ExpPower { sigma2_c, q_c } => {
                // |x| = G^(1/q) with G ~ Gamma(1/q, 1) has density prop. to exp(-|x|^q)
                // and second moment Gamma(3/q) / Gamma(1/q).
                let g: f64 = Gamma::new(1.0 / q_c, 1.0).expect("positive shape").sample(rng);
                let second = (ln_gamma(3.0 / q_c) - ln_gamma(1.0 / q_c)).exp();
                let mag = g.powf(1.0 / q_c) * (sigma2_c / second).sqrt();
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
            Self::BernoulliNormal { pi_c, tau2_c } => {
                if rng.random::<f64>() < pi_c {
                    let z: f64 = StandardNormal.sample(rng);
                    tau2_c.sqrt() * z
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Lanova,
    Baseline(BaselineSpec),
}

impl EstimatorSpec {
    pub fn name(&self) -> String {
        match self {
            Self::Lanova => "lanova".into(),
            Self::Baseline(b) => b.name(),
        }
    }

    pub fn estimate(&self, y: &DenseTensor) -> Result<DenseTensor> {
        match self {
            Self::Lanova => {
                let nu = estimate_nuisance(y)?;
                Ok(fit_lanova(y, &nu, &SolverOptions::default())?.fitted)
            }
            Self::Baseline(b) => b.estimate(y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dims: Vec<usize>,
    pub dist: InteractionDist,
    pub sigma2_z: f64,
    pub n_reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub estimators: Vec<EstimatorSpec>,
}

impl SimConfig {
    pub fn new(dims: &[usize], dist: InteractionDist, n_reps: usize, seed: u64) -> Self {
        Self {
            dims: dims.to_vec(),
            dist,
            sigma2_z: 1.0,
            n_reps,
            seed,
            alpha: 0.05,
            estimators: vec![EstimatorSpec::Lanova],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if self.n_reps == 0 || !(self.sigma2_z >= 0.0) || self.dims.iter().any(|&p| p < 2) {
            return Err(LanovaError::InvalidArgument(format!(
                "invalid simulation config: dims={:?} n_reps={} sigma2_z={}",
                self.dims, self.n_reps, self.sigma2_z
            )));
        }
        Ok(())
    }
}

/// Independent stream for replicate `rep`.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: DenseTensor,
    /// True mean; equals the interactions since all lower-order effects are zero.
    pub mean: DenseTensor,
    pub interactions: DenseTensor,
}

pub fn generate_dataset(cfg: &SimConfig, rep: u64) -> Dataset {
    let mut rng = replicate_rng(cfg.seed, rep);
    let sigma_z = cfg.sigma2_z.sqrt();
    let len: usize = cfg.dims.iter().product();
    let mut c = Vec::with_capacity(len);
    let mut y = Vec::with_capacity(len);
    for _ in 0..len {
        let ci = cfg.dist.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        c.push(ci);
        y.push(ci + sigma_z * z);
    }
    let interactions = DenseTensor::new(cfg.dims.clone(), c).expect("consistent dims");
    Dataset {
        y: DenseTensor::new(cfg.dims.clone(), y).expect("consistent dims"),
        mean: interactions.clone(),
        interactions,
    }
}

fn run_reps<T: Send>(cfg: &SimConfig, f: impl Fn(Dataset) -> Result<T> + Sync) -> Result<Vec<T>> {
    cfg.validate()?;
    (0..cfg.n_reps as u64)
        .into_par_iter()
        .map(|rep| f(generate_dataset(cfg, rep)))
        .collect()
}

/// A Monte Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub count: usize,
    pub trials: usize,
    pub rate: f64,
    pub se: f64,
}

impl Proportion {
    pub fn from_flags(flags: impl Iterator<Item = bool>) -> Self {
        let (count, trials) = flags.fold((0, 0), |(c, t), f| (c + f as usize, t + 1));
        let rate = count as f64 / trials as f64;
        Self {
            count,
            trials,
            rate,
            se: (rate * (1.0 - rate) / trials as f64).sqrt(),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / nf).sqrt(),
            n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialCaseRates {
    /// Fraction of replicates with a non-positive interaction variance estimate.
    pub additive: Proportion,
    /// Fraction of replicates where the noise variance estimate was clipped.
    pub noise_clipped: Proportion,
}

pub fn special_case_rate_study(cfg: &SimConfig) -> Result<SpecialCaseRates> {
    let flags = run_reps(cfg, |d| {
        let est = estimate_nuisance(&d.y)?;
        Ok((est.sigma2_c <= 0.0, est.clipped_z))
    })?;
    Ok(SpecialCaseRates {
        additive: Proportion::from_flags(flags.iter().map(|f| f.0)),
        noise_clipped: Proportion::from_flags(flags.iter().map(|f| f.1)),
    })
}

/// Rejection rate of the heavy-tail test at level `cfg.alpha`.
pub fn rejection_rate_study(cfg: &SimConfig) -> Result<Proportion> {
    let flags = run_reps(cfg, |d| {
        let est = estimate_nuisance(&d.y)?;
        Ok(test_from_estimates(&est, d.y.len(), cfg.alpha)?.reject)
    })?;
    Ok(Proportion::from_flags(flags.into_iter()))
}

/// Empirical level of the heavy-tail test. Requires normal interactions.
pub fn test_calibration_study(cfg: &SimConfig) -> Result<Proportion> {
    match cfg.dist {
        InteractionDist::Normal { .. } => rejection_rate_study(cfg),
        InteractionDist::BernoulliNormal { pi_c, .. } if pi_c == 0.0 || pi_c == 1.0 => rejection_rate_study(cfg),
        InteractionDist::ExpPower { q_c, .. } if q_c == 2.0 => rejection_rate_study(cfg),
        other => Err(LanovaError::InvalidArgument(format!(
            "calibration needs normal interactions, got {other:?}"
        ))),
    }
}

/// Monte Carlo mean of the raw fourth-moment estimate.
pub fn bias_study(cfg: &SimConfig) -> Result<MeanEstimate> {
    let values = run_reps(cfg, |d| Ok(estimate_nuisance(&d.y)?.sigma4_c_raw))?;
    Ok(MeanEstimate::from_values(&values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecificationSummary {
    /// Per-replicate ratio of the estimated to the true interaction variance.
    pub ratios: Vec<f64>,
    pub median_ratio: f64,
    /// Limit predicted from the excess kurtosis, `sqrt(kappa / 3)`.
    pub predicted_ratio: f64,
    pub noise_estimates: MeanEstimate,
}

pub fn misspecification_study(cfg: &SimConfig) -> Result<MisspecificationSummary> {
    let var = cfg.dist.variance();
    let kappa = cfg.dist.excess_kurtosis().ok_or_else(|| {
        LanovaError::InvalidArgument("excess kurtosis undefined for this distribution".into())
    })?;
    if !(var > 0.0) {
        return Err(LanovaError::InvalidArgument("interaction variance must be positive".into()));
    }
    let pairs = run_reps(cfg, |d| {
        let est = estimate_nuisance(&d.y)?;
        Ok((est.sigma2_c / var, est.sigma2_z))
    })?;
    let ratios: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let z: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(MisspecificationSummary {
        median_ratio: median(&ratios),
        ratios,
        predicted_ratio: (kappa / 3.0).sqrt(),
        noise_estimates: MeanEstimate::from_values(&z),
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub estimator: String,
    /// Mean over replicates of `||M_hat - M||^2 / cells`.
    pub mse: f64,
    pub se: f64,
    /// `ln(mse / mse_lanova)`.
    pub log_relative_risk: f64,
    /// Standard error of the paired per-replicate difference `mse - mse_lanova`.
    pub paired_diff_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub dist: InteractionDist,
    pub dims: Vec<usize>,
    pub n_reps: usize,
    pub rows: Vec<RiskRow>,
}

impl RiskTable {
    pub fn row(&self, estimator: &str) -> Option<&RiskRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }
}

pub fn risk_study(cfg: &SimConfig) -> Result<RiskTable> {
    let lanova_pos = cfg
        .estimators
        .iter()
        .position(|e| matches!(e, EstimatorSpec::Lanova))
        .ok_or_else(|| LanovaError::InvalidArgument("risk study needs the lanova estimator".into()))?;
    let losses = run_reps(cfg, |d| {
        let cells = d.mean.len() as f64;
        cfg.estimators
            .iter()
            .map(|e| Ok(e.estimate(&d.y)?.sub(&d.mean).sum_sq() / cells))
            .collect::<Result<Vec<f64>>>()
    })?;
    let lanova: Vec<f64> = losses.iter().map(|l| l[lanova_pos]).collect();
    let lanova_mse = MeanEstimate::from_values(&lanova).mean;
    let rows = cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let col: Vec<f64> = losses.iter().map(|l| l[k]).collect();
            let diff: Vec<f64> = col.iter().zip(&lanova).map(|(a, b)| a - b).collect();
            let m = MeanEstimate::from_values(&col);
            RiskRow {
                estimator: e.name(),
                mse: m.mean,
                se: m.se,
                log_relative_risk: (m.mean / lanova_mse).ln(),
                paired_diff_se: MeanEstimate::from_values(&diff).se,
            }
        })
        .collect();
    Ok(RiskTable {
        dist: cfg.dist,
        dims: cfg.dims.clone(),
        n_reps: cfg.n_reps,
        rows,
    })
}

/// The comparison estimators of the risk study: MLE, additive, rank-1 and
/// rank-5 additive-plus-low-rank, and the two minimax thresholding rules.
pub fn default_estimators() -> Vec<EstimatorSpec> {
    use crate::baselines::BaselineKind::*;
    let mut v = vec![EstimatorSpec::Lanova];
    for kind in [Mle, Additive, LowRank(1), LowRank(5), MinimaxUniversal, MinimaxSure] {
        v.push(EstimatorSpec::Baseline(BaselineSpec::new(kind)));
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskGrid {
    ExpPower,
    BernoulliNormal,
}

impl RiskGrid {
    /// Grid points: `q_c` in 0.1..1.9 with `sigma2_c` in {1/2, 1, 2}, or `pi_c`
    /// in 0, 0.1, .., 1 with `tau2_c` in {1/2, 1, 2}.
    pub fn points(self) -> Vec<InteractionDist> {
        let scales = [0.5, 1.0, 2.0];
        match self {
            RiskGrid::ExpPower => scales
                .iter()
                .flat_map(|&s| (1..=19).map(move |k| InteractionDist::ExpPower { sigma2_c: s, q_c: k as f64 / 10.0 }))
                .collect(),
            RiskGrid::BernoulliNormal => scales
                .iter()
                .flat_map(|&t| (0..=10).map(move |k| InteractionDist::BernoulliNormal { pi_c: k as f64 / 10.0, tau2_c: t }))
                .collect(),
        }
    }
}

/// Runs [`risk_study`] at every point of `grid`, reusing the rest of `base`.
/// Each point gets its own seed derived from `base.seed` and its grid index.
pub fn risk_grid_study(base: &SimConfig, grid: RiskGrid) -> Result<Vec<RiskTable>> {
    grid.points()
        .into_iter()
        .enumerate()
        .map(|(i, dist)| {
            let cfg = SimConfig {
                dist,
                seed: base.seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                ..base.clone()
            };
            risk_study(&cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_zero_gives_zero_interactions() {
        let cfg = SimConfig::new(&[5, 4], InteractionDist::BernoulliNormal { pi_c: 0.0, tau2_c: 2.0 }, 1, 3);
        let d = generate_dataset(&cfg, 0);
        assert_eq!(d.interactions.max_abs(), 0.0);
        assert!(d.y.max_abs() > 0.0);
    }

    #[test]
    fn same_seed_and_rep_is_identical() {
        let cfg = SimConfig::new(&[6, 3, 2], InteractionDist::ExpPower { sigma2_c: 1.0, q_c: 0.7 }, 1, 99);
        assert_eq!(generate_dataset(&cfg, 4), generate_dataset(&cfg, 4));
        assert_ne!(generate_dataset(&cfg, 4).y, generate_dataset(&cfg, 5).y);
    }

    #[test]
    fn laplace_moments() {
        let dist = InteractionDist::Laplace { sigma2_c: 1.0 };
        let mut rng = replicate_rng(7, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        assert!((m2 - 1.0).abs() < 0.01, "variance {m2}");
        assert!((m4 / (m2 * m2) - 6.0).abs() < 0.1, "excess kurtosis {}", m4 / (m2 * m2) - 3.0);
    }

    #[test]
    fn exp_power_moments() {
        for q in [0.5, 1.0, 1.5, 2.0] {
            let dist = InteractionDist::ExpPower { sigma2_c: 2.0, q_c: q };
            let mut rng = replicate_rng(11, 0);
            let n = 400_000;
            let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            assert!((m2 / 2.0 - 1.0).abs() < 0.03, "q={q} variance {m2}");
            if q >= 1.0 {
                let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
                let k = m4 / (m2 * m2) - 3.0;
                assert!((k - exp_power_kurtosis(q)).abs() < 0.15, "q={q} kurtosis {k}");
            }
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(RiskGrid::ExpPower.points().len(), 57);
        assert_eq!(RiskGrid::BernoulliNormal.points().len(), 33);
    }

    #[test]
    fn calibration_rejects_heavy_tails() {
        let cfg = SimConfig::new(&[5, 5], InteractionDist::Laplace { sigma2_c: 1.0 }, 3, 1);
        assert!(test_calibration_study(&cfg).is_err());
    }

    #[test]
    fn risk_study_requires_lanova() {
        let mut cfg = SimConfig::new(&[5, 5], InteractionDist::Laplace { sigma2_c: 1.0 }, 3, 1);
        cfg.estimators = vec![];
        assert!(risk_study(&cfg).is_err());
    }
}
