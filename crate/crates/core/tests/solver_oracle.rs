//! Block coordinate descent against a plain coordinate-descent lasso on the
//! explicit design matrix.
//!
//! Fitted means are unique and always compared. Interactions can have flat
//! directions in small instances (for example a row of nonzero interactions
//! with balanced signs), so they are compared only where the lasso solution
//! is certified unique; elsewhere the objective values must agree.

mod common;

use common::*;
use lanova::nuisance::LowerOrderVariances;
use lanova::solver::{fit_lanova_full, objective};
use lanova::{fit_lanova, DenseTensor, LanovaFit, NuisanceEstimates, SolverOptions};
use rand::Rng;

fn tight() -> SolverOptions {
    SolverOptions {
        tol: f64::MIN_POSITIVE,
        max_sweeps: 200_000,
        step_tol: Some(1e-13),
        penalize_lower_order: false,
    }
}

/// Returns whether the instance was certified unique.
fn compare(
    label: &str,
    fit: &LanovaFit,
    y: &DenseTensor,
    design: &Design,
    nu: &NuisanceEstimates,
    lo: Option<&LowerOrderVariances>,
) -> bool {
    assert!(fit.converged, "{label}: solver did not converge");
    assert!(non_increasing(&fit.objective_trace), "{label}: objective increased");
    let beta = lasso_cd(design, y.values(), 2_000_000);
    let fitted = design.apply(&beta);
    let dm = max_abs_diff(fit.fitted.values(), &fitted);
    assert!(dm < 1e-8, "{label}: fitted diff {dm:e}");

    // The oracle objective is the solver objective scaled by sigma2_z.
    let ours = nu.sigma2_z * objective(fit, y, nu, lo).unwrap();
    let theirs = lasso_objective(design, y.values(), &beta);
    assert!((ours - theirs).abs() <= 1e-12 * theirs.abs().max(1.0), "{label}: objective {ours} vs {theirs}");

    let unique = lasso_solution_unique(design, y.values(), &beta);
    if unique {
        let c_oracle = &beta[beta.len() - y.len()..];
        let dc = max_abs_diff(fit.interactions().values(), c_oracle);
        assert!(dc < 1e-8, "{label}: interaction diff {dc:e}");
    }
    unique
}

fn interactions_only(dims: &[usize], seeds: std::ops::Range<u64>) -> usize {
    let mut unique = 0;
    for seed in seeds {
        let mut g = rng(seed);
        let y = random_instance(dims, &mut g);
        let nu = NuisanceEstimates::from_variances(g.random_range(0.3..3.0), g.random_range(0.3..2.0)).unwrap();
        let fit = fit_lanova(&y, &nu, &tight()).unwrap();
        let design = lanova_design(dims, nu.threshold());
        unique += compare(&format!("{dims:?} seed {seed}"), &fit, &y, &design, &nu, None) as usize;
    }
    unique
}

#[test]
fn matrix_fits_match_lasso_oracle() {
    let unique = interactions_only(&[5, 4], 0..20);
    assert!(unique >= 10, "only {unique} of 20 instances certified unique");
}

#[test]
fn three_way_fits_match_lasso_oracle() {
    interactions_only(&[3, 3, 3], 100..110);
}

#[test]
fn penalized_main_effect_fits_match_lasso_oracle() {
    let mut unique = 0;
    for seed in 0..20u64 {
        let mut g = rng(1000 + seed);
        let (n, p) = (6, 5);
        let y = random_instance(&[n, p], &mut g);
        let nu = NuisanceEstimates::from_variances(g.random_range(0.3..3.0), g.random_range(0.3..2.0)).unwrap();
        let lo = LowerOrderVariances::from_variances(g.random_range(0.05..2.0), g.random_range(0.05..2.0));
        let fit = fit_lanova_full(&y, &nu, &lo, &tight()).unwrap();
        let s2 = nu.sigma2_z;
        let design = full_matrix_design(n, p, s2 * lo.lambda_a, s2 * lo.lambda_b, nu.threshold());
        unique += compare(&format!("seed {seed}"), &fit, &y, &design, &nu, Some(&lo)) as usize;
    }
    assert!(unique >= 10, "only {unique} of 20 instances certified unique");
}
