//! Lasso ANOVA (LANOVA) decompositions for matrices and K-way tensors.
//!
//! The mean of a single noisy array is split into a grand mean, lower-order
//! effects and elementwise interactions. Interactions get a lasso penalty whose
//! rate and noise variance are estimated from the second and fourth moments
//! of the fully centered residuals.
//!
//! ```
//! use lanova::{estimate_nuisance, fit_lanova, DenseTensor, SolverOptions};
//!
//! let y = DenseTensor::from_rows(&[
//!     vec![0.1, -0.3, 0.2, 0.0],
//!     vec![0.4, 0.1, -0.2, 6.0],
//!     vec![-0.2, 0.3, 0.1, -0.1],
//! ])?;
//! let nu = estimate_nuisance(&y)?;
//! let fit = fit_lanova(&y, &nu, &SolverOptions::default())?;
//! assert_eq!(fit.fitted.dims(), y.dims());
//! # Ok::<(), lanova::LanovaError>(())
//! ```

pub mod baselines;
pub mod cli;
pub mod error;
pub mod inference;
pub mod io;
pub mod nuisance;
pub mod report;
pub mod sim;
pub mod solver;
pub mod tensor;

pub use error::{LanovaError, Result};
pub use inference::{heavy_tail_test, power_bernoulli_normal, power_laplace, TestResult};
pub use nuisance::{
    bias_sigma4, estimate_lower_order_variances, estimate_nuisance, kurtosis_correction,
    LowerOrderVariances, NuisanceEstimates,
};
pub use solver::{fit_lanova, fit_lanova_full, objective, soft_threshold, LanovaFit, SolverOptions};
pub use tensor::{anova_decompose, center_residuals, sample_moments, AnovaDecomposition, DenseTensor, ModeSet};
