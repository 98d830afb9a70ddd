//! Machine-readable summaries of fits.

use serde::{Deserialize, Serialize};

use crate::inference::TestResult;
use crate::nuisance::{LowerOrderVariances, NuisanceEstimates};
use crate::solver::{FitRoute, LanovaFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    /// 1-based modes indexing the block; empty for the grand mean.
    pub modes: Vec<usize>,
    pub size: usize,
    pub nonzero: usize,
    pub percent_nonzero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub route: FitRoute,
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub dims: Vec<usize>,
    pub nuisance: NuisanceEstimates,
    pub lower_order: Option<LowerOrderVariances>,
    /// Absent when the total variance estimate is zero.
    pub test: Option<TestResult>,
    pub blocks: Vec<BlockSummary>,
    pub solver: SolverSummary,
    /// Estimated interactions in storage order, when requested.
    pub interactions: Option<Vec<f64>>,
}

impl FitReport {
    pub fn new(
        fit: &LanovaFit,
        nuisance: NuisanceEstimates,
        lower_order: Option<LowerOrderVariances>,
        test: Option<TestResult>,
        dump_interactions: bool,
    ) -> Self {
        let blocks = fit
            .decomposition
            .blocks()
            .map(|(modes, block)| {
                let nonzero = fit.nonzero_counts[&modes];
                BlockSummary {
                    modes: modes.labels(),
                    size: block.len(),
                    nonzero,
                    percent_nonzero: 100.0 * nonzero as f64 / block.len() as f64,
                }
            })
            .collect();
        Self {
            dims: fit.fitted.dims().to_vec(),
            nuisance,
            lower_order,
            test,
            blocks,
            solver: SolverSummary {
                route: fit.route,
                iterations: fit.iterations,
                converged: fit.converged,
                final_objective: fit.final_objective(),
            },
            interactions: dump_interactions.then(|| fit.interactions().values().to_vec()),
        }
    }

    pub fn interaction_block(&self) -> &BlockSummary {
        self.blocks
            .iter()
            .max_by_key(|b| b.modes.len())
            .expect("at least the grand mean block")
    }
}
