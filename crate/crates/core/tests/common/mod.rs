#![allow(dead_code)]

use lanova::sim::InteractionDist;
use lanova::tensor::ModeSet;
use lanova::DenseTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Dense design matrix stored column by column.
pub struct Design {
    pub rows: usize,
    pub columns: Vec<Vec<f64>>,
    /// Penalty weight per column; 0 leaves the column unpenalized.
    pub weights: Vec<f64>,
}

impl Design {
    pub fn new(rows: usize) -> Self {
        Self { rows, columns: Vec::new(), weights: Vec::new() }
    }

    pub fn push(&mut self, column: Vec<f64>, weight: f64) {
        assert_eq!(column.len(), self.rows);
        self.columns.push(column);
        self.weights.push(weight);
    }

    pub fn apply(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (col, &b) in self.columns.iter().zip(beta) {
            for (o, &x) in out.iter_mut().zip(col) {
                *o += b * x;
            }
        }
        out
    }
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Minimizes `||y - X beta||^2 / 2 + sum_j w_j |beta_j|` by cyclic coordinate
/// descent, running until no coordinate moves by more than `1e-15` or the
/// sweep budget is spent.
pub fn lasso_cd(design: &Design, y: &[f64], max_sweeps: usize) -> Vec<f64> {
    let k = design.columns.len();
    let norms: Vec<f64> = design.columns.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut beta = vec![0.0; k];
    let mut r = y.to_vec();
    for _ in 0..max_sweeps {
        let mut moved: f64 = 0.0;
        for j in 0..k {
            let col = &design.columns[j];
            let rho: f64 = col.iter().zip(&r).map(|(x, r)| x * r).sum::<f64>() + norms[j] * beta[j];
            let new = soft(rho, design.weights[j]) / norms[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                for (ri, &x) in r.iter_mut().zip(col) {
                    *ri -= delta * x;
                }
                beta[j] = new;
                moved = moved.max(delta.abs());
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    beta
}

/// Indicator of level `level` along `mode`, in storage order.
fn indicator(dims: &[usize], mode: usize, level: usize) -> Vec<f64> {
    DenseTensor::from_fn(dims, |ix| if ix[mode] == level { 1.0 } else { 0.0 }).into_values()
}

/// Unpenalized reference-coded columns spanning every lower-order block, then
/// one penalized identity column per cell with weight `cell_weight`.
pub fn lanova_design(dims: &[usize], cell_weight: f64) -> Design {
    let cells: usize = dims.iter().product();
    let k = dims.len();
    let mut d = Design::new(cells);
    for mask in 0..(1u32 << k) - 1 {
        let modes: Vec<usize> = ModeSet(mask).iter().collect();
        // All combinations of non-reference levels of the modes in `mask`.
        let ranges: Vec<usize> = modes.iter().map(|&m| dims[m] - 1).collect();
        let total: usize = ranges.iter().product();
        for combo in 0..total {
            let mut rest = combo;
            let mut col = vec![1.0; cells];
            for (&m, &r) in modes.iter().zip(&ranges) {
                let level = 1 + rest % r;
                rest /= r;
                for (c, v) in col.iter_mut().zip(indicator(dims, m, level)) {
                    *c *= v;
                }
            }
            d.push(col, 0.0);
        }
    }
    push_identity(&mut d, cells, cell_weight);
    d
}

/// Unpenalized intercept, every row and column indicator with weights
/// `row_weight` and `col_weight`, then penalized identity columns.
pub fn full_matrix_design(n: usize, p: usize, row_weight: f64, col_weight: f64, cell_weight: f64) -> Design {
    let dims = [n, p];
    let mut d = Design::new(n * p);
    d.push(vec![1.0; n * p], 0.0);
    for i in 0..n {
        d.push(indicator(&dims, 0, i), row_weight);
    }
    for j in 0..p {
        d.push(indicator(&dims, 1, j), col_weight);
    }
    push_identity(&mut d, n * p, cell_weight);
    d
}

fn push_identity(d: &mut Design, cells: usize, weight: f64) {
    for i in 0..cells {
        let mut col = vec![0.0; cells];
        col[i] = 1.0;
        d.push(col, weight);
    }
}

/// Lower-order structure plus Laplace interactions plus normal noise.
pub fn random_instance(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    let lap = InteractionDist::Laplace { sigma2_c: rng.random_range(0.5..3.0) };
    let shifts: Vec<Vec<f64>> = dims.iter().map(|&p| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let mu: f64 = rng.random_range(-3.0..3.0);
    let mut t = DenseTensor::from_fn(dims, |ix| mu + ix.iter().enumerate().map(|(m, &i)| shifts[m][i]).sum::<f64>());
    for v in t.values_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += lap.sample(rng) + 0.7 * z;
    }
    t
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// True when each objective value is at most the previous one, up to a
/// relative rounding slack.
pub fn non_increasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0))
}

/// `||y - X beta||^2 / 2 + sum_j w_j |beta_j|`.
pub fn lasso_objective(design: &Design, y: &[f64], beta: &[f64]) -> f64 {
    let fit = design.apply(beta);
    let rss: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
    0.5 * rss + beta.iter().zip(&design.weights).map(|(b, w)| w * b.abs()).sum::<f64>()
}

/// Sufficient condition for the lasso solution to be unique: the columns
/// whose gradient sits on the penalty boundary, together with the
/// unpenalized columns, are linearly independent.
pub fn lasso_solution_unique(design: &Design, y: &[f64], beta: &[f64]) -> bool {
    let fit = design.apply(beta);
    let r: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let active: Vec<&Vec<f64>> = design
        .columns
        .iter()
        .zip(&design.weights)
        .filter(|(col, &w)| {
            let g: f64 = col.iter().zip(&r).map(|(x, r)| x * r).sum();
            w == 0.0 || g.abs() >= w * (1.0 - 1e-9)
        })
        .map(|(col, _)| col)
        .collect();
    if active.len() > design.rows {
        return false;
    }
    let m = nalgebra::DMatrix::from_fn(design.rows, active.len(), |i, j| active[j][i]);
    let sv = m.singular_values();
    let max = sv.max();
    sv.iter().all(|&s| s > 1e-9 * max)
}
