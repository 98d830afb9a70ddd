//! Dense K-way arrays, mode centering, and balanced ANOVA decompositions.
//!
//! Values are stored flat with the mode-1 index moving fastest, so the entry
//! at multi-index `(i_1, ..., i_K)` lives at `i_1 + p_1 * (i_2 + p_2 * (...))`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LanovaError, Result};

/// A K-way array of `f64` with mode-1-fastest linearization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != values.len() {
            return Err(LanovaError::DimensionMismatch {
                dims,
                expected,
                actual: values.len(),
            });
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: &[usize], value: f64) -> Self {
        let n = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            values: vec![value; n],
        }
    }

    /// A zero-mode tensor holding a single value.
    pub fn scalar(value: f64) -> Self {
        Self {
            dims: Vec::new(),
            values: vec![value],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let n: usize = dims.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..n {
            values.push(f(&idx));
            increment(&mut idx, dims);
        }
        Self {
            dims: dims.to_vec(),
            values,
        }
    }

    /// Builds an `n x p` matrix from row slices; rows index mode 1.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != p) {
            return Err(LanovaError::DimensionMismatch {
                dims: vec![n, p],
                expected: p,
                actual: bad.as_ref().len(),
            });
        }
        Ok(Self::from_fn(&[n, p], |ix| rows[ix[0]].as_ref()[ix[1]]))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter()
            .zip(&self.dims)
            .rev()
            .fold(0, |acc, (&i, &p)| acc * p + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let l = self.linear_index(idx);
        self.values[l] = value;
    }

    /// Matrix accessor for the two-way case.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.dims[0] * j]
    }

    /// Errors if any mode has fewer than two levels.
    pub fn check_modes(&self) -> Result<()> {
        match self.dims.iter().position(|&p| p < 2) {
            Some(mode) => Err(LanovaError::DegenerateMode {
                mode,
                levels: self.dims[mode],
            }),
            None => Ok(()),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(LanovaError::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn require_order(&self, k: usize) -> Result<()> {
        if self.order() != k {
            return Err(LanovaError::WrongOrder {
                expected: k,
                actual: self.order(),
            });
        }
        Ok(())
    }

    /// Stride, length and outer count of the fibers along `mode`.
    fn fiber_layout(&self, mode: usize) -> (usize, usize, usize) {
        let stride: usize = self.dims[..mode].iter().product();
        let len = self.dims[mode];
        let outer = self.values.len() / (stride * len).max(1);
        (stride, len, outer)
    }

    /// Subtracts the mean along `mode` from every fiber, in place.
    pub fn center_mode(&mut self, mode: usize) {
        let (stride, len, outer) = self.fiber_layout(mode);
        let inv = 1.0 / len as f64;
        for o in 0..outer {
            let base = o * stride * len;
            for s in 0..stride {
                let start = base + s;
                let mean = (0..len).map(|i| self.values[start + i * stride]).sum::<f64>() * inv;
                for i in 0..len {
                    self.values[start + i * stride] -= mean;
                }
            }
        }
    }

    /// Averages over `mode`, returning a tensor with that mode removed.
    pub fn mean_over_mode(&self, mode: usize) -> DenseTensor {
        let (stride, len, outer) = self.fiber_layout(mode);
        let inv = 1.0 / len as f64;
        let mut out = Vec::with_capacity(stride * outer);
        for o in 0..outer {
            let base = o * stride * len;
            for s in 0..stride {
                let start = base + s;
                out.push((0..len).map(|i| self.values[start + i * stride]).sum::<f64>() * inv);
            }
        }
        let mut dims = self.dims.clone();
        dims.remove(mode);
        DenseTensor { dims, values: out }
    }

    /// Marginal means keeping only the modes in `keep`.
    pub fn margin(&self, keep: ModeSet) -> DenseTensor {
        let mut out = self.clone();
        for mode in (0..self.order()).rev() {
            if !keep.contains(mode) {
                out = out.mean_over_mode(mode);
            }
        }
        out
    }

    /// Adds `block`, whose modes are the members of `modes`, broadcast over the
    /// remaining modes of `self`.
    pub fn add_broadcast(&mut self, block: &DenseTensor, modes: ModeSet) {
        let members: Vec<usize> = modes.iter().collect();
        debug_assert_eq!(members.len(), block.order());
        // Stride of each full mode inside the block (0 if the mode is broadcast).
        let mut block_strides = vec![0usize; self.order()];
        let mut acc = 1;
        for &m in &members {
            block_strides[m] = acc;
            acc *= self.dims[m];
        }
        let mut idx = vec![0usize; self.order()];
        let mut bpos = 0usize;
        for v in self.values.iter_mut() {
            *v += block.values[bpos];
            // Advance the multi-index and the block offset together.
            for k in 0..idx.len() {
                idx[k] += 1;
                bpos += block_strides[k];
                if idx[k] < self.dims[k] {
                    break;
                }
                bpos -= block_strides[k] * idx[k];
                idx[k] = 0;
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseTensor {
        DenseTensor {
            dims: self.dims.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> DenseTensor {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        DenseTensor {
            dims: self.dims.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &DenseTensor) -> DenseTensor {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseTensor) -> DenseTensor {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &DenseTensor) -> f64 {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn sum_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }
}

impl fmt::Display for DenseTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseTensor{:?}", self.dims)
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in 0..idx.len() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// A subset of modes, stored as a bitmask (bit `k` set means mode `k` is in).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeSet(pub u32);

impl ModeSet {
    pub const EMPTY: ModeSet = ModeSet(0);

    pub fn full(order: usize) -> Self {
        ModeSet((1u32 << order) - 1)
    }

    pub fn from_modes(modes: &[usize]) -> Self {
        ModeSet(modes.iter().fold(0, |acc, &m| acc | (1 << m)))
    }

    pub fn contains(self, mode: usize) -> bool {
        self.0 & (1 << mode) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&m| self.contains(m))
    }

    /// 1-based mode labels, as used in reports.
    pub fn labels(self) -> Vec<usize> {
        self.iter().map(|m| m + 1).collect()
    }
}

/// Applies the centering projection along every mode.
///
/// The result is invariant to the grand mean and to every effect block that
/// does not involve all modes.
pub fn center_residuals(y: &DenseTensor) -> Result<DenseTensor> {
    y.check_modes()?;
    let mut r = y.clone();
    for mode in 0..r.order() {
        r.center_mode(mode);
    }
    Ok(r)
}

/// Mean of squares and mean of fourth powers over all entries.
pub fn sample_moments(r: &DenseTensor) -> (f64, f64) {
    let n = r.len() as f64;
    let (s2, s4) = r.values().iter().fold((0.0, 0.0), |(s2, s4), &v| {
        let sq = v * v;
        (s2 + sq, s4 + sq * sq)
    });
    (s2 / n, s4 / n)
}

/// Grand mean plus one zero-sum effect block per non-empty subset of modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaDecomposition {
    dims: Vec<usize>,
    /// Indexed by the bitmask of the subset; entry 0 is the grand mean.
    effects: Vec<DenseTensor>,
    residual: DenseTensor,
}

impl AnovaDecomposition {
    /// Assembles a decomposition from explicit blocks, indexed by subset bitmask.
    pub fn from_blocks(dims: &[usize], effects: Vec<DenseTensor>) -> Result<Self> {
        let k = dims.len();
        if effects.len() != 1 << k {
            return Err(LanovaError::InvalidArgument(format!(
                "expected {} effect blocks, got {}",
                1 << k,
                effects.len()
            )));
        }
        for (mask, block) in effects.iter().enumerate() {
            let want: Vec<usize> = ModeSet(mask as u32).iter().map(|m| dims[m]).collect();
            if block.dims() != want.as_slice() {
                return Err(LanovaError::DimensionMismatch {
                    dims: want.clone(),
                    expected: want.iter().product(),
                    actual: block.len(),
                });
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            effects,
            residual: DenseTensor::zeros(dims),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn effect(&self, modes: ModeSet) -> &DenseTensor {
        &self.effects[modes.0 as usize]
    }

    pub fn effect_mut(&mut self, modes: ModeSet) -> &mut DenseTensor {
        &mut self.effects[modes.0 as usize]
    }

    pub fn grand_mean(&self) -> f64 {
        self.effects[0].values()[0]
    }

    /// The block indexed by all modes (the interaction `C`).
    pub fn top(&self) -> &DenseTensor {
        self.effect(ModeSet::full(self.order()))
    }

    pub fn residual(&self) -> &DenseTensor {
        &self.residual
    }

    /// All subsets in increasing bitmask order, starting with the empty set.
    pub fn subsets(&self) -> impl Iterator<Item = ModeSet> {
        (0..(1u32 << self.order())).map(ModeSet)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (ModeSet, &DenseTensor)> {
        self.effects
            .iter()
            .enumerate()
            .map(|(m, b)| (ModeSet(m as u32), b))
    }

    /// Broadcast-sums every block plus the residual.
    pub fn reassemble(&self) -> DenseTensor {
        let mut out = self.residual.clone();
        for (modes, block) in self.blocks() {
            out.add_broadcast(block, modes);
        }
        out
    }

    /// Broadcast-sums every block except the top one.
    pub fn reassemble_lower(&self) -> DenseTensor {
        let top = ModeSet::full(self.order());
        let mut out = DenseTensor::zeros(&self.dims);
        for (modes, block) in self.blocks().filter(|(m, _)| *m != top) {
            out.add_broadcast(block, modes);
        }
        out
    }
}

/// Exact balanced-design ANOVA decomposition.
///
/// The block for subset `S` is the `S`-margin of `y` centered along each mode
/// of `S`, which equals the margin with all lower-order effects removed.
pub fn anova_decompose(y: &DenseTensor) -> Result<AnovaDecomposition> {
    y.check_modes()?;
    let k = y.order();
    let effects = (0..(1u32 << k))
        .map(|mask| {
            let modes = ModeSet(mask);
            let mut block = y.margin(modes);
            for m in 0..block.order() {
                block.center_mode(m);
            }
            block
        })
        .collect();
    Ok(AnovaDecomposition {
        dims: y.dims.to_vec(),
        effects,
        residual: DenseTensor::zeros(y.dims()),
    })
}
