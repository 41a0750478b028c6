//! Periodic orthonormal wavelets on the unit interval.
//!
//! Functions are carried around as [`SampledFunction`]s: values at the left
//! endpoints `x_k = k 2^-J` of the dyadic bins. The matching element of `V_J`
//! has Haar scaling coefficients `c_{J,k} = 2^{-J/2} value_k`, which is the
//! only place the `2^{J/2}` factor enters. Coefficient vectors are stored in
//! the usual flat pyramid layout: scaling block first, then detail levels in
//! increasing order, so the first `2^j` entries are exactly the indices with
//! `|λ| < j` when the decomposition runs down to level 0.

mod besov;
mod filter;
mod transform;

pub use besov::besov_seq_norm;
pub use filter::{FilterFamily, WaveletFilter};
pub use transform::{
    dwt_forward, dwt_inverse, forward_coefficients, forward_in_place, inverse_coefficients,
    inverse_in_place, project, synthesize_basis_function,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported resolution exponent.
pub const MAX_RESOLUTION: u32 = 24;

/// The grid `{k 2^-J : k = 0, …, 2^J − 1}` on `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    resolution: u32,
}

impl DyadicGrid {
    pub fn new(resolution: u32) -> Result<Self> {
        if resolution == 0 || resolution > MAX_RESOLUTION {
            return Err(Error::InvalidInput(format!(
                "resolution J must lie in 1..={MAX_RESOLUTION}, got {resolution}"
            )));
        }
        Ok(Self { resolution })
    }

    /// Grid with `n` points; `n` must be a power of two no smaller than 2.
    pub fn from_len(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "sample count {n} is not a power of two >= 2"
            )));
        }
        Self::new(n.trailing_zeros())
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        1usize << self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bin_width(&self) -> f64 {
        (-(self.resolution as f64)).exp2()
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 * self.bin_width()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }
}

/// Real function values on a dyadic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    grid: DyadicGrid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples for J = {}, got {}",
                grid.len(),
                grid.resolution(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample {k} is not finite ({})",
                values[k]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Builds the function from a slice whose length fixes the grid.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let grid = DyadicGrid::from_len(values.len())?;
        Self::new(grid, values)
    }

    pub fn from_fn(grid: DyadicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: DyadicGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn resolution(&self) -> u32 {
        self.grid.resolution()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Riemann rule `2^-J Σ_k values[k]`.
    pub fn integral(&self) -> f64 {
        self.grid.bin_width() * self.values.iter().sum::<f64>()
    }

    /// Quadrature inner product.
    pub fn inner(&self, other: &SampledFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(self.grid.bin_width() * dot)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.bin_width() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SampledFunction> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &SampledFunction, b: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(self.grid, values)
    }

    /// Index of the largest sample (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        best
    }

    pub(crate) fn check_same_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ResolutionMismatch {
                expected: self.resolution(),
                found: other.resolution(),
            });
        }
        Ok(())
    }
}

/// Wavelet index `λ = (j, k)`. Level `-1` is the scaling slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveletIndex {
    pub level: i32,
    pub position: usize,
}

impl WaveletIndex {
    pub const COARSE: WaveletIndex = WaveletIndex {
        level: -1,
        position: 0,
    };

    pub fn scaling(position: usize) -> Self {
        Self {
            level: -1,
            position,
        }
    }

    pub fn detail(level: u32, position: usize) -> Self {
        Self {
            level: level as i32,
            position,
        }
    }

    pub fn is_scaling(&self) -> bool {
        self.level < 0
    }

    /// Position in the flat pyramid layout.
    pub fn flat(&self) -> usize {
        if self.level < 0 {
            self.position
        } else {
            (1usize << self.level) + self.position
        }
    }

    /// Inverse of [`WaveletIndex::flat`] for a decomposition down to `coarse_level`.
    pub fn from_flat(flat: usize, coarse_level: u32) -> Self {
        let scaling_len = 1usize << coarse_level;
        if flat < scaling_len {
            Self::scaling(flat)
        } else {
            let level = usize::BITS - 1 - flat.leading_zeros();
            Self::detail(level, flat - (1usize << level))
        }
    }

    /// Level used for weights such as `2^{ν|λ|}`: the scaling slot counts as
    /// the coarsest level.
    pub fn weight_level(&self, coarse_level: u32) -> u32 {
        if self.level < 0 {
            coarse_level
        } else {
            self.level as u32
        }
    }
}

/// Flat-index level helper for decompositions down to level 0:
/// `0 → 0` (scaling slot), `1 → 0`, `2..4 → 1`, ...
pub fn weight_level_of_flat(flat: usize) -> u32 {
    if flat < 2 {
        0
    } else {
        usize::BITS - 1 - flat.leading_zeros()
    }
}

/// Coefficients `{β_λ}` of an element of `V_J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoefficients {
    resolution: u32,
    coarse_level: u32,
    data: Vec<f64>,
}

impl WaveletCoefficients {
    pub fn new(resolution: u32, coarse_level: u32, data: Vec<f64>) -> Result<Self> {
        DyadicGrid::new(resolution)?;
        if coarse_level > resolution {
            return Err(Error::InvalidInput(format!(
                "coarse level {coarse_level} exceeds resolution {resolution}"
            )));
        }
        if data.len() != 1usize << resolution {
            return Err(Error::InvalidInput(format!(
                "malformed index tree: {} coefficients for J = {resolution}",
                data.len()
            )));
        }
        Ok(Self {
            resolution,
            coarse_level,
            data,
        })
    }

    pub fn zeros(resolution: u32, coarse_level: u32) -> Result<Self> {
        Self::new(resolution, coarse_level, vec![0.0; 1usize << resolution])
    }

    /// Unit vector `e_λ` (full decomposition).
    pub fn unit(resolution: u32, index: WaveletIndex) -> Result<Self> {
        let mut c = Self::zeros(resolution, 0)?;
        let flat = c.flat_of(index)?;
        c.data[flat] = 1.0;
        Ok(c)
    }

    /// Full decomposition with the given leading coefficients, zero-padded to `2^J`.
    pub fn zero_padded(resolution: u32, leading: &[f64]) -> Result<Self> {
        let mut c = Self::zeros(resolution, 0)?;
        if leading.len() > c.data.len() {
            return Err(Error::InvalidInput(format!(
                "{} leading coefficients do not fit J = {resolution}",
                leading.len()
            )));
        }
        c.data[..leading.len()].copy_from_slice(leading);
        Ok(c)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn coarse_level(&self) -> u32 {
        self.coarse_level
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn flat_of(&self, index: WaveletIndex) -> Result<usize> {
        let ok = if index.is_scaling() {
            index.position < (1usize << self.coarse_level)
        } else {
            let level = index.level as u32;
            level >= self.coarse_level
                && level < self.resolution
                && index.position < (1usize << level)
        };
        if !ok {
            return Err(Error::InvalidInput(format!(
                "index {index:?} outside the tree (J = {}, coarse level {})",
                self.resolution, self.coarse_level
            )));
        }
        Ok(index.flat())
    }

    pub fn get(&self, index: WaveletIndex) -> Result<f64> {
        Ok(self.data[self.flat_of(index)?])
    }

    pub fn set(&mut self, index: WaveletIndex, value: f64) -> Result<()> {
        let flat = self.flat_of(index)?;
        self.data[flat] = value;
        Ok(())
    }

    pub fn scaling(&self) -> &[f64] {
        &self.data[..1usize << self.coarse_level]
    }

    /// Detail coefficients at `level`.
    pub fn level(&self, level: u32) -> &[f64] {
        assert!(level >= self.coarse_level && level < self.resolution);
        &self.data[1usize << level..1usize << (level + 1)]
    }

    /// The block `{|λ| < j}`; requires `j ≥ coarse_level`.
    pub fn truncated(&self, j: u32) -> &[f64] {
        assert!(j >= self.coarse_level && j <= self.resolution);
        &self.data[..1usize << j]
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn indices(&self) -> impl Iterator<Item = WaveletIndex> + '_ {
        (0..self.data.len()).map(|i| WaveletIndex::from_flat(i, self.coarse_level))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_are_dyadic() {
        let g = DyadicGrid::new(3).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.bin_width(), 0.125);
        let pts: Vec<f64> = g.points().collect();
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(pts[5], 0.625);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(DyadicGrid::from_len(6).is_err());
        assert!(SampledFunction::from_values(vec![1.0; 12]).is_err());
        assert!(DyadicGrid::new(0).is_err());
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = DyadicGrid::new(1).unwrap();
        assert!(SampledFunction::new(g, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn flat_index_round_trip() {
        for flat in 0..64 {
            let idx = WaveletIndex::from_flat(flat, 0);
            assert_eq!(idx.flat(), flat);
        }
        assert_eq!(WaveletIndex::from_flat(0, 0), WaveletIndex::COARSE);
        assert_eq!(WaveletIndex::from_flat(5, 0), WaveletIndex::detail(2, 1));
        assert_eq!(WaveletIndex::from_flat(3, 2), WaveletIndex::scaling(3));
        assert_eq!(WaveletIndex::from_flat(4, 2), WaveletIndex::detail(2, 0));
        assert_eq!(weight_level_of_flat(0), 0);
        assert_eq!(weight_level_of_flat(1), 0);
        assert_eq!(weight_level_of_flat(3), 1);
        assert_eq!(weight_level_of_flat(8), 3);
    }

    #[test]
    fn coefficient_access_checks_tree() {
        let c = WaveletCoefficients::zeros(3, 0).unwrap();
        assert!(c.get(WaveletIndex::detail(3, 0)).is_err());
        assert!(c.get(WaveletIndex::detail(2, 4)).is_err());
        assert!(c.get(WaveletIndex::scaling(1)).is_err());
        assert!(WaveletCoefficients::new(3, 0, vec![0.0; 7]).is_err());
    }

    #[test]
    fn quadrature_rule() {
        let g = DyadicGrid::new(2).unwrap();
        let f = SampledFunction::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.integral(), 2.5);
        assert_eq!(f.argmax(), 3);
    }
}
