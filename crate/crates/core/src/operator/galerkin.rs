use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::stiffness::StiffnessMatrix;
use crate::wavelet::{
    forward_in_place, inverse_in_place, weight_level_of_flat, WaveletFilter, WaveletIndex,
};
use crate::{Error, Result};

/// `K_j = (⟨K ψ_λ, ψ_κ⟩)_{|λ|,|κ| < j}` with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct GalerkinMatrix {
    level: u32,
    matrix: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl GalerkinMatrix {
    /// Symmetrizes `matrix` and factorizes it; the dimension must be `2^j`.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n != matrix.ncols() || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "Galerkin matrix must be square of size 2^j, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let factor = match Cholesky::new(matrix.clone()) {
            Some(factor) => factor,
            None => {
                let min_eigenvalue = SymmetricEigen::new(matrix).eigenvalues.min();
                return Err(Error::IllPosedDiscretization { min_eigenvalue });
            }
        };
        Ok(Self {
            level: n.trailing_zeros(),
            matrix,
            factor,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone()).eigenvalues.min()
    }

    /// Solves `K_j x = rhs` with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "right-hand side of length {} for a {}-dimensional Galerkin system",
                rhs.len(),
                self.dim()
            )));
        }
        let b = DVector::from_column_slice(rhs);
        let mut x = self.factor.solve(&b);
        let residual = &b - &self.matrix * &x;
        x += self.factor.solve(&residual);
        Ok(x.iter().copied().collect())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(x))
            .iter()
            .copied()
            .collect()
    }
}

/// Coefficient vector `U_λ^j = K_j^{-1} e_λ` of the Galerkin wavelet `u_λ^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GalerkinWavelet {
    pub index: WaveletIndex,
    pub coefficients: Vec<f64>,
}

impl GalerkinWavelet {
    pub fn l2_norm(&self) -> f64 {
        self.coefficients.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Conjugates `K_J` by the orthogonal wavelet transform and keeps the block
/// `{|λ| < j} × {|κ| < j}`, symmetrized and factorized.
pub fn wavelet_galerkin_matrix(
    k: &StiffnessMatrix,
    filter: &WaveletFilter,
    j: u32,
) -> Result<GalerkinMatrix> {
    GalerkinMatrix::from_matrix(galerkin_block(k, filter, j)?)
}

/// The raw block `(⟨K ψ_κ, ψ_λ⟩)_{|λ|,|κ| < j}` without factorization.
///
/// Column `κ` is obtained by synthesizing `ψ_κ` in `V_J`, applying the
/// operator and analysing the result.
pub fn galerkin_block(k: &StiffnessMatrix, filter: &WaveletFilter, j: u32) -> Result<DMatrix<f64>> {
    let resolution = k.resolution();
    if j > resolution {
        return Err(Error::InvalidInput(format!(
            "Galerkin level {j} exceeds stiffness resolution {resolution}"
        )));
    }
    let n = k.dim();
    let m = 1usize << j;
    let mut matrix = DMatrix::zeros(m, m);
    let mut buf = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for col in 0..m {
        buf.fill(0.0);
        buf[col] = 1.0;
        inverse_in_place(&mut buf, &mut scratch, filter, 0);
        let mut image = k.apply_coefficients(&buf)?;
        forward_in_place(&mut image, &mut scratch, filter, 0);
        for row in 0..m {
            matrix[(row, col)] = image[row];
        }
    }
    Ok(matrix)
}

pub fn galerkin_wavelet(kj: &GalerkinMatrix, index: WaveletIndex) -> Result<GalerkinWavelet> {
    let flat = index.flat();
    if index.level >= kj.level() as i32 || (index.is_scaling() && index.position > 0) {
        return Err(Error::InvalidInput(format!(
            "index {index:?} outside the Galerkin block |λ| < {}",
            kj.level()
        )));
    }
    let mut unit = vec![0.0; kj.dim()];
    unit[flat] = 1.0;
    let coefficients = kj.solve(&unit)?;
    Ok(GalerkinWavelet {
        index,
        coefficients,
    })
}

/// Extreme values of `aᵀ K_j a / Σ_λ 2^{−ν|λ|} a_λ²` over seeded Gaussian
/// directions `a`; the scaling slot is weighted as level 0.
pub fn ellipticity_diagnostic(
    kj: &GalerkinMatrix,
    nu: f64,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let dim = kj.dim();
    let weights: Vec<f64> = (0..dim)
        .map(|i| (-nu * weight_level_of_flat(i) as f64).exp2())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..samples {
        let a: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ka = kj.apply(&a);
        let num: f64 = a.iter().zip(&ka).map(|(x, y)| x * y).sum();
        let den: f64 = a.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
        let ratio = num / den;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    (lo, hi)
}
