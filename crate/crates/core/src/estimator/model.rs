use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::wavelet::{
    forward_in_place, inverse_in_place, DyadicGrid, FilterFamily, SampledFunction, WaveletFilter,
};
use crate::{Error, Result};

/// `f_{j,θ} = exp(Σ_{|λ|<j} θ_λ ψ_λ)` evaluated on the grid of resolution `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFamilyModel {
    #[serde(rename = "j")]
    pub level: u32,
    pub theta: Vec<f64>,
    pub filter: FilterFamily,
    #[serde(rename = "J")]
    pub resolution: u32,
}

impl ExpFamilyModel {
    pub fn new(level: u32, theta: Vec<f64>, filter: FilterFamily, resolution: u32) -> Result<Self> {
        DyadicGrid::new(resolution)?;
        if level > resolution {
            return Err(Error::InvalidInput(format!(
                "model level {level} exceeds grid resolution {resolution}"
            )));
        }
        if theta.len() != 1usize << level {
            return Err(Error::InvalidInput(format!(
                "theta has {} entries, level {level} needs {}",
                theta.len(),
                1usize << level
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("theta must be finite".into()));
        }
        Ok(Self {
            level,
            theta,
            filter,
            resolution,
        })
    }

    /// `Σ θ_λ ψ_λ` on the grid.
    pub fn log_intensity(&self) -> Result<SampledFunction> {
        let basis = ExpFamilyBasis::new(
            WaveletFilter::from_family(self.filter),
            self.resolution,
            self.level,
        )?;
        SampledFunction::new(basis.grid(), basis.log_density(&self.theta))
    }

    pub fn evaluate(&self) -> Result<SampledFunction> {
        self.log_intensity()?.map(f64::exp)
    }
}

/// Grid-quadrature machinery for the family `E_j` at resolution `J`.
///
/// Moments `⟨f, ψ_λ⟩` are the leading entries of the forward transform of
/// `2^{-J/2} f(x_k)`, and the Hessian `∫ f ψ_λ ψ_λ'` is the two-sided wavelet
/// transform of `diag(f(x_k))` restricted to `{|λ| < j}`, built one column at
/// a time with the filter bank.
#[derive(Clone, Debug)]
pub struct ExpFamilyBasis {
    filter: WaveletFilter,
    grid: DyadicGrid,
    level: u32,
    /// `rows[λ]` holds the V_J coefficients of `ψ_λ`.
    rows: Vec<Vec<f64>>,
}

impl ExpFamilyBasis {
    pub fn new(filter: WaveletFilter, resolution: u32, level: u32) -> Result<Self> {
        let grid = DyadicGrid::new(resolution)?;
        if level > resolution {
            return Err(Error::InvalidInput(format!(
                "family level {level} exceeds resolution {resolution}"
            )));
        }
        let n = grid.len();
        let mut scratch = vec![0.0; n];
        let rows = (0..1usize << level)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                inverse_in_place(&mut row, &mut scratch, &filter, 0);
                row
            })
            .collect();
        Ok(Self {
            filter,
            grid,
            level,
            rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn filter(&self) -> &WaveletFilter {
        &self.filter
    }

    pub fn log_density(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.dim());
        let n = self.grid.len();
        let mut values = vec![0.0; n];
        values[..theta.len()].copy_from_slice(theta);
        let mut scratch = vec![0.0; n];
        inverse_in_place(&mut values, &mut scratch, &self.filter, 0);
        let scale = (self.grid.resolution() as f64 / 2.0).exp2();
        values.iter_mut().for_each(|v| *v *= scale);
        values
    }

    /// `⟨f, ψ_λ⟩` for `|λ| < j` from grid values of `f`.
    pub fn moments(&self, values: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let scale = (-(self.grid.resolution() as f64) / 2.0).exp2();
        let mut buf: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let mut scratch = vec![0.0; n];
        forward_in_place(&mut buf, &mut scratch, &self.filter, 0);
        buf.truncate(self.dim());
        buf
    }

    /// `∫ f ψ_λ ψ_λ'` for `|λ|, |λ'| < j`.
    pub fn hessian(&self, values: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        let n = self.grid.len();
        let mut h = DMatrix::zeros(m, m);
        let mut buf = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        for (col, row) in self.rows.iter().enumerate() {
            for ((b, r), f) in buf.iter_mut().zip(row).zip(values) {
                *b = r * f;
            }
            forward_in_place(&mut buf, &mut scratch, &self.filter, 0);
            for i in 0..m {
                h[(i, col)] = buf[i];
            }
        }
        (&h + h.transpose()) * 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{synthesize_basis_function, WaveletIndex};

    #[test]
    fn zero_theta_is_unit_intensity() {
        let m = ExpFamilyModel::new(3, vec![0.0; 8], FilterFamily::Symmlet6, 6).unwrap();
        let f = m.evaluate().unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(ExpFamilyModel::new(3, vec![0.0; 7], FilterFamily::Haar, 6).is_err());
        assert!(ExpFamilyModel::new(7, vec![0.0; 128], FilterFamily::Haar, 6).is_err());
    }

    #[test]
    fn moments_and_hessian_match_direct_quadrature() {
        for filter in [WaveletFilter::haar(), WaveletFilter::symmlet6()] {
            let basis = ExpFamilyBasis::new(filter.clone(), 6, 3).unwrap();
            let theta: Vec<f64> = (0..8).map(|i| 0.1 * (i as f64 - 3.5)).collect();
            let f: Vec<f64> = basis.log_density(&theta).iter().map(|v| v.exp()).collect();
            let psi: Vec<Vec<f64>> = (0..8)
                .map(|i| {
                    synthesize_basis_function(WaveletIndex::from_flat(i, 0), &filter, 6)
                        .unwrap()
                        .into_values()
                })
                .collect();
            let w = 1.0 / 64.0;
            let moments = basis.moments(&f);
            let hess = basis.hessian(&f);
            for a in 0..8 {
                let direct: f64 = (0..64).map(|k| w * f[k] * psi[a][k]).sum();
                assert!((direct - moments[a]).abs() < 1e-12);
                for b in 0..8 {
                    let direct: f64 = (0..64).map(|k| w * f[k] * psi[a][k] * psi[b][k]).sum();
                    assert!((direct - hess[(a, b)]).abs() < 1e-12);
                }
            }
        }
    }
}
