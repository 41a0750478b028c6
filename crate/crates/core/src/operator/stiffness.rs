use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::kernel::KernelSpec;
use crate::wavelet::{DyadicGrid, SampledFunction};
use crate::{Error, Result};

/// Default Riemann sub-grid exponent (cells of width `2^-16`).
pub const DEFAULT_QUAD_RESOLUTION: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    /// Entry `(ℓ, k)` is `row[(ℓ − k) mod n]`.
    Circulant,
    /// Entry `(ℓ, k)` is `row[|ℓ − k|]`.
    SymmetricToeplitz,
}

/// Haar-basis stiffness matrix `(⟨K φ_{J,ℓ}, φ_{J,k}⟩)_{ℓ,k}` of a convolution kernel.
#[derive(Clone)]
pub struct StiffnessMatrix {
    kernel: KernelSpec,
    resolution: u32,
    quad_resolution: u32,
    structure: Structure,
    first_row: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for StiffnessMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StiffnessMatrix")
            .field("kernel", &self.kernel)
            .field("resolution", &self.resolution)
            .field("quad_resolution", &self.quad_resolution)
            .field("structure", &self.structure)
            .finish_non_exhaustive()
    }
}

impl StiffnessMatrix {
    /// Assembles the first row by midpoint quadrature on the `2^-quad_resolution`
    /// sub-grid.
    ///
    /// Each entry is reduced to the difference variable `u = x − y`:
    /// `2^J ∫_{-w}^{w} (w − |s|) h(d·w + s) ds` with `w = 2^-J`. Logarithmic
    /// singularities of the profile are integrated exactly against the
    /// triangular weight and only the smooth remainder goes through the
    /// Riemann sum. Midpoints sit at odd multiples of half a cell, so the
    /// diagonal is never evaluated.
    pub fn build(kernel: &KernelSpec, resolution: u32, quad_resolution: u32) -> Result<Self> {
        kernel.validate()?;
        let grid = DyadicGrid::new(resolution)?;
        if quad_resolution < resolution + 2 || quad_resolution > 30 {
            return Err(Error::InvalidInput(format!(
                "quad_resolution must lie in {}..=30 for J = {resolution}, got {quad_resolution}",
                resolution + 2
            )));
        }
        let n = grid.len();
        let w = grid.bin_width();
        let structure = if kernel.is_circulant() {
            Structure::Circulant
        } else {
            Structure::SymmetricToeplitz
        };

        let mut first_row = vec![0.0; n];
        match kernel {
            KernelSpec::Constant { value } => first_row.fill(value * w),
            _ => {
                let half_cells = 1usize << (quad_resolution - resolution);
                let delta = (-(quad_resolution as f64)).exp2();
                let last = match structure {
                    Structure::Circulant => n / 2,
                    Structure::SymmetricToeplitz => n - 1,
                };
                for (d, slot) in first_row.iter_mut().enumerate().take(last + 1) {
                    *slot = entry(kernel, d as f64 * w, w, half_cells, delta)?;
                }
                if structure == Structure::Circulant {
                    for d in last + 1..n {
                        first_row[d] = first_row[n - d];
                    }
                }
            }
        }
        Self::from_first_row(
            kernel.clone(),
            resolution,
            quad_resolution,
            structure,
            first_row,
        )
    }

    pub(crate) fn from_first_row(
        kernel: KernelSpec,
        resolution: u32,
        quad_resolution: u32,
        structure: Structure,
        first_row: Vec<f64>,
    ) -> Result<Self> {
        let n = DyadicGrid::new(resolution)?.len();
        if first_row.len() != n {
            return Err(Error::InvalidInput(format!(
                "stiffness row has {} entries, expected {n}",
                first_row.len()
            )));
        }
        if let Some(i) = first_row.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "stiffness entry {i} is not finite"
            )));
        }
        // Circulant embedding of the Toeplitz case has period 2n.
        let period = match structure {
            Structure::Circulant => n,
            Structure::SymmetricToeplitz => 2 * n,
        };
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(period);
        let backward = planner.plan_fft_inverse(period);
        let mut spectrum: Vec<Complex<f64>> = match structure {
            Structure::Circulant => first_row.iter().map(|&v| Complex::new(v, 0.0)).collect(),
            Structure::SymmetricToeplitz => {
                let mut emb = vec![Complex::new(0.0, 0.0); period];
                emb[0] = Complex::new(first_row[0], 0.0);
                for d in 1..n {
                    emb[d] = Complex::new(first_row[d], 0.0);
                    emb[period - d] = Complex::new(first_row[d], 0.0);
                }
                emb
            }
        };
        forward.process(&mut spectrum);
        Ok(Self {
            kernel,
            resolution,
            quad_resolution,
            structure,
            first_row,
            spectrum,
            forward,
            backward,
        })
    }

    /// Circulant matrix with the given first row (symmetry is checked).
    pub fn circulant(first_row: Vec<f64>) -> Result<Self> {
        let grid = DyadicGrid::from_len(first_row.len())?;
        let n = first_row.len();
        for m in 1..n {
            let (a, b) = (first_row[m], first_row[n - m]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "circulant row is not symmetric at offset {m}"
                )));
            }
        }
        let profile = first_row.clone();
        Self::from_first_row(
            KernelSpec::Tabulated { profile },
            grid.resolution(),
            grid.resolution() + 2,
            Structure::Circulant,
            first_row,
        )
    }

    /// Unit-diagonal circulant, i.e. the identity operator on `V_J`.
    pub fn identity(resolution: u32) -> Result<Self> {
        let n = DyadicGrid::new(resolution)?.len();
        let mut row = vec![0.0; n];
        row[0] = 1.0;
        Self::circulant(row)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn quad_resolution(&self) -> u32 {
        self.quad_resolution
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let n = self.dim();
        match self.structure {
            Structure::Circulant => self.first_row[(row + n - col) % n],
            Structure::SymmetricToeplitz => self.first_row[row.abs_diff(col)],
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| self.entry(r, c))
    }

    /// Cache key `(kernel, J, quad_resolution)`.
    pub fn cache_key(&self) -> String {
        cache_key(&self.kernel, self.resolution, self.quad_resolution)
    }

    /// Eigenvalues of a circulant matrix (the DFT of its first row).
    pub fn circulant_eigenvalues(&self) -> Option<Vec<f64>> {
        (self.structure == Structure::Circulant)
            .then(|| self.spectrum.iter().map(|z| z.re).collect())
    }

    /// `K_J c` for a V_J coefficient vector, by FFT cyclic convolution.
    pub fn apply_coefficients(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if coefficients.len() != n {
            return Err(Error::InvalidInput(format!(
                "operator of size {n} applied to a vector of length {}",
                coefficients.len()
            )));
        }
        let period = self.spectrum.len();
        let mut buf = vec![Complex::new(0.0, 0.0); period];
        for (b, &c) in buf.iter_mut().zip(coefficients) {
            *b = Complex::new(c, 0.0);
        }
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.backward.process(&mut buf);
        let scale = 1.0 / period as f64;
        Ok(buf[..n].iter().map(|z| z.re * scale).collect())
    }

    /// Galerkin image of `K f` in `V_J`, returned as grid values.
    pub fn apply_operator(&self, f: &SampledFunction) -> Result<SampledFunction> {
        if f.resolution() != self.resolution {
            return Err(Error::ResolutionMismatch {
                expected: self.resolution,
                found: f.resolution(),
            });
        }
        // Values → coefficients scales by 2^{-J/2}, and back by 2^{J/2}.
        let image = self.apply_coefficients(f.values())?;
        SampledFunction::new(f.grid(), image)
    }
}

pub fn cache_key(kernel: &KernelSpec, resolution: u32, quad_resolution: u32) -> String {
    let quad = match kernel {
        KernelSpec::Constant { .. } => "exact".to_string(),
        _ => quad_resolution.to_string(),
    };
    format!("kernel={};J={resolution};quad={quad}", kernel.key())
}

/// Convenience wrapper matching the free-function surface of the other modules.
pub fn build_stiffness_matrix(
    kernel: &KernelSpec,
    resolution: u32,
    quad_resolution: u32,
) -> Result<StiffnessMatrix> {
    StiffnessMatrix::build(kernel, resolution, quad_resolution)
}

pub fn apply_operator(k: &StiffnessMatrix, f: &SampledFunction) -> Result<SampledFunction> {
    k.apply_operator(f)
}

/// Second antiderivative of `ln|x|`, continuous with value 0 at the origin.
fn log_second_antiderivative(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        0.5 * x * x * x.abs().ln() - 0.75 * x * x
    }
}

/// `∫_{-w}^{w} (w − |s|) ln|c + s| ds`.
fn triangle_log_integral(c: f64, w: f64) -> f64 {
    log_second_antiderivative(c + w) - 2.0 * log_second_antiderivative(c)
        + log_second_antiderivative(c - w)
}

/// One stiffness entry for bins whose left endpoints differ by `offset`.
fn entry(kernel: &KernelSpec, offset: f64, w: f64, half_cells: usize, delta: f64) -> Result<f64> {
    let split = kernel.singular_split();
    let mut sum = 0.0;
    let cells = half_cells as isize;
    for i in -cells..cells {
        let s = (i as f64 + 0.5) * delta;
        let u = offset + s;
        let weight = w - s.abs();
        let value = match &split {
            Some(split) => {
                debug_assert!(split.log_points.iter().all(|&a| u != a));
                (split.smooth)(u)
            }
            None => kernel
                .profile(u)
                .ok_or(Error::DiagonalSingularity { x: u })?,
        };
        sum += weight * value;
    }
    let mut integral = sum * delta;
    if let Some(split) = split {
        integral += split.constant * w * w;
        for &a in split.log_points {
            integral -= triangle_log_integral(offset - a, w);
        }
    }
    Ok(integral / w)
}
