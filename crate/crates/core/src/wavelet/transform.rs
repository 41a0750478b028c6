use super::{DyadicGrid, SampledFunction, WaveletCoefficients, WaveletFilter, WaveletIndex};
use crate::{Error, Result};

/// One-level-at-a-time periodic pyramid analysis of `data` (V_J coefficients)
/// down to `coarse_level`, in place. `scratch` must be at least as long as `data`.
pub fn forward_in_place(
    data: &mut [f64],
    scratch: &mut [f64],
    filter: &WaveletFilter,
    coarse_level: u32,
) {
    let h = filter.lowpass();
    let g = filter.highpass();
    let stop = 1usize << coarse_level;
    let mut len = data.len();
    while len > stop {
        let half = len / 2;
        let mask = len - 1;
        for k in 0..half {
            let mut approx = 0.0;
            let mut detail = 0.0;
            for (m, (&hm, &gm)) in h.iter().zip(g).enumerate() {
                let x = data[(2 * k + m) & mask];
                approx += hm * x;
                detail += gm * x;
            }
            scratch[k] = approx;
            scratch[half + k] = detail;
        }
        data[..len].copy_from_slice(&scratch[..len]);
        len = half;
    }
}

/// Exact inverse of [`forward_in_place`].
pub fn inverse_in_place(
    data: &mut [f64],
    scratch: &mut [f64],
    filter: &WaveletFilter,
    coarse_level: u32,
) {
    let h = filter.lowpass();
    let g = filter.highpass();
    let mut len = 2usize << coarse_level;
    while len <= data.len() {
        let half = len / 2;
        let mask = len - 1;
        scratch[..len].fill(0.0);
        for k in 0..half {
            let approx = data[k];
            let detail = data[half + k];
            for (m, (&hm, &gm)) in h.iter().zip(g).enumerate() {
                scratch[(2 * k + m) & mask] += hm * approx + gm * detail;
            }
        }
        data[..len].copy_from_slice(&scratch[..len]);
        len *= 2;
    }
}

/// Forward transform of a V_J coefficient vector (not function values).
pub fn forward_coefficients(
    scaling: &[f64],
    filter: &WaveletFilter,
    coarse_level: u32,
) -> Result<WaveletCoefficients> {
    let grid = DyadicGrid::from_len(scaling.len())?;
    let resolution = grid.resolution();
    if coarse_level >= resolution {
        return Err(Error::InvalidInput(format!(
            "coarse level {coarse_level} must be below J = {resolution}"
        )));
    }
    let mut data = scaling.to_vec();
    let mut scratch = vec![0.0; data.len()];
    forward_in_place(&mut data, &mut scratch, filter, coarse_level);
    WaveletCoefficients::new(resolution, coarse_level, data)
}

/// Inverse transform returning V_J coefficients.
pub fn inverse_coefficients(coeffs: &WaveletCoefficients, filter: &WaveletFilter) -> Vec<f64> {
    let mut data = coeffs.as_slice().to_vec();
    let mut scratch = vec![0.0; data.len()];
    inverse_in_place(&mut data, &mut scratch, filter, coeffs.coarse_level());
    data
}

/// Wavelet coefficients of the V_J element whose values on the grid are `g`.
pub fn dwt_forward(
    g: &SampledFunction,
    filter: &WaveletFilter,
    coarse_level: u32,
) -> Result<WaveletCoefficients> {
    let scale = (-(g.resolution() as f64) / 2.0).exp2();
    let scaling: Vec<f64> = g.values().iter().map(|v| v * scale).collect();
    forward_coefficients(&scaling, filter, coarse_level)
}

pub fn dwt_inverse(
    coeffs: &WaveletCoefficients,
    filter: &WaveletFilter,
) -> Result<SampledFunction> {
    let grid = DyadicGrid::new(coeffs.resolution())?;
    let scale = (grid.resolution() as f64 / 2.0).exp2();
    let mut values = inverse_coefficients(coeffs, filter);
    values.iter_mut().for_each(|v| *v *= scale);
    SampledFunction::new(grid, values)
}

/// Grid samples of `ψ_λ` (or `φ_{0,0}` for the coarse slot).
pub fn synthesize_basis_function(
    index: WaveletIndex,
    filter: &WaveletFilter,
    resolution: u32,
) -> Result<SampledFunction> {
    if index.level >= resolution as i32 {
        return Err(Error::InvalidInput(format!(
            "basis index {index:?} requires |λ| < J = {resolution}"
        )));
    }
    let unit = WaveletCoefficients::unit(resolution, index)?;
    dwt_inverse(&unit, filter)
}

/// Orthogonal projection `P_j g` onto `V_j`.
pub fn project(g: &SampledFunction, j: u32, filter: &WaveletFilter) -> Result<SampledFunction> {
    let resolution = g.resolution();
    if j > resolution {
        return Err(Error::InvalidInput(format!(
            "projection level {j} exceeds J = {resolution}"
        )));
    }
    let mut coeffs = dwt_forward(g, filter, 0)?;
    coeffs.as_mut_slice()[1usize << j..].fill(0.0);
    dwt_inverse(&coeffs, filter)
}
