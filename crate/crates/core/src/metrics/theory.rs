use serde::{Deserialize, Serialize};

use super::loss::kl_divergence;
use crate::estimator::{information_projection, ExpFamilyBasis, ExpFamilyModel, NewtonConfig};
use crate::operator::{galerkin_wavelet, wavelet_galerkin_matrix, StiffnessMatrix};
use crate::wavelet::{
    dwt_forward, inverse_in_place, project, SampledFunction, WaveletFilter, WaveletIndex,
};
use crate::{Error, Result};

/// Constants entering the existence and risk bounds at level `j` (with `d = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryDiagnostics {
    pub j: u32,
    /// `‖g − P_j g‖_{L²}` with `g = log f`.
    pub d_j: f64,
    /// `‖g − P_j g‖_∞`.
    pub gamma_j: f64,
    /// `sup_{v ∈ V_j} ‖v‖_∞ / ‖v‖_{L²}` on the grid.
    pub a_j: f64,
    /// `exp(max_k |log f(x_k)|)`.
    pub m1: f64,
    pub eps_j: f64,
    pub rho_jt: f64,
    pub delta_jt: f64,
    /// `Δ(f; f_{j,θ*})` for the information projection of `f`, when it exists.
    pub approx_kl: Option<f64>,
    /// `approx_kl / (e^{γ_j} D_j²)`.
    pub approx_ratio: Option<f64>,
}

/// Squared norms `Σ_λ ψ_λ(x_k)²` over a block of flat indices, per grid point.
fn pointwise_energy(
    filter: &WaveletFilter,
    resolution: u32,
    flats: std::ops::Range<usize>,
) -> Vec<f64> {
    let n = 1usize << resolution;
    let scale = (resolution as f64 / 2.0).exp2();
    let mut energy = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for flat in flats {
        buf.fill(0.0);
        buf[flat] = 1.0;
        inverse_in_place(&mut buf, &mut scratch, filter, 0);
        for (e, v) in energy.iter_mut().zip(&buf) {
            *e += (scale * v).powi(2);
        }
    }
    energy
}

fn check_level(j: u32, resolution: u32) -> Result<()> {
    if j > resolution {
        return Err(Error::InvalidInput(format!(
            "level {j} exceeds grid resolution {resolution}"
        )));
    }
    Ok(())
}

/// `A_j` on the grid of resolution `J`.
///
/// By Cauchy–Schwarz the supremum of `|Σ β_λ ψ_λ(x_k)| / ‖β‖₂` is
/// `(Σ_λ ψ_λ(x_k)²)^{1/2}`, so the maximum over grid points is exact.
pub fn sup_ratio(filter: &WaveletFilter, resolution: u32, j: u32) -> Result<f64> {
    check_level(j, resolution)?;
    let energy = pointwise_energy(filter, resolution, 0..1usize << j);
    Ok(energy.iter().fold(0.0f64, |m, &e| m.max(e)).sqrt())
}

/// `C` in `‖Σ_{|λ|=j} β_λ ψ_λ‖_∞ ≤ C 2^{j/2} ‖β_j‖₂`, measured on the grid.
pub fn level_constant(filter: &WaveletFilter, resolution: u32, j: u32) -> Result<f64> {
    if j >= resolution {
        return Err(Error::InvalidInput(format!(
            "detail level {j} requires J > {j}, got {resolution}"
        )));
    }
    let energy = pointwise_energy(filter, resolution, (1usize << j)..(2usize << j));
    let sup = energy.iter().fold(0.0f64, |m, &e| m.max(e)).sqrt();
    Ok(sup / (j as f64 / 2.0).exp2())
}

pub fn theory_diagnostics(
    f: &SampledFunction,
    j: u32,
    filter: &WaveletFilter,
    nu: f64,
    s: f64,
    t: f64,
) -> Result<TheoryDiagnostics> {
    let resolution = f.resolution();
    check_level(j, resolution)?;
    if let Some(k) = f.values().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidIntensity(format!(
            "intensity must be positive; bin {k} holds {}",
            f.values()[k]
        )));
    }
    let g = f.map(f64::ln)?;
    let residual = g.linear_combination(1.0, &project(&g, j, filter)?, -1.0)?;
    let d_j = residual.l2_norm();
    let gamma_j = residual.sup_norm();
    let a_j = sup_ratio(filter, resolution, j)?;
    let m1 = g.sup_norm().exp();
    let e = std::f64::consts::E;

    let eps_j = 2.0 * m1 * m1 * (2.0 * gamma_j + 1.0).exp() * d_j * a_j;
    let jf = j as f64;
    let rho_jt = ((jf * (nu + 0.5)).exp2() / t.sqrt() + (jf * (nu + 1.5)).exp2() / t).powi(2)
        + (-2.0 * jf * s).exp2();
    let delta_jt = 4.0 * m1 * m1 * (2.0 * eps_j + 2.0 * gamma_j + 2.0).exp() * a_j * a_j * rho_jt;
    debug_assert!(e > 0.0);

    let alpha = dwt_forward(f, filter, 0)?.truncated(j).to_vec();
    let approx_kl = information_projection(&alpha, filter, resolution, &NewtonConfig::default())
        .ok()
        .and_then(|p| p.model.evaluate().ok())
        .and_then(|fj| kl_divergence(f, &fj).ok());
    let scale = gamma_j.exp() * d_j * d_j;
    let approx_ratio = approx_kl.filter(|_| scale > 0.0).map(|kl| kl / scale);

    Ok(TheoryDiagnostics {
        j,
        d_j,
        gamma_j,
        a_j,
        m1,
        eps_j,
        rho_jt,
        delta_jt,
        approx_kl,
        approx_ratio,
    })
}

/// `max_{|λ|<j} ‖u_λ^j‖_{L²} / 2^{νj}` for `j = 1..=j_max`.
pub fn galerkin_norm_constants(
    k: &StiffnessMatrix,
    filter: &WaveletFilter,
    j_max: u32,
    nu: f64,
) -> Result<Vec<f64>> {
    (1..=j_max)
        .map(|j| {
            let kj = wavelet_galerkin_matrix(k, filter, j)?;
            let mut worst = 0.0f64;
            for flat in 0..kj.dim() {
                let u = galerkin_wavelet(&kj, WaveletIndex::from_flat(flat, 0))?;
                worst = worst.max(u.l2_norm());
            }
            Ok(worst / (nu * j as f64).exp2())
        })
        .collect()
}

/// Evaluates a member of `E_j` for tests and diagnostics.
pub(crate) fn family_member(
    filter: &WaveletFilter,
    resolution: u32,
    theta: &[f64],
) -> Result<(ExpFamilyBasis, SampledFunction)> {
    let level = theta.len().trailing_zeros();
    let model = ExpFamilyModel::new(level, theta.to_vec(), filter.family(), resolution)?;
    let basis = ExpFamilyBasis::new(filter.clone(), resolution, level)?;
    Ok((basis, model.evaluate()?))
}
