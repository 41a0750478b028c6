use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use unfold_core::estimator::{information_projection, ExpFamilyModel, NewtonConfig};
use unfold_core::metrics::{
    galerkin_norm_constants, lemma_suite, level_constant, theory_diagnostics, LemmaReport,
    TheoryDiagnostics,
};
use unfold_core::operator::{ellipticity_diagnostic, galerkin_wavelet, wavelet_galerkin_matrix};
use unfold_core::sim::ensure_positive;
use unfold_core::wavelet::{dwt_forward, WaveletIndex};

use super::context::Context;
use super::Summary;
use crate::error::CliError;
use crate::output::cell_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalerkinLevel {
    pub j: u32,
    pub min_eigenvalue: f64,
    /// Extremes of `aᵀK_j a / Σ 2^{−ν|λ|} a_λ²` over random directions.
    pub c_min: f64,
    pub c_max: f64,
    /// `max_λ ‖u_λ^j‖ / 2^{νj}`.
    pub norm_constant: f64,
    /// `max_λ ‖K_j U_λ − e_λ‖_∞`.
    pub identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub all_pass: bool,
    pub n_checks: usize,
    pub n_applicable: usize,
    pub report: LemmaReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub nu: f64,
    pub s: f64,
    pub t: f64,
    pub theory: Vec<TheoryDiagnostics>,
    /// `C` of `‖Σ_{|λ|=j} β_λ ψ_λ‖_∞ ≤ C 2^{j/2}‖β_j‖₂`, per level.
    pub level_constants: Vec<f64>,
    pub galerkin: Vec<GalerkinLevel>,
    pub lemmas: LemmaSummary,
}

/// Deterministic uniform draw on `(−1, 1)`.
fn centered_uniform(seed: u64) -> f64 {
    let bits = cell_seed(seed, 0, 0) >> 11;
    2.0 * (bits as f64 / (1u64 << 53) as f64) - 1.0
}

pub(super) fn run(mut ctx: Context) -> Result<Summary, CliError> {
    let cfg = ctx.config.clone();
    let grid = ctx.grid();
    let filter = ctx.filter();
    let f = cfg.intensity.sample(grid)?;
    ensure_positive(&f)?;
    let nu = cfg.estimator.nu;
    let s = cfg.estimator.s.unwrap_or(cfg.reference_s);
    let t = *cfg.t.last().expect("validated non-empty");
    let top = cfg.diagnose.j_max.min(cfg.resolution - 1);

    let theory = (0..=top)
        .map(|j| theory_diagnostics(&f, j, &filter, nu, s, t))
        .collect::<Result<Vec<_>, _>>()?;
    let level_constants = (0..cfg.resolution)
        .map(|j| level_constant(&filter, cfg.resolution, j))
        .collect::<Result<Vec<_>, _>>()?;
    ctx.mark("theory");

    let k = ctx.stiffness()?;
    let galerkin_top = cfg.diagnose.galerkin_j_max.min(cfg.resolution - 1);
    let norms = galerkin_norm_constants(&k, &filter, galerkin_top, nu)?;
    let mut galerkin = Vec::new();
    for j in 1..=galerkin_top {
        let kj = wavelet_galerkin_matrix(&k, &filter, j)?;
        let (c_min, c_max) = ellipticity_diagnostic(
            &kj,
            nu,
            cfg.diagnose.ellipticity_samples,
            cell_seed(cfg.seed, j as usize, usize::MAX),
        );
        let mut identity_residual = 0.0f64;
        for flat in 0..kj.dim() {
            let u = galerkin_wavelet(&kj, WaveletIndex::from_flat(flat, 0))?;
            let image = kj.matrix() * DVector::from_column_slice(&u.coefficients);
            for (i, v) in image.iter().enumerate() {
                let target = if i == flat { 1.0 } else { 0.0 };
                identity_residual = identity_residual.max((v - target).abs());
            }
        }
        galerkin.push(GalerkinLevel {
            j,
            min_eigenvalue: kj.min_eigenvalue(),
            c_min,
            c_max,
            norm_constant: norms[(j - 1) as usize],
            identity_residual,
        });
    }
    ctx.mark("galerkin");

    // Projections of f at low levels plus seeded perturbations of them.
    let mut models = Vec::new();
    let coeffs = dwt_forward(&f, &filter, 0)?;
    for j in 1..=cfg.resolution.min(4) - 1 {
        let alpha = coeffs.truncated(j).to_vec();
        let Ok(p) =
            information_projection(&alpha, &filter, cfg.resolution, &NewtonConfig::default())
        else {
            continue;
        };
        for m in 0..cfg.diagnose.lemma_models_per_level {
            let theta: Vec<f64> = p
                .model
                .theta
                .iter()
                .enumerate()
                .map(|(i, th)| {
                    let draw = centered_uniform(cell_seed(cfg.seed, j as usize, m * 1024 + i));
                    th + 0.2 * m as f64 * draw
                })
                .collect();
            models.push(ExpFamilyModel::new(j, theta, cfg.filter, cfg.resolution)?);
        }
    }
    let report = lemma_suite(&f, &models)?;
    ctx.mark("lemmas");
    let lemmas = LemmaSummary {
        all_pass: report.all_pass(),
        n_checks: report.checks.len(),
        n_applicable: report.applicable().count(),
        report,
    };

    let diagnostics = DiagnosticsReport {
        nu,
        s,
        t,
        theory,
        level_constants,
        galerkin,
        lemmas,
    };
    ctx.out.write_json("diagnostics.json", &diagnostics)?;
    let c_min = diagnostics
        .galerkin
        .iter()
        .map(|g| g.c_min)
        .fold(f64::INFINITY, f64::min);
    let message = format!(
        "levels 0..={top}: eps_j from {:.3e} to {:.3e}; c_min {:.3e}; lemma checks {}",
        diagnostics.theory.first().map_or(f64::NAN, |d| d.eps_j),
        diagnostics.theory.last().map_or(f64::NAN, |d| d.eps_j),
        c_min,
        if diagnostics.lemmas.all_pass {
            "pass"
        } else {
            "FAIL"
        }
    );
    ctx.finish(Some(k.cache_key()), Vec::new(), message)
}
