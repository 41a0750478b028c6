use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::model::ExpFamilyModel;
use super::projection::{information_projection, NewtonConfig};
use super::threshold::{cutoff_level, level_thresholds, soft_threshold};
use crate::operator::{wavelet_galerkin_matrix, GalerkinMatrix, StiffnessMatrix};
use crate::sim::CountData;
use crate::wavelet::{forward_coefficients, WaveletCoefficients, WaveletFilter};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Nonlinear,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub mode: ThresholdMode,
    pub nu: f64,
    /// Assumed smoothness; required by the linear pipeline.
    pub s: Option<f64>,
    pub j_cap: u32,
    /// Multiplier on the threshold schedule; 0 disables thresholding.
    pub threshold_scale: f64,
    pub newton: NewtonConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            mode: ThresholdMode::Nonlinear,
            nu: 1.0,
            s: None,
            j_cap: 10,
            threshold_scale: 1.0,
            newton: NewtonConfig::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidInput(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if !(self.threshold_scale >= 0.0) || !self.threshold_scale.is_finite() {
            return Err(Error::InvalidInput(format!(
                "threshold_scale must be nonnegative, got {}",
                self.threshold_scale
            )));
        }
        match (self.mode, self.s) {
            (ThresholdMode::Linear, None) => {
                return Err(Error::InvalidInput(
                    "linear mode needs the assumed smoothness s".into(),
                ))
            }
            (_, Some(s)) if !(s > 0.0) || !s.is_finite() => {
                return Err(Error::InvalidInput(format!(
                    "smoothness s must be positive, got {s}"
                )))
            }
            _ => {}
        }
        self.newton.validate()
    }
}

/// Chosen level together with the value before capping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelChoice {
    pub level: u32,
    pub uncapped: u32,
    pub capped: bool,
}

impl LevelChoice {
    fn new(uncapped: u32, cap: u32) -> Self {
        Self {
            level: uncapped.min(cap),
            uncapped,
            capped: uncapped > cap,
        }
    }
}

fn effective_cap(j_cap: u32, resolution: u32) -> u32 {
    j_cap.min(resolution.saturating_sub(1))
}

/// `j(t)` for the thresholded pipeline, capped at `min(j_cap, J − 1)`.
pub fn nonlinear_level(t: f64, nu: f64, j_cap: u32, resolution: u32) -> LevelChoice {
    LevelChoice::new(
        cutoff_level(t, nu, u32::MAX),
        effective_cap(j_cap, resolution),
    )
}

/// `⌊log₂ t / (2s + 2ν + 1)⌋`, capped at `min(j_cap, J − 1)`.
pub fn linear_level(t: f64, s: f64, nu: f64, j_cap: u32, resolution: u32) -> LevelChoice {
    let raw = (t.log2() / (2.0 * s + 2.0 * nu + 1.0) + 1e-9)
        .floor()
        .max(0.0);
    LevelChoice::new(raw as u32, effective_cap(j_cap, resolution))
}

/// `β̂_λ = (1/t) ∫ ψ_λ dG` for every `λ`, as the forward transform of `2^{J/2} N_k / t`.
pub fn empirical_coeffs(data: &CountData, filter: &WaveletFilter) -> Result<WaveletCoefficients> {
    let scale = (data.resolution as f64 / 2.0).exp2() / data.t;
    let scaling: Vec<f64> = data.counts.iter().map(|&n| n as f64 * scale).collect();
    forward_coefficients(&scaling, filter, 0)
}

/// Soft-thresholds `β̂` with per-index thresholds and solves `K_j α = T(β̂)`.
pub fn invert_thresholded(
    kj: &GalerkinMatrix,
    beta: &[f64],
    thresholds: &[f64],
) -> Result<Vec<f64>> {
    if beta.len() != kj.dim() || thresholds.len() != kj.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: K_j is {0}x{0}, beta has {1}, thresholds {2}",
            kj.dim(),
            beta.len(),
            thresholds.len()
        )));
    }
    let kept: Vec<f64> = beta
        .iter()
        .zip(thresholds)
        .map(|(&b, &eps)| soft_threshold(b, eps))
        .collect();
    if kept.iter().all(|&v| v == 0.0) {
        return Ok(kept);
    }
    kj.solve(&kept)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub level: u32,
    pub uncapped_level: u32,
    pub capped: bool,
    pub iterations: usize,
    pub residual: f64,
    /// Coefficients left nonzero by thresholding.
    pub n_surviving_coeffs: usize,
    pub n_coeffs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub model: ExpFamilyModel,
    /// Projection target `α` over `{|λ| < j}`.
    pub alpha: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Estimation against a fixed stiffness matrix; Galerkin blocks are factorized
/// once per level and shared between calls and threads.
#[derive(Debug)]
pub struct Estimator {
    stiffness: Arc<StiffnessMatrix>,
    filter: WaveletFilter,
    config: EstimatorConfig,
    galerkin: Mutex<HashMap<u32, Arc<GalerkinMatrix>>>,
}

impl Estimator {
    pub fn new(
        stiffness: Arc<StiffnessMatrix>,
        filter: WaveletFilter,
        config: EstimatorConfig,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            stiffness,
            filter,
            config,
            galerkin: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn filter(&self) -> &WaveletFilter {
        &self.filter
    }

    pub fn stiffness(&self) -> &StiffnessMatrix {
        &self.stiffness
    }

    pub fn galerkin(&self, level: u32) -> Result<Arc<GalerkinMatrix>> {
        if let Some(kj) = self
            .galerkin
            .lock()
            .expect("galerkin cache poisoned")
            .get(&level)
        {
            return Ok(Arc::clone(kj));
        }
        // Built outside the lock; a concurrent duplicate build is harmless.
        let kj = Arc::new(wavelet_galerkin_matrix(
            &self.stiffness,
            &self.filter,
            level,
        )?);
        let mut cache = self.galerkin.lock().expect("galerkin cache poisoned");
        Ok(Arc::clone(cache.entry(level).or_insert(kj)))
    }

    pub fn level_for(&self, t: f64) -> Result<LevelChoice> {
        let resolution = self.stiffness.resolution();
        let cfg = &self.config;
        Ok(match cfg.mode {
            ThresholdMode::Nonlinear => nonlinear_level(t, cfg.nu, cfg.j_cap, resolution),
            ThresholdMode::Linear => {
                let s = cfg.s.ok_or_else(|| {
                    Error::InvalidInput("linear mode needs the assumed smoothness s".into())
                })?;
                linear_level(t, s, cfg.nu, cfg.j_cap, resolution)
            }
        })
    }

    /// Runs the pipeline selected by the configured mode.
    pub fn estimate(&self, data: &CountData) -> Result<Estimate> {
        let resolution = self.stiffness.resolution();
        if data.resolution != resolution {
            return Err(Error::ResolutionMismatch {
                expected: resolution,
                found: data.resolution,
            });
        }
        let choice = self.level_for(data.t)?;
        let j = choice.level;
        let m = 1usize << j;
        let beta = empirical_coeffs(data, &self.filter)?;
        let beta = &beta.as_slice()[..m];
        let thresholds: Vec<f64> = match self.config.mode {
            ThresholdMode::Nonlinear if self.config.threshold_scale > 0.0 => {
                level_thresholds(j, data.t, self.config.nu)
                    .into_iter()
                    .map(|e| e * self.config.threshold_scale)
                    .collect()
            }
            _ => vec![0.0; m],
        };
        let n_surviving_coeffs = beta
            .iter()
            .zip(&thresholds)
            .filter(|(b, e)| b.abs() > **e)
            .count();
        let kj = self.galerkin(j)?;
        let alpha = invert_thresholded(&kj, beta, &thresholds)?;
        let projection =
            information_projection(&alpha, &self.filter, resolution, &self.config.newton)?;
        Ok(Estimate {
            model: projection.model,
            alpha,
            diagnostics: Diagnostics {
                level: j,
                uncapped_level: choice.uncapped,
                capped: choice.capped,
                iterations: projection.iterations,
                residual: projection.residual,
                n_surviving_coeffs,
                n_coeffs: m,
            },
        })
    }
}

fn run(
    data: &CountData,
    k: &StiffnessMatrix,
    filter: &WaveletFilter,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    Estimator::new(Arc::new(k.clone()), filter.clone(), cfg.clone())?.estimate(data)
}

/// Thresholded pipeline at `j = j(t)`.
pub fn estimate_nonlinear(
    data: &CountData,
    k: &StiffnessMatrix,
    filter: &WaveletFilter,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    let cfg = EstimatorConfig {
        mode: ThresholdMode::Nonlinear,
        ..cfg.clone()
    };
    run(data, k, filter, &cfg)
}

/// Unthresholded pipeline at `j = ⌊log₂ t / (2s + 2ν + 1)⌋`.
pub fn estimate_linear(
    data: &CountData,
    k: &StiffnessMatrix,
    filter: &WaveletFilter,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    let cfg = EstimatorConfig {
        mode: ThresholdMode::Linear,
        ..cfg.clone()
    };
    run(data, k, filter, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::ExpFamilyBasis;
    use nalgebra::DMatrix;

    #[test]
    fn empirical_coefficients_of_single_event() {
        let data = CountData::new(vec![1, 0], 1.0, 0).unwrap();
        let beta = empirical_coeffs(&data, &WaveletFilter::haar()).unwrap();
        assert!((beta.as_slice()[0] - 1.0).abs() < 1e-15);
        assert!((beta.as_slice()[1] - 1.0).abs() < 1e-15);

        let zero = CountData::new(vec![0; 16], 5.0, 0).unwrap();
        let beta = empirical_coeffs(&zero, &WaveletFilter::symmlet6()).unwrap();
        assert!(beta.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn level_rules() {
        assert_eq!(nonlinear_level(16.0, 1.0, 10, 12).level, 2);
        let c = nonlinear_level(1e8, 1.0, 10, 12);
        assert_eq!((c.level, c.uncapped, c.capped), (10, 14, true));
        assert_eq!(nonlinear_level(1e8, 1.0, 10, 8).level, 7);
        assert_eq!(linear_level(1024.0, 1.0, 1.0, 10, 12).level, 2);
        let mut last = 0;
        for e in 1..60 {
            let j = linear_level((e as f64).exp2(), 1.5, 1.0, 30, 31).level;
            assert!(j >= last);
            last = j;
        }
    }

    #[test]
    fn inversion_cases() {
        let id = GalerkinMatrix::from_matrix(DMatrix::identity(4, 4)).unwrap();
        let beta = [0.3, -1.2, 0.7, 2.0];
        assert_eq!(
            invert_thresholded(&id, &beta, &[0.0; 4]).unwrap(),
            beta.to_vec()
        );
        let kj = GalerkinMatrix::from_matrix(DMatrix::from_row_slice(
            4,
            4,
            &[
                3.0, 1.0, 0.0, 0.5, 1.0, 2.0, 0.1, 0.0, 0.0, 0.1, 4.0, 0.2, 0.5, 0.0, 0.2, 1.0,
            ],
        ))
        .unwrap();
        assert_eq!(
            invert_thresholded(&kj, &beta, &[5.0; 4]).unwrap(),
            vec![0.0; 4]
        );

        let kj = GalerkinMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]))
            .unwrap();
        let a = invert_thresholded(&kj, &[1.5, 0.2], &[0.5, 0.5]).unwrap();
        assert!((a[0] - 2.0 / 3.0).abs() < 1e-15 && (a[1] + 1.0 / 3.0).abs() < 1e-15);
    }

    fn exact_counts(f: &[f64], t: f64) -> Vec<u64> {
        let w = 1.0 / f.len() as f64;
        f.iter().map(|v| (t * w * v).round() as u64).collect()
    }

    #[test]
    fn identity_operator_recovers_family_member() {
        let resolution = 8;
        let j = 3;
        let filter = WaveletFilter::symmlet6();
        let theta: Vec<f64> = (0..8)
            .map(|i| if i == 0 { 2.0 } else { 0.3 * (i as f64).cos() })
            .collect();
        let basis = ExpFamilyBasis::new(filter.clone(), resolution, j).unwrap();
        let f: Vec<f64> = basis.log_density(&theta).iter().map(|v| v.exp()).collect();
        let t = 1e15;
        let data = CountData::new(exact_counts(&f, t), t, 0).unwrap();
        let k = StiffnessMatrix::identity(resolution).unwrap();
        let cfg = EstimatorConfig {
            j_cap: j,
            threshold_scale: 0.0,
            s: Some(0.5),
            ..Default::default()
        };
        for est in [
            estimate_nonlinear(&data, &k, &filter, &cfg).unwrap(),
            estimate_linear(&data, &k, &filter, &cfg).unwrap(),
        ] {
            assert_eq!(est.model.level, j);
            assert!(est.diagnostics.residual <= cfg.newton.tol);
            let err = est
                .model
                .theta
                .iter()
                .zip(&theta)
                .fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            assert!(err < 1e-6, "{err}");
            assert!(est
                .model
                .evaluate()
                .unwrap()
                .values()
                .iter()
                .all(|&v| v > 0.0));
        }
    }

    #[test]
    fn zero_counts_are_infeasible() {
        let k = StiffnessMatrix::identity(6).unwrap();
        let data = CountData::new(vec![0; 64], 1e4, 0).unwrap();
        let err = estimate_nonlinear(
            &data,
            &k,
            &WaveletFilter::haar(),
            &EstimatorConfig::default(),
        )
        .unwrap_err();
        match err {
            Error::InfeasibleTarget {
                alpha_coarse,
                target,
                ..
            } => {
                assert_eq!(alpha_coarse, 0.0);
                assert!(target.iter().all(|&v| v == 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn resolution_mismatch_and_config_checks() {
        let k = StiffnessMatrix::identity(6).unwrap();
        let data = CountData::new(vec![1; 32], 1e4, 0).unwrap();
        assert!(matches!(
            estimate_nonlinear(
                &data,
                &k,
                &WaveletFilter::haar(),
                &EstimatorConfig::default()
            ),
            Err(Error::ResolutionMismatch {
                expected: 6,
                found: 5
            })
        ));
        assert!(estimate_linear(
            &CountData::new(vec![1; 64], 1e4, 0).unwrap(),
            &k,
            &WaveletFilter::haar(),
            &EstimatorConfig::default()
        )
        .is_err());
        let bad = EstimatorConfig {
            nu: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
