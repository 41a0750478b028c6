use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

use super::model::{ExpFamilyBasis, ExpFamilyModel};
use crate::wavelet::WaveletFilter;
use crate::{Error, Result};

/// Damped Newton–Raphson settings for the information projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    /// Sup-norm tolerance on the moment residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest step multiplier tried before giving up.
    pub damping_floor: f64,
    /// Bound on `|Σ θ_λ ψ_λ|` over the grid during iteration.
    pub exponent_bound: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            damping_floor: (-20f64).exp2(),
            exponent_bound: 50.0,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Newton tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput(
                "Newton max_iter must be at least 1".into(),
            ));
        }
        if !(self.damping_floor > 0.0 && self.damping_floor <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "damping floor must lie in (0, 1], got {}",
                self.damping_floor
            )));
        }
        if !(self.exponent_bound > 0.0) {
            return Err(Error::InvalidInput(format!(
                "exponent bound must be positive, got {}",
                self.exponent_bound
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub model: ExpFamilyModel,
    pub iterations: usize,
    /// Final `‖α − ⟨f_{j,θ}, ψ⟩‖_∞`.
    pub residual: f64,
}

struct State {
    theta: Vec<f64>,
    values: Vec<f64>,
    score: Vec<f64>,
}

impl State {
    fn sup(&self) -> f64 {
        self.score.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn l2(&self) -> f64 {
        self.score.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

enum Trial {
    Ok(State),
    Overflow(f64),
}

fn evaluate(basis: &ExpFamilyBasis, alpha: &[f64], theta: Vec<f64>, bound: f64) -> Trial {
    let g = basis.log_density(&theta);
    let max_abs = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(max_abs <= bound) {
        return Trial::Overflow(max_abs);
    }
    let values: Vec<f64> = g.iter().map(|v| v.exp()).collect();
    let moments = basis.moments(&values);
    let score = alpha.iter().zip(&moments).map(|(a, m)| a - m).collect();
    Trial::Ok(State {
        theta,
        values,
        score,
    })
}

/// Finds `θ` with `⟨f_{j,θ}, ψ_λ⟩ = α_λ` for all `|λ| < j`, where `2^j = α.len()`.
///
/// Moments and Hessian use grid quadrature at resolution `J`.
pub fn information_projection(
    alpha: &[f64],
    filter: &WaveletFilter,
    resolution: u32,
    cfg: &NewtonConfig,
) -> Result<Projection> {
    cfg.validate()?;
    let m = alpha.len();
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "target has {m} entries; expected 2^j"
        )));
    }
    let level = m.trailing_zeros();
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "projection target must be finite".into(),
        ));
    }
    let infeasible = |reason: String, residual: f64| Error::InfeasibleTarget {
        reason,
        alpha_coarse: alpha[0],
        residual,
        target: alpha.to_vec(),
    };
    if !(alpha[0] > 0.0) {
        return Err(infeasible(
            format!(
                "alpha_coarse = {} is not positive; zero or negative mass",
                alpha[0]
            ),
            f64::NAN,
        ));
    }
    let basis = ExpFamilyBasis::new(filter.clone(), resolution, level)?;

    let mut theta0 = vec![0.0; m];
    theta0[0] = alpha[0].ln();
    let mut state = match evaluate(&basis, alpha, theta0, cfg.exponent_bound) {
        Trial::Ok(s) => s,
        Trial::Overflow(max_abs) => {
            return Err(Error::ExponentOverflow {
                max_abs,
                bound: cfg.exponent_bound,
            })
        }
    };

    for iteration in 0..cfg.max_iter {
        let residual = state.sup();
        if residual <= cfg.tol {
            return Ok(Projection {
                model: ExpFamilyModel::new(level, state.theta, filter.family(), resolution)?,
                iterations: iteration,
                residual,
            });
        }
        let hessian = basis.hessian(&state.values);
        let chol = Cholesky::new(hessian).ok_or(Error::SingularHessian { iteration })?;
        let step = chol.solve(&DVector::from_column_slice(&state.score));

        let current = state.l2();
        let mut gamma = 1.0;
        let mut overflow = None;
        let mut any_finite = false;
        loop {
            let trial_theta: Vec<f64> = state
                .theta
                .iter()
                .zip(step.iter())
                .map(|(t, d)| t + gamma * d)
                .collect();
            match evaluate(&basis, alpha, trial_theta, cfg.exponent_bound) {
                Trial::Ok(trial) => {
                    any_finite = true;
                    if trial.l2() < current || trial.sup() <= cfg.tol {
                        state = trial;
                        break;
                    }
                }
                Trial::Overflow(max_abs) => {
                    overflow = Some(overflow.map_or(max_abs, |m: f64| m.min(max_abs)));
                }
            }
            gamma *= 0.5;
            if gamma < cfg.damping_floor {
                return Err(match overflow {
                    Some(max_abs) if !any_finite => Error::ExponentOverflow {
                        max_abs,
                        bound: cfg.exponent_bound,
                    },
                    _ => infeasible(
                        format!("damping floor reached at iteration {iteration}"),
                        residual,
                    ),
                });
            }
        }
    }
    let residual = state.sup();
    if residual <= cfg.tol {
        return Ok(Projection {
            model: ExpFamilyModel::new(level, state.theta, filter.family(), resolution)?,
            iterations: cfg.max_iter,
            residual,
        });
    }
    Err(infeasible(
        format!("no convergence in {} Newton iterations", cfg.max_iter),
        residual,
    ))
}
