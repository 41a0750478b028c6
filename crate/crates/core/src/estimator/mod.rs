//! Empirical wavelet coefficients, thresholding, Galerkin inversion and the
//! information projection onto the wavelet exponential family.

mod model;
mod pipeline;
mod projection;
mod threshold;

pub use model::{ExpFamilyBasis, ExpFamilyModel};
pub use pipeline::{
    empirical_coeffs, estimate_linear, estimate_nonlinear, invert_thresholded, linear_level,
    nonlinear_level, Diagnostics, Estimate, Estimator, EstimatorConfig, LevelChoice, ThresholdMode,
};
pub use projection::{information_projection, NewtonConfig, Projection};
pub use threshold::{cutoff_level, level_thresholds, soft_threshold, threshold_schedule};
