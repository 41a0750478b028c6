#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN.

//! Wavelet-Galerkin estimation of Poisson intensities observed through a
//! smoothing integral operator.
//!
//! The crate is organised bottom-up:
//!
//! - [`wavelet`]: periodic orthonormal transforms on dyadic grids, basis
//!   synthesis, multiresolution projections and Besov sequence norms.
//! - [`operator`]: convolution kernels on the circle, their Haar stiffness
//!   matrices and the wavelet-domain Galerkin matrices.
//! - [`sim`]: test intensities, folding and seeded binned Poisson counts.
//! - [`estimator`]: empirical coefficients, level-dependent soft thresholding,
//!   Galerkin inversion and the exponential-family information projection.
//! - [`metrics`]: losses, theory constants, lemma checks and rate regression.

pub mod error;
pub mod estimator;
pub mod metrics;
pub mod operator;
pub mod sim;
pub mod wavelet;

pub use error::{Error, Result};
