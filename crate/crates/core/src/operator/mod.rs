//! Convolution operators on the circle and their Galerkin discretizations.

mod cache;
mod galerkin;
mod kernel;
mod stiffness;

pub use cache::{load_or_build, read_stiffness, write_stiffness};
pub use galerkin::{
    ellipticity_diagnostic, galerkin_block, galerkin_wavelet, wavelet_galerkin_matrix,
    GalerkinMatrix, GalerkinWavelet,
};
pub use kernel::KernelSpec;
pub use stiffness::{
    apply_operator, build_stiffness_matrix, cache_key, StiffnessMatrix, Structure,
    DEFAULT_QUAD_RESOLUTION,
};
