//! Test intensities, folding through the operator, and binned Poisson data.

mod counts;
mod intensity;

pub use counts::{simulate_counts, CountData, Provenance};
pub use intensity::{
    ensure_positive, fold_intensity, fred_intensity, peak_intensity, FredPeak, IntensitySpec,
};
