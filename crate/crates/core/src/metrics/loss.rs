use crate::wavelet::SampledFunction;
use crate::{Error, Result};

/// `Δ(f; f̂) = ∫ (f log(f/f̂) − f + f̂)` by the grid rule, with `0·log 0 = 0`.
pub fn kl_divergence(f: &SampledFunction, f_hat: &SampledFunction) -> Result<f64> {
    f.check_same_grid(f_hat)?;
    let mut sum = 0.0;
    for (k, (&a, &b)) in f.values().iter().zip(f_hat.values()).enumerate() {
        if !(b > 0.0) {
            return Err(Error::InvalidIntensity(format!(
                "estimate is not positive at bin {k} ({b})"
            )));
        }
        if a < 0.0 {
            return Err(Error::InvalidIntensity(format!(
                "intensity is negative at bin {k} ({a})"
            )));
        }
        let log_term = if a == 0.0 { 0.0 } else { a * (a / b).ln() };
        sum += log_term - a + b;
    }
    Ok(f.grid().bin_width() * sum)
}

pub fn l2_error(f: &SampledFunction, f_hat: &SampledFunction) -> Result<f64> {
    Ok(f.linear_combination(1.0, f_hat, -1.0)?.l2_norm())
}
