use crate::wavelet::{weight_level_of_flat, WaveletIndex};

/// `sign(x)·max(|x| − ε, 0)`.
pub fn soft_threshold(x: f64, eps: f64) -> f64 {
    debug_assert!(eps >= 0.0);
    x.signum() * (x.abs() - eps).max(0.0)
}

/// `2^{ν max(|λ|, 0)} t^{-1/2} √|ln t|`; the scaling slot counts as level 0.
pub fn threshold_schedule(index: WaveletIndex, t: f64, nu: f64) -> f64 {
    let level = index.level.max(0) as f64;
    (nu * level).exp2() * t.ln().abs().sqrt() / t.sqrt()
}

/// Thresholds for the flat block `{|λ| < j}`.
pub fn level_thresholds(j: u32, t: f64, nu: f64) -> Vec<f64> {
    let base = t.ln().abs().sqrt() / t.sqrt();
    (0..1usize << j)
        .map(|i| (nu * weight_level_of_flat(i) as f64).exp2() * base)
        .collect()
}

/// Smallest `j` with `2^{-j} ≤ t^{-1/(2ν)}`, i.e. `⌈log₂ t / (2ν)⌉`, capped.
pub fn cutoff_level(t: f64, nu: f64, j_cap: u32) -> u32 {
    let raw = t.log2() / (2.0 * nu);
    // Absorb rounding in log2 so exact powers of two land on their level.
    let level = (raw - 1e-9).ceil().max(0.0);
    (level as u32).min(j_cap)
}
