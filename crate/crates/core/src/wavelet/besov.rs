use super::WaveletCoefficients;
use crate::{Error, Result};

/// Besov sequence norm
/// `(Σ_j (2^{jσ} ‖β_j‖_p)^q)^{1/q}` with `σ = s + d(1/2 − 1/p)`.
///
/// The scaling block is weighted as the coarsest level. `p` or `q` equal to
/// `f64::INFINITY` are handled as suprema.
pub fn besov_seq_norm(coeffs: &WaveletCoefficients, s: f64, p: f64, q: f64, d: u32) -> Result<f64> {
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "Besov indices require p, q >= 1 (p = {p}, q = {q})"
        )));
    }
    let sigma = s + d as f64 * (0.5 - 1.0 / p);
    if sigma < 0.0 {
        return Err(Error::InvalidInput(format!(
            "sigma = s + d(1/2 - 1/p) = {sigma} is negative"
        )));
    }

    let lp = |block: &[f64]| -> f64 {
        if p.is_infinite() {
            block.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        } else {
            block
                .iter()
                .map(|v| v.abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        }
    };

    let coarse = coeffs.coarse_level();
    let mut terms = Vec::with_capacity((coeffs.resolution() - coarse + 1) as usize);
    terms.push((coarse as f64 * sigma).exp2() * lp(coeffs.scaling()));
    for level in coarse..coeffs.resolution() {
        terms.push((level as f64 * sigma).exp2() * lp(coeffs.level(level)));
    }

    Ok(if q.is_infinite() {
        terms.into_iter().fold(0.0, f64::max)
    } else {
        terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    })
}
