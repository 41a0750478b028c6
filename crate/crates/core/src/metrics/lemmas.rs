use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::loss::kl_divergence;
use super::theory::{family_member, sup_ratio};
use crate::estimator::{information_projection, ExpFamilyModel, NewtonConfig};
use crate::wavelet::{dwt_forward, SampledFunction, WaveletFilter};
use crate::{Error, Result};

/// Roundoff allowance for inequalities, relative to `max(1, |rhs|)`.
const INEQUALITY_ALLOWANCE: f64 = 1e-9;
/// Relative tolerance for identities.
const IDENTITY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `lhs ≤ rhs`.
    AtMost,
    /// `lhs = rhs` to relative tolerance.
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub lemma: String,
    pub instance: usize,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// False when the statement's hypothesis does not hold for this instance.
    pub applicable: bool,
    pub pass: bool,
}

impl LemmaCheck {
    pub fn at_most(lemma: &str, instance: usize, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        let allowance = INEQUALITY_ALLOWANCE * rhs.abs().max(1.0);
        Self {
            lemma: lemma.to_string(),
            instance,
            kind: CheckKind::AtMost,
            lhs,
            rhs,
            slack,
            applicable: true,
            pass: slack >= -allowance,
        }
    }

    pub fn equal(lemma: &str, instance: usize, lhs: f64, rhs: f64) -> Self {
        let slack = IDENTITY_TOLERANCE * lhs.abs().max(rhs.abs()) - (lhs - rhs).abs();
        Self {
            lemma: lemma.to_string(),
            instance,
            kind: CheckKind::Equal,
            lhs,
            rhs,
            slack,
            applicable: true,
            pass: slack >= 0.0,
        }
    }

    fn not_applicable(mut self) -> Self {
        self.applicable = false;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| !c.applicable || c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| c.applicable && !c.pass)
    }

    pub fn applicable(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| c.applicable)
    }

    pub fn extend(&mut self, other: LemmaReport) {
        self.checks.extend(other.checks);
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_positive(f: &SampledFunction, what: &str) -> Result<()> {
    match f.values().iter().position(|&v| !(v > 0.0)) {
        Some(k) => Err(Error::InvalidIntensity(format!(
            "{what} must be positive; bin {k} holds {}",
            f.values()[k]
        ))),
        None => Ok(()),
    }
}

/// Two-sided bounds on `Δ(f; h)` through `∫ f log²(f/h)` and `‖log(f/h)‖_∞`.
fn entropy_sandwich(
    f: &SampledFunction,
    h: &SampledFunction,
    instance: usize,
) -> Result<[LemmaCheck; 2]> {
    let delta = kl_divergence(f, h)?;
    let w = f.grid().bin_width();
    let mut sup = 0.0f64;
    let mut weighted = 0.0;
    for (&a, &b) in f.values().iter().zip(h.values()) {
        let u = (a / b).ln();
        sup = sup.max(u.abs());
        weighted += a * u * u;
    }
    weighted *= w;
    Ok([
        LemmaCheck::at_most(
            "entropy-lower",
            instance,
            0.5 * (-sup).exp() * weighted,
            delta,
        ),
        LemmaCheck::at_most("entropy-upper", instance, delta, 0.5 * sup.exp() * weighted),
    ])
}

/// Bounds between two members of `E_j`, with `b = exp(‖log f_{θ0}‖_∞)`.
///
/// The exponential factors use `A_j ‖θ0 − θ‖₂`, which dominates `‖log(f_{θ0}/f_θ)‖_∞`.
fn family_bounds(
    filter: &WaveletFilter,
    resolution: u32,
    theta0: &[f64],
    theta: &[f64],
    instance: usize,
) -> Result<[LemmaCheck; 3]> {
    let j = theta0.len().trailing_zeros();
    let (_, f0) = family_member(filter, resolution, theta0)?;
    let (_, f) = family_member(filter, resolution, theta)?;
    let a_j = sup_ratio(filter, resolution, j)?;
    let b = f0.map(f64::ln)?.sup_norm().exp();
    let dist = l2(&diff(theta0, theta));
    let log_ratio = f0
        .values()
        .iter()
        .zip(f.values())
        .fold(0.0f64, |m, (x, y)| m.max((x / y).ln().abs()));
    let delta = kl_divergence(&f0, &f)?;
    let spread = a_j * dist;
    Ok([
        LemmaCheck::at_most("family-log-ratio", instance, log_ratio, spread),
        LemmaCheck::at_most(
            "family-entropy-lower",
            instance,
            (-spread).exp() * dist * dist / (2.0 * b),
            delta,
        ),
        LemmaCheck::at_most(
            "family-entropy-upper",
            instance,
            delta,
            0.5 * b * spread.exp() * dist * dist,
        ),
    ])
}

/// Local stability of the moment map around `θ0`: if
/// `‖α − α0‖₂ ≤ 1/(2ebA_j)` then `θ(α)` exists and the three bounds hold.
pub fn stability_check(
    filter: &WaveletFilter,
    resolution: u32,
    theta0: &[f64],
    alpha: &[f64],
    instance: usize,
) -> Result<Vec<LemmaCheck>> {
    if alpha.len() != theta0.len() {
        return Err(Error::InvalidInput(format!(
            "alpha has {} entries, theta0 has {}",
            alpha.len(),
            theta0.len()
        )));
    }
    let j = theta0.len().trailing_zeros();
    let (basis, f0) = family_member(filter, resolution, theta0)?;
    let alpha0 = basis.moments(f0.values());
    let a_j = sup_ratio(filter, resolution, j)?;
    let b = f0.map(f64::ln)?.sup_norm().exp();
    let dist = l2(&diff(alpha, &alpha0));
    let radius = 1.0 / (2.0 * E * b * a_j);
    let applicable = dist <= radius;

    let projection = information_projection(alpha, filter, resolution, &NewtonConfig::default());
    let mut checks = vec![LemmaCheck::at_most(
        "stability-hypothesis",
        instance,
        dist,
        radius,
    )];
    match projection {
        Ok(p) => {
            let theta = p.model.theta.clone();
            let f = p.model.evaluate()?;
            let log_ratio = f0
                .values()
                .iter()
                .zip(f.values())
                .fold(0.0f64, |m, (x, y)| m.max((x / y).ln().abs()));
            checks.push(LemmaCheck::at_most(
                "stability-parameter",
                instance,
                l2(&diff(&theta, theta0)),
                2.0 * E * b * dist,
            ));
            checks.push(LemmaCheck::at_most(
                "stability-log-ratio",
                instance,
                log_ratio,
                2.0 * E * b * a_j * dist,
            ));
            checks.push(LemmaCheck::at_most(
                "stability-entropy",
                instance,
                kl_divergence(&f0, &f)?,
                2.0 * E * b * dist * dist,
            ));
        }
        Err(_) => {
            // Existence is part of the claim.
            checks.push(LemmaCheck::at_most(
                "stability-existence",
                instance,
                f64::INFINITY,
                0.0,
            ));
        }
    }
    if !applicable {
        checks = checks.into_iter().map(LemmaCheck::not_applicable).collect();
    }
    Ok(checks)
}

/// `Δ(f; f_θ) = Δ(f; f_{θ(α)}) + Δ(f_{θ(α)}; f_θ)` where `α` are the moments of `f`.
fn pythagorean(
    f: &SampledFunction,
    filter: &WaveletFilter,
    theta: &[f64],
    instance: usize,
) -> Result<Option<LemmaCheck>> {
    let resolution = f.resolution();
    let j = theta.len().trailing_zeros();
    let alpha = dwt_forward(f, filter, 0)?.truncated(j).to_vec();
    let Ok(projection) =
        information_projection(&alpha, filter, resolution, &NewtonConfig::default())
    else {
        return Ok(None);
    };
    let f_alpha = projection.model.evaluate()?;
    let (_, f_theta) = family_member(filter, resolution, theta)?;
    let lhs = kl_divergence(f, &f_theta)?;
    let rhs = kl_divergence(f, &f_alpha)? + kl_divergence(&f_alpha, &f_theta)?;
    Ok(Some(LemmaCheck::equal("pythagorean", instance, lhs, rhs)))
}

/// Evaluates the entropy sandwich, the family bounds, the Pythagorean
/// identity and the stability bound of `f` against each model.
pub fn lemma_suite(f: &SampledFunction, models: &[ExpFamilyModel]) -> Result<LemmaReport> {
    check_positive(f, "intensity")?;
    let resolution = f.resolution();
    let mut report = LemmaReport::default();
    for (instance, model) in models.iter().enumerate() {
        if model.resolution != resolution {
            return Err(Error::ResolutionMismatch {
                expected: resolution,
                found: model.resolution,
            });
        }
        let filter = WaveletFilter::from_family(model.filter);
        let h = model.evaluate()?;
        report.checks.extend(entropy_sandwich(f, &h, instance)?);

        let j = model.level;
        let alpha = dwt_forward(f, &filter, 0)?.truncated(j).to_vec();
        if let Some(check) = pythagorean(f, &filter, &model.theta, instance)? {
            report.checks.push(check);
        }
        if let Ok(p) = information_projection(&alpha, &filter, resolution, &NewtonConfig::default())
        {
            report.checks.extend(family_bounds(
                &filter,
                resolution,
                &p.model.theta,
                &model.theta,
                instance,
            )?);
        }
        report.checks.extend(stability_check(
            &filter,
            resolution,
            &model.theta,
            &alpha,
            instance,
        )?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{DyadicGrid, FilterFamily};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn random_theta(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> Vec<f64> {
        (0..m)
            .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect()
    }

    #[test]
    fn identical_intensities_have_zero_slack() {
        let f = SampledFunction::constant(DyadicGrid::new(5).unwrap(), 1.0).unwrap();
        let model = ExpFamilyModel::new(0, vec![0.0], FilterFamily::Haar, 5).unwrap();
        let report = lemma_suite(&f, &[model]).unwrap();
        assert!(report.all_pass());
        for c in report
            .checks
            .iter()
            .filter(|c| c.lemma.starts_with("entropy"))
        {
            assert_eq!((c.lhs, c.rhs, c.slack), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn constant_pair_sandwich() {
        let f = SampledFunction::constant(DyadicGrid::new(5).unwrap(), 2.0).unwrap();
        let h = SampledFunction::constant(DyadicGrid::new(5).unwrap(), 1.0).unwrap();
        let [lower, upper] = entropy_sandwich(&f, &h, 0).unwrap();
        let delta = 2.0 * LN_2 - 1.0;
        assert!((lower.rhs - delta).abs() < 1e-14);
        assert!((lower.lhs - 0.5 * LN_2 * LN_2).abs() < 1e-14);
        assert!((upper.rhs - 2.0 * LN_2 * LN_2).abs() < 1e-14);
        assert!(lower.pass && upper.pass);
    }

    #[test]
    fn randomized_family_bounds_at_level_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for filter in [WaveletFilter::haar(), WaveletFilter::symmlet6()] {
            for instance in 0..50 {
                let theta0 = random_theta(&mut rng, 8, 0.8);
                let theta = random_theta(&mut rng, 8, 0.8);
                for check in family_bounds(&filter, 7, &theta0, &theta, instance).unwrap() {
                    assert!(check.pass, "{check:?}");
                }
            }
        }
    }

    #[test]
    fn pythagorean_identity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let grid = DyadicGrid::new(7).unwrap();
        let filter = WaveletFilter::symmlet6();
        for instance in 0..20 {
            let (a, b, c) = (
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            );
            let f = SampledFunction::from_fn(grid, |x| {
                1.0 + a + b * (6.0 * x + c).sin().powi(2) + (x - c).abs()
            })
            .unwrap();
            let j = instance as u32 % 5;
            let theta = random_theta(&mut rng, 1 << j, 0.5);
            let check = pythagorean(&f, &filter, &theta, instance).unwrap().unwrap();
            assert!(check.pass, "{check:?}");
        }
    }

    #[test]
    fn stability_inside_the_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let filter = WaveletFilter::symmlet6();
        for instance in 0..20 {
            let theta0 = random_theta(&mut rng, 8, 0.5);
            let (basis, f0) = family_member(&filter, 7, &theta0).unwrap();
            let alpha0 = basis.moments(f0.values());
            let dir = random_theta(&mut rng, 8, 1.0);
            let b = f0.map(f64::ln).unwrap().sup_norm().exp();
            let radius = 1.0 / (2.0 * E * b * sup_ratio(&filter, 7, 3).unwrap());
            let scale = 0.9 * radius / l2(&dir);
            let alpha: Vec<f64> = alpha0
                .iter()
                .zip(&dir)
                .map(|(a, d)| a + scale * d)
                .collect();
            let checks = stability_check(&filter, 7, &theta0, &alpha, instance).unwrap();
            assert_eq!(checks.len(), 4);
            assert!(checks.iter().all(|c| c.applicable && c.pass), "{checks:?}");
        }
    }

    #[test]
    fn rejects_nonpositive_intensity() {
        let f = SampledFunction::constant(DyadicGrid::new(4).unwrap(), 0.0).unwrap();
        let model = ExpFamilyModel::new(0, vec![0.0], FilterFamily::Haar, 4).unwrap();
        assert!(lemma_suite(&f, &[model]).is_err());
    }
}
