use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::operator::StiffnessMatrix;
use crate::wavelet::{DyadicGrid, SampledFunction};
use crate::{Error, Result};

/// One burst component `a exp(−|x − m| / σ^ν)`, with `σ` the rise scale
/// left of `m` and the decay scale right of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FredPeak {
    pub amplitude: f64,
    pub location: f64,
    pub rise: f64,
    pub decay: f64,
    pub peakedness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IntensitySpec {
    /// `max{1 − |30(x − 0.5)|, 0.1}`.
    Peak,
    /// Fast rise, exponential decay bursts over a constant background.
    Fred {
        background: f64,
        peaks: Vec<FredPeak>,
    },
    Constant {
        value: f64,
    },
    /// `exp(offset + amplitude·sin 2πx)`.
    ExpSine {
        offset: f64,
        amplitude: f64,
    },
    /// Piecewise constant on `values.len()` equal bins of `[0, 1)`.
    Tabulated {
        values: Vec<f64>,
    },
}

impl IntensitySpec {
    /// Three-burst profile on a background of 20 used by the shipped configs.
    /// The peak parameters are our own choice.
    pub fn fred_default() -> Self {
        let peak = |amplitude, location, rise, decay| FredPeak {
            amplitude,
            location,
            rise,
            decay,
            peakedness: 1.0,
        };
        IntensitySpec::Fred {
            background: 20.0,
            peaks: vec![
                peak(300.0, 0.2, 0.005, 0.03),
                peak(180.0, 0.45, 0.008, 0.04),
                peak(120.0, 0.7, 0.01, 0.05),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IntensitySpec::Fred { background, peaks } => {
                if !background.is_finite() || *background < 0.0 {
                    return Err(Error::InvalidIntensity(format!(
                        "FRED background must be finite and nonnegative, got {background}"
                    )));
                }
                for (i, p) in peaks.iter().enumerate() {
                    if !(p.rise > 0.0 && p.decay > 0.0) {
                        return Err(Error::InvalidIntensity(format!(
                            "FRED peak {i}: rise and decay scales must be positive"
                        )));
                    }
                    if !(p.amplitude >= 0.0) || !p.amplitude.is_finite() {
                        return Err(Error::InvalidIntensity(format!(
                            "FRED peak {i}: amplitude must be finite and nonnegative"
                        )));
                    }
                    if !p.peakedness.is_finite() || !p.location.is_finite() {
                        return Err(Error::InvalidIntensity(format!(
                            "FRED peak {i}: location and peakedness must be finite"
                        )));
                    }
                }
                Ok(())
            }
            IntensitySpec::Constant { value } if !value.is_finite() || *value < 0.0 => Err(
                Error::InvalidIntensity(format!("constant intensity {value} is invalid")),
            ),
            IntensitySpec::ExpSine { offset, amplitude }
                if !offset.is_finite() || !amplitude.is_finite() =>
            {
                Err(Error::InvalidIntensity(
                    "exp-sine parameters must be finite".into(),
                ))
            }
            IntensitySpec::Tabulated { values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidIntensity(
                        "tabulated intensity must be non-empty, finite and nonnegative".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(match self {
            IntensitySpec::Peak => peak_intensity(x),
            IntensitySpec::Fred { .. } => fred_intensity(x, self)?,
            IntensitySpec::Constant { value } => *value,
            IntensitySpec::ExpSine { offset, amplitude } => {
                (offset + amplitude * (2.0 * PI * x).sin()).exp()
            }
            IntensitySpec::Tabulated { values } => {
                let i = ((x.rem_euclid(1.0) * values.len() as f64) as usize).min(values.len() - 1);
                values[i]
            }
        })
    }

    /// Values at the grid points.
    pub fn sample(&self, grid: DyadicGrid) -> Result<SampledFunction> {
        self.validate()?;
        let values = grid
            .points()
            .map(|x| self.eval(x))
            .collect::<Result<Vec<_>>>()?;
        SampledFunction::new(grid, values)
    }
}

pub fn peak_intensity(x: f64) -> f64 {
    (1.0 - (30.0 * (x - 0.5)).abs()).max(0.1)
}

pub fn fred_intensity(x: f64, spec: &IntensitySpec) -> Result<f64> {
    let IntensitySpec::Fred { background, peaks } = spec else {
        return Err(Error::InvalidIntensity(format!(
            "expected a FRED specification, got {spec:?}"
        )));
    };
    spec.validate()?;
    let bursts: f64 = peaks
        .iter()
        .map(|p| {
            let scale = if x <= p.location { p.rise } else { p.decay };
            p.amplitude * (-(x - p.location).abs() / scale.powf(p.peakedness)).exp()
        })
        .sum();
    Ok(background + bursts)
}

/// Fails unless every sample is strictly positive.
pub fn ensure_positive(f: &SampledFunction) -> Result<()> {
    match f.values().iter().position(|&v| !(v > 0.0)) {
        Some(k) => Err(Error::InvalidIntensity(format!(
            "intensity is not strictly positive at bin {k} (value {})",
            f.values()[k]
        ))),
        None => Ok(()),
    }
}

/// `h = K f` on the stiffness grid.
pub fn fold_intensity(spec: &IntensitySpec, k: &StiffnessMatrix) -> Result<SampledFunction> {
    let grid = DyadicGrid::new(k.resolution())?;
    let f = spec.sample(grid)?;
    k.apply_operator(&f)
}
