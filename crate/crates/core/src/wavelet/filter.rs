use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Supported orthonormal families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterFamily {
    Haar,
    Symmlet6,
}

impl FilterFamily {
    pub fn name(&self) -> &'static str {
        match self {
            FilterFamily::Haar => "haar",
            FilterFamily::Symmlet6 => "symmlet6",
        }
    }
}

impl fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FilterFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(FilterFamily::Haar),
            "symmlet6" | "sym6" => Ok(FilterFamily::Symmlet6),
            other => Err(Error::InvalidInput(format!(
                "unknown wavelet family '{other}'"
            ))),
        }
    }
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

// Least-asymmetric Daubechies filter with six vanishing moments, in the
// two-scale orientation φ(x) = √2 Σ h_m φ(2x − m). Solved to 20 digits from the
// orthonormality and vanishing-moment equations.
#[allow(clippy::excessive_precision)]
const SYMMLET6: [f64; 12] = [
    -0.0078007083250323804142,
    0.001767711864254007741,
    0.044724901770781384663,
    -0.021060292512370847992,
    -0.072637522786376583464,
    0.33792942172816583271,
    0.78764114102865099607,
    0.49105594192797373304,
    -0.048311742585698054971,
    -0.1179901111485200254,
    0.0034907120842221625153,
    0.015404109327044824299,
];

/// Orthonormal quadrature-mirror filter pair, stored as its low-pass taps.
///
/// The high-pass taps are `g_m = (-1)^m h_{L-1-m}`; for Haar this gives the
/// detail `(even − odd)/√2`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFilter {
    family: FilterFamily,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
    vanishing_moments: u32,
}

impl WaveletFilter {
    pub fn haar() -> Self {
        Self::build(FilterFamily::Haar, vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2], 1)
    }

    pub fn symmlet6() -> Self {
        Self::build(FilterFamily::Symmlet6, SYMMLET6.to_vec(), 6)
    }

    pub fn from_family(family: FilterFamily) -> Self {
        match family {
            FilterFamily::Haar => Self::haar(),
            FilterFamily::Symmlet6 => Self::symmlet6(),
        }
    }

    fn build(family: FilterFamily, lowpass: Vec<f64>, vanishing_moments: u32) -> Self {
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - m]
            })
            .collect();
        Self {
            family,
            lowpass,
            highpass,
            vanishing_moments,
        }
    }

    pub fn family(&self) -> FilterFamily {
        self.family
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    pub fn vanishing_moments(&self) -> u32 {
        self.vanishing_moments
    }

    pub fn support_len(&self) -> usize {
        self.lowpass.len()
    }

    /// Largest violation of the orthonormality conditions
    /// `Σ_m h_m h_{m+2l} = δ_l` and `Σ_m h_m = √2`.
    pub fn orthonormality_defect(&self) -> f64 {
        let h = &self.lowpass;
        let mut worst = (h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs();
        for shift in (0..h.len()).step_by(2) {
            let dot: f64 = (0..h.len() - shift).map(|m| h[m] * h[m + shift]).sum();
            let target = if shift == 0 { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
        worst
    }
}
