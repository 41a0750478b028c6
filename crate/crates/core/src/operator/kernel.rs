use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Symmetric kernels `k(x, y)` on `[0, 1)²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `−log(½|sin(π(y − x))|)`, a 1-periodic convolution kernel.
    LogPotentialPeriodized,
    /// `−log(½|sin((y − x)/2)|)` taken literally; Toeplitz but not circulant on `[0, 1]`.
    LogPotentialLiteral,
    Constant {
        value: f64,
    },
    /// Even 1-periodic profile `h(u)` tabulated at `u = m/M`, linearly interpolated.
    Tabulated {
        profile: Vec<f64>,
    },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Constant { value } if !value.is_finite() => Err(Error::InvalidInput(
                format!("constant kernel value {value} is not finite"),
            )),
            KernelSpec::Tabulated { profile } => {
                if profile.is_empty() || profile.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput(
                        "tabulated kernel profile must be non-empty and finite".into(),
                    ));
                }
                let m = profile.len();
                for i in 1..m {
                    let (a, b) = (profile[i], profile[m - i]);
                    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                        return Err(Error::InvalidInput(format!(
                            "tabulated kernel profile is not even: h[{i}] = {a}, h[{}] = {b}",
                            m - i
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            KernelSpec::LogPotentialPeriodized | KernelSpec::LogPotentialLiteral
        )
    }

    /// Whether the Haar stiffness matrix is circulant.
    pub fn is_circulant(&self) -> bool {
        !matches!(self, KernelSpec::LogPotentialLiteral)
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::LogPotentialPeriodized => "log-potential-periodized",
            KernelSpec::LogPotentialLiteral => "log-potential-literal",
            KernelSpec::Constant { .. } => "constant",
            KernelSpec::Tabulated { .. } => "tabulated",
        }
    }

    /// Stable textual key, used for stiffness caches.
    pub fn key(&self) -> String {
        match self {
            KernelSpec::Constant { value } => format!("constant({value:?})"),
            KernelSpec::Tabulated { profile } => {
                // FNV-1a over the bit patterns.
                let mut hash: u64 = 0xcbf29ce484222325;
                for v in profile {
                    for byte in v.to_bits().to_le_bytes() {
                        hash ^= byte as u64;
                        hash = hash.wrapping_mul(0x100000001b3);
                    }
                }
                format!("tabulated({},{hash:016x})", profile.len())
            }
            other => other.name().to_string(),
        }
    }

    /// Convolution profile `h(u)` with `k(x, y) = h(x − y)`, for `u ∈ (−1, 1)`.
    ///
    /// Singular kinds return `None` where the profile blows up.
    pub fn profile(&self, u: f64) -> Option<f64> {
        match self {
            KernelSpec::LogPotentialPeriodized => {
                let s = (PI * u).sin().abs();
                (s > 0.0).then(|| -(0.5 * s).ln())
            }
            KernelSpec::LogPotentialLiteral => {
                let s = (0.5 * u).sin().abs();
                (s > 0.0).then(|| -(0.5 * s).ln())
            }
            KernelSpec::Constant { value } => Some(*value),
            KernelSpec::Tabulated { profile } => {
                let m = profile.len();
                let pos = u.rem_euclid(1.0) * m as f64;
                let i = (pos.floor() as usize).min(m - 1);
                let frac = pos - i as f64;
                Some(profile[i] * (1.0 - frac) + profile[(i + 1) % m] * frac)
            }
        }
    }

    /// Pointwise kernel value; singular kinds refuse the diagonal.
    pub fn kernel_eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&x) || !(0.0..1.0).contains(&y) {
            return Err(Error::InvalidInput(format!(
                "kernel arguments ({x}, {y}) outside [0, 1)"
            )));
        }
        self.profile(x - y).ok_or(Error::DiagonalSingularity { x })
    }

    /// Splits the profile as `h(u) = constant − Σ_i ln|u − a_i| + smooth(u)` on
    /// the range used by the stiffness quadrature; `None` for regular kinds.
    pub(crate) fn singular_split(&self) -> Option<SingularSplit> {
        match self {
            // sin(πu) = πu(1 − u)·S(u) with S > 0 smooth on (−1, 2).
            KernelSpec::LogPotentialPeriodized => Some(SingularSplit {
                constant: LN_2 - PI.ln(),
                log_points: &[0.0, 1.0],
                smooth: periodized_remainder,
            }),
            // sin(u/2) = (u/2)·sinc(u/2), sinc > 0 on (−2π, 2π).
            KernelSpec::LogPotentialLiteral => Some(SingularSplit {
                constant: 2.0 * LN_2,
                log_points: &[0.0],
                smooth: literal_remainder,
            }),
            _ => None,
        }
    }
}

pub(crate) struct SingularSplit {
    pub constant: f64,
    pub log_points: &'static [f64],
    pub smooth: fn(f64) -> f64,
}

fn periodized_remainder(u: f64) -> f64 {
    // −ln S(u), evaluated from the nearer zero of sin(πu).
    if u < 0.5 {
        -(sinc(PI * u).ln() - (1.0 - u).ln())
    } else {
        let v = 1.0 - u;
        -(sinc(PI * v).ln() - u.ln())
    }
}

fn literal_remainder(u: f64) -> f64 {
    -sinc(0.5 * u).ln()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
