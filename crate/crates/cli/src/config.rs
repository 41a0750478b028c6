use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unfold_core::estimator::EstimatorConfig;
use unfold_core::operator::{KernelSpec, DEFAULT_QUAD_RESOLUTION};
use unfold_core::sim::IntensitySpec;
use unfold_core::wavelet::FilterFamily;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Settings of the `diagnose` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Highest level for the theory constants; capped at `J − 1`.
    pub j_max: u32,
    /// Highest Galerkin level for ellipticity and Galerkin-wavelet norms.
    pub galerkin_j_max: u32,
    pub ellipticity_samples: usize,
    /// Randomly perturbed family members per level fed to the lemma suite.
    pub lemma_models_per_level: usize,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            j_max: 8,
            galerkin_j_max: 6,
            ellipticity_samples: 200,
            lemma_models_per_level: 3,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub kernel: KernelSpec,
    pub intensity: IntensitySpec,
    #[serde(rename = "J")]
    pub resolution: u32,
    #[serde(default = "default_quad_resolution")]
    pub quad_resolution: u32,
    pub filter: FilterFamily,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub t: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Directory for persisted stiffness matrices; defaults to `<output_dir>/cache`.
    #[serde(default)]
    pub stiffness_cache: Option<PathBuf>,
    /// Count file read by `estimate`.
    #[serde(default)]
    pub counts: Option<PathBuf>,
    /// Smoothness used for the reference slope in rate plots.
    #[serde(default = "default_reference_s")]
    pub reference_s: f64,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
}

fn default_quad_resolution() -> u32 {
    DEFAULT_QUAD_RESOLUTION
}

fn default_replicates() -> usize {
    1
}

fn default_reference_s() -> f64 {
    1.0
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Reads a config, or the `config` member of a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| invalid("<root>", format!("{}: {e}", path.display())))?;
        if value.get("artifact_version").is_some() {
            value = value
                .get_mut("config")
                .map(serde_json::Value::take)
                .ok_or_else(|| invalid("config", "manifest has no config member"))?;
        }
        let mut cfg = Self::from_value(value)
            .map_err(|e| invalid("<root>", format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| invalid("<root>", e.to_string()))?;
        let cfg = Self::from_value(value).map_err(|e| invalid("<root>", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_value(value: serde_json::Value) -> Result<Self, String> {
        let cfg: ExperimentConfig =
            serde_json::from_value(value.clone()).map_err(|e| e.to_string())?;
        // Tagged unit variants (`{"kind": "peak"}`) slip past deny_unknown_fields.
        for (field, echo) in [
            ("kernel", serde_json::to_value(&cfg.kernel)),
            ("intensity", serde_json::to_value(&cfg.intensity)),
        ] {
            let echo = echo.map_err(|e| e.to_string())?;
            if let (Some(raw), Some(known)) = (
                value.get(field).and_then(|v| v.as_object()),
                echo.as_object(),
            ) {
                if let Some(extra) = raw.keys().find(|k| !known.contains_key(*k)) {
                    return Err(format!("unknown field `{extra}` in {field}"));
                }
            }
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.output_dir,
            &mut self.stiffness_cache,
            &mut self.counts,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if !(3..=16).contains(&self.resolution) {
            return Err(invalid(
                "J",
                format!("must lie in 3..=16, got {}", self.resolution),
            ));
        }
        if self.quad_resolution < self.resolution + 2 || self.quad_resolution > 30 {
            return Err(invalid(
                "quad_resolution",
                format!(
                    "must lie in {}..=30 for J = {}, got {}",
                    self.resolution + 2,
                    self.resolution,
                    self.quad_resolution
                ),
            ));
        }
        if self.t.is_empty() {
            return Err(invalid("t", "at least one observation time is required"));
        }
        for (i, &t) in self.t.iter().enumerate() {
            if !(t > 1.0) || !t.is_finite() {
                return Err(invalid(
                    &format!("t[{i}]"),
                    format!("must be finite and > 1, got {t}"),
                ));
            }
            if i > 0 && !(t > self.t[i - 1]) {
                return Err(invalid(
                    &format!("t[{i}]"),
                    "t values must be strictly increasing",
                ));
            }
        }
        if self.replicates == 0 {
            return Err(invalid("replicates", "must be at least 1"));
        }
        if !(self.reference_s > 0.0) {
            return Err(invalid("reference_s", "must be positive"));
        }
        self.kernel
            .validate()
            .map_err(|e| invalid("kernel", e.to_string()))?;
        self.intensity
            .validate()
            .map_err(|e| invalid("intensity", e.to_string()))?;
        self.estimator
            .validate()
            .map_err(|e| invalid("estimator", e.to_string()))?;
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("unfold-out"))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.stiffness_cache
            .clone()
            .unwrap_or_else(|| self.output_dir().join("cache"))
    }
}
