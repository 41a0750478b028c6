use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use unfold_core::operator::{load_or_build, StiffnessMatrix};
use unfold_core::sim::IntensitySpec;
use unfold_core::wavelet::{DyadicGrid, WaveletFilter};

use super::{Command, RunOptions, Summary};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{unix_seconds, OutputDir};

pub(super) struct Context {
    pub command: Command,
    pub config: ExperimentConfig,
    pub out: OutputDir,
    pub timestamps: bool,
    started: Instant,
    timings: Vec<(String, f64)>,
}

/// One simulated or estimated data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub t_index: usize,
    pub t: f64,
    pub replicate: usize,
    pub seed: u64,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub stiffness_key: Option<String>,
    pub runs: Vec<RunRecord>,
    pub notes: Vec<String>,
    pub outputs: Vec<String>,
    /// Wall-clock seconds per phase; omitted with `--no-timestamp`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Vec<(String, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generated_at: Option<u64>,
}

impl Context {
    pub fn new(command: Command, opts: &RunOptions) -> Result<Self, CliError> {
        let started = Instant::now();
        let mut config = ExperimentConfig::load(&opts.config)?;
        if let Some(seed) = opts.seed {
            config.seed = seed;
        }
        if let Some(out) = &opts.out {
            config.output_dir = Some(out.clone());
        }
        let out = OutputDir::create(config.output_dir())?;
        Ok(Self {
            command,
            config,
            out,
            timestamps: !opts.no_timestamp,
            started,
            timings: Vec::new(),
        })
    }

    pub fn grid(&self) -> DyadicGrid {
        DyadicGrid::new(self.config.resolution).expect("validated resolution")
    }

    pub fn filter(&self) -> WaveletFilter {
        WaveletFilter::from_family(self.config.filter)
    }

    pub fn stiffness(&mut self) -> Result<Arc<StiffnessMatrix>, CliError> {
        let dir = self.config.cache_dir();
        let (k, _) = load_or_build(
            &dir,
            &self.config.kernel,
            self.config.resolution,
            self.config.quad_resolution,
        )?;
        self.mark("stiffness");
        Ok(Arc::new(k))
    }

    pub fn mark(&mut self, phase: &str) {
        self.timings
            .push((phase.to_string(), self.started.elapsed().as_secs_f64()));
    }

    pub fn timestamp(&self) -> Option<u64> {
        self.timestamps.then(unix_seconds)
    }

    fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if matches!(self.config.intensity, IntensitySpec::Fred { .. }) {
            notes.push(
                "FRED peak parameters are artifact-chosen defaults, not values from the source study"
                    .to_string(),
            );
        }
        notes
    }

    /// Writes `<command>-manifest.json` and returns the command summary.
    pub fn finish(
        mut self,
        stiffness_key: Option<String>,
        runs: Vec<RunRecord>,
        message: String,
    ) -> Result<Summary, CliError> {
        self.mark("total");
        let name = format!("{}-manifest.json", self.command.name());
        let mut outputs = self.out.inventory();
        outputs.push(name.clone());
        let manifest = Manifest {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.name().to_string(),
            config: self.config.clone(),
            stiffness_key,
            runs,
            notes: self.notes(),
            outputs,
            timings: self.timestamps.then(|| self.timings.clone()),
            generated_at: self.timestamp(),
        };
        self.out.write_json(&name, &manifest)?;
        Ok(Summary {
            output_dir: self.out.root().to_path_buf(),
            files: self.out.inventory(),
            message,
        })
    }
}
