use serde::Serialize;
use unfold_core::operator::KernelSpec;
use unfold_core::sim::{ensure_positive, simulate_counts, IntensitySpec, Provenance};

use super::context::{Context, RunRecord};
use super::Summary;
use crate::error::CliError;
use crate::output::cell_seed;

/// Sidecar written next to each count file.
#[derive(Serialize)]
pub(super) struct CountsSidecar<'a> {
    #[serde(rename = "J")]
    pub resolution: u32,
    pub t: f64,
    pub seed: u64,
    pub kernel_key: String,
    pub kernel: &'a KernelSpec,
    pub intensity: &'a IntensitySpec,
}

pub(super) fn counts_stem(t_index: usize, replicate: usize) -> String {
    format!("counts_t{t_index}_r{replicate}")
}

pub(super) fn run(mut ctx: Context) -> Result<Summary, CliError> {
    let k = ctx.stiffness()?;
    let f = ctx.config.intensity.sample(ctx.grid())?;
    ensure_positive(&f)?;
    let h = k.apply_operator(&f)?;
    let mut runs = Vec::new();
    let provenance = Provenance {
        intensity: ctx.config.intensity.clone(),
        kernel: ctx.config.kernel.clone(),
    };
    for (ti, &t) in ctx.config.t.clone().iter().enumerate() {
        for rep in 0..ctx.config.replicates {
            let seed = cell_seed(ctx.config.seed, ti, rep);
            let mut data = simulate_counts(&h, t, seed)?;
            data.provenance = Some(provenance.clone());
            let stem = counts_stem(ti, rep);
            ctx.out.write(&format!("{stem}.csv"), &data.to_csv())?;
            ctx.out.write_json(
                &format!("{stem}.json"),
                &CountsSidecar {
                    resolution: data.resolution,
                    t,
                    seed,
                    kernel_key: k.cache_key(),
                    kernel: &ctx.config.kernel,
                    intensity: &ctx.config.intensity,
                },
            )?;
            runs.push(RunRecord {
                t_index: ti,
                t,
                replicate: rep,
                seed,
                status: "ok".into(),
            });
        }
    }
    ctx.mark("simulate");
    let message = format!("simulated {} count sets", runs.len());
    ctx.finish(Some(k.cache_key()), runs, message)
}
