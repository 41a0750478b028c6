use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unfold_core::estimator::{Diagnostics, Estimator, ExpFamilyModel};
use unfold_core::sim::CountData;

use super::context::{Context, RunRecord};
use super::{RunOptions, Summary};
use crate::error::CliError;
use crate::output::function_csv;

/// `model.json`: the fitted family member plus solver diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelOutput {
    #[serde(flatten)]
    pub model: ExpFamilyModel,
    pub diagnostics: Diagnostics,
}

#[derive(Deserialize)]
struct SidecarIn {
    t: f64,
    seed: u64,
}

fn read_counts(path: &Path, ctx: &Context) -> Result<CountData, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let counts = CountData::counts_from_csv(&text)?;
    let sidecar = path.with_extension("json");
    let (t, seed) = if sidecar.exists() {
        let raw = fs::read_to_string(&sidecar).map_err(|e| CliError::io(&sidecar, e))?;
        let s: SidecarIn = serde_json::from_str(&raw).map_err(|e| CliError::Config {
            field: "counts".into(),
            message: format!("{}: {e}", sidecar.display()),
        })?;
        (s.t, s.seed)
    } else if ctx.config.t.len() == 1 {
        (ctx.config.t[0], ctx.config.seed)
    } else {
        return Err(CliError::Config {
            field: "t".into(),
            message: format!(
                "no sidecar {} and {} observation times configured; give exactly one",
                sidecar.display(),
                ctx.config.t.len()
            ),
        });
    };
    Ok(CountData::new(counts, t, seed)?)
}

pub(super) fn run(mut ctx: Context, opts: &RunOptions) -> Result<Summary, CliError> {
    let path = opts
        .counts
        .clone()
        .or_else(|| ctx.config.counts.clone())
        .ok_or_else(|| CliError::Config {
            field: "counts".into(),
            message: "estimate needs a count file (config `counts` or --counts)".into(),
        })?;
    let data = read_counts(&path, &ctx)?;
    if data.resolution != ctx.config.resolution {
        return Err(unfold_core::Error::ResolutionMismatch {
            expected: ctx.config.resolution,
            found: data.resolution,
        }
        .into());
    }
    let k = ctx.stiffness()?;
    let estimator = Estimator::new(k.clone(), ctx.filter(), ctx.config.estimator.clone())?;
    let estimate = estimator.estimate(&data)?;
    ctx.mark("estimate");
    let f_hat = estimate.model.evaluate()?;
    let diagnostics = estimate.diagnostics.clone();
    ctx.out.write_json(
        "model.json",
        &ModelOutput {
            model: estimate.model,
            diagnostics: diagnostics.clone(),
        },
    )?;
    ctx.out
        .write("f_hat.csv", &function_csv("f_hat", f_hat.values()))?;
    let message = format!(
        "j = {} ({} of {} coefficients kept), {} Newton iterations, residual {:.3e}",
        diagnostics.level,
        diagnostics.n_surviving_coeffs,
        diagnostics.n_coeffs,
        diagnostics.iterations,
        diagnostics.residual
    );
    let runs = vec![RunRecord {
        t_index: 0,
        t: data.t,
        replicate: 0,
        seed: data.seed,
        status: "ok".into(),
    }];
    ctx.finish(Some(k.cache_key()), runs, message)
}
