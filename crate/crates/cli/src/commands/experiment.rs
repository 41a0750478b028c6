use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unfold_core::estimator::Estimator;
use unfold_core::metrics::{
    kl_divergence, l2_error, rate_regression, theoretical_slope, LossKind, RateFit, RateTable,
};
use unfold_core::sim::{ensure_positive, simulate_counts};

use super::context::{Context, RunRecord};
use super::Summary;
use crate::error::CliError;
use crate::output::cell_seed;
use crate::svg::{Plot, Series};

struct Cell {
    t_index: usize,
    t: f64,
    replicate: usize,
    seed: u64,
}

struct Fit {
    level: u32,
    iterations: usize,
    residual: f64,
    n_surviving: usize,
    kl: f64,
    l2: f64,
    peak_bin: usize,
    f_hat: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub t: f64,
    pub replicate: usize,
    pub seed: u64,
    pub exit_code: i32,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub n_runs: usize,
    pub n_failed: usize,
    pub failures: Vec<Failure>,
    pub kl_fit: Option<RateFit>,
    pub l2_fit: Option<RateFit>,
    /// `−2s/(2s + 2ν + 1)` for the reference smoothness.
    pub theoretical_slope: f64,
    pub reference_s: f64,
    pub nu: f64,
}

const RUN_HEADER: &str =
    "t,replicate,seed,status,level,iterations,residual,n_surviving_coeffs,kl,l2,f_hat_min,peak_bin,peak_x\n";

pub(super) fn run(mut ctx: Context) -> Result<Summary, CliError> {
    let k = ctx.stiffness()?;
    let grid = ctx.grid();
    let f = ctx.config.intensity.sample(grid)?;
    ensure_positive(&f)?;
    let h = k.apply_operator(&f)?;
    let estimator = Estimator::new(k.clone(), ctx.filter(), ctx.config.estimator.clone())?;

    let cells: Vec<Cell> = ctx
        .config
        .t
        .iter()
        .enumerate()
        .flat_map(|(ti, &t)| {
            let master = ctx.config.seed;
            (0..ctx.config.replicates).map(move |rep| Cell {
                t_index: ti,
                t,
                replicate: rep,
                seed: cell_seed(master, ti, rep),
            })
        })
        .collect();

    // Collected in cell order whatever the scheduling.
    let results: Vec<Result<Fit, CliError>> = cells
        .par_iter()
        .map(|cell| -> Result<Fit, CliError> {
            let data = simulate_counts(&h, cell.t, cell.seed)?;
            let est = estimator.estimate(&data)?;
            let f_hat = est.model.evaluate()?;
            Ok(Fit {
                level: est.diagnostics.level,
                iterations: est.diagnostics.iterations,
                residual: est.diagnostics.residual,
                n_surviving: est.diagnostics.n_surviving_coeffs,
                kl: kl_divergence(&f, &f_hat)?,
                l2: l2_error(&f, &f_hat)?,
                peak_bin: f_hat.argmax(),
                f_hat: f_hat.into_values(),
            })
        })
        .collect();
    ctx.mark("sweep");

    let mut runs_csv = String::from(RUN_HEADER);
    let mut table = RateTable::default();
    let mut failures = Vec::new();
    let mut records = Vec::new();
    let mut overlays: Vec<Option<Vec<f64>>> = vec![None; ctx.config.t.len()];
    let n = grid.len() as f64;
    for (cell, result) in cells.iter().zip(&results) {
        let status = match result {
            Ok(fit) => {
                runs_csv.push_str(&format!(
                    "{},{},{},ok,{},{},{:e},{},{},{},{},{},{}\n",
                    cell.t,
                    cell.replicate,
                    cell.seed,
                    fit.level,
                    fit.iterations,
                    fit.residual,
                    fit.n_surviving,
                    fit.kl,
                    fit.l2,
                    fit.f_hat.iter().copied().fold(f64::INFINITY, f64::min),
                    fit.peak_bin,
                    fit.peak_bin as f64 / n
                ));
                table.push(cell.t, cell.replicate, LossKind::Kl, fit.kl);
                table.push(cell.t, cell.replicate, LossKind::L2, fit.l2);
                overlays[cell.t_index].get_or_insert_with(|| fit.f_hat.clone());
                "ok".to_string()
            }
            Err(err) => {
                runs_csv.push_str(&format!(
                    "{},{},{},failed,,,,,,,,,\n",
                    cell.t, cell.replicate, cell.seed
                ));
                failures.push(Failure {
                    t: cell.t,
                    replicate: cell.replicate,
                    seed: cell.seed,
                    exit_code: err.exit_code(),
                    error: err.to_string(),
                });
                "failed".to_string()
            }
        };
        records.push(RunRecord {
            t_index: cell.t_index,
            t: cell.t,
            replicate: cell.replicate,
            seed: cell.seed,
            status,
        });
    }

    let nu = ctx.config.estimator.nu;
    let reference_s = ctx.config.estimator.s.unwrap_or(ctx.config.reference_s);
    let report = ExperimentReport {
        n_runs: cells.len(),
        n_failed: failures.len(),
        failures,
        kl_fit: rate_regression(&table, LossKind::Kl).ok(),
        l2_fit: rate_regression(&table, LossKind::L2).ok(),
        theoretical_slope: theoretical_slope(reference_s, nu, 1.0),
        reference_s,
        nu,
    };

    ctx.out.write("runs.csv", &runs_csv)?;
    ctx.out.write("rate_table.csv", &table.to_csv())?;
    ctx.out.write_json("report.json", &report)?;

    let stamp = ctx.timestamp();
    let xs: Vec<f64> = (0..grid.len()).map(|k| k as f64 / n).collect();
    for (ti, overlay) in overlays.iter().enumerate() {
        let mut series = vec![Series::new(
            "true f",
            "black",
            xs.iter().copied().zip(f.values().iter().copied()).collect(),
        )];
        if let Some(values) = overlay {
            series.push(Series::new(
                "estimate",
                "#d62728",
                xs.iter().copied().zip(values.iter().copied()).collect(),
            ));
        }
        let plot = Plot {
            title: format!("intensity and estimate, t = {:e}", ctx.config.t[ti]),
            x_label: "x".into(),
            y_label: "intensity".into(),
            log_log: false,
            series,
        };
        ctx.out
            .write(&format!("overlay_t{ti}.svg"), &plot.render(stamp))?;
    }
    let means = table.mean_losses(LossKind::Kl);
    let mut series = vec![Series::new("mean KL", "#1f77b4", means.clone())];
    if let Some(&(t0, m0)) = means.first() {
        let slope = report.theoretical_slope;
        let reference = means
            .iter()
            .map(|&(t, _)| (t, m0 * (t / t0).powf(slope)))
            .collect();
        series.push(Series::new(format!("slope {slope:.2}"), "gray", reference).dashed());
    }
    let plot = Plot {
        title: "mean relative entropy against observation time".into(),
        x_label: "log10 t".into(),
        y_label: "log10 mean KL".into(),
        log_log: true,
        series,
    };
    ctx.out.write("rate.svg", &plot.render(stamp))?;

    if report.n_failed == report.n_runs {
        // Nothing usable; surface the first error's class.
        let first = results
            .into_iter()
            .find_map(Result::err)
            .expect("at least one run");
        return Err(first);
    }
    let message = match &report.kl_fit {
        Some(fit) => format!(
            "{} runs ({} failed); KL slope {:.3} (reference {:.3})",
            report.n_runs, report.n_failed, fit.slope, report.theoretical_slope
        ),
        None => format!("{} runs ({} failed)", report.n_runs, report.n_failed),
    };
    ctx.finish(Some(k.cache_key()), records, message)
}
