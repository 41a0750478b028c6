use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Kl,
    L2,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Kl => "kl",
            LossKind::L2 => "l2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub t: f64,
    pub replicate: usize,
    pub loss_kind: LossKind,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn push(&mut self, t: f64, replicate: usize, loss_kind: LossKind, value: f64) {
        self.rows.push(RateRow {
            t,
            replicate,
            loss_kind,
            value,
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,replicate,loss_kind,value\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.t, r.replicate, r.loss_kind, r.value
            ));
        }
        out
    }

    /// Distinct `t` in increasing order with the mean loss over replicates,
    /// summed in replicate order.
    pub fn mean_losses(&self, kind: LossKind) -> Vec<(f64, f64)> {
        let mut rows: Vec<&RateRow> = self.rows.iter().filter(|r| r.loss_kind == kind).collect();
        rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.replicate.cmp(&b.replicate)));
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for r in rows {
            match out.last_mut() {
                Some((t, sum, n)) if *t == r.t => {
                    *sum += r.value;
                    *n += 1;
                }
                _ => out.push((r.t, r.value, 1)),
            }
        }
        out.into_iter()
            .map(|(t, sum, n)| (t, sum / n as f64))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub loss_kind: LossKind,
    pub slope: f64,
    pub intercept: f64,
    /// Residual standard error of the log-log fit; zero with two points.
    pub residual_se: f64,
    pub mean_losses: Vec<(f64, f64)>,
}

/// Least squares of `log(mean loss)` on `log t`.
pub fn rate_regression(table: &RateTable, kind: LossKind) -> Result<RateFit> {
    let means = table.mean_losses(kind);
    if means.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "rate regression needs at least two distinct t, got {}",
            means.len()
        )));
    }
    if let Some(&(t, m)) = means.iter().find(|(t, m)| !(*t > 0.0) || !(*m > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "cannot take logarithms of t = {t}, mean loss = {m}"
        )));
    }
    let xs: Vec<f64> = means.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = means.iter().map(|(_, m)| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let residual_se = if xs.len() > 2 {
        (rss / (n - 2.0)).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        loss_kind: kind,
        slope,
        intercept,
        residual_se,
        mean_losses: means,
    })
}

/// `−2s / (2s + 2ν + d)`.
pub fn theoretical_slope(s: f64, nu: f64, d: f64) -> f64 {
    -2.0 * s / (2.0 * s + 2.0 * nu + d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(f: impl Fn(f64, usize) -> f64) -> RateTable {
        let mut t = RateTable::default();
        for &x in &[1e4, 1e5, 1e6, 1e7] {
            for rep in 0..3 {
                t.push(x, rep, LossKind::Kl, f(x, rep));
                t.push(x, rep, LossKind::L2, 1.0);
            }
        }
        t
    }

    #[test]
    fn exact_power_law() {
        let fit = rate_regression(&table(|t, _| 3.0 * t.powf(-0.5)), LossKind::Kl).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(fit.residual_se < 1e-12);
    }

    #[test]
    fn constant_losses_have_zero_slope() {
        let fit = rate_regression(&table(|_, _| 1.0), LossKind::L2).unwrap();
        assert!(fit.slope.abs() < 1e-15);
    }

    #[test]
    fn means_are_over_replicates() {
        let t = table(|t, rep| t.powf(-1.0) * (1.0 + rep as f64));
        let means = t.mean_losses(LossKind::Kl);
        assert_eq!(means.len(), 4);
        assert!((means[0].1 - 2e-4).abs() < 1e-16);
        let fit = rate_regression(&t, LossKind::Kl).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn theoretical_reference() {
        assert!((theoretical_slope(1.0, 1.0, 1.0) + 0.4).abs() < 1e-15);
    }

    #[test]
    fn degenerate_designs() {
        let mut t = RateTable::default();
        t.push(1e4, 0, LossKind::Kl, 0.1);
        t.push(1e4, 1, LossKind::Kl, 0.2);
        assert!(rate_regression(&t, LossKind::Kl).is_err());
        t.push(1e5, 0, LossKind::Kl, 0.0);
        assert!(rate_regression(&t, LossKind::Kl).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut t = RateTable::default();
        t.push(10000.0, 0, LossKind::Kl, 0.25);
        assert_eq!(t.to_csv(), "t,replicate,loss_kind,value\n10000,0,kl,0.25\n");
    }
}
