use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::IntensitySpec;
use crate::operator::KernelSpec;
use crate::wavelet::{DyadicGrid, SampledFunction};
use crate::{Error, Result};

/// What generated a synthetic data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub intensity: IntensitySpec,
    pub kernel: KernelSpec,
}

/// Binned Poisson counts `N_k` on the `2^J` bins of `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountData {
    pub resolution: u32,
    pub counts: Vec<u64>,
    pub t: f64,
    pub seed: u64,
    pub provenance: Option<Provenance>,
}

impl CountData {
    pub fn new(counts: Vec<u64>, t: f64, seed: u64) -> Result<Self> {
        let grid = DyadicGrid::from_len(counts.len())?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!(
                "observation time must be positive and finite, got {t}"
            )));
        }
        Ok(Self {
            resolution: grid.resolution(),
            counts,
            t,
            seed,
            provenance: None,
        })
    }

    pub fn grid(&self) -> DyadicGrid {
        DyadicGrid::new(self.resolution).expect("validated at construction")
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bin_index,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(12 * self.counts.len() + 16);
        out.push_str("bin_index,count\n");
        for (k, n) in self.counts.iter().enumerate() {
            out.push_str(&format!("{k},{n}\n"));
        }
        out
    }

    /// Parses the CSV written by [`CountData::to_csv`]; rows must be in bin order.
    pub fn counts_from_csv(text: &str) -> Result<Vec<u64>> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("bin_index,count") => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header 'bin_index,count', found {other:?}"
                )))
            }
        }
        let mut counts = Vec::new();
        for (row, line) in lines.enumerate() {
            let (idx, n) = line
                .trim()
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("row {row}: expected two columns")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("row {row}: bad bin index: {e}")))?;
            if idx != row {
                return Err(Error::Parse(format!(
                    "row {row}: bin index {idx} out of order"
                )));
            }
            let n: u64 = n
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("row {row}: bad count: {e}")))?;
            counts.push(n);
        }
        DyadicGrid::from_len(counts.len())?;
        Ok(counts)
    }
}

/// Draws `N_k ~ Poisson(t 2^-J h(x_k))` independently per bin.
///
/// Bin `k` uses ChaCha stream `k` under `seed`, so the result does not depend
/// on evaluation order.
pub fn simulate_counts(h: &SampledFunction, t: f64, seed: u64) -> Result<CountData> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "observation time must be finite and nonnegative, got {t}"
        )));
    }
    if let Some(k) = h.values().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidIntensity(format!(
            "folded intensity is negative at bin {k} ({})",
            h.values()[k]
        )));
    }
    let width = h.grid().bin_width();
    let counts = h
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| poisson_draw(t * width * v, seed, k as u64))
        .collect::<Result<Vec<u64>>>()?;
    Ok(CountData {
        resolution: h.resolution(),
        counts,
        t,
        seed,
        provenance: None,
    })
}

fn poisson_draw(mean: f64, seed: u64, stream: u64) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::InvalidIntensity(format!("Poisson mean {mean}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Ok(dist.sample(&mut rng) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(resolution: u32, value: f64) -> SampledFunction {
        SampledFunction::constant(DyadicGrid::new(resolution).unwrap(), value).unwrap()
    }

    #[test]
    fn zero_time_or_intensity_gives_no_events() {
        let d = simulate_counts(&constant(5, 3.0), 0.0, 1).unwrap();
        assert_eq!(d.total(), 0);
        let d = simulate_counts(&constant(5, 0.0), 1e6, 1).unwrap();
        assert_eq!(d.total(), 0);
    }

    #[test]
    fn negative_intensity_is_rejected() {
        let h = SampledFunction::from_values(vec![1.0, -0.5]).unwrap();
        assert!(matches!(
            simulate_counts(&h, 10.0, 0),
            Err(Error::InvalidIntensity(_))
        ));
    }

    #[test]
    fn same_seed_same_counts() {
        let h = constant(6, 50.0);
        let a = simulate_counts(&h, 100.0, 42).unwrap();
        let b = simulate_counts(&h, 100.0, 42).unwrap();
        let c = simulate_counts(&h, 100.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn replicate_means_match_poisson() {
        // Mean 10^4 · 2^-4 · 1 = 625 per bin.
        let h = constant(4, 1.0);
        let reps = 1000;
        let mut sums = vec![0.0; 16];
        for r in 0..reps {
            let d = simulate_counts(&h, 1e4, 1000 + r).unwrap();
            for (s, &n) in sums.iter_mut().zip(&d.counts) {
                *s += n as f64;
            }
        }
        let tol = 4.0 * (625.0f64 / reps as f64).sqrt();
        for s in sums {
            assert!((s / reps as f64 - 625.0).abs() < tol);
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let d = simulate_counts(&constant(3, 8.0), 10.0, 5).unwrap();
        let text = d.to_csv();
        assert!(text.starts_with("bin_index,count\n"));
        assert_eq!(CountData::counts_from_csv(&text).unwrap(), d.counts);
        assert!(CountData::counts_from_csv("bin,count\n0,1\n1,2\n").is_err());
        assert!(CountData::counts_from_csv("bin_index,count\n0,1\n2,2\n").is_err());
        assert!(CountData::counts_from_csv("bin_index,count\n0,1\n1,2\n2,3\n").is_err());
        assert!(CountData::new(vec![1, 2], 0.0, 0).is_err());
    }
}
