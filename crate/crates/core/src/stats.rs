//! Small estimators shared by the ensemble code: bootstrap standard errors
//! over trajectories and least-squares line fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Minimum number of bootstrap resamples used anywhere in the crate.
pub const MIN_BOOTSTRAP_RESAMPLES: usize = 200;

/// Bootstrap settings for estimators that resample whole trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: MIN_BOOTSTRAP_RESAMPLES,
            seed: 0x5eed_b007,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn effective_resamples(&self) -> usize {
        self.resamples.max(MIN_BOOTSTRAP_RESAMPLES)
    }
}

/// A point estimate together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

/// Sample mean with a bootstrap standard error.
pub fn bootstrap_mean(samples: &[f64], config: &BootstrapConfig) -> Estimate {
    let rows: Vec<&[f64]> = samples.chunks(1).collect();
    let est = bootstrap_means(&rows, 1, config);
    est.into_iter().next().unwrap_or(Estimate {
        value: f64::NAN,
        stderr: f64::NAN,
    })
}

/// Column means of a trajectory-by-point table with bootstrap standard errors.
///
/// Each row holds one trajectory's values at `n_points` evaluation points;
/// resampling draws whole rows so correlations along a trajectory are kept.
/// `NaN` entries mark excluded samples and are skipped in every mean.
pub fn bootstrap_means(rows: &[&[f64]], n_points: usize, config: &BootstrapConfig) -> Vec<Estimate> {
    let n = rows.len();
    let means = masked_column_means(rows.iter().copied(), n_points);
    if n < 2 {
        return means
            .into_iter()
            .map(|value| Estimate { value, stderr: 0.0 })
            .collect();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let resamples = config.effective_resamples();
    let mut replicate_means: Vec<Vec<f64>> = vec![Vec::with_capacity(resamples); n_points];
    let mut sums = vec![0.0; n_points];
    let mut counts = vec![0usize; n_points];
    for _ in 0..resamples {
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            let row = rows[rng.random_range(0..n)];
            for (j, &v) in row.iter().enumerate().take(n_points) {
                if !v.is_nan() {
                    sums[j] += v;
                    counts[j] += 1;
                }
            }
        }
        for j in 0..n_points {
            if counts[j] > 0 {
                replicate_means[j].push(sums[j] / counts[j] as f64);
            }
        }
    }

    means
        .into_iter()
        .zip(replicate_means)
        .map(|(value, reps)| Estimate {
            value,
            stderr: std_dev(&reps),
        })
        .collect()
}

fn masked_column_means<'a>(rows: impl Iterator<Item = &'a [f64]>, n_points: usize) -> Vec<f64> {
    let mut sums = vec![0.0; n_points];
    let mut counts = vec![0usize; n_points];
    for row in rows {
        for (j, &v) in row.iter().enumerate().take(n_points) {
            if !v.is_nan() {
                sums[j] += v;
                counts[j] += 1;
            }
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect()
}

/// Ordinary least-squares line `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len(), "linear_fit: length mismatch");
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    (slope, my - slope * mx)
}

/// Exponential decay rate from a log-linear fit of `|values|` against time.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> f64 {
    let logs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    -linear_fit(times, &logs).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (m, b) = linear_fit(&x, &y);
        assert!((m - 2.5).abs() < 1e-12);
        assert!((b + 1.0).abs() < 1e-12);
    }

    #[test]
    fn decay_rate_of_pure_exponential() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.04).collect();
        let v: Vec<f64> = t.iter().map(|s| 3.0 * (-1.7 * s).exp()).collect();
        assert!((fit_decay_rate(&t, &v) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_se_matches_analytic_se_roughly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let est = bootstrap_mean(&xs, &BootstrapConfig::default());
        let analytic = std_dev(&xs) / (xs.len() as f64).sqrt();
        assert!((est.stderr / analytic - 1.0).abs() < 0.2, "{} vs {analytic}", est.stderr);
    }

    #[test]
    fn constant_samples_have_zero_error() {
        let xs = vec![0.25; 40];
        let est = bootstrap_mean(&xs, &BootstrapConfig::default());
        assert_eq!(est.value, 0.25);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn nan_entries_are_skipped() {
        let a = [1.0, f64::NAN];
        let b = [3.0, 2.0];
        let rows: Vec<&[f64]> = vec![&a, &b];
        let est = bootstrap_means(&rows, 2, &BootstrapConfig::default());
        assert_eq!(est[0].value, 2.0);
        assert_eq!(est[1].value, 2.0);
    }
}
