//! Correlated Ornstein–Uhlenbeck noise.
//!
//! Channels obey `dE = -γ E dt + σ C dW` with `E[dW dWᵀ] = dt·I`, so the
//! Wiener increments driving the channels have instantaneous correlation
//! `Ξ = C Cᵀ`. Every channel then has stationary variance `σ²/(2γ)` and the
//! symmetric/antisymmetric combinations of a channel pair carry variance
//! `(σ²/2γ)(1 ± ξ)`.
//!
//! Sampling uses the exact one-step transition of the process (no stepsize
//! bias) and can optionally carry the exact running time integral `∫E dt`,
//! which is what dephasing phases are built from.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{bootstrap_means, BootstrapConfig};

/// Tolerance for symmetry, unit diagonal and positive semidefiniteness of Ξ.
pub const CORRELATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("correlation matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("correlation matrix contains non-finite entries")]
    NonFinite,
    #[error("correlation matrix is not symmetric: entry ({i},{j}) differs from its transpose by {deviation:e}")]
    NonSymmetric { i: usize, j: usize, deviation: f64 },
    #[error("correlation matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("correlation matrix diagonal entry {index} is {value}, expected 1")]
    BadDiagonal { index: usize, value: f64 },
    #[error("invalid noise parameters: {0}")]
    BadParams(String),
    #[error("invalid time grid: {0}")]
    BadGrid(String),
    #[error("operation needs exactly 2 channels, trajectory has {0}")]
    ChannelCount(usize),
    #[error("need at least 2 trajectories, got {0}")]
    InsufficientData(usize),
    #[error("export failed: {0}")]
    Export(#[from] std::io::Error),
}

/// Validated instantaneous correlation matrix Ξ with a cached factor `C`,
/// lower triangular, `Ξ = C Cᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseCorrelation {
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl NoiseCorrelation {
    /// Two-channel correlation `[[1, ξ], [ξ, 1]]`.
    pub fn two_channel(xi: f64) -> Result<Self, NoiseError> {
        validate_correlation(&DMatrix::from_row_slice(2, 2, &[1.0, xi, xi, 1.0]))
    }

    pub fn identity(n: usize) -> Self {
        validate_correlation(&DMatrix::identity(n, n)).expect("identity is a valid correlation")
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular `C` with `Ξ = C Cᵀ`; rank-deficient Ξ gives zero columns.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Eigenvalues of Ξ in ascending order, clamped at zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Off-diagonal entry of a two-channel correlation.
    pub fn xi(&self) -> Option<f64> {
        (self.n() == 2).then(|| self.matrix[(0, 1)])
    }
}

impl<'de> Deserialize<'de> for NoiseCorrelation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            matrix: DMatrix<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        validate_correlation(&raw.matrix).map_err(serde::de::Error::custom)
    }
}

/// Validate a candidate correlation matrix and factor it.
pub fn validate_correlation(matrix: &DMatrix<f64>) -> Result<NoiseCorrelation, NoiseError> {
    let (rows, cols) = matrix.shape();
    if rows != cols || rows == 0 {
        return Err(NoiseError::NotSquare { rows, cols });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(NoiseError::NonFinite);
    }
    let n = rows;
    for i in 0..n {
        for j in (i + 1)..n {
            let deviation = (matrix[(i, j)] - matrix[(j, i)]).abs();
            if deviation > CORRELATION_TOL {
                return Err(NoiseError::NonSymmetric { i, j, deviation });
            }
        }
    }
    for index in 0..n {
        let value = matrix[(index, index)];
        if (value - 1.0).abs() > CORRELATION_TOL {
            return Err(NoiseError::BadDiagonal { index, value });
        }
    }

    let mut clean = (matrix + matrix.transpose()) * 0.5;
    for i in 0..n {
        clean[(i, i)] = 1.0;
    }
    let eig = SymmetricEigen::new(clean.clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let min_eigenvalue = eigenvalues[0];
    if min_eigenvalue < -CORRELATION_TOL {
        return Err(NoiseError::NotPsd { min_eigenvalue });
    }
    eigenvalues.iter_mut().for_each(|v| *v = v.max(0.0));

    let factor = cholesky_psd(&clean, CORRELATION_TOL * n as f64);
    Ok(NoiseCorrelation {
        matrix: clean,
        factor,
        eigenvalues,
    })
}

/// Cholesky factor of a symmetric PSD matrix. Pivots at or below `tol` are
/// treated as exact zeros: the column is zeroed, which is exact for PSD input
/// because a vanishing Schur pivot forces its whole column to vanish.
pub fn cholesky_psd(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            continue;
        }
        let pivot = d.sqrt();
        l[(j, j)] = pivot;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / pivot;
        }
    }
    l
}

/// Parameters of the multichannel OU process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub gamma: f64,
    pub sigma: f64,
    pub correlation: NoiseCorrelation,
}

impl OuParams {
    pub fn new(gamma: f64, sigma: f64, correlation: NoiseCorrelation) -> Result<Self, NoiseError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(NoiseError::BadParams(format!("gamma must be > 0, got {gamma}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(NoiseError::BadParams(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self {
            gamma,
            sigma,
            correlation,
        })
    }

    /// Two channels with off-diagonal correlation `xi`.
    pub fn two_channel(gamma: f64, sigma: f64, xi: f64) -> Result<Self, NoiseError> {
        Self::new(gamma, sigma, NoiseCorrelation::two_channel(xi)?)
    }

    pub fn n_channels(&self) -> usize {
        self.correlation.n()
    }

    /// Stationary single-channel variance σ²/(2γ).
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.gamma)
    }

    /// Stationary cross-covariance `⟨E_i(t+τ) E_j(t)⟩`.
    pub fn stationary_covariance(&self, i: usize, j: usize, lag: f64) -> f64 {
        self.stationary_variance() * self.correlation.matrix()[(i, j)] * (-self.gamma * lag.abs()).exp()
    }
}

/// Uniform sampling grid `0, dt, 2dt, …` with `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, dt: f64) -> Result<Self, NoiseError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(NoiseError::BadGrid(format!("dt must be > 0, got {dt}")));
        }
        if !(t_final.is_finite() && t_final >= dt) {
            return Err(NoiseError::BadGrid(format!(
                "t_final must be >= dt, got t_final={t_final}, dt={dt}"
            )));
        }
        let n_steps = (t_final / dt + 1e-9).floor() as usize;
        Ok(Self { dt, n_steps })
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points()).map(|k| self.time(k)).collect()
    }
}

/// RNG for trajectory `index` of an ensemble seeded with `master_seed`.
///
/// Streams are counter based: the ChaCha key comes from the master seed and
/// the trajectory index selects the 64-bit stream, so trajectories are
/// independent and can be generated in any order.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Coefficients of the exact joint transition of `(E, ∫E dt)` over one step,
/// per unit noise amplitude.
#[derive(Debug, Clone, Copy)]
struct StepCoefficients {
    decay: f64,
    integral_gain: f64,
    // Cholesky factor of the 2x2 innovation covariance of (E, ∫E).
    l11: f64,
    l21: f64,
    l22: f64,
}

impl StepCoefficients {
    fn new(gamma: f64, sigma: f64, dt: f64) -> Self {
        let x = gamma * dt;
        let decay = (-x).exp();
        let one_minus = -(-x).exp_m1();
        let var_state = sigma * sigma * (-(-2.0 * x).exp_m1()) / (2.0 * gamma);
        let cov = sigma * sigma * one_minus * one_minus / (2.0 * gamma * gamma);
        let var_integral = sigma * sigma * integral_variance_kernel(x) / gamma.powi(3);

        let l11 = var_state.sqrt();
        let (l21, l22) = if l11 > 0.0 {
            let l21 = cov / l11;
            (l21, (var_integral - l21 * l21).max(0.0).sqrt())
        } else {
            (0.0, var_integral.max(0.0).sqrt())
        };
        Self {
            decay,
            integral_gain: one_minus / gamma,
            l11,
            l21,
            l22,
        }
    }
}

/// `x − 2(1 − e^{−x}) + (1 − e^{−2x})/2`, which behaves as `x³/3` near zero.
fn integral_variance_kernel(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        x2 * x * (1.0 / 3.0 - x / 4.0 + 7.0 * x2 / 60.0 - x2 * x / 24.0)
    } else {
        x + 2.0 * (-x).exp_m1() - 0.5 * (-2.0 * x).exp_m1()
    }
}

/// Streaming exact sampler for one trajectory.
pub struct OuStepper {
    coeffs: StepCoefficients,
    factor: DMatrix<f64>,
    state: Vec<f64>,
    integral: Vec<f64>,
    track_integral: bool,
    rng: ChaCha8Rng,
    z1: Vec<f64>,
    z2: Vec<f64>,
}

impl OuStepper {
    /// Start a trajectory from the stationary distribution `N(0, (σ²/2γ) Ξ)`.
    pub fn new(params: &OuParams, dt: f64, master_seed: u64, index: u64, track_integral: bool) -> Self {
        let n = params.n_channels();
        let mut rng = trajectory_rng(master_seed, index);
        let factor = params.correlation.factor().clone();
        let sd = params.stationary_variance().sqrt();
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let state = correlate(&factor, &z).into_iter().map(|v| sd * v).collect();
        Self {
            coeffs: StepCoefficients::new(params.gamma, params.sigma, dt),
            factor,
            state,
            integral: vec![0.0; n],
            track_integral,
            rng,
            z1: vec![0.0; n],
            z2: vec![0.0; n],
        }
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Exact `∫₀ᵗ E dt'` accumulated so far (zeros unless tracking is on).
    pub fn integral(&self) -> &[f64] {
        &self.integral
    }

    pub fn step(&mut self) {
        let n = self.state.len();
        for k in 0..n {
            self.z1[k] = StandardNormal.sample(&mut self.rng);
        }
        if self.track_integral {
            for k in 0..n {
                self.z2[k] = StandardNormal.sample(&mut self.rng);
            }
        }
        let c = self.coeffs;
        for i in 0..n {
            let (mut w1, mut w2) = (0.0, 0.0);
            for k in 0..=i {
                let f = self.factor[(i, k)];
                w1 += f * self.z1[k];
                w2 += f * self.z2[k];
            }
            let x = self.state[i];
            if self.track_integral {
                self.integral[i] += c.integral_gain * x + c.l21 * w1 + c.l22 * w2;
            }
            self.state[i] = c.decay * x + c.l11 * w1;
        }
    }
}

fn correlate(factor: &DMatrix<f64>, z: &[f64]) -> Vec<f64> {
    (0..z.len())
        .map(|i| (0..=i).map(|k| factor[(i, k)] * z[k]).sum())
        .collect()
}

/// One sampled multichannel path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrajectory {
    pub times: Vec<f64>,
    /// `n_channels × n_times`.
    pub values: DMatrix<f64>,
    pub seed: u64,
    pub index: u64,
}

impl NoiseTrajectory {
    pub fn n_channels(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.values.ncols()
    }

    pub fn dt(&self) -> f64 {
        self.times.get(1).copied().unwrap_or(0.0) - self.times[0]
    }

    pub fn channel(&self, ch: usize) -> Vec<f64> {
        self.values.row(ch).iter().copied().collect()
    }
}

/// Sample `n_traj` independent trajectories on `[0, t_final]` with step `dt`.
pub fn sample_ou(
    params: &OuParams,
    t_final: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<NoiseTrajectory>, NoiseError> {
    let grid = TimeGrid::new(t_final, dt)?;
    if n_traj == 0 {
        return Err(NoiseError::BadParams("n_traj must be >= 1".into()));
    }
    let times = grid.times();
    let n = params.n_channels();
    Ok((0..n_traj as u64)
        .into_par_iter()
        .map(|index| {
            let mut stepper = OuStepper::new(params, grid.dt, seed, index, false);
            let mut values = DMatrix::<f64>::zeros(n, grid.n_points());
            values.column_mut(0).copy_from_slice(stepper.state());
            for k in 1..grid.n_points() {
                stepper.step();
                values.column_mut(k).copy_from_slice(stepper.state());
            }
            NoiseTrajectory {
                times: times.clone(),
                values,
                seed,
                index,
            }
        })
        .collect())
}

/// Rotate a two-channel path to `((E₁+E₂)/√2, (E₁−E₂)/√2)`.
pub fn plus_minus_channels(traj: &NoiseTrajectory) -> Result<NoiseTrajectory, NoiseError> {
    if traj.n_channels() != 2 {
        return Err(NoiseError::ChannelCount(traj.n_channels()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut values = DMatrix::<f64>::zeros(2, traj.n_times());
    for k in 0..traj.n_times() {
        let (e1, e2) = (traj.values[(0, k)], traj.values[(1, k)]);
        values[(0, k)] = s * (e1 + e2);
        values[(1, k)] = s * (e1 - e2);
    }
    Ok(NoiseTrajectory {
        times: traj.times.clone(),
        values,
        seed: traj.seed,
        index: traj.index,
    })
}

/// Lagged covariance estimates with bootstrap standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Autocovariance `⟨E_c(t+τ) E_c(t)⟩` for lags `0 ..= max_lag`.
pub fn empirical_autocorrelation(
    trajectories: &[NoiseTrajectory],
    channel: usize,
    max_lag: f64,
) -> Result<CorrelationCurve, NoiseError> {
    empirical_cross_covariance(trajectories, channel, channel, max_lag, &BootstrapConfig::default())
}

/// Cross-covariance `⟨E_a(t+τ) E_b(t)⟩` for lags `0 ..= max_lag`.
///
/// The process is zero mean, so products are not centred. Each trajectory
/// contributes the average over all available time origins, and the bootstrap
/// resamples whole trajectories.
pub fn empirical_cross_covariance(
    trajectories: &[NoiseTrajectory],
    channel_a: usize,
    channel_b: usize,
    max_lag: f64,
    bootstrap: &BootstrapConfig,
) -> Result<CorrelationCurve, NoiseError> {
    if trajectories.len() < 2 {
        return Err(NoiseError::InsufficientData(trajectories.len()));
    }
    let first = &trajectories[0];
    let n_ch = first.n_channels();
    if channel_a >= n_ch || channel_b >= n_ch {
        return Err(NoiseError::ChannelCount(n_ch));
    }
    let dt = first.dt();
    let t_final = *first.times.last().unwrap_or(&0.0);
    if !(max_lag >= 0.0 && max_lag < t_final) {
        return Err(NoiseError::BadGrid(format!(
            "max_lag must lie in [0, t_final={t_final}), got {max_lag}"
        )));
    }
    let n_lags = (max_lag / dt + 1e-9).floor() as usize + 1;

    let per_traj: Vec<Vec<f64>> = trajectories
        .par_iter()
        .map(|traj| {
            let a = traj.values.row(channel_a);
            let b = traj.values.row(channel_b);
            let n_t = traj.n_times();
            (0..n_lags)
                .map(|lag| {
                    let count = n_t - lag;
                    let s: f64 = (0..count).map(|t0| a[t0 + lag] * b[t0]).sum();
                    s / count as f64
                })
                .collect()
        })
        .collect();
    let rows: Vec<&[f64]> = per_traj.iter().map(Vec::as_slice).collect();
    let est = bootstrap_means(&rows, n_lags, bootstrap);
    Ok(CorrelationCurve {
        lags: (0..n_lags).map(|k| k as f64 * dt).collect(),
        values: est.iter().map(|e| e.value).collect(),
        stderr: est.iter().map(|e| e.stderr).collect(),
    })
}

/// Sample covariance matrix of all channels at one time index, pooled over
/// trajectories, with bootstrap standard errors per entry.
pub fn empirical_equal_time_covariance(
    trajectories: &[NoiseTrajectory],
    time_index: usize,
    bootstrap: &BootstrapConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>), NoiseError> {
    if trajectories.len() < 2 {
        return Err(NoiseError::InsufficientData(trajectories.len()));
    }
    let n = trajectories[0].n_channels();
    let per_traj: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|t| {
            let col = t.values.column(time_index);
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    out.push(col[i] * col[j]);
                }
            }
            out
        })
        .collect();
    let rows: Vec<&[f64]> = per_traj.iter().map(Vec::as_slice).collect();
    let est = bootstrap_means(&rows, n * n, bootstrap);
    let cov = DMatrix::from_fn(n, n, |i, j| est[i * n + j].value);
    let se = DMatrix::from_fn(n, n, |i, j| est[i * n + j].stderr);
    Ok((cov, se))
}

/// Write one trajectory as CSV with header `time,ch0,ch1,...`.
pub fn write_trajectory_csv<W: Write>(traj: &NoiseTrajectory, mut out: W) -> Result<(), NoiseError> {
    let header: Vec<String> = std::iter::once("time".to_string())
        .chain((0..traj.n_channels()).map(|c| format!("ch{c}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (k, t) in traj.times.iter().enumerate() {
        write!(out, "{t}")?;
        for c in 0..traj.n_channels() {
            write!(out, ",{}", traj.values[(c, k)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// JSON sidecar describing an exported trajectory set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub gamma: f64,
    pub sigma: f64,
    pub correlation: Vec<Vec<f64>>,
    pub seed: u64,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub files: Vec<String>,
    pub engine_version: String,
}

impl TrajectorySidecar {
    pub fn new(params: &OuParams, seed: u64, dt: f64, t_final: f64, files: Vec<String>) -> Self {
        let m = params.correlation.matrix();
        Self {
            gamma: params.gamma,
            sigma: params.sigma,
            correlation: (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect(),
            seed,
            dt,
            t_final,
            n_traj: files.len(),
            files,
            engine_version: crate::engine_version(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(xi: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, xi, xi, 1.0])
    }

    #[test]
    fn identity_factor_is_identity() {
        let c = validate_correlation(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(c.factor(), &DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn perfectly_correlated_factor_is_rank_one() {
        let c = validate_correlation(&two(1.0)).unwrap();
        assert_eq!(c.factor(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]));
        let anti = validate_correlation(&two(-1.0)).unwrap();
        assert_eq!(anti.factor(), &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]));
    }

    #[test]
    fn over_correlated_matrix_is_rejected() {
        assert!(matches!(validate_correlation(&two(1.5)), Err(NoiseError::NotPsd { .. })));
    }

    #[test]
    fn asymmetric_and_bad_diagonal_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]);
        assert!(matches!(validate_correlation(&m), Err(NoiseError::NonSymmetric { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.9]);
        assert!(matches!(validate_correlation(&m), Err(NoiseError::BadDiagonal { index: 1, .. })));
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(matches!(validate_correlation(&m), Err(NoiseError::NotSquare { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(validate_correlation(&m), Err(NoiseError::NonFinite)));
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clamped() {
        let c = validate_correlation(&two(1.0 + 5e-13)).unwrap();
        assert!(c.eigenvalues()[0] >= 0.0);
        let rebuilt = c.factor() * c.factor().transpose();
        assert!((rebuilt - c.matrix()).abs().max() < 1e-11);
    }

    #[test]
    fn bad_grid_is_rejected() {
        let p = OuParams::two_channel(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(sample_ou(&p, 1.0, 0.0, 1, 0), Err(NoiseError::BadGrid(_))));
        assert!(matches!(sample_ou(&p, 0.05, 0.1, 1, 0), Err(NoiseError::BadGrid(_))));
        assert!(matches!(sample_ou(&p, 1.0, -0.1, 1, 0), Err(NoiseError::BadGrid(_))));
    }

    #[test]
    fn bad_params_rejected() {
        assert!(OuParams::two_channel(0.0, 1.0, 0.0).is_err());
        assert!(OuParams::two_channel(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn fully_correlated_channels_are_identical() {
        let p = OuParams::two_channel(0.7, 1.3, 1.0).unwrap();
        for traj in sample_ou(&p, 5.0, 0.01, 3, 42).unwrap() {
            for k in 0..traj.n_times() {
                assert_eq!(traj.values[(0, k)], traj.values[(1, k)]);
            }
        }
    }

    #[test]
    fn plus_minus_of_identical_channels() {
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.1).collect();
        let f: Vec<f64> = times.iter().map(|t| (3.0 * t).sin() + 0.2).collect();
        let mut values = DMatrix::zeros(2, 5);
        for k in 0..5 {
            values[(0, k)] = f[k];
            values[(1, k)] = f[k];
        }
        let traj = NoiseTrajectory { times, values, seed: 0, index: 0 };
        let pm = plus_minus_channels(&traj).unwrap();
        for k in 0..5 {
            assert!((pm.values[(0, k)] - 2f64.sqrt() * f[k]).abs() < 1e-15);
            assert_eq!(pm.values[(1, k)], 0.0);
        }

        let mut anti = traj.clone();
        for k in 0..5 {
            anti.values[(1, k)] = -f[k];
        }
        let pm = plus_minus_channels(&anti).unwrap();
        for k in 0..5 {
            assert_eq!(pm.values[(0, k)], 0.0);
        }
    }

    #[test]
    fn plus_minus_requires_two_channels() {
        let traj = NoiseTrajectory {
            times: vec![0.0, 1.0],
            values: DMatrix::zeros(3, 2),
            seed: 0,
            index: 0,
        };
        assert!(matches!(plus_minus_channels(&traj), Err(NoiseError::ChannelCount(3))));
    }

    #[test]
    fn zero_trajectories_give_zero_curve() {
        let traj = NoiseTrajectory {
            times: (0..20).map(|k| k as f64 * 0.1).collect(),
            values: DMatrix::zeros(2, 20),
            seed: 0,
            index: 0,
        };
        let curve = empirical_autocorrelation(&[traj.clone(), traj], 0, 1.0).unwrap();
        assert_eq!(curve.values.len(), 11);
        assert!(curve.values.iter().all(|v| *v == 0.0));
        assert!(curve.stderr.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn autocorrelation_needs_two_trajectories() {
        let p = OuParams::two_channel(1.0, 1.0, 0.0).unwrap();
        let one = sample_ou(&p, 2.0, 0.1, 1, 0).unwrap();
        assert!(matches!(
            empirical_autocorrelation(&one, 0, 1.0),
            Err(NoiseError::InsufficientData(1))
        ));
    }

    #[test]
    fn small_step_kernel_matches_direct_formula() {
        for x in [2e-3f64, 5e-3, 9.9e-3] {
            let direct = x + 2.0 * (-x).exp_m1() - 0.5 * (-2.0 * x).exp_m1();
            let series = integral_variance_kernel(x);
            assert!((direct - series).abs() / series < 1e-7, "x={x}");
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let p = OuParams::two_channel(1.0, 1.0, 0.3).unwrap();
        let traj = &sample_ou(&p, 0.3, 0.1, 1, 9).unwrap()[0];
        let mut buf = Vec::new();
        write_trajectory_csv(traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,ch0,ch1");
        assert_eq!(lines.len(), 5);
        let fields: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields[0], 0.1);
        assert_eq!(fields[1], traj.values[(0, 1)]);
    }
}
