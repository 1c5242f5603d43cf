//! Environment-induced phase locking of two damped oscillators.
//!
//! Ensembles of mode amplitudes `v = (a₁, a₂)` evolve under the linear drift
//! of the two-mode model, optionally with additive complex noise whose
//! covariance is the model's diffusion matrix. The locking diagnostic is
//! `⟨cos φ⟩ = Re⟨a₁* a₂ / (|a₁||a₂|)⟩`.
//!
//! The drift is [`channel_drift`], which coincides with the displayed `W`
//! whenever the two thermal occupations are equal.

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::{channel_drift, OscillatorParams};
use crate::noise::{cholesky_psd, trajectory_rng, TimeGrid};
use crate::stats::{bootstrap_means, BootstrapConfig};
use crate::Complex64;

/// Amplitudes below this modulus carry no usable phase.
pub const MAGNITUDE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyncError {
    #[error("invalid time grid: {0}")]
    BadGrid(String),
    #[error("invalid ensemble settings: {0}")]
    BadParams(String),
    #[error("every trajectory is below the magnitude floor at t = {0}")]
    AllTrajectoriesDegenerate(f64),
    #[error("invalid averaging window: {0}")]
    BadWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDrive {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConditions {
    /// Independent modes with modulus `|1 + spread·g|`, `g ~ N(0, 1)`, and
    /// uniform phase.
    Random { spread: f64 },
    /// Every trajectory starts from the same amplitudes.
    Fixed([Complex64; 2]),
    /// One starting point per trajectory.
    Explicit(Vec<[Complex64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub n_traj: usize,
    pub t_final: f64,
    pub dt: f64,
    /// Keep amplitudes every `sample_every` steps.
    pub sample_every: usize,
    pub seed: u64,
    pub initial: InitialConditions,
    pub noise: NoiseDrive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEnsemble {
    pub times: Vec<f64>,
    /// `amplitudes[trajectory][sample] = [a₁, a₂]`.
    pub amplitudes: Vec<Vec<[Complex64; 2]>>,
    pub params: OscillatorParams,
    pub seed: u64,
}

/// `sinh(x)/x` for complex `x`.
fn sinhc(x: Complex64) -> Complex64 {
    if x.norm() < 1e-4 {
        let x2 = x * x;
        Complex64::new(1.0, 0.0) + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

/// `e^{M t}` for a 2×2 matrix via Cayley–Hamilton.
pub fn expm_2x2(m: &Matrix2<Complex64>, t: f64) -> Matrix2<Complex64> {
    let mu = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let s = (mu * mu - det).sqrt();
    let shifted = m - Matrix2::identity() * mu;
    let st = s * t;
    (Matrix2::identity() * st.cosh() + shifted * (sinhc(st) * t)) * (mu * t).exp()
}

/// Diffusion of the amplitudes: `½(G + H)` of the four thermal channels.
pub fn amplitude_diffusion(p: &OscillatorParams) -> Matrix2<f64> {
    let kappa = 2.0 * p.gamma;
    let up = [p.n1 + 1.0, p.n2 + 1.0];
    let down = [p.n1, p.n2];
    Matrix2::from_fn(|k, l| {
        let xi = if k == l { 1.0 } else { p.xi };
        0.5 * kappa * xi * ((up[k] * up[l]).sqrt() + (down[k] * down[l]).sqrt())
    })
}

fn validate_settings(s: &EnsembleSettings) -> Result<TimeGrid, SyncError> {
    if s.n_traj < 2 {
        return Err(SyncError::BadParams(format!("need at least 2 trajectories, got {}", s.n_traj)));
    }
    if s.sample_every == 0 {
        return Err(SyncError::BadParams("sample_every must be >= 1".into()));
    }
    match &s.initial {
        InitialConditions::Random { spread } if !(spread.is_finite() && *spread > 0.0) => {
            return Err(SyncError::BadParams(format!("spread must be > 0, got {spread}")));
        }
        InitialConditions::Explicit(list) if list.len() != s.n_traj => {
            return Err(SyncError::BadParams(format!(
                "{} explicit initial conditions for {} trajectories",
                list.len(),
                s.n_traj
            )));
        }
        _ => {}
    }
    TimeGrid::new(s.t_final, s.dt).map_err(|e| SyncError::BadGrid(e.to_string()))
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Evolve an ensemble of amplitude pairs with exact exponential steps.
pub fn simulate_amplitudes(p: &OscillatorParams, settings: &EnsembleSettings) -> Result<AmplitudeEnsemble, SyncError> {
    p.validate().map_err(|e| SyncError::BadParams(e.to_string()))?;
    let grid = validate_settings(settings)?;
    let step = expm_2x2(&channel_drift(p), grid.dt);
    let noise_factor = match settings.noise {
        NoiseDrive::Off => None,
        NoiseDrive::On => {
            let d = amplitude_diffusion(p) * grid.dt;
            let dd = DMatrix::from_fn(2, 2, |i, j| d[(i, j)]);
            let l = cholesky_psd(&dd, 1e-14);
            Some(Matrix2::from_fn(|i, j| Complex64::new(l[(i, j)], 0.0)))
        }
    };
    let n_samples = grid.n_steps / settings.sample_every + 1;

    let amplitudes: Vec<Vec<[Complex64; 2]>> = (0..settings.n_traj)
        .into_par_iter()
        .map(|index| {
            let mut rng = trajectory_rng(settings.seed, index as u64);
            let start = match &settings.initial {
                InitialConditions::Random { spread } => {
                    let mut draw = || {
                        let g: f64 = rng.sample(StandardNormal);
                        let phase = rng.random_range(0.0..std::f64::consts::TAU);
                        Complex64::from_polar((1.0 + spread * g).abs(), phase)
                    };
                    [draw(), draw()]
                }
                InitialConditions::Fixed(v) => *v,
                InitialConditions::Explicit(list) => list[index],
            };
            let mut v = Vector2::new(start[0], start[1]);
            let mut out = Vec::with_capacity(n_samples);
            out.push([v[0], v[1]]);
            for k in 1..=grid.n_steps {
                v = step * v;
                if let Some(l) = &noise_factor {
                    let z = Vector2::new(complex_normal(&mut rng), complex_normal(&mut rng));
                    v += l * z;
                }
                if k % settings.sample_every == 0 {
                    out.push([v[0], v[1]]);
                }
            }
            out
        })
        .collect();

    let times = (0..n_samples).map(|k| grid.time(k * settings.sample_every)).collect();
    Ok(AmplitudeEnsemble {
        times,
        amplitudes,
        params: *p,
        seed: settings.seed,
    })
}

/// `cos φ` of one amplitude pair, `None` below the magnitude floor.
pub fn phase_cosine(a: [Complex64; 2]) -> Option<f64> {
    let (m1, m2) = (a[0].norm(), a[1].norm());
    if m1 < MAGNITUDE_FLOOR || m2 < MAGNITUDE_FLOOR {
        return None;
    }
    Some((a[0].conj() * a[1]).re / (m1 * m2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Trajectories excluded at each time by the magnitude floor.
    pub n_excluded: Vec<usize>,
}

fn cosine_table(e: &AmplitudeEnsemble) -> Vec<Vec<f64>> {
    e.amplitudes
        .iter()
        .map(|traj| traj.iter().map(|a| phase_cosine(*a).unwrap_or(f64::NAN)).collect())
        .collect()
}

fn excluded_counts(table: &[Vec<f64>], n_points: usize) -> Vec<usize> {
    (0..n_points)
        .map(|k| table.iter().filter(|row| row[k].is_nan()).count())
        .collect()
}

/// Ensemble average of `cos φ(t)` with bootstrap errors over trajectories.
pub fn order_parameter(e: &AmplitudeEnsemble, bootstrap: &BootstrapConfig) -> Result<OrderParameter, SyncError> {
    let table = cosine_table(e);
    let n_points = e.times.len();
    let n_excluded = excluded_counts(&table, n_points);
    if let Some(k) = n_excluded.iter().position(|&n| n == table.len()) {
        return Err(SyncError::AllTrajectoriesDegenerate(e.times[k]));
    }
    let rows: Vec<&[f64]> = table.iter().map(Vec::as_slice).collect();
    let est = bootstrap_means(&rows, n_points, bootstrap);
    Ok(OrderParameter {
        times: e.times.clone(),
        mean: est.iter().map(|x| x.value).collect(),
        stderr: est.iter().map(|x| x.stderr).collect(),
        n_excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockingEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Trajectories with no usable sample inside the window.
    pub n_excluded: usize,
}

/// Mean of `⟨cos φ⟩` over `window`, with a bootstrap error computed from
/// per-trajectory window averages.
pub fn time_averaged_locking(
    p: &OscillatorParams,
    window: (f64, f64),
    settings: &EnsembleSettings,
    bootstrap: &BootstrapConfig,
) -> Result<LockingEstimate, SyncError> {
    let (t0, t1) = window;
    if !(t0 >= 0.0 && t1 > t0 && t1 <= settings.t_final + 1e-9) {
        return Err(SyncError::BadWindow(format!(
            "need 0 <= t0 < t1 <= t_final, got [{t0}, {t1}] with t_final {}",
            settings.t_final
        )));
    }
    let e = simulate_amplitudes(p, settings)?;
    let in_window: Vec<usize> = (0..e.times.len())
        .filter(|&k| e.times[k] >= t0 - 1e-9 && e.times[k] <= t1 + 1e-9)
        .collect();
    if in_window.is_empty() {
        return Err(SyncError::BadWindow("no samples inside the window".into()));
    }
    let table = cosine_table(&e);
    let per_traj: Vec<f64> = table
        .iter()
        .map(|row| {
            let vals: Vec<f64> = in_window.iter().map(|&k| row[k]).filter(|v| !v.is_nan()).collect();
            if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        })
        .collect();
    let n_excluded = per_traj.iter().filter(|v| v.is_nan()).count();
    if n_excluded == per_traj.len() {
        return Err(SyncError::AllTrajectoriesDegenerate(t0));
    }
    let rows: Vec<&[f64]> = per_traj.chunks(1).collect();
    let est = bootstrap_means(&rows, 1, bootstrap)[0];
    Ok(LockingEstimate {
        value: est.value,
        stderr: est.stderr,
        n_excluded,
    })
}
