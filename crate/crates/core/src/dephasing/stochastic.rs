//! Monte-Carlo dephasing: average the random phase a coherence accumulates
//! along correlated OU noise paths.
//!
//! A coherence `|a⟩⟨b|` between σz eigenstates with eigenvalue vectors `s(a)`,
//! `s(b)` picks up the phase `φ(t) = g Σᵢ dᵢ ∫₀ᵗ Eᵢ dt'` with `d = s(a) − s(b)`.
//! The coupling `g = √γ / 2` is the Kubo normalisation: it makes the
//! frequency fluctuation seen by the `|01⟩, |10⟩` pair equal to `√(2γ) E₋`,
//! whose stationary variance is `σ²(1 − ξ)`, so the ensemble average
//! `⟨cos φ⟩` reproduces `e^{−Γ₋(t)}` (and `e^{−Γ₊(t)}` for `|00⟩, |11⟩`).
//!
//! Phase integrals come from the exact joint OU transition, so the estimate
//! carries no time-step bias.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Branch, DephasingError, DephasingParams};
use crate::noise::{OuParams, OuStepper, TimeGrid};
use crate::stats::{bootstrap_means, BootstrapConfig};

/// The two coherences of the two-qubit dephasing model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherencePair {
    /// `ρ_{01,10}`, driven by the antisymmetric channel.
    ZeroOneOneZero,
    /// `ρ_{00,11}`, driven by the symmetric channel.
    ZeroZeroOneOne,
}

impl CoherencePair {
    /// σz eigenvalue differences `s(a) − s(b)` with `σz|0⟩ = +|0⟩`.
    pub fn difference_vector(self) -> [f64; 2] {
        match self {
            CoherencePair::ZeroOneOneZero => [2.0, -2.0],
            CoherencePair::ZeroZeroOneOne => [2.0, 2.0],
        }
    }

    pub fn branch(self) -> Branch {
        match self {
            CoherencePair::ZeroOneOneZero => Branch::Minus,
            CoherencePair::ZeroZeroOneOne => Branch::Plus,
        }
    }
}

/// Phase coupling `g` in `φ = g Σ dᵢ ∫Eᵢ`.
pub fn kubo_phase_coupling(gamma: f64) -> f64 {
    gamma.sqrt() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub n_traj: usize,
    pub t_final: f64,
    pub dt: f64,
    /// Record the envelope every `sample_every` steps.
    pub sample_every: usize,
    pub seed: u64,
    pub bootstrap: BootstrapConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEnvelope {
    pub times: Vec<f64>,
    /// Ensemble average `⟨cos φ(t)⟩`.
    pub envelope: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Monte-Carlo envelope for an arbitrary difference vector over the channels
/// of `noise`.
pub fn monte_carlo_envelope(
    noise: &OuParams,
    difference: &[f64],
    settings: &McSettings,
) -> Result<McEnvelope, DephasingError> {
    if difference.len() != noise.n_channels() {
        return Err(DephasingError::BadParams(format!(
            "difference vector has {} entries for {} channels",
            difference.len(),
            noise.n_channels()
        )));
    }
    if settings.n_traj < 2 || settings.sample_every == 0 {
        return Err(DephasingError::BadParams(
            "need n_traj >= 2 and sample_every >= 1".into(),
        ));
    }
    let grid = TimeGrid::new(settings.t_final, settings.dt)?;
    let g = kubo_phase_coupling(noise.gamma);
    let sample_steps: Vec<usize> = (0..=grid.n_steps).step_by(settings.sample_every).collect();

    let rows: Vec<Vec<f64>> = (0..settings.n_traj as u64)
        .into_par_iter()
        .map(|index| {
            let mut stepper = OuStepper::new(noise, grid.dt, settings.seed, index, true);
            let mut out = Vec::with_capacity(sample_steps.len());
            let mut step = 0;
            for &target in &sample_steps {
                while step < target {
                    stepper.step();
                    step += 1;
                }
                let phase: f64 = g * stepper
                    .integral()
                    .iter()
                    .zip(difference)
                    .map(|(i, d)| i * d)
                    .sum::<f64>();
                out.push(phase.cos());
            }
            out
        })
        .collect();

    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let est = bootstrap_means(&refs, sample_steps.len(), &settings.bootstrap);
    Ok(McEnvelope {
        times: sample_steps.iter().map(|&k| grid.time(k)).collect(),
        envelope: est.iter().map(|e| e.value).collect(),
        stderr: est.iter().map(|e| e.stderr).collect(),
    })
}

/// Monte-Carlo decay of one two-qubit coherence.
pub fn monte_carlo_coherence(
    p: &DephasingParams,
    pair: CoherencePair,
    settings: &McSettings,
) -> Result<McEnvelope, DephasingError> {
    let noise = OuParams::two_channel(p.gamma, p.sigma, p.xi)?;
    monte_carlo_envelope(&noise, &pair.difference_vector(), settings)
}
