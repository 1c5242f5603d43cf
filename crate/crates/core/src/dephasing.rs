//! Anderson–Kubo dephasing of two qubits under correlated longitudinal noise.
//!
//! The Hamiltonian is `H(t) = (Δ/2)(σz⁽¹⁾ + σz⁽²⁾) + σz⁽¹⁾E₁(t) + σz⁽²⁾E₂(t)`
//! with `E₁, E₂` correlated OU channels. Coherences between states that differ
//! in total excitation couple to the symmetric channel `E₊`; coherences inside
//! the single-excitation manifold couple to the antisymmetric channel `E₋`.
//!
//! Decay envelopes are real; phases from Δ are tracked separately and vanish
//! for the degenerate `|01⟩, |10⟩` pair.

pub mod stochastic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DephasingError {
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("invalid dephasing parameters: {0}")]
    BadParams(String),
    #[error("noise sampling failed: {0}")]
    Noise(String),
}

impl From<crate::noise::NoiseError> for DephasingError {
    fn from(e: crate::noise::NoiseError) -> Self {
        DephasingError::Noise(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    pub sigma: f64,
    pub gamma: f64,
    pub xi: f64,
    /// Qubit splitting Δ; only enters phase factors.
    pub delta: f64,
}

impl DephasingParams {
    pub fn new(sigma: f64, gamma: f64, xi: f64, delta: f64) -> Result<Self, DephasingError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(DephasingError::BadParams(format!("sigma must be >= 0, got {sigma}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(DephasingError::BadParams(format!("gamma must be > 0, got {gamma}")));
        }
        if !(xi.is_finite() && xi.abs() <= 1.0) {
            return Err(DephasingError::BadParams(format!("xi must lie in [-1, 1], got {xi}")));
        }
        if !delta.is_finite() {
            return Err(DephasingError::BadParams("delta must be finite".into()));
        }
        Ok(Self {
            sigma,
            gamma,
            xi,
            delta,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = (Complex64::new(s, 0.0), Complex64::new(-s, 0.0));
        let z = Complex64::new(0.0, 0.0);
        match self {
            BellState::PhiPlus => [a, z, z, a],
            BellState::PhiMinus => [a, z, z, b],
            BellState::PsiPlus => [z, a, a, z],
            BellState::PsiMinus => [z, a, b, z],
        }
    }

    /// The noise branch whose exponent governs this state's coherence.
    pub fn branch(self) -> Branch {
        match self {
            BellState::PhiPlus | BellState::PhiMinus => Branch::Plus,
            BellState::PsiPlus | BellState::PsiMinus => Branch::Minus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }
}

impl std::str::FromStr for BellState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi+" | "phiplus" | "φ+" => Ok(BellState::PhiPlus),
            "phi-" | "phiminus" | "φ-" => Ok(BellState::PhiMinus),
            "psi+" | "psiplus" | "ψ+" => Ok(BellState::PsiPlus),
            "psi-" | "psiminus" | "ψ-" => Ok(BellState::PsiMinus),
            other => Err(format!("unknown Bell state '{other}'")),
        }
    }
}

/// `x + e^{-x} - 1`, accurate for small `x`.
pub fn kubo_kernel(x: f64) -> f64 {
    if x < 1e-3 {
        let x2 = x * x;
        x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0)
    } else {
        x + (-x).exp_m1()
    }
}

fn check_time(t: f64) -> Result<(), DephasingError> {
    if t < 0.0 || t.is_nan() {
        return Err(DephasingError::NegativeTime(t));
    }
    Ok(())
}

/// `Γ±(t) = (σ²/γ²)(1 ± ξ)(γt + e^{−γt} − 1)`.
pub fn gamma_pm(t: f64, p: &DephasingParams, branch: Branch) -> Result<f64, DephasingError> {
    check_time(t)?;
    let weight = 1.0 + branch.sign() * p.xi;
    Ok(p.sigma * p.sigma / (p.gamma * p.gamma) * weight * kubo_kernel(p.gamma * t))
}

/// Decay factor of `ρ_{01,10}`: `e^{−Γ₋(t)}`. No Δ phase, the pair is degenerate.
pub fn coherence_01_10(t: f64, p: &DephasingParams) -> Result<Complex64, DephasingError> {
    let g = gamma_pm(t, p, Branch::Minus)?;
    Ok(Complex64::new((-g).exp(), 0.0))
}

/// Decay factor of `ρ_{00,11}`: `e^{−Γ₊(t)}` times the Δ phase `e^{−2iΔt}`.
pub fn coherence_00_11(t: f64, p: &DephasingParams) -> Result<Complex64, DephasingError> {
    let g = gamma_pm(t, p, Branch::Plus)?;
    Ok(Complex64::from_polar((-g).exp(), -2.0 * p.delta * t))
}

/// Bell-state exponent: `16 Γ₊` for Φ±, `16 Γ₋` for Ψ±.
pub fn bell_gamma(state: BellState, t: f64, p: &DephasingParams) -> Result<f64, DephasingError> {
    Ok(16.0 * gamma_pm(t, p, state.branch())?)
}

/// `P(t) = (1 + e^{−2Γ_Bell(t)})/2`.
pub fn bell_purity(state: BellState, t: f64, p: &DephasingParams) -> Result<f64, DephasingError> {
    let g = bell_gamma(state, t, p)?;
    Ok(0.5 * (1.0 + (-2.0 * g).exp()))
}

/// Lower and upper bounds on `r = γ/(σ√(1±ξ))` separating the regimes.
pub const GAUSSIAN_BELOW: f64 = 1.0 / 3.0;
pub const LORENTZIAN_ABOVE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    GaussianInhomogeneous,
    Crossover,
    LorentzianNarrowed,
    DecoherenceFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRegime {
    /// `γ/(σ√(1±ξ))`; `None` when the effective amplitude vanishes.
    pub ratio: Option<f64>,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub plus: BranchRegime,
    pub minus: BranchRegime,
}

/// Classify each branch by its modulation ratio.
pub fn modulation_regime(p: &DephasingParams) -> RegimeReport {
    let classify = |branch: Branch| {
        let sigma_eff = p.sigma * (1.0 + branch.sign() * p.xi).max(0.0).sqrt();
        if sigma_eff == 0.0 {
            return BranchRegime {
                ratio: None,
                regime: Regime::DecoherenceFree,
            };
        }
        let r = p.gamma / sigma_eff;
        let regime = if r < GAUSSIAN_BELOW {
            Regime::GaussianInhomogeneous
        } else if r > LORENTZIAN_ABOVE {
            Regime::LorentzianNarrowed
        } else {
            Regime::Crossover
        };
        BranchRegime {
            ratio: Some(r),
            regime,
        }
    };
    RegimeReport {
        plus: classify(Branch::Plus),
        minus: classify(Branch::Minus),
    }
}
