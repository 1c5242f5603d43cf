//! Noise-induced synchronization and coherence protection in open quantum
//! systems.
//!
//! The crate is organised around three independent computational routes that
//! are meant to be cross-checked against each other:
//!
//! * stochastic: correlated Ornstein–Uhlenbeck noise ([`noise`]) driving
//!   Monte-Carlo dephasing ([`dephasing::stochastic`]) and amplitude ensembles
//!   ([`sync`]);
//! * analytic: Anderson–Kubo dephasing exponents ([`dephasing`]), closed-form
//!   drift eigenvalues and exceptional points ([`moments`]), Rényi-2
//!   quantumness of Gaussian states ([`gaussinfo`]);
//! * deterministic: correlated Lindblad master-equation integration
//!   ([`lindblad`]) and graph-resolved dephasing ([`graphs`]).
//!
//! Units: ħ = 1, frequencies and rates share one unit.

pub mod dephasing;
pub mod gaussinfo;
pub mod graphs;
pub mod lindblad;
pub mod moments;
pub mod noise;
pub mod stats;
pub mod sync;

pub use num_complex::Complex64;

/// Engine version string written into run manifests and export sidecars.
pub fn engine_version() -> String {
    match option_env!("CORRSYNC_GIT_DESCRIBE") {
        Some(describe) if !describe.is_empty() => {
            format!("{} ({})", env!("CARGO_PKG_VERSION"), describe)
        }
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}
