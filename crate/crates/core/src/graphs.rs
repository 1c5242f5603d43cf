//! Noise correlations patterned on a graph, `Ξ = I + εA`.
//!
//! For a ring the correlation matrix is circulant, its eigenvectors are
//! real Fourier modes labelled by the cyclic-group irrep `k`, and the
//! eigenvalues are `1 + 2ε cos(2πk/N)`. A coherence `|a⟩⟨b|` between σz
//! eigenstates dephases at `(κ/2) dᵀΞd` with `d = s(a) − s(b)`; choosing `d`
//! inside one irrep subspace makes that rate proportional to the irrep's Ξ
//! eigenvalue.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lindblad::{build_qubit_dephasing, evolve, DensityMatrix, EvolveOptions, LindbladError};
use crate::noise::{validate_correlation, NoiseCorrelation, NoiseError};
use crate::stats::fit_decay_rate;
use crate::Complex64;

/// Largest register simulated by [`verify_by_simulation`].
pub const MAX_SIMULATED_SITES: usize = 4;
/// Fit window in units of `1/κ`.
pub const FIT_WINDOW: f64 = 2.0;

const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least {min} nodes, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("adjacency must be a symmetric 0/1 matrix with zero diagonal: {0}")]
    BadAdjacency(String),
    #[error("correlation I + epsilon*A is not positive semidefinite (smallest eigenvalue {0})")]
    NotPsd(f64),
    #[error("invalid graph correlation: {0}")]
    Correlation(String),
    #[error("graph is not circulant, irrep labels are undefined")]
    NotCirculant,
    #[error("simulation limited to {max} sites, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("no sigma-z difference pattern fits irrep {0}")]
    NoPattern(usize),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("master equation failed: {0}")]
    Lindblad(#[from] LindbladError),
}

impl From<NoiseError> for GraphError {
    fn from(e: NoiseError) -> Self {
        match e {
            NoiseError::NotPsd { min_eigenvalue } => GraphError::NotPsd(min_eigenvalue),
            other => GraphError::Correlation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseGraph {
    adjacency: DMatrix<f64>,
    epsilon: f64,
    correlation: NoiseCorrelation,
}

impl NoiseGraph {
    pub fn new(adjacency: DMatrix<f64>, epsilon: f64) -> Result<Self, GraphError> {
        let n = adjacency.nrows();
        if !adjacency.is_square() {
            return Err(GraphError::BadAdjacency("not square".into()));
        }
        if n < 2 {
            return Err(GraphError::TooSmall { n, min: 2 });
        }
        if !epsilon.is_finite() {
            return Err(GraphError::BadParams("epsilon must be finite".into()));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(GraphError::BadAdjacency(format!("diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let v = adjacency[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(GraphError::BadAdjacency(format!("entry ({i},{j}) = {v}")));
                }
                if v != adjacency[(j, i)] {
                    return Err(GraphError::BadAdjacency(format!("entry ({i},{j}) breaks symmetry")));
                }
            }
        }
        let xi = DMatrix::identity(n, n) + &adjacency * epsilon;
        let correlation = validate_correlation(&xi)?;
        Ok(Self {
            adjacency,
            epsilon,
            correlation,
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn correlation(&self) -> &NoiseCorrelation {
        &self.correlation
    }

    /// First row of the adjacency if every row is its cyclic shift.
    fn circulant_row(&self) -> Option<Vec<f64>> {
        let n = self.n();
        let row: Vec<f64> = (0..n).map(|m| self.adjacency[(0, m)]).collect();
        let ok = (0..n).all(|i| (0..n).all(|j| self.adjacency[(i, j)] == row[(j + n - i) % n]));
        ok.then_some(row)
    }

    pub fn is_circulant(&self) -> bool {
        self.circulant_row().is_some()
    }
}

/// Ring `C_N` with nearest-neighbour correlation ε.
pub fn cycle_graph(n: usize, epsilon: f64) -> Result<NoiseGraph, GraphError> {
    if n < 3 {
        return Err(GraphError::TooSmall { n, min: 3 });
    }
    let adjacency = DMatrix::from_fn(n, n, |i, j| if (i + 1) % n == j || (j + 1) % n == i { 1.0 } else { 0.0 });
    NoiseGraph::new(adjacency, epsilon)
}

/// Open chain of `n` nodes; for `n = 2` this is the two-qubit model with `ξ = ε`.
pub fn path_graph(n: usize, epsilon: f64) -> Result<NoiseGraph, GraphError> {
    let adjacency = DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { 1.0 } else { 0.0 });
    NoiseGraph::new(adjacency, epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrepMode {
    pub k: usize,
    /// Unit-norm real Fourier mode.
    pub vector: Vec<f64>,
    pub xi_eigenvalue: f64,
}

/// Real Fourier modes of a circulant Ξ, sorted by ascending eigenvalue.
///
/// Pairs `(k, N − k)` share an eigenvalue: the cosine mode carries label `k`,
/// the sine mode `N − k`.
pub fn irrep_modes(g: &NoiseGraph) -> Result<Vec<IrrepMode>, GraphError> {
    let row = g.circulant_row().ok_or(GraphError::NotCirculant)?;
    let n = g.n();
    let nf = n as f64;
    let angle = |k: usize, m: usize| std::f64::consts::TAU * (k * m) as f64 / nf;
    let eigenvalue = |k: usize| 1.0 + g.epsilon * (0..n).map(|m| row[m] * angle(k, m).cos()).sum::<f64>();

    let mut modes = Vec::with_capacity(n);
    for k in 0..=n / 2 {
        let lambda = eigenvalue(k);
        if k == 0 || 2 * k == n {
            let v = (0..n).map(|m| angle(k, m).cos() / nf.sqrt()).collect();
            modes.push(IrrepMode {
                k,
                vector: v,
                xi_eigenvalue: lambda,
            });
        } else {
            let s = (2.0 / nf).sqrt();
            modes.push(IrrepMode {
                k,
                vector: (0..n).map(|m| s * angle(k, m).cos()).collect(),
                xi_eigenvalue: lambda,
            });
            modes.push(IrrepMode {
                k: n - k,
                vector: (0..n).map(|m| s * angle(k, m).sin()).collect(),
                xi_eigenvalue: lambda,
            });
        }
    }
    modes.sort_by(|a, b| a.xi_eigenvalue.total_cmp(&b.xi_eigenvalue).then(a.k.cmp(&b.k)));
    Ok(modes)
}

/// Plain eigendecomposition of Ξ for graphs without cyclic symmetry,
/// ascending, without irrep labels.
pub fn plain_modes(g: &NoiseGraph) -> Vec<(Vec<f64>, f64)> {
    if !g.is_circulant() {
        log::warn!("graph is not circulant; modes carry no irrep labels");
    }
    let eig = SymmetricEigen::new(g.correlation.matrix().clone());
    let mut out: Vec<(Vec<f64>, f64)> = (0..g.n())
        .map(|i| (eig.eigenvectors.column(i).iter().copied().collect(), eig.eigenvalues[i]))
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrrepRate {
    pub k: usize,
    pub xi_eigenvalue: f64,
    pub rate: f64,
}

/// Rate of a two-site-normalised coherence patterned on each irrep, `4κλ_k`.
pub fn predicted_damping(g: &NoiseGraph, kappa: f64) -> Result<Vec<IrrepRate>, GraphError> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(GraphError::BadParams(format!("kappa must be >= 0, got {kappa}")));
    }
    Ok(irrep_modes(g)?
        .into_iter()
        .map(|m| IrrepRate {
            k: m.k,
            xi_eigenvalue: m.xi_eigenvalue,
            rate: 4.0 * kappa * m.xi_eigenvalue,
        })
        .collect())
}

/// Dephasing rate `(κ/2) dᵀΞd` of a coherence with difference vector `d`.
pub fn pattern_rate(xi: &DMatrix<f64>, d: &[f64], kappa: f64) -> f64 {
    let v = DVector::from_column_slice(d);
    0.5 * kappa * (v.transpose() * xi * &v)[(0, 0)]
}

/// σz difference vector in `{0, ±2}^N` lying inside the eigenspace of
/// `mode`, best aligned with the mode vector (shortest on ties).
pub fn irrep_pattern(modes: &[IrrepMode], mode: &IrrepMode) -> Option<Vec<f64>> {
    let n = mode.vector.len();
    let space: Vec<&IrrepMode> = modes
        .iter()
        .filter(|m| (m.xi_eigenvalue - mode.xi_eigenvalue).abs() < EIGEN_TOL)
        .collect();
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for code in 1..3usize.pow(n as u32) {
        let mut c = code;
        let d: Vec<f64> = (0..n)
            .map(|_| {
                let digit = c % 3;
                c /= 3;
                [0.0, 2.0, -2.0][digit]
            })
            .collect();
        let norm2: f64 = d.iter().map(|x| x * x).sum();
        let proj2: f64 = space
            .iter()
            .map(|m| m.vector.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().powi(2))
            .sum();
        if (norm2 - proj2).abs() > EIGEN_TOL * norm2 {
            continue;
        }
        let align = mode.vector.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().abs() / norm2.sqrt();
        let better = match &best {
            None => true,
            Some((ba, bn, _)) => align > ba + 1e-12 || ((align - ba).abs() <= 1e-12 && norm2 < *bn),
        };
        if better {
            best = Some((align, norm2, d));
        }
    }
    best.map(|(_, _, d)| d)
}

/// Basis indices `(a, b)` of σz eigenstates with `s(a) − s(b) = d`
/// (`σz|0⟩ = +|0⟩`, first site most significant).
fn states_for_pattern(d: &[f64]) -> (usize, usize) {
    let n = d.len();
    let (mut a, mut b) = (0, 0);
    for (i, &di) in d.iter().enumerate() {
        let bit = 1 << (n - 1 - i);
        if di > 0.0 {
            b |= bit;
        } else if di < 0.0 {
            a |= bit;
        }
    }
    (a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrepCheck {
    pub k: usize,
    pub xi_eig: f64,
    /// `4κλ_k`.
    pub predicted_rate: f64,
    /// Fitted rate rescaled by `8/|d|²` to the same two-site normalisation.
    pub fitted_rate: f64,
    pub relative_error: f64,
    /// σz difference vector of the simulated coherence.
    pub pattern: Vec<f64>,
}

/// Simulate one patterned coherence per irrep with the full master equation
/// and fit its decay over `κt ∈ [0, 2]`.
pub fn verify_by_simulation(g: &NoiseGraph, kappa: f64, delta: f64) -> Result<Vec<IrrepCheck>, GraphError> {
    let n = g.n();
    if n > MAX_SIMULATED_SITES {
        return Err(GraphError::TooLarge {
            n,
            max: MAX_SIMULATED_SITES,
        });
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(GraphError::BadParams(format!("kappa must be > 0, got {kappa}")));
    }
    let modes = irrep_modes(g)?;
    let model = build_qubit_dephasing(n, delta, kappa, g.correlation.clone())?;
    let xi = g.correlation.matrix();
    let t_final = FIT_WINDOW / kappa;
    let n_steps = 400;
    let dt = t_final / n_steps as f64;
    let options = EvolveOptions {
        sample_every: 10,
        eig_audit_every: 10,
    };

    modes
        .par_iter()
        .map(|mode| {
            let d = irrep_pattern(&modes, mode).ok_or(GraphError::NoPattern(mode.k))?;
            let (a, b) = states_for_pattern(&d);
            let dim = 1 << n;
            let mut psi = DVector::from_element(dim, Complex64::new(0.0, 0.0));
            psi[a] = Complex64::new(1.0, 0.0);
            psi[b] = Complex64::new(1.0, 0.0);
            let rho0 = DensityMatrix::pure(&psi)?;
            let run = evolve(&model, &rho0, t_final, dt, &options)?;
            let magnitudes: Vec<f64> = run.states.iter().map(|r| r.element(a, b).norm()).collect();
            let fitted = fit_decay_rate(&run.times, &magnitudes);
            let norm2: f64 = d.iter().map(|x| x * x).sum();
            let scale = 8.0 / norm2;
            debug_assert!((pattern_rate(xi, &d, kappa) * scale - 4.0 * kappa * mode.xi_eigenvalue).abs() < 1e-9);
            let predicted_rate = 4.0 * kappa * mode.xi_eigenvalue;
            let fitted_rate = fitted * scale;
            let relative_error = if predicted_rate.abs() > 0.0 {
                (fitted_rate - predicted_rate).abs() / predicted_rate.abs()
            } else {
                fitted_rate.abs()
            };
            Ok(IrrepCheck {
                k: mode.k,
                xi_eig: mode.xi_eigenvalue,
                predicted_rate,
                fitted_rate,
                relative_error,
                pattern: d,
            })
        })
        .collect()
}
