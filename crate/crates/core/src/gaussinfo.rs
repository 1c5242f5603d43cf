//! Rényi-2 information measures of Gaussian states.
//!
//! For a Gaussian state with quadrature covariance Θ (vacuum variance ½),
//! `S₂ = ½ ln det(2Θ)` up to constants that cancel in the mutual information
//! `I₂(A:B) = ½ ln(det Θ_A det Θ_B / det Θ_AB)`. The classical reference
//! zeroes the blocks linking A and B, and `Q = I₂ − I₂^class`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::{steady_covariance, MomentsError, OscillatorParams};
use crate::Complex64;

const SYMMETRY_TOL: f64 = 1e-12;
const PHYSICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussError {
    #[error("both subsystems must contain at least one mode")]
    EmptyPartition,
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("covariance must be 2n x 2n, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("covariance is not symmetric (deviation {0:e})")]
    NotSymmetric(f64),
    #[error("covariance violates the uncertainty relation: {0}")]
    Unphysical(String),
}

/// Quadrature covariance ordered `(x₁, p₁, x₂, p₂, …)` with a split of the
/// modes into subsystems A and B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    theta: DMatrix<f64>,
    subsystem_a: Vec<usize>,
    subsystem_b: Vec<usize>,
}

/// Standard symplectic form `⊕ [[0, 1], [−1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

/// Smallest eigenvalue of the Hermitian matrix `Θ + (i/2)Ω`.
pub fn uncertainty_margin(theta: &DMatrix<f64>) -> f64 {
    let n = theta.nrows() / 2;
    let omega = symplectic_form(n);
    let m = DMatrix::from_fn(2 * n, 2 * n, |i, j| Complex64::new(theta[(i, j)], 0.5 * omega[(i, j)]));
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

impl GaussianState {
    pub fn new(theta: DMatrix<f64>, subsystem_a: Vec<usize>, subsystem_b: Vec<usize>) -> Result<Self, GaussError> {
        let (rows, cols) = theta.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(GaussError::BadShape { rows, cols });
        }
        let n_modes = rows / 2;
        if subsystem_a.is_empty() || subsystem_b.is_empty() {
            return Err(GaussError::EmptyPartition);
        }
        let mut seen = vec![false; n_modes];
        for &m in subsystem_a.iter().chain(&subsystem_b) {
            if m >= n_modes {
                return Err(GaussError::BadPartition(format!("mode {m} out of range for {n_modes} modes")));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(GaussError::BadPartition(format!("mode {m} assigned twice")));
            }
        }
        let deviation = (&theta - theta.transpose()).abs().max();
        if deviation > SYMMETRY_TOL {
            return Err(GaussError::NotSymmetric(deviation));
        }
        let margin = uncertainty_margin(&theta);
        if margin < -PHYSICALITY_TOL {
            return Err(GaussError::Unphysical(format!("smallest eigenvalue of Θ + iΩ/2 is {margin:e}")));
        }
        let det = theta.determinant();
        if !(det > 0.0) {
            return Err(GaussError::Unphysical(format!("det Θ = {det:e}")));
        }
        Ok(Self {
            theta,
            subsystem_a,
            subsystem_b,
        })
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn n_modes(&self) -> usize {
        self.theta.nrows() / 2
    }

    pub fn subsystem_a(&self) -> &[usize] {
        &self.subsystem_a
    }

    pub fn subsystem_b(&self) -> &[usize] {
        &self.subsystem_b
    }

    /// Same covariance with the roles of A and B exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            theta: self.theta.clone(),
            subsystem_a: self.subsystem_b.clone(),
            subsystem_b: self.subsystem_a.clone(),
        }
    }

    fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
        modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
    }

    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.theta[(rows[i], cols[j])])
    }

    /// Marginal covariance of the given modes.
    pub fn marginal(&self, modes: &[usize]) -> DMatrix<f64> {
        let idx = Self::quadrature_indices(modes);
        self.block(&idx, &idx)
    }

    /// Covariance restricted to `A ∪ B`.
    pub fn joint(&self) -> DMatrix<f64> {
        let modes: Vec<usize> = self.subsystem_a.iter().chain(&self.subsystem_b).copied().collect();
        self.marginal(&modes)
    }
}

/// `I₂(A:B) = ½ ln(det Θ_A det Θ_B / det Θ_AB)` in nats, floored at zero.
pub fn renyi2_mutual_information(s: &GaussianState) -> f64 {
    let det_a = s.marginal(&s.subsystem_a).determinant();
    let det_b = s.marginal(&s.subsystem_b).determinant();
    let det_ab = s.joint().determinant();
    // Sum of logs keeps precision when the determinants are large or small.
    let i2 = 0.5 * (det_a.ln() + det_b.ln() - det_ab.ln());
    if i2 < -1e-12 {
        log::warn!("negative Rényi-2 mutual information {i2:e} clamped to zero");
    }
    i2.max(0.0)
}

/// Zero every covariance entry linking a mode of A with a mode of B.
pub fn classical_reference(s: &GaussianState) -> GaussianState {
    let mut theta = s.theta.clone();
    let ia = GaussianState::quadrature_indices(&s.subsystem_a);
    let ib = GaussianState::quadrature_indices(&s.subsystem_b);
    for &i in &ia {
        for &j in &ib {
            theta[(i, j)] = 0.0;
            theta[(j, i)] = 0.0;
        }
    }
    let out = GaussianState {
        theta,
        subsystem_a: s.subsystem_a.clone(),
        subsystem_b: s.subsystem_b.clone(),
    };
    debug_assert!(uncertainty_margin(&out.theta) >= -PHYSICALITY_TOL);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantumness {
    pub i2: f64,
    pub i2_classical: f64,
    pub q: f64,
}

pub fn quantumness(s: &GaussianState) -> Quantumness {
    let i2 = renyi2_mutual_information(s);
    let i2_classical = renyi2_mutual_information(&classical_reference(s));
    Quantumness {
        i2,
        i2_classical,
        q: i2 - i2_classical,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub xi: f64,
    /// `None` when the drift is unstable at this ξ.
    pub value: Option<Quantumness>,
}

impl SweepPoint {
    pub fn stable(&self) -> bool {
        self.value.is_some()
    }
}

/// `Q(ξ)` from stationary covariances; unstable points are kept and flagged.
pub fn q_vs_xi_sweep(p: &OscillatorParams, xi_grid: &[f64]) -> Result<Vec<SweepPoint>, MomentsError> {
    xi_grid
        .par_iter()
        .map(|&xi| match steady_covariance(&p.with_xi(xi)) {
            Ok(state) => Ok(SweepPoint {
                xi,
                value: Some(quantumness(&state)),
            }),
            Err(MomentsError::UnstableDrift { .. }) => Ok(SweepPoint { xi, value: None }),
            Err(e) => Err(e),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn correlated(c: f64, g: f64) -> GaussianState {
        #[rustfmt::skip]
        let theta = DMatrix::from_row_slice(4, 4, &[
            c, 0.0, g, 0.0,
            0.0, c, 0.0, -g,
            g, 0.0, c, 0.0,
            0.0, -g, 0.0, c,
        ]);
        GaussianState::new(theta, vec![0], vec![1]).unwrap()
    }

    #[test]
    fn product_states_carry_no_information() {
        let vac = GaussianState::new(DMatrix::identity(4, 4) * 0.5, vec![0], vec![1]).unwrap();
        assert!(renyi2_mutual_information(&vac).abs() < 1e-12);
        let block = GaussianState::new(DMatrix::from_diagonal(&nalgebra::dvector![0.7, 0.9, 1.5, 0.5]), vec![0], vec![1]).unwrap();
        assert!(renyi2_mutual_information(&block).abs() < 1e-12);
        assert!(quantumness(&block).q.abs() < 1e-12);
    }

    #[test]
    fn correlated_example_matches_determinant_formula() {
        let s = correlated(1.0, 0.5);
        // det Θ_AB = (c² − g²)², marginals c² each.
        let oracle = 0.5 * (1.0f64.powi(4) / (1.0f64 - 0.25).powi(2)).ln();
        assert!((renyi2_mutual_information(&s) - oracle).abs() < 1e-14);
        assert!((oracle - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        let q = quantumness(&s);
        assert!((q.q - oracle).abs() < 1e-14);
        assert_eq!(q.i2_classical, 0.0);
    }

    #[test]
    fn classical_reference_is_idempotent() {
        let s = correlated(1.0, 0.5);
        let once = classical_reference(&s);
        assert_eq!(classical_reference(&once), once);
        assert!(renyi2_mutual_information(&once).abs() < 1e-14);
        let block = GaussianState::new(DMatrix::identity(4, 4), vec![0], vec![1]).unwrap();
        assert_eq!(classical_reference(&block), block);
    }

    #[test]
    fn invalid_states_rejected() {
        let theta = DMatrix::identity(4, 4) * 0.4;
        assert!(matches!(GaussianState::new(theta, vec![0], vec![1]), Err(GaussError::Unphysical(_))));
        let theta = DMatrix::identity(4, 4);
        assert_eq!(GaussianState::new(theta.clone(), vec![], vec![1]), Err(GaussError::EmptyPartition));
        assert!(matches!(GaussianState::new(theta.clone(), vec![0], vec![0]), Err(GaussError::BadPartition(_))));
        assert!(matches!(
            GaussianState::new(DMatrix::identity(3, 3), vec![0], vec![1]),
            Err(GaussError::BadShape { .. })
        ));
        let mut skew = theta;
        skew[(0, 1)] = 0.1;
        assert!(matches!(GaussianState::new(skew, vec![0], vec![1]), Err(GaussError::NotSymmetric(_))));
    }

    #[test]
    fn uncorrelated_steady_state_has_no_quantumness() {
        let p = OscillatorParams::new(1.0, 1.1, 0.0, 0.5, 0.0, 0.5, 0.5).unwrap();
        let sweep = q_vs_xi_sweep(&p, &[0.0]).unwrap();
        assert!(sweep[0].value.unwrap().q <= 1e-10);
    }

    #[test]
    fn quantumness_grows_with_correlation() {
        let p = OscillatorParams::new(1.1, 1.0, 0.0, 0.5, 0.0, 0.3, 0.7).unwrap();
        let sweep = q_vs_xi_sweep(&p, &[0.1, 0.5, 0.9]).unwrap();
        let q: Vec<f64> = sweep.iter().map(|s| s.value.unwrap().q).collect();
        assert!(q[0] < q[1] && q[1] < q[2], "{q:?}");
    }

    #[test]
    fn equal_occupations_leave_modes_uncorrelated() {
        // The product of equal-occupation thermal states is stationary for
        // every J, ξ and detuning, so no correlations build up.
        let p = OscillatorParams::new(1.1, 1.0, 0.07, 0.5, 0.0, 0.5, 0.5).unwrap();
        for point in q_vs_xi_sweep(&p, &[-0.9, 0.1, 0.5, 0.9]).unwrap() {
            assert!(point.value.unwrap().q < 1e-12);
        }
    }

    #[test]
    fn unstable_points_are_flagged() {
        let p = OscillatorParams::new(1.0, 1.0, 0.0, 0.5, 0.0, 0.0, 0.0).unwrap();
        let sweep = q_vs_xi_sweep(&p, &[0.5, 1.0]).unwrap();
        assert!(sweep[0].stable());
        assert!(!sweep[1].stable());
    }

    #[test]
    fn sign_of_correlation_is_irrelevant_on_resonance() {
        let p = OscillatorParams::new(1.0, 1.0, 0.0, 0.5, 0.0, 0.3, 0.8).unwrap();
        let sweep = q_vs_xi_sweep(&p, &[-0.6, 0.6]).unwrap();
        let (a, b) = (sweep[0].value.unwrap().q, sweep[1].value.unwrap().q);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    fn rotation(phi: f64) -> nalgebra::Matrix2<f64> {
        nalgebra::Matrix2::new(phi.cos(), -phi.sin(), phi.sin(), phi.cos())
    }

    proptest! {
        #[test]
        fn mutual_information_properties(
            dw in -0.3f64..0.3, j in -0.2f64..0.2, xi in -0.9f64..0.9,
            n1 in 0.0f64..1.5, n2 in 0.0f64..1.5, phi_a in 0.0f64..6.3, phi_b in 0.0f64..6.3,
        ) {
            let p = OscillatorParams::new(1.0 + dw, 1.0, j, 0.5, xi, n1, n2).unwrap();
            let s = steady_covariance(&p);
            prop_assume!(s.is_ok());
            let s = s.unwrap();
            let i2 = renyi2_mutual_information(&s);
            prop_assert!(i2 >= 0.0);
            prop_assert!((i2 - renyi2_mutual_information(&s.swapped())).abs() <= 1e-12);
            prop_assert_eq!(quantumness(&classical_reference(&s)).q, 0.0);

            let mut local = DMatrix::<f64>::zeros(4, 4);
            local.view_mut((0, 0), (2, 2)).copy_from(&rotation(phi_a));
            local.view_mut((2, 2), (2, 2)).copy_from(&rotation(phi_b));
            let rotated = &local * s.theta() * local.transpose();
            let rotated = (&rotated + rotated.transpose()) * 0.5;
            let r = GaussianState::new(rotated, vec![0], vec![1]).unwrap();
            prop_assert!((renyi2_mutual_information(&r) - i2).abs() <= 1e-10);
        }
    }
}
