//! First and second moments of two coupled, correlated-damped oscillators.
//!
//! Mode amplitudes obey `d⟨(a₁, a₂)⟩/dt = W ⟨(a₁, a₂)⟩` with
//!
//! ```text
//! W = [[−iω₁ − γ,   −iJ − γξ],
//!      [−iJ − γξ,   −iω₂ − γ]]
//! ```
//!
//! whose eigenvalues are `λ± = −iω̄ − γ ± √((−iΔω/2)² − (J − iγξ)²)`.
//! They coalesce where `(2γξ + 2iJ)² = Δω²`, i.e. at the two exceptional
//! points `ξ = (±Δω − 2iJ)/(2γ)`. Complex ξ is allowed for continuation
//! around those points; physical dynamics uses real `|ξ| ≤ 1`.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussinfo::GaussianState;
use crate::stats::linear_fit;
use crate::Complex64;

/// Closest approach of a monodromy loop to an exceptional point.
pub const EP_CLEARANCE: f64 = 1e-3;
/// Largest relative eigenvalue motion per tracking step, as a fraction of the gap.
pub const TRACK_STEP_GUARD: f64 = 0.3;
/// Lyapunov residual accepted for a steady covariance.
pub const LYAPUNOV_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentsError {
    #[error("invalid oscillator parameters: {0}")]
    BadParams(String),
    #[error("loop passes within {distance:e} of the exceptional point at {ep}")]
    LoopThroughEp { ep: Complex64, distance: f64 },
    #[error("invalid loop: {0}")]
    BadLoop(String),
    #[error("invalid offsets: {0}")]
    BadDeltas(String),
    #[error("drift is not stable: largest eigenvalue real part {max_real_part}")]
    UnstableDrift { max_real_part: f64 },
    #[error("Lyapunov solve failed: {0}")]
    LyapunovFailed(String),
}

fn ci(im: f64) -> Complex64 {
    Complex64::new(0.0, im)
}

fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub omega1: f64,
    pub omega2: f64,
    /// Exchange coupling J.
    pub j: f64,
    pub gamma: f64,
    pub xi: f64,
    pub n1: f64,
    pub n2: f64,
}

impl OscillatorParams {
    pub fn new(omega1: f64, omega2: f64, j: f64, gamma: f64, xi: f64, n1: f64, n2: f64) -> Result<Self, MomentsError> {
        let p = Self {
            omega1,
            omega2,
            j,
            gamma,
            xi,
            n1,
            n2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MomentsError> {
        let finite = [self.omega1, self.omega2, self.j, self.gamma, self.xi, self.n1, self.n2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(MomentsError::BadParams("parameters must be finite".into()));
        }
        if self.gamma < 0.0 {
            return Err(MomentsError::BadParams(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.xi.abs() > 1.0 {
            return Err(MomentsError::BadParams(format!("xi must lie in [-1, 1], got {}", self.xi)));
        }
        if self.n1 < 0.0 || self.n2 < 0.0 {
            return Err(MomentsError::BadParams("thermal occupations must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    /// Detuning `Δω = ω₁ − ω₂`.
    pub fn delta_omega(&self) -> f64 {
        self.omega1 - self.omega2
    }

    pub fn mean_omega(&self) -> f64 {
        0.5 * (self.omega1 + self.omega2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftMatrix {
    pub w: Matrix2<Complex64>,
}

/// `W` at a possibly complex correlation `xi`.
pub fn drift_matrix_at(p: &OscillatorParams, xi: Complex64) -> Matrix2<Complex64> {
    let off = ci(-p.j) - xi * p.gamma;
    Matrix2::new(ci(-p.omega1) - p.gamma, off, off, ci(-p.omega2) - p.gamma)
}

pub fn drift_matrix(p: &OscillatorParams) -> DriftMatrix {
    DriftMatrix {
        w: drift_matrix_at(p, cr(p.xi)),
    }
}

/// `(−iΔω/2)² − (J − iγξ)²`; zero exactly at the exceptional points.
///
/// Evaluated in factored form so that the vanishing factor is computed
/// without cancellation near an exceptional point.
pub fn discriminant(p: &OscillatorParams, xi: Complex64) -> Complex64 {
    let a = ci(-p.delta_omega() / 2.0);
    let b = cr(p.j) - ci(p.gamma) * xi;
    (a - b) * (a + b)
}

/// Closed-form `(λ₊, λ₋)` at complex `xi`, principal square root, so `λ₊`
/// has the larger real part.
pub fn eigenvalues_at(p: &OscillatorParams, xi: Complex64) -> (Complex64, Complex64) {
    let centre = ci(-p.mean_omega()) - p.gamma;
    let s = discriminant(p, xi).sqrt();
    (centre + s, centre - s)
}

pub fn eigenvalues(p: &OscillatorParams) -> (Complex64, Complex64) {
    eigenvalues_at(p, cr(p.xi))
}

/// `|λ₊ − λ₋|`.
pub fn eigenvalue_gap(p: &OscillatorParams, xi: Complex64) -> f64 {
    2.0 * discriminant(p, xi).sqrt().norm()
}

/// `(2γξ + 2iJ)² − Δω²`, the coalescence condition.
pub fn ep_condition_residual(p: &OscillatorParams, xi: Complex64) -> Complex64 {
    let u = xi * (2.0 * p.gamma) + ci(2.0 * p.j);
    u * u - cr(p.delta_omega() * p.delta_omega())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpBranch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpLocus {
    pub points: Vec<Complex64>,
    pub branches: Vec<EpBranch>,
    /// Both points lie on the real axis (J = 0).
    pub real: bool,
}

/// `ξ_EP = (±Δω − 2iJ)/(2γ)`. The `xi` field of `p` is ignored.
pub fn find_exceptional_points(p: &OscillatorParams) -> Result<EpLocus, MomentsError> {
    if !(p.gamma > 0.0) {
        return Err(MomentsError::BadParams("exceptional points need gamma > 0".into()));
    }
    let dw = p.delta_omega();
    let g2 = 2.0 * p.gamma;
    let plus = Complex64::new(dw / g2, -2.0 * p.j / g2);
    let minus = Complex64::new(-dw / g2, -2.0 * p.j / g2);
    Ok(EpLocus {
        points: vec![plus, minus],
        branches: vec![EpBranch::Plus, EpBranch::Minus],
        real: p.j == 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub xi: Complex64,
    /// Continuation of the eigenvalue that started as `λ₊`.
    pub first: Complex64,
    /// Continuation of the eigenvalue that started as `λ₋`.
    pub second: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    pub swapped: bool,
    pub track: Vec<TrackPoint>,
}

const MAX_SUBDIVISION: u32 = 40;

fn loop_point(center: Complex64, radius: f64, theta: f64) -> Complex64 {
    center + Complex64::from_polar(radius, theta)
}

/// Pair the unordered spectrum at the next point with the current tracks.
fn match_pair(cur: (Complex64, Complex64), next: (Complex64, Complex64)) -> (Complex64, Complex64) {
    let direct = (cur.0 - next.0).norm() + (cur.1 - next.1).norm();
    let crossed = (cur.0 - next.1).norm() + (cur.1 - next.0).norm();
    if direct <= crossed {
        next
    } else {
        (next.1, next.0)
    }
}

fn advance(
    p: &OscillatorParams,
    center: Complex64,
    radius: f64,
    theta: (f64, f64),
    cur: (Complex64, Complex64),
    depth: u32,
) -> (Complex64, Complex64) {
    let next = match_pair(cur, eigenvalues_at(p, loop_point(center, radius, theta.1)));
    let gap = (cur.0 - cur.1).norm();
    let motion = (next.0 - cur.0).norm().max((next.1 - cur.1).norm());
    if motion < TRACK_STEP_GUARD * gap || depth >= MAX_SUBDIVISION {
        return next;
    }
    let mid = 0.5 * (theta.0 + theta.1);
    let half = advance(p, center, radius, (theta.0, mid), cur, depth + 1);
    advance(p, center, radius, (mid, theta.1), half, depth + 1)
}

/// Track both eigenvalues once around the circle `ξ = center + radius·e^{iθ}`
/// and report whether they come back exchanged.
pub fn monodromy_loop(
    p: &OscillatorParams,
    center: Complex64,
    radius: f64,
    n_steps: usize,
) -> Result<Monodromy, MomentsError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(MomentsError::BadLoop(format!("radius must be > 0, got {radius}")));
    }
    if n_steps < 64 {
        return Err(MomentsError::BadLoop(format!("need at least 64 steps, got {n_steps}")));
    }
    for ep in find_exceptional_points(p)?.points {
        let distance = ((ep - center).norm() - radius).abs();
        if distance < EP_CLEARANCE {
            return Err(MomentsError::LoopThroughEp { ep, distance });
        }
    }

    let dtheta = std::f64::consts::TAU / n_steps as f64;
    let start = eigenvalues_at(p, loop_point(center, radius, 0.0));
    let mut cur = start;
    let mut track = Vec::with_capacity(n_steps + 1);
    track.push(TrackPoint {
        xi: loop_point(center, radius, 0.0),
        first: cur.0,
        second: cur.1,
    });
    for k in 0..n_steps {
        let theta = (k as f64 * dtheta, (k + 1) as f64 * dtheta);
        cur = advance(p, center, radius, theta, cur, 0);
        track.push(TrackPoint {
            xi: loop_point(center, radius, theta.1),
            first: cur.0,
            second: cur.1,
        });
    }
    let swapped = (cur.0 - start.1).norm() < (cur.0 - start.0).norm();
    Ok(Monodromy { swapped, track })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapScaling {
    pub exponent: f64,
    pub prefactor: f64,
}

fn check_deltas(deltas: &[f64]) -> Result<(), MomentsError> {
    if deltas.len() < 2 {
        return Err(MomentsError::BadDeltas("need at least two offsets".into()));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(MomentsError::BadDeltas("offsets must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(MomentsError::BadDeltas("offsets must be strictly decreasing".into()));
    }
    Ok(())
}

/// Log-log fit of `|λ₊ − λ₋|` against `δ` for `ξ = ep + δ` along the real
/// direction: `gap ≈ prefactor · δ^exponent`.
pub fn gap_scaling(p: &OscillatorParams, ep: Complex64, deltas: &[f64]) -> Result<GapScaling, MomentsError> {
    check_deltas(deltas)?;
    let x: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = deltas.iter().map(|d| eigenvalue_gap(p, ep + d).ln()).collect();
    let (exponent, intercept) = linear_fit(&x, &y);
    Ok(GapScaling {
        exponent,
        prefactor: intercept.exp(),
    })
}

/// `d ln gap / d ln δ` at offset `delta` from `ep`.
pub fn local_gap_exponent(p: &OscillatorParams, ep: Complex64, delta: f64) -> f64 {
    let h: f64 = 1e-4;
    let lo = delta * (-h).exp();
    let hi = delta * h.exp();
    (eigenvalue_gap(p, ep + hi).ln() - eigenvalue_gap(p, ep + lo).ln()) / (2.0 * h)
}

/// Drift of `⟨a⟩` generated by the four thermal channels at real ξ.
///
/// Off-diagonal damping is `γξ(√((n₁+1)(n₂+1)) − √(n₁n₂))`, which equals the
/// `γξ` of [`drift_matrix`] only for equal occupations.
pub fn channel_drift(p: &OscillatorParams) -> Matrix2<Complex64> {
    let mix = ((p.n1 + 1.0) * (p.n2 + 1.0)).sqrt() - (p.n1 * p.n2).sqrt();
    let off = ci(-p.j) - p.gamma * p.xi * mix;
    Matrix2::new(ci(-p.omega1) - p.gamma, off, off, ci(-p.omega2) - p.gamma)
}

/// Eigenvalues of a 2×2 matrix from its trace and determinant.
pub fn eigenvalues_2x2(m: &Matrix2<Complex64>) -> (Complex64, Complex64) {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let s = (half_trace * half_trace - det).sqrt();
    (half_trace + s, half_trace - s)
}

/// `(G, H)` with `G_kl = 2γ Ξ_kl √((n_k+1)(n_l+1))` (damping) and
/// `H_kl = 2γ Ξ_kl √(n_k n_l)` (creation).
fn channel_strengths(p: &OscillatorParams) -> (Matrix2<f64>, Matrix2<f64>) {
    let kappa = 2.0 * p.gamma;
    let xi = Matrix2::new(1.0, p.xi, p.xi, 1.0);
    let up = [p.n1 + 1.0, p.n2 + 1.0];
    let down = [p.n1, p.n2];
    let g = Matrix2::from_fn(|k, l| kappa * xi[(k, l)] * (up[k] * up[l]).sqrt());
    let h = Matrix2::from_fn(|k, l| kappa * xi[(k, l)] * (down[k] * down[l]).sqrt());
    (g, h)
}

/// Quadrature drift `W̃` and diffusion `D` in the ordering `(x₁, p₁, x₂, p₂)`.
pub fn quadrature_drift_diffusion(p: &OscillatorParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let w = channel_drift(p);
    let (g, h) = channel_strengths(p);
    let mut a = DMatrix::zeros(4, 4);
    let mut d = DMatrix::zeros(4, 4);
    for k in 0..2 {
        for l in 0..2 {
            let z = w[(k, l)];
            a[(2 * k, 2 * l)] = z.re;
            a[(2 * k, 2 * l + 1)] = -z.im;
            a[(2 * k + 1, 2 * l)] = z.im;
            a[(2 * k + 1, 2 * l + 1)] = z.re;
            let s = 0.5 * (g[(k, l)] + h[(k, l)]);
            d[(2 * k, 2 * l)] = s;
            d[(2 * k + 1, 2 * l + 1)] = s;
        }
    }
    (a, d)
}

/// Solve `A X + X Aᵀ + D = 0` through its Kronecker form.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>, MomentsError> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let op = id.kronecker(a) + a.kronecker(&id);
    let rhs = -nalgebra::DVector::from_column_slice(d.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| MomentsError::LyapunovFailed("singular Kronecker operator".into()))?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

pub fn lyapunov_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    (a * x + x * a.transpose() + d).abs().max()
}

/// Stationary quadrature covariance of the two-mode model, partitioned as
/// mode 1 versus mode 2.
pub fn steady_covariance(p: &OscillatorParams) -> Result<GaussianState, MomentsError> {
    p.validate()?;
    let w = channel_drift(p);
    let (l1, l2) = eigenvalues_2x2(&w);
    let max_real_part = l1.re.max(l2.re);
    if max_real_part >= 0.0 {
        return Err(MomentsError::UnstableDrift { max_real_part });
    }
    let (a, d) = quadrature_drift_diffusion(p);
    let theta = solve_lyapunov(&a, &d)?;
    let residual = lyapunov_residual(&a, &theta, &d);
    if residual > LYAPUNOV_TOL {
        return Err(MomentsError::LyapunovFailed(format!("residual {residual:e}")));
    }
    GaussianState::new(theta, vec![0], vec![1]).map_err(|e| MomentsError::LyapunovFailed(e.to_string()))
}
