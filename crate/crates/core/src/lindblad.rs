//! Correlated Lindblad master equation.
//!
//! `dρ/dt = −i[H₀, ρ] + κ Σᵢⱼ Ξᵢⱼ (Aᵢ ρ Aⱼ† − ½{Aⱼ† Aᵢ, ρ})`
//!
//! with local coupling operators `Aᵢ` and a noise correlation Ξ shared with
//! the classical noise module. Writing `Ξ = C Cᵀ` gives ordinary jump
//! operators `L_k = Σᵢ C_ik Aᵢ`, which is what the time integrator uses.
//!
//! Vectorisation stacks columns: `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//! Tensor products put the first qubit or mode in the most significant
//! position, so `|q₁ q₂⟩` has index `2 q₁ + q₂` and `|n₁, n₂⟩` has index
//! `n₁ · n_fock + n₂`. `σz|0⟩ = +|0⟩`.

mod evolve;
pub mod sparse;

pub use evolve::{evolve, evolve_with, Audit, EvolveOptions, Evolution};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::dephasing::BellState;
use crate::moments::OscillatorParams;
use crate::noise::{validate_correlation, NoiseCorrelation};
use crate::Complex64;

/// Largest Hilbert dimension for which dense superoperators are formed.
pub const SUPEROPERATOR_MAX_DIM: usize = 40;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-8;
/// Top Fock level occupation above which truncation is reported.
pub const FOCK_TAIL_WARN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error("correlation must satisfy |xi| <= 1, got {0}")]
    BadXi(f64),
    #[error("Fock truncation needs at least 2 levels, got {0}")]
    BadTruncation(usize),
    #[error("invalid model parameters: {0}")]
    BadParams(String),
    #[error("invalid correlation matrix: {0}")]
    Correlation(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("positivity breach at t = {t}: minimum eigenvalue {min_eigenvalue:e} (reduce dt)")]
    PositivityBreach { t: f64, min_eigenvalue: f64 },
    #[error("trace drift at t = {t}: |tr rho - 1| = {drift:e}")]
    TraceDrift { t: f64, drift: f64 },
    #[error("generator kernel has dimension {0}, steady state is not unique")]
    DegenerateKernel(usize),
    #[error("Hilbert dimension {dim} exceeds the dense superoperator limit {max}")]
    TooLarge { dim: usize, max: usize },
}

impl From<crate::noise::NoiseError> for LindbladError {
    fn from(e: crate::noise::NoiseError) -> Self {
        LindbladError::Correlation(e.to_string())
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn dagger(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.adjoint()
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Density matrix over a finite Hilbert space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian, unit trace, positive semidefinite.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self, LindbladError> {
        if !data.is_square() || data.nrows() == 0 {
            return Err(LindbladError::InvalidState(format!(
                "matrix must be square and non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let dev = hermitian_deviation(&data);
        if dev > HERMITIAN_TOL {
            return Err(LindbladError::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = data.trace();
        if (tr - c(1.0)).norm() > TRACE_TOL {
            return Err(LindbladError::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let state = Self { data };
        let min = state.min_eigenvalue();
        if min < -EIGEN_TOL {
            return Err(LindbladError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(state)
    }

    pub(crate) fn from_unchecked(data: DMatrix<Complex64>) -> Self {
        Self { data }
    }

    /// Projector onto a normalised copy of `psi`.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self, LindbladError> {
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(LindbladError::InvalidState("state vector has zero norm".into()));
        }
        let v = psi.unscale(norm);
        Ok(Self {
            data: &v * v.adjoint(),
        })
    }

    /// Two-qubit Bell state in the `|00⟩, |01⟩, |10⟩, |11⟩` basis.
    pub fn bell(state: BellState) -> Self {
        let psi = DVector::from_row_slice(&state.amplitudes());
        Self::pure(&psi).expect("Bell states are normalised")
    }

    /// Fock product `|n₁, n₂, …⟩` with `n_fock` levels per mode.
    pub fn fock_product(levels: &[usize], n_fock: usize) -> Result<Self, LindbladError> {
        if n_fock < 2 {
            return Err(LindbladError::BadTruncation(n_fock));
        }
        let mut index = 0;
        for &n in levels {
            if n >= n_fock {
                return Err(LindbladError::InvalidState(format!(
                    "level {n} outside truncation {n_fock}"
                )));
            }
            index = index * n_fock + n;
        }
        let dim = n_fock.pow(levels.len() as u32);
        let mut data = DMatrix::zeros(dim, dim);
        data[(index, index)] = c(1.0);
        Ok(Self { data })
    }

    /// Product of truncated thermal states with mean occupations `ns`,
    /// renormalised inside the truncation.
    pub fn thermal_product(ns: &[f64], n_fock: usize) -> Result<Self, LindbladError> {
        if n_fock < 2 {
            return Err(LindbladError::BadTruncation(n_fock));
        }
        let mut diag = vec![1.0];
        for &n in ns {
            if !(n.is_finite() && n >= 0.0) {
                return Err(LindbladError::BadParams(format!("occupation must be >= 0, got {n}")));
            }
            let ratio = n / (n + 1.0);
            let weights: Vec<f64> = (0..n_fock).map(|k| ratio.powi(k as i32)).collect();
            let z: f64 = weights.iter().sum();
            diag = diag
                .iter()
                .flat_map(|d| weights.iter().map(move |w| d * w / z))
                .collect();
        }
        let dim = diag.len();
        let data = DMatrix::from_fn(dim, dim, |i, j| if i == j { c(diag[i]) } else { c(0.0) });
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Complex64 {
        (&self.data * op).trace()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.data + self.data.adjoint()) * c(0.5);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.data)
    }
}

/// Layout of a register of truncated oscillators, used for tail audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FockLayout {
    pub n_fock: usize,
    pub n_modes: usize,
}

impl FockLayout {
    /// Population sitting in the top level of any mode.
    pub fn top_level_population(&self, rho: &DMatrix<Complex64>) -> f64 {
        let mut total = 0.0;
        for idx in 0..rho.nrows() {
            let mut rest = idx;
            let mut at_top = false;
            for _ in 0..self.n_modes {
                at_top |= rest % self.n_fock == self.n_fock - 1;
                rest /= self.n_fock;
            }
            if at_top {
                total += rho[(idx, idx)].re;
            }
        }
        total
    }
}

/// Hamiltonian, coupling operators, overall rate κ and their correlation Ξ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LindbladModel {
    hamiltonian: DMatrix<Complex64>,
    couplings: Vec<DMatrix<Complex64>>,
    rate: f64,
    correlation: NoiseCorrelation,
    fock: Option<FockLayout>,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: DMatrix<Complex64>,
        couplings: Vec<DMatrix<Complex64>>,
        rate: f64,
        correlation: NoiseCorrelation,
    ) -> Result<Self, LindbladError> {
        if !hamiltonian.is_square() || hamiltonian.nrows() == 0 {
            return Err(LindbladError::BadParams("Hamiltonian must be square and non-empty".into()));
        }
        let dev = hermitian_deviation(&hamiltonian);
        if dev > HERMITIAN_TOL {
            return Err(LindbladError::BadParams(format!("Hamiltonian not Hermitian (deviation {dev:e})")));
        }
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(LindbladError::BadParams(format!("rate must be >= 0, got {rate}")));
        }
        if couplings.len() != correlation.n() {
            return Err(LindbladError::DimensionMismatch {
                expected: correlation.n(),
                got: couplings.len(),
            });
        }
        let dim = hamiltonian.nrows();
        if let Some(bad) = couplings.iter().find(|a| a.shape() != (dim, dim)) {
            return Err(LindbladError::DimensionMismatch {
                expected: dim,
                got: bad.nrows(),
            });
        }
        Ok(Self {
            hamiltonian,
            couplings,
            rate,
            correlation,
            fock: None,
        })
    }

    fn with_fock(mut self, layout: FockLayout) -> Self {
        self.fock = Some(layout);
        self
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &DMatrix<Complex64> {
        &self.hamiltonian
    }

    pub fn couplings(&self) -> &[DMatrix<Complex64>] {
        &self.couplings
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn correlation(&self) -> &NoiseCorrelation {
        &self.correlation
    }

    pub fn fock_layout(&self) -> Option<FockLayout> {
        self.fock
    }

    /// `K = Σᵢⱼ Ξᵢⱼ Aⱼ† Aᵢ`, the anticommutator operator of the dissipator.
    fn anticommutator_operator(&self) -> DMatrix<Complex64> {
        let xi = self.correlation.matrix();
        let dim = self.dim();
        let mut k = DMatrix::zeros(dim, dim);
        for (i, ai) in self.couplings.iter().enumerate() {
            for (j, aj) in self.couplings.iter().enumerate() {
                if xi[(i, j)] != 0.0 {
                    k += dagger(aj) * ai * c(xi[(i, j)]);
                }
            }
        }
        k
    }

    /// Jump operators `√κ L_k` with `L_k = Σᵢ C_ik Aᵢ`; vanishing ones dropped.
    pub fn jump_operators(&self) -> Vec<DMatrix<Complex64>> {
        let factor = self.correlation.factor();
        let scale = self.rate.sqrt();
        let dim = self.dim();
        (0..factor.ncols())
            .filter_map(|k| {
                let mut l = DMatrix::zeros(dim, dim);
                for (i, ai) in self.couplings.iter().enumerate() {
                    if factor[(i, k)] != 0.0 {
                        l += ai * c(factor[(i, k)] * scale);
                    }
                }
                (l.iter().any(|v| v.norm() > 0.0)).then_some(l)
            })
            .collect()
    }

    /// Effective non-Hermitian Hamiltonian `H₀ − (iκ/2) K`.
    pub fn effective_hamiltonian(&self) -> DMatrix<Complex64> {
        &self.hamiltonian - self.anticommutator_operator() * Complex64::new(0.0, 0.5 * self.rate)
    }

    /// Generator applied to a matrix, `L[ρ]`, in operator form.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let heff = self.effective_hamiltonian();
        let x = &heff * rho;
        let mut out = (&x - rho * heff.adjoint()) * Complex64::new(0.0, -1.0);
        for l in self.jump_operators() {
            out += &l * rho * l.adjoint();
        }
        out
    }
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

fn eye(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(n, n)
}

pub fn pauli_z() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

/// Truncated annihilation operator on `n_fock` levels.
pub fn annihilation(n_fock: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(n_fock, n_fock);
    for n in 1..n_fock {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// Embed a single-site operator at `site` of `n_sites` sites of dimension `local`.
pub fn embed(op: &DMatrix<Complex64>, site: usize, n_sites: usize, local: usize) -> DMatrix<Complex64> {
    let mut out = eye(1);
    for s in 0..n_sites {
        out = if s == site { kron(&out, op) } else { kron(&out, &eye(local)) };
    }
    out
}

/// `n` qubits with `H₀ = (Δ/2) Σ σzᵢ` and couplings `σzᵢ` correlated by Ξ.
pub fn build_qubit_dephasing(
    n_qubits: usize,
    delta: f64,
    kappa: f64,
    correlation: NoiseCorrelation,
) -> Result<LindbladModel, LindbladError> {
    if n_qubits == 0 {
        return Err(LindbladError::BadParams("need at least one qubit".into()));
    }
    if !delta.is_finite() {
        return Err(LindbladError::BadParams("delta must be finite".into()));
    }
    let z = pauli_z();
    let couplings: Vec<_> = (0..n_qubits).map(|s| embed(&z, s, n_qubits, 2)).collect();
    let mut h = DMatrix::zeros(1 << n_qubits, 1 << n_qubits);
    for zi in &couplings {
        h += zi * c(delta / 2.0);
    }
    LindbladModel::new(h, couplings, kappa, correlation)
}

/// Two qubits under correlated σz dephasing with correlation `xi`.
pub fn build_two_qubit_dephasing(delta: f64, kappa: f64, xi: f64) -> Result<LindbladModel, LindbladError> {
    if !(xi.is_finite() && xi.abs() <= 1.0) {
        return Err(LindbladError::BadXi(xi));
    }
    build_qubit_dephasing(2, delta, kappa, NoiseCorrelation::two_channel(xi)?)
}

/// Correlation of the four thermal channels `[a₁, a₂, a₁†, a₂†]`: ξ links the
/// two damping channels and the two creation channels, nothing else.
pub fn thermal_channel_correlation(xi: f64) -> Result<NoiseCorrelation, LindbladError> {
    if !(xi.is_finite() && xi.abs() <= 1.0) {
        return Err(LindbladError::BadXi(xi));
    }
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        1.0, xi, 0.0, 0.0,
        xi, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, xi,
        0.0, 0.0, xi, 1.0,
    ]);
    Ok(validate_correlation(&m)?)
}

/// Two detuned, exchange-coupled oscillators in thermal baths.
///
/// Couplings are `√(nᵢ+1) aᵢ` and `√nᵢ aᵢ†` at overall rate `κ = 2γ`, so
/// uncorrelated amplitudes decay as `e^{−γt}` and populations as `e^{−2γt}`.
pub fn build_coupled_oscillators(p: &OscillatorParams, n_fock: usize) -> Result<LindbladModel, LindbladError> {
    if n_fock < 2 {
        return Err(LindbladError::BadTruncation(n_fock));
    }
    p.validate().map_err(|e| LindbladError::BadParams(e.to_string()))?;
    let a = annihilation(n_fock);
    let a1 = embed(&a, 0, 2, n_fock);
    let a2 = embed(&a, 1, 2, n_fock);
    let n1op = dagger(&a1) * &a1;
    let n2op = dagger(&a2) * &a2;
    let h = n1op * c(p.omega1) + n2op * c(p.omega2) + (dagger(&a1) * &a2 + dagger(&a2) * &a1) * c(p.j);
    let couplings = vec![
        &a1 * c((p.n1 + 1.0).sqrt()),
        &a2 * c((p.n2 + 1.0).sqrt()),
        dagger(&a1) * c(p.n1.sqrt()),
        dagger(&a2) * c(p.n2.sqrt()),
    ];
    let model = LindbladModel::new(h, couplings, 2.0 * p.gamma, thermal_channel_correlation(p.xi)?)?;
    Ok(model.with_fock(FockLayout { n_fock, n_modes: 2 }))
}

/// Single oscillator of frequency `omega` damped at amplitude rate `gamma`
/// towards occupation `n_th`.
pub fn build_damped_mode(omega: f64, gamma: f64, n_th: f64, n_fock: usize) -> Result<LindbladModel, LindbladError> {
    if n_fock < 2 {
        return Err(LindbladError::BadTruncation(n_fock));
    }
    if !(gamma.is_finite() && gamma >= 0.0 && n_th.is_finite() && n_th >= 0.0 && omega.is_finite()) {
        return Err(LindbladError::BadParams(format!(
            "need finite omega, gamma >= 0 and n_th >= 0, got omega={omega}, gamma={gamma}, n_th={n_th}"
        )));
    }
    let a = annihilation(n_fock);
    let h = dagger(&a) * &a * c(omega);
    let couplings = vec![&a * c((n_th + 1.0).sqrt()), dagger(&a) * c(n_th.sqrt())];
    let model = LindbladModel::new(h, couplings, 2.0 * gamma, NoiseCorrelation::identity(2))?;
    Ok(model.with_fock(FockLayout { n_fock, n_modes: 1 }))
}

fn check_superoperator_size(dim: usize) -> Result<(), LindbladError> {
    if dim > SUPEROPERATOR_MAX_DIM {
        return Err(LindbladError::TooLarge {
            dim,
            max: SUPEROPERATOR_MAX_DIM,
        });
    }
    Ok(())
}

/// `Σᵢⱼ Ξᵢⱼ (Aᵢ · Aⱼ† − ½{Aⱼ† Aᵢ, ·})` as a `dim² × dim²` matrix (rate excluded).
pub fn dissipator_superoperator(model: &LindbladModel) -> Result<DMatrix<Complex64>, LindbladError> {
    let dim = model.dim();
    check_superoperator_size(dim)?;
    let xi = model.correlation.matrix();
    let id = eye(dim);
    let mut out = DMatrix::zeros(dim * dim, dim * dim);
    for (i, ai) in model.couplings.iter().enumerate() {
        for (j, aj) in model.couplings.iter().enumerate() {
            if xi[(i, j)] != 0.0 {
                out += kron(&aj.conjugate(), ai) * c(xi[(i, j)]);
            }
        }
    }
    let k = model.anticommutator_operator();
    out -= (kron(&id, &k) + kron(&k.transpose(), &id)) * c(0.5);
    Ok(out)
}

/// Full generator `−i[H₀, ·] + κ D[·]` acting on column-stacked `vec(ρ)`.
pub fn liouvillian(model: &LindbladModel) -> Result<DMatrix<Complex64>, LindbladError> {
    let dim = model.dim();
    let d = dissipator_superoperator(model)?;
    let id = eye(dim);
    let h = &model.hamiltonian;
    let commutator = kron(&id, h) - kron(&h.transpose(), &id);
    Ok(commutator * Complex64::new(0.0, -1.0) + d * c(model.rate))
}

pub fn vectorize(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<Complex64>, dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// Relative singular-value threshold below which generator directions count
/// as stationary.
const KERNEL_TOL: f64 = 1e-9;

/// Dimension of the generator kernel.
pub fn kernel_dimension(model: &LindbladModel) -> Result<usize, LindbladError> {
    let l = liouvillian(model)?;
    let sv = l.singular_values();
    let scale = sv.max().max(1.0);
    Ok(sv.iter().filter(|s| **s <= KERNEL_TOL * scale).count())
}

/// Unique stationary state of the generator.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix, LindbladError> {
    let dim = model.dim();
    let l = liouvillian(model)?;
    let svd = l.svd(false, true);
    let scale = svd.singular_values.max().max(1.0);
    let kernel: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= KERNEL_TOL * scale)
        .map(|(i, _)| i)
        .collect();
    match kernel.len() {
        1 => {}
        0 => {
            return Err(LindbladError::InvalidState(
                "generator has no stationary direction".into(),
            ))
        }
        n => return Err(LindbladError::DegenerateKernel(n)),
    }
    let v_t = svd.v_t.expect("right singular vectors requested");
    let row = v_t.row(kernel[0]);
    let v: DVector<Complex64> = row.adjoint();
    let mut rho = unvectorize(&v, dim);
    let tr = rho.trace();
    rho /= tr;
    let rho = (&rho + rho.adjoint()) * c(0.5);

    let eig = rho.clone().symmetric_eigen();
    if eig.eigenvalues.min() < -EIGEN_TOL {
        return Err(LindbladError::InvalidState(format!(
            "stationary state has eigenvalue {:e}",
            eig.eigenvalues.min()
        )));
    }
    let clamped = eig.eigenvalues.map(|v| if v < 1e-12 { 0.0 } else { v });
    let total: f64 = clamped.sum();
    let diag = DMatrix::from_diagonal(&clamped.map(|v| c(v / total)));
    let rho = &eig.eigenvectors * diag * eig.eigenvectors.adjoint();
    Ok(DensityMatrix::from_unchecked(rho))
}

/// Quadrature covariance `Θ_kl = ½⟨{R_k, R_l}⟩ − ⟨R_k⟩⟨R_l⟩` of a truncated
/// oscillator register, ordered `(x₁, p₁, x₂, p₂, …)` with
/// `x = (a + a†)/√2`, `p = −i(a − a†)/√2`.
pub fn quadrature_covariance(rho: &DensityMatrix, layout: FockLayout) -> Result<DMatrix<f64>, LindbladError> {
    let expected = layout.n_fock.pow(layout.n_modes as u32);
    if rho.dim() != expected {
        return Err(LindbladError::DimensionMismatch {
            expected,
            got: rho.dim(),
        });
    }
    let a = annihilation(layout.n_fock);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut quads = Vec::with_capacity(2 * layout.n_modes);
    for m in 0..layout.n_modes {
        let am = embed(&a, m, layout.n_modes, layout.n_fock);
        let ad = dagger(&am);
        quads.push((&am + &ad) * c(s));
        quads.push((&am - &ad) * Complex64::new(0.0, -s));
    }
    let means: Vec<f64> = quads.iter().map(|r| rho.expectation(r).re).collect();
    let rho_r: Vec<DMatrix<Complex64>> = quads.iter().map(|r| rho.data() * r).collect();
    let n = quads.len();
    let mut theta = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            // tr(ρ R_k R_l) and its partner; symmetrise for the anticommutator.
            let kl = (&rho_r[k] * &quads[l]).trace();
            let lk = (&rho_r[l] * &quads[k]).trace();
            let v = 0.5 * (kl + lk).re - means[k] * means[l];
            theta[(k, l)] = v;
            theta[(l, k)] = v;
        }
    }
    Ok(theta)
}
