//! Fixed-step RK4 integration of the master equation with trace and
//! positivity auditing.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sparse::CsrMatrix;
use super::{DensityMatrix, LindbladError, LindbladModel, FOCK_TAIL_WARN};
use crate::noise::TimeGrid;
use crate::Complex64;

/// Positivity below this is a hard error: the step is too large.
pub const POSITIVITY_BREACH: f64 = -1e-6;
/// Trace drift above this is a hard error.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Report the state every `sample_every` steps (the final step is always reported).
    pub sample_every: usize,
    /// Diagonalise the state every `eig_audit_every` steps.
    pub eig_audit_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            sample_every: 1,
            eig_audit_every: 1,
        }
    }
}

/// Worst values seen during a run. Nothing is corrected, only recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_hermitian_deviation: f64,
    /// Largest top-Fock-level population for oscillator models.
    pub max_top_level_population: Option<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub audit: Audit,
}

/// Sparse form of the generator:
/// `L[ρ] = −i(H_eff ρ − ρ H_eff†) + Σ_k J_k ρ J_k†`.
struct Propagator {
    heff: CsrMatrix,
    jumps: Vec<CsrMatrix>,
}

struct Scratch {
    x: DMatrix<Complex64>,
    y: DMatrix<Complex64>,
    z: DMatrix<Complex64>,
}

impl Propagator {
    fn new(model: &LindbladModel) -> Self {
        Self {
            heff: CsrMatrix::from_dense(&model.effective_hamiltonian(), 0.0),
            jumps: model
                .jump_operators()
                .iter()
                .map(|j| CsrMatrix::from_dense(j, 0.0))
                .filter(|j| !j.is_zero())
                .collect(),
        }
    }

    fn rhs(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>, s: &mut Scratch) {
        let minus_i = Complex64::new(0.0, -1.0);
        self.heff.mul_into(rho, &mut s.x);
        let n = rho.nrows();
        for c in 0..n {
            for r in 0..n {
                // −i(Xρ − (Xρ)†) uses ρ = ρ† so that ρ H_eff† = (H_eff ρ)†.
                out[(r, c)] = minus_i * (s.x[(r, c)] - s.x[(c, r)].conj());
            }
        }
        for j in &self.jumps {
            j.mul_into(rho, &mut s.x);
            s.x.adjoint_to(&mut s.y);
            j.mul_into(&s.y, &mut s.z);
            *out += &s.z;
        }
        // The shortcut above is only valid on Hermitian input, and it turns the
        // anticommutator into a commutator on any anti-Hermitian part. Rounding
        // in J ρ J† seeds such a part, which then grows, so keep every stage
        // exactly Hermitian.
        for c in 0..n {
            out[(c, c)].im = 0.0;
            for r in c + 1..n {
                let v = 0.5 * (out[(r, c)] + out[(c, r)].conj());
                out[(r, c)] = v;
                out[(c, r)] = v.conj();
            }
        }
    }
}

/// `y += a·x`.
fn axpy(y: &mut DMatrix<Complex64>, a: Complex64, x: &DMatrix<Complex64>) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * xi;
    }
}

fn audit_state(
    rho: &DMatrix<Complex64>,
    t: f64,
    check_eig: bool,
    audit: &mut Audit,
) -> Result<(), LindbladError> {
    let drift = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    audit.max_trace_drift = audit.max_trace_drift.max(drift);
    if drift > TRACE_DRIFT_LIMIT || !drift.is_finite() {
        return Err(LindbladError::TraceDrift { t, drift });
    }
    if check_eig {
        let state = DensityMatrix::from_unchecked(rho.clone());
        audit.max_hermitian_deviation = audit.max_hermitian_deviation.max(state.hermitian_deviation());
        let min = state.min_eigenvalue();
        audit.min_eigenvalue = audit.min_eigenvalue.min(min);
        if min < POSITIVITY_BREACH {
            return Err(LindbladError::PositivityBreach { t, min_eigenvalue: min });
        }
    }
    Ok(())
}

/// Integrate from `rho0` to `t_final`, handing each sampled state to `observe`.
pub fn evolve_with<F>(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    options: &EvolveOptions,
    mut observe: F,
) -> Result<Audit, LindbladError>
where
    F: FnMut(f64, &DensityMatrix),
{
    if rho0.dim() != model.dim() {
        return Err(LindbladError::DimensionMismatch {
            expected: model.dim(),
            got: rho0.dim(),
        });
    }
    if options.sample_every == 0 || options.eig_audit_every == 0 {
        return Err(LindbladError::BadParams("sampling and audit intervals must be >= 1".into()));
    }
    let grid = TimeGrid::new(t_final, dt).map_err(|e| LindbladError::BadParams(e.to_string()))?;
    let dim = model.dim();
    let prop = Propagator::new(model);
    let zeros = || DMatrix::<Complex64>::zeros(dim, dim);
    let mut s = Scratch {
        x: zeros(),
        y: zeros(),
        z: zeros(),
    };
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zeros(), zeros(), zeros(), zeros(), zeros());
    let mut rho = rho0.data().clone();
    let layout = model.fock_layout();

    let mut audit = Audit {
        max_trace_drift: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_hermitian_deviation: 0.0,
        max_top_level_population: None,
        steps: grid.n_steps,
    };
    let mut record = |step: usize, rho: &DMatrix<Complex64>, audit: &mut Audit| {
        if let Some(layout) = layout {
            let tail = layout.top_level_population(rho);
            audit.max_top_level_population = Some(audit.max_top_level_population.map_or(tail, |m| m.max(tail)));
        }
        observe(grid.time(step), &DensityMatrix::from_unchecked(rho.clone()));
    };

    audit_state(&rho, 0.0, true, &mut audit)?;
    record(0, &rho, &mut audit);

    let h = grid.dt;
    let cdt = |f: f64| Complex64::new(f * h, 0.0);
    for step in 1..=grid.n_steps {
        prop.rhs(&rho, &mut k1, &mut s);
        tmp.copy_from(&rho);
        axpy(&mut tmp, cdt(0.5), &k1);
        prop.rhs(&tmp, &mut k2, &mut s);
        tmp.copy_from(&rho);
        axpy(&mut tmp, cdt(0.5), &k2);
        prop.rhs(&tmp, &mut k3, &mut s);
        tmp.copy_from(&rho);
        axpy(&mut tmp, cdt(1.0), &k3);
        prop.rhs(&tmp, &mut k4, &mut s);

        axpy(&mut rho, cdt(1.0 / 6.0), &k1);
        axpy(&mut rho, cdt(1.0 / 3.0), &k2);
        axpy(&mut rho, cdt(1.0 / 3.0), &k3);
        axpy(&mut rho, cdt(1.0 / 6.0), &k4);

        let t = grid.time(step);
        let last = step == grid.n_steps;
        audit_state(&rho, t, step % options.eig_audit_every == 0 || last, &mut audit)?;
        if step % options.sample_every == 0 || last {
            record(step, &rho, &mut audit);
        }
    }

    if let Some(tail) = audit.max_top_level_population {
        if tail > FOCK_TAIL_WARN {
            log::warn!("Fock truncation: top-level population reached {tail:e}; results may be truncation limited");
        }
    }
    Ok(audit)
}

/// Integrate and collect every sampled state.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    options: &EvolveOptions,
) -> Result<Evolution, LindbladError> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let audit = evolve_with(model, rho0, t_final, dt, options, |t, rho| {
        times.push(t);
        states.push(rho.clone());
    })?;
    Ok(Evolution { times, states, audit })
}
