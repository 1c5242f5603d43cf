//! Scenario parameter sets and runners.
//!
//! Every parameter set doubles as a clap argument group and as the schema of
//! the configuration file, so flag names and file keys coincide (`t_final`
//! in a file is `--t-final` on the command line).

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use corrsync::dephasing::{bell_purity, coherence_01_10, gamma_pm, modulation_regime, BellState, Branch, DephasingParams};
use corrsync::gaussinfo::q_vs_xi_sweep;
use corrsync::graphs::{cycle_graph, irrep_modes, path_graph, verify_by_simulation, NoiseGraph, MAX_SIMULATED_SITES};
use corrsync::lindblad::{
    annihilation, build_coupled_oscillators, build_two_qubit_dephasing, embed, evolve, DensityMatrix, EvolveOptions,
};
use corrsync::moments::{
    eigenvalue_gap, eigenvalues_at, find_exceptional_points, gap_scaling, monodromy_loop, EpBranch, MomentsError,
    OscillatorParams,
};
use corrsync::noise::{sample_ou, write_trajectory_csv, OuParams, TimeGrid, TrajectorySidecar};
use corrsync::stats::BootstrapConfig;
use corrsync::sync::{time_averaged_locking, EnsembleSettings, InitialConditions, NoiseDrive, SyncError};
use corrsync::Complex64;

use crate::config::{opt, req, Format};
use crate::error::CliError;
use crate::output::{Artifact, Outputs, Table};

/// Settings shared by every scenario.
#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub seed: u64,
    pub format: Format,
}

impl RunContext {
    fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig::with_seed(self.seed ^ 0x0b00_75a7)
    }
}

fn grid(t_final: f64, dt: f64) -> Result<TimeGrid, CliError> {
    TimeGrid::new(t_final, dt).map_err(CliError::invalid)
}

fn oscillators(
    omega1: f64,
    omega2: f64,
    j: f64,
    gamma: f64,
    xi: f64,
    n1: f64,
    n2: f64,
) -> Result<OscillatorParams, CliError> {
    OscillatorParams::new(omega1, omega2, j, gamma, xi, n1, n2).map_err(CliError::invalid)
}

fn reject_unused(unused: &[(&str, bool)], context: &str) -> Result<(), CliError> {
    match unused.iter().find(|(_, given)| *given) {
        Some((name, _)) => Err(CliError::Config(format!("`{name}` does not apply to {context}"))),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------- dephase

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephaseArgs {
    /// Noise amplitude σ.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Noise correlation rate γ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Cross-correlation ξ ∈ [−1, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<f64>,
    /// Qubit splitting (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

pub fn dephase(a: &mut DephaseArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let delta = opt(&mut a.delta, 0.0);
    let p = DephasingParams::new(req(&a.sigma, "sigma")?, req(&a.gamma, "gamma")?, req(&a.xi, "xi")?, delta)
        .map_err(CliError::invalid)?;
    let g = grid(req(&a.t_final, "t_final")?, req(&a.dt, "dt")?)?;
    let mut table = Table::new(&["t", "gamma_plus", "gamma_minus", "coh_0110", "purity_phi", "purity_psi"]);
    for t in g.times() {
        let e = |r: Result<f64, _>| r.map_err(CliError::numerical);
        table.push(vec![
            t.into(),
            e(gamma_pm(t, &p, Branch::Plus))?.into(),
            e(gamma_pm(t, &p, Branch::Minus))?.into(),
            coherence_01_10(t, &p).map_err(CliError::numerical)?.norm().into(),
            e(bell_purity(BellState::PhiPlus, t, &p))?.into(),
            e(bell_purity(BellState::PsiPlus, t, &p))?.into(),
        ]);
    }
    Ok(Outputs {
        artifacts: vec![table.artifact("dephase", ctx.format)?],
        summary: json!({ "regime": modulation_regime(&p) }),
    })
}

// ---------------------------------------------------------------- evolve

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Qubits,
    Oscillators,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveArgs {
    /// Two dephasing qubits (default) or two coupled oscillators.
    #[arg(long, value_enum)]
    pub system: Option<System>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Keep every n-th step (default 1).
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Qubits: dissipation rate κ.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Qubits: splitting (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Qubits: initial Bell state, one of phi+, phi-, psi+, psi- (default psi+).
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub omega1: Option<f64>,
    #[arg(long)]
    pub omega2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n1: Option<f64>,
    #[arg(long)]
    pub n2: Option<f64>,
    /// Oscillators: Fock levels per mode (default 8).
    #[arg(long)]
    pub n_fock: Option<usize>,
    /// Oscillators: start from the Fock product |fock1, fock2⟩ instead of
    /// the thermal product state.
    #[arg(long)]
    pub fock1: Option<usize>,
    #[arg(long)]
    pub fock2: Option<usize>,
}

pub fn evolve_scenario(a: &mut EvolveArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let system = opt(&mut a.system, System::Qubits);
    let xi = req(&a.xi, "xi")?;
    let t_final = req(&a.t_final, "t_final")?;
    let dt = req(&a.dt, "dt")?;
    grid(t_final, dt)?;
    let sample_every = opt(&mut a.sample_every, 1);
    if sample_every == 0 {
        return Err(CliError::invalid("sample_every must be >= 1"));
    }
    let opts = EvolveOptions {
        sample_every,
        eig_audit_every: sample_every,
    };
    match system {
        System::Qubits => {
            reject_unused(
                &[
                    ("omega1", a.omega1.is_some()),
                    ("omega2", a.omega2.is_some()),
                    ("j", a.j.is_some()),
                    ("gamma", a.gamma.is_some()),
                    ("n1", a.n1.is_some()),
                    ("n2", a.n2.is_some()),
                    ("n_fock", a.n_fock.is_some()),
                    ("fock1", a.fock1.is_some()),
                    ("fock2", a.fock2.is_some()),
                ],
                "system qubits",
            )?;
            let delta = opt(&mut a.delta, 0.0);
            let label = opt(&mut a.state, "psi+".to_string());
            let state: BellState = label.parse().map_err(CliError::invalid)?;
            let model = build_two_qubit_dephasing(delta, req(&a.kappa, "kappa")?, xi).map_err(CliError::invalid)?;
            let run = evolve(&model, &DensityMatrix::bell(state), t_final, dt, &opts).map_err(CliError::numerical)?;
            let mut table = Table::new(&["t", "purity", "coh_0110", "coh_0011", "min_eig"]);
            for (t, rho) in run.times.iter().zip(&run.states) {
                table.push(vec![
                    (*t).into(),
                    rho.purity().into(),
                    rho.element(1, 2).norm().into(),
                    rho.element(0, 3).norm().into(),
                    rho.min_eigenvalue().into(),
                ]);
            }
            Ok(Outputs {
                artifacts: vec![table.artifact("evolve", ctx.format)?],
                summary: json!({ "audit": run.audit }),
            })
        }
        System::Oscillators => {
            reject_unused(
                &[
                    ("kappa", a.kappa.is_some()),
                    ("delta", a.delta.is_some()),
                    ("state", a.state.is_some()),
                ],
                "system oscillators",
            )?;
            let n_fock = opt(&mut a.n_fock, 8);
            let p = oscillators(
                req(&a.omega1, "omega1")?,
                req(&a.omega2, "omega2")?,
                opt(&mut a.j, 0.0),
                req(&a.gamma, "gamma")?,
                xi,
                opt(&mut a.n1, 0.0),
                opt(&mut a.n2, 0.0),
            )?;
            let model = build_coupled_oscillators(&p, n_fock).map_err(CliError::invalid)?;
            let rho0 = match (a.fock1, a.fock2) {
                (None, None) => DensityMatrix::thermal_product(&[p.n1, p.n2], n_fock),
                (f1, f2) => DensityMatrix::fock_product(&[f1.unwrap_or(0), f2.unwrap_or(0)], n_fock),
            }
            .map_err(CliError::invalid)?;
            let layout = model.fock_layout().expect("oscillator models carry a Fock layout");
            let a1 = embed(&annihilation(n_fock), 0, 2, n_fock);
            let a2 = embed(&annihilation(n_fock), 1, 2, n_fock);
            let (num1, num2) = (a1.adjoint() * &a1, a2.adjoint() * &a2);
            let run = evolve(&model, &rho0, t_final, dt, &opts).map_err(CliError::numerical)?;
            let mut table = Table::new(&["t", "purity", "occ_1", "occ_2", "top_level"]);
            for (t, rho) in run.times.iter().zip(&run.states) {
                table.push(vec![
                    (*t).into(),
                    rho.purity().into(),
                    rho.expectation(&num1).re.into(),
                    rho.expectation(&num2).re.into(),
                    layout.top_level_population(rho.data()).into(),
                ]);
            }
            Ok(Outputs {
                artifacts: vec![table.artifact("evolve", ctx.format)?],
                summary: json!({ "audit": run.audit }),
            })
        }
    }
}

// ---------------------------------------------------------------- exceptional points

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpScanArgs {
    #[arg(long)]
    pub omega1: Option<f64>,
    #[arg(long)]
    pub omega2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Real-part range of ξ (defaults −1, 1).
    #[arg(long, allow_hyphen_values = true)]
    pub re_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub re_max: Option<f64>,
    /// Imaginary-part range of ξ (defaults −1, 1).
    #[arg(long, allow_hyphen_values = true)]
    pub im_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub im_max: Option<f64>,
    /// Grid points along each axis (default 200).
    #[arg(long)]
    pub n_re: Option<usize>,
    #[arg(long)]
    pub n_im: Option<usize>,
}

fn axis(lo: f64, hi: f64, n: usize, name: &str) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) || n == 0 || (n == 1 && hi != lo) {
        return Err(CliError::invalid(format!("bad {name} axis [{lo}, {hi}] with {n} points")));
    }
    Ok((0..n)
        .map(|k| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect())
}

pub fn ep_scan(a: &mut EpScanArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let p = oscillators(
        req(&a.omega1, "omega1")?,
        req(&a.omega2, "omega2")?,
        opt(&mut a.j, 0.0),
        req(&a.gamma, "gamma")?,
        0.0,
        0.0,
        0.0,
    )?;
    let re = axis(opt(&mut a.re_min, -1.0), opt(&mut a.re_max, 1.0), opt(&mut a.n_re, 200), "real")?;
    let im = axis(opt(&mut a.im_min, -1.0), opt(&mut a.im_max, 1.0), opt(&mut a.n_im, 200), "imaginary")?;
    let mut table = Table::new(&["xi_re", "xi_im", "re_lp", "im_lp", "re_lm", "im_lm", "gap"]);
    for &y in &im {
        for &x in &re {
            let xi = Complex64::new(x, y);
            let (lp, lm) = eigenvalues_at(&p, xi);
            table.push(vec![
                x.into(),
                y.into(),
                lp.re.into(),
                lp.im.into(),
                lm.re.into(),
                lm.im.into(),
                (lp - lm).norm().into(),
            ]);
        }
    }
    Ok(Outputs {
        artifacts: vec![table.artifact("ep_scan", ctx.format)?],
        summary: json!({ "points": re.len() * im.len() }),
    })
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpFindArgs {
    #[arg(long)]
    pub omega1: Option<f64>,
    #[arg(long)]
    pub omega2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

pub fn ep_find(a: &mut EpFindArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let p = oscillators(
        req(&a.omega1, "omega1")?,
        req(&a.omega2, "omega2")?,
        opt(&mut a.j, 0.0),
        req(&a.gamma, "gamma")?,
        0.0,
        0.0,
        0.0,
    )?;
    let locus = find_exceptional_points(&p).map_err(CliError::invalid)?;
    let deltas = [1e-3, 5e-4, 2.5e-4, 1.25e-4, 6.25e-5];
    let mut table = Table::new(&["branch", "xi_re", "xi_im", "gap", "gap_exponent"]);
    for (xi, branch) in locus.points.iter().zip(&locus.branches) {
        let exponent = gap_scaling(&p, *xi, &deltas).map_err(CliError::numerical)?.exponent;
        let label = match branch {
            EpBranch::Plus => "plus",
            EpBranch::Minus => "minus",
        };
        table.push(vec![
            label.into(),
            xi.re.into(),
            xi.im.into(),
            eigenvalue_gap(&p, *xi).into(),
            exponent.into(),
        ]);
    }
    Ok(Outputs {
        artifacts: vec![table.artifact("ep_find", ctx.format)?],
        summary: json!({ "real_axis": locus.real }),
    })
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonodromyArgs {
    #[arg(long)]
    pub omega1: Option<f64>,
    #[arg(long)]
    pub omega2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub center_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub center_im: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Points on the loop (default 256, at least 64).
    #[arg(long)]
    pub n_steps: Option<usize>,
}

pub fn monodromy(a: &mut MonodromyArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let p = oscillators(
        req(&a.omega1, "omega1")?,
        req(&a.omega2, "omega2")?,
        opt(&mut a.j, 0.0),
        req(&a.gamma, "gamma")?,
        0.0,
        0.0,
        0.0,
    )?;
    let center = Complex64::new(req(&a.center_re, "center_re")?, req(&a.center_im, "center_im")?);
    let m = monodromy_loop(&p, center, req(&a.radius, "radius")?, opt(&mut a.n_steps, 256)).map_err(|e| match e {
        MomentsError::LoopThroughEp { .. } | MomentsError::BadLoop(_) => CliError::invalid(e),
        other => CliError::numerical(other),
    })?;
    let mut table = Table::new(&["xi_re", "xi_im", "re_first", "im_first", "re_second", "im_second"]);
    for tp in &m.track {
        table.push(vec![
            tp.xi.re.into(),
            tp.xi.im.into(),
            tp.first.re.into(),
            tp.first.im.into(),
            tp.second.re.into(),
            tp.second.im.into(),
        ]);
    }
    println!("swapped: {}", m.swapped);
    Ok(Outputs {
        artifacts: vec![table.artifact("monodromy", ctx.format)?],
        summary: json!({ "swapped": m.swapped }),
    })
}

// ---------------------------------------------------------------- sync

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    On,
    Off,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncArgs {
    #[arg(long)]
    pub omega1: Option<f64>,
    #[arg(long)]
    pub omega2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n1: Option<f64>,
    #[arg(long)]
    pub n2: Option<f64>,
    /// Comma-separated ξ values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi_values: Option<Vec<f64>>,
    /// Trajectories per ξ (default 1000).
    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Step (default 0.01).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Keep every n-th step (default 10).
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Averaging window (defaults t_final/2 and t_final).
    #[arg(long)]
    pub window_start: Option<f64>,
    #[arg(long)]
    pub window_end: Option<f64>,
    /// Thermal driving noise on or off (default off).
    #[arg(long, value_enum)]
    pub noise: Option<Noise>,
    /// Spread of the random initial moduli (default 0.3).
    #[arg(long)]
    pub spread: Option<f64>,
}

pub fn sync(a: &mut SyncArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let base = oscillators(
        req(&a.omega1, "omega1")?,
        req(&a.omega2, "omega2")?,
        opt(&mut a.j, 0.0),
        req(&a.gamma, "gamma")?,
        0.0,
        opt(&mut a.n1, 0.0),
        opt(&mut a.n2, 0.0),
    )?;
    let xis = req(&a.xi_values, "xi_values")?;
    let t_final = req(&a.t_final, "t_final")?;
    let settings = EnsembleSettings {
        n_traj: opt(&mut a.n_traj, 1000),
        t_final,
        dt: opt(&mut a.dt, 0.01),
        sample_every: opt(&mut a.sample_every, 10),
        seed: ctx.seed,
        initial: InitialConditions::Random {
            spread: opt(&mut a.spread, 0.3),
        },
        noise: match opt(&mut a.noise, Noise::Off) {
            Noise::On => NoiseDrive::On,
            Noise::Off => NoiseDrive::Off,
        },
    };
    let window = (opt(&mut a.window_start, 0.5 * t_final), opt(&mut a.window_end, t_final));
    for &xi in &xis {
        base.with_xi(xi).validate().map_err(CliError::invalid)?;
    }
    let mut table = Table::new(&["xi", "order_param", "stderr", "n_excluded"]);
    for xi in xis {
        let est = time_averaged_locking(&base.with_xi(xi), window, &settings, &ctx.bootstrap()).map_err(|e| match e {
            SyncError::AllTrajectoriesDegenerate(_) => CliError::numerical(e),
            other => CliError::invalid(other),
        })?;
        table.push(vec![xi.into(), est.value.into(), est.stderr.into(), est.n_excluded.into()]);
    }
    Ok(Outputs {
        artifacts: vec![table.artifact("sync", ctx.format)?],
        summary: json!({}),
    })
}

// ---------------------------------------------------------------- qcorr

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcorrArgs {
    #[arg(long)]
    pub omega1: Option<f64>,
    #[arg(long)]
    pub omega2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n1: Option<f64>,
    #[arg(long)]
    pub n2: Option<f64>,
    /// Comma-separated ξ values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi_values: Option<Vec<f64>>,
}

pub fn qcorr(a: &mut QcorrArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let base = oscillators(
        req(&a.omega1, "omega1")?,
        req(&a.omega2, "omega2")?,
        opt(&mut a.j, 0.0),
        req(&a.gamma, "gamma")?,
        0.0,
        req(&a.n1, "n1")?,
        req(&a.n2, "n2")?,
    )?;
    let xis = req(&a.xi_values, "xi_values")?;
    for &xi in &xis {
        base.with_xi(xi).validate().map_err(CliError::invalid)?;
    }
    let sweep = q_vs_xi_sweep(&base, &xis).map_err(CliError::numerical)?;
    let mut table = Table::new(&["xi", "I2", "I2_class", "Q", "stable_flag"]);
    let mut unstable = 0;
    for pt in sweep {
        let (i2, ic, q) = pt.value.map_or((f64::NAN, f64::NAN, f64::NAN), |v| (v.i2, v.i2_classical, v.q));
        unstable += usize::from(!pt.stable());
        table.push(vec![pt.xi.into(), i2.into(), ic.into(), q.into(), usize::from(pt.stable()).into()]);
    }
    if unstable > 0 {
        log::warn!("{unstable} xi value(s) have an unstable drift and no steady state");
    }
    Ok(Outputs {
        artifacts: vec![table.artifact("qcorr", ctx.format)?],
        summary: json!({ "unstable_points": unstable }),
    })
}

// ---------------------------------------------------------------- graph modes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Cycle,
    Path,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphModesArgs {
    /// Graph family (default cycle).
    #[arg(long, value_enum)]
    pub graph: Option<GraphKind>,
    /// Number of nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Edge correlation ε.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Dissipation rate κ (default 1).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Qubit splitting used in the simulation (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Fit rates from a full master-equation simulation (default: when n <= 4).
    #[arg(long)]
    pub simulate: Option<bool>,
}

#[derive(Debug, Serialize)]
struct IrrepRow {
    k: usize,
    xi_eig: f64,
    predicted_rate: f64,
    fitted_rate: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GraphModesReport {
    graph: String,
    epsilon: f64,
    irreps: Vec<IrrepRow>,
}

pub fn graph_modes(a: &mut GraphModesArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let kind = opt(&mut a.graph, GraphKind::Cycle);
    let n = req(&a.n, "n")?;
    let epsilon = req(&a.epsilon, "epsilon")?;
    let kappa = opt(&mut a.kappa, 1.0);
    let delta = opt(&mut a.delta, 0.0);
    let simulate = opt(&mut a.simulate, n <= MAX_SIMULATED_SITES);
    let (g, name): (NoiseGraph, String) = match kind {
        GraphKind::Cycle => (cycle_graph(n, epsilon).map_err(CliError::invalid)?, format!("C{n}")),
        GraphKind::Path => (path_graph(n, epsilon).map_err(CliError::invalid)?, format!("P{n}")),
    };
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(CliError::invalid(format!("kappa must be > 0, got {kappa}")));
    }
    if simulate && n > MAX_SIMULATED_SITES {
        return Err(CliError::invalid(format!(
            "simulation is limited to {MAX_SIMULATED_SITES} sites, got {n}"
        )));
    }
    let modes = irrep_modes(&g).map_err(CliError::invalid)?;
    let irreps: Vec<IrrepRow> = if simulate {
        verify_by_simulation(&g, kappa, delta)
            .map_err(CliError::numerical)?
            .into_iter()
            .map(|c| IrrepRow {
                k: c.k,
                xi_eig: c.xi_eig,
                predicted_rate: c.predicted_rate,
                fitted_rate: Some(c.fitted_rate),
            })
            .collect()
    } else {
        modes
            .iter()
            .map(|m| IrrepRow {
                k: m.k,
                xi_eig: m.xi_eigenvalue,
                predicted_rate: 4.0 * kappa * m.xi_eigenvalue,
                fitted_rate: None,
            })
            .collect()
    };
    let artifact = match ctx.format {
        Format::Json => Artifact::json(
            "graph_modes.json",
            &GraphModesReport {
                graph: name,
                epsilon,
                irreps,
            },
        )?,
        Format::Csv => {
            let mut table = Table::new(&["k", "xi_eig", "predicted_rate", "fitted_rate"]);
            for r in irreps {
                table.push(vec![
                    r.k.into(),
                    r.xi_eig.into(),
                    r.predicted_rate.into(),
                    r.fitted_rate.unwrap_or(f64::NAN).into(),
                ]);
            }
            table.artifact("graph_modes", Format::Csv)?
        }
    };
    Ok(Outputs {
        artifacts: vec![artifact],
        summary: json!({ "simulated": simulate }),
    })
}

// ---------------------------------------------------------------- trajectories

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoriesArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of trajectories (default 1).
    #[arg(long)]
    pub n_traj: Option<usize>,
}

#[derive(Debug, Serialize)]
struct TrajectoryJson<'a> {
    time: &'a [f64],
    channels: Vec<Vec<f64>>,
}

pub fn trajectories(a: &mut TrajectoriesArgs, ctx: &RunContext) -> Result<Outputs, CliError> {
    let params =
        OuParams::two_channel(req(&a.gamma, "gamma")?, req(&a.sigma, "sigma")?, req(&a.xi, "xi")?).map_err(CliError::invalid)?;
    let (t_final, dt) = (req(&a.t_final, "t_final")?, req(&a.dt, "dt")?);
    grid(t_final, dt)?;
    let n_traj = opt(&mut a.n_traj, 1);
    if n_traj == 0 {
        return Err(CliError::invalid("n_traj must be >= 1"));
    }
    let paths = sample_ou(&params, t_final, dt, n_traj, ctx.seed).map_err(CliError::numerical)?;
    let mut artifacts = Vec::with_capacity(n_traj + 1);
    let mut files = Vec::with_capacity(n_traj);
    for traj in &paths {
        let name = format!("trajectories/traj_{:05}.{}", traj.index, ctx.format.extension());
        let bytes = match ctx.format {
            Format::Csv => {
                let mut buf = Vec::new();
                write_trajectory_csv(traj, &mut buf).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
                buf
            }
            Format::Json => {
                let doc = TrajectoryJson {
                    time: &traj.times,
                    channels: (0..traj.n_channels()).map(|c| traj.channel(c)).collect(),
                };
                serde_json::to_vec(&doc)?
            }
        };
        artifacts.push(Artifact::new(&name, bytes));
        files.push(name);
    }
    let sidecar = TrajectorySidecar::new(&params, ctx.seed, dt, t_final, files);
    artifacts.push(Artifact::json("trajectories.json", &sidecar)?);
    Ok(Outputs {
        artifacts,
        summary: json!({ "n_traj": n_traj }),
    })
}
