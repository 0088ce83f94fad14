//! Simulation pipeline shared by the subcommands and the acceptance harness.

use rayon::prelude::*;

use qbm_core::bath::{KernelTable, SystemConstants};
use qbm_core::greens::GreensFunctions;
use qbm_core::grid::TimeGrid;
use qbm_core::mastereq::{compute_coefficients, MasterEqCoefficients};
use qbm_core::moments::{asymptotic_state_with, Asymptotic, GaussianState, NoiseIntegrals, Trajectory};
use qbm_core::oracle::reduced_trajectory;
use qbm_core::params::{DissipationSign, FrequencyConvention, NoiseKernel, SpectralDensityParams, Switches};

use crate::config::RunConfig;
use crate::CliError;

/// Everything computed for one value of the momentum coupling.
#[derive(Debug, Clone)]
pub struct MuRun {
    pub mu: f64,
    pub consts: SystemConstants,
    pub greens: GreensFunctions,
    pub noise: NoiseIntegrals,
    /// One trajectory per initial state.
    pub trajectories: Vec<Trajectory>,
    pub coefficients: Option<MasterEqCoefficients>,
}

fn ctx(p: &SpectralDensityParams, mu: f64) -> String {
    format!("s={} gamma={} mu={mu}", p.s, p.gamma)
}

pub fn kernels(p: &SpectralDensityParams, grid: TimeGrid, sign: DissipationSign) -> Result<KernelTable, CliError> {
    KernelTable::build(p, grid, sign).map_err(|e| CliError::numerical(format!("kernels s={} gamma={}", p.s, p.gamma), e))
}

/// Propagators, noise integrals and moment trajectories for one mu.
/// Every trajectory is checked against the Heisenberg bound.
pub fn run_mu(
    kernels: &KernelTable,
    mu: f64,
    switches: &Switches,
    states: &[GaussianState],
    with_coefficients: bool,
) -> Result<MuRun, CliError> {
    run_mu_checked(kernels, mu, switches, states, with_coefficients, true)
}

fn run_mu_checked(
    kernels: &KernelTable,
    mu: f64,
    switches: &Switches,
    states: &[GaussianState],
    with_coefficients: bool,
    check_bound: bool,
) -> Result<MuRun, CliError> {
    let p = &kernels.params;
    let wrap = |e| CliError::numerical(ctx(p, mu), e);
    let consts = SystemConstants::new(p, mu, switches.frequency).map_err(wrap)?;
    let greens = GreensFunctions::compute(kernels, &consts).map_err(wrap)?;
    let noise = NoiseIntegrals::compute(&greens, kernels, switches.noise, with_coefficients).map_err(wrap)?;
    let trajectories = states
        .iter()
        .map(|s| {
            let tr = Trajectory::compute(s, &greens, &noise)?;
            if check_bound {
                tr.check_uncertainty()?;
            }
            Ok(tr)
        })
        .collect::<qbm_core::Result<Vec<_>>>()
        .map_err(wrap)?;
    let coefficients = if with_coefficients {
        Some(compute_coefficients(&greens, &noise, switches.form).map_err(wrap)?)
    } else {
        None
    };
    Ok(MuRun { mu, consts, greens, noise, trajectories, coefficients })
}

/// Runs every mu of `mus` concurrently on a shared kernel table.
pub fn run_sweep(
    p: &SpectralDensityParams,
    grid: TimeGrid,
    mus: &[f64],
    switches: &Switches,
    states: &[GaussianState],
    with_coefficients: bool,
) -> Result<Vec<MuRun>, CliError> {
    let k = kernels(p, grid, switches.sign)?;
    mus.par_iter().map(|&mu| run_mu(&k, mu, switches, states, with_coefficients)).collect()
}

pub fn run_config(cfg: &RunConfig, switches: &Switches, with_coefficients: bool) -> Result<Vec<MuRun>, CliError> {
    run_sweep(&cfg.params(), cfg.grid()?, &cfg.mu, switches, &cfg.initial, with_coefficients)
}

/// Per-moment max_t |a - b| / max_t |b|, in the order q_a, p_a, var_q, var_p, cov_qp.
pub fn relative_errors(a: &[GaussianState], b: &[GaussianState]) -> [f64; 5] {
    let mut num = [0.0f64; 5];
    let mut den = [0.0f64; 5];
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.as_array(), y.as_array());
        for k in 0..5 {
            num[k] = num[k].max((x[k] - y[k]).abs());
            den[k] = den[k].max(y[k].abs());
        }
    }
    let mut out = [0.0; 5];
    for k in 0..5 {
        out[k] = if den[k] > 0.0 { num[k] / den[k] } else { num[k] };
    }
    out
}

pub fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Grid indices at which the oracle is sampled: at most `samples` + 1 points
/// evenly spread over the grid.
pub fn sample_indices(grid: &TimeGrid, samples: usize) -> Vec<usize> {
    let stride = (grid.steps() / samples.max(1)).max(1);
    (0..grid.len()).step_by(stride).collect()
}

/// Reduced moments of the finite-bath oracle at the sampled grid times.
pub fn oracle_reference(
    p: &SpectralDensityParams,
    mu: f64,
    state: &GaussianState,
    modes: usize,
    omega_max: f64,
    times: &[f64],
) -> Result<Vec<GaussianState>, CliError> {
    let wrap = |e| CliError::numerical(format!("oracle {}", ctx(p, mu)), e);
    // the oracle is convention-free: it always uses the physical frequency
    let consts = SystemConstants::new(p, mu, FrequencyConvention::Renormalized).map_err(wrap)?;
    reduced_trajectory(p, &consts, modes, omega_max, state, times).map_err(wrap)
}

#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub mu: f64,
    pub times: Vec<f64>,
    pub oracle: Vec<GaussianState>,
    pub analytic: Vec<GaussianState>,
    pub errors: [f64; 5],
}

impl OracleComparison {
    pub fn max_error(&self) -> f64 {
        max_of(&self.errors)
    }
}

pub const ORACLE_SAMPLES: usize = 500;

/// Compares the analytic trajectories of the first initial state against the
/// oracle over [0, oracle_t_end], for every mu in the config.
pub fn oracle_compare(cfg: &RunConfig, switches: &Switches) -> Result<Vec<OracleComparison>, CliError> {
    let p = cfg.params();
    let grid = TimeGrid::new(cfg.dt, cfg.oracle_t_end).map_err(|e| CliError::Config(format!("oracle_t_end: {e}")))?;
    let state = cfg.initial[0];
    let runs = run_sweep(&p, grid, &cfg.mu, switches, &[state], false)?;
    let idx = sample_indices(&grid, ORACLE_SAMPLES);
    let times: Vec<f64> = idx.iter().map(|&i| grid.t(i)).collect();
    runs.par_iter()
        .map(|r| {
            let oracle = oracle_reference(&p, r.mu, &state, cfg.oracle_modes, cfg.oracle_omega_max, &times)?;
            let analytic: Vec<GaussianState> = idx.iter().map(|&i| r.trajectories[0].states[i]).collect();
            let errors = relative_errors(&analytic, &oracle);
            Ok(OracleComparison { mu: r.mu, times: times.clone(), oracle, analytic, errors })
        })
        .collect()
}

/// Switch sets ranked against the oracle.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub selected: Switches,
    pub error: f64,
    pub candidates: Vec<(Switches, f64)>,
}

/// Largest error any accepted switch combination may have.
pub const CALIBRATION_TOLERANCE: f64 = 5e-2;

fn candidates<T: Copy + Default + PartialEq>(all: &[T], fixed: Option<T>) -> Vec<T> {
    match fixed {
        Some(v) => vec![v],
        None => all.to_vec(),
    }
}

/// Tries every combination of the switches left at `auto` (fixed switches are
/// kept) and keeps the one closest to the oracle; ties go to the earlier
/// candidate, so equivalent combinations resolve to the defaults.
pub fn calibrate(cfg: &RunConfig) -> Result<Calibration, CliError> {
    if !cfg.oracle {
        return Err(CliError::Config("calibration requires oracle = true".into()));
    }
    let p = cfg.params();
    let grid = TimeGrid::new(cfg.dt, cfg.oracle_t_end).map_err(|e| CliError::Config(format!("oracle_t_end: {e}")))?;
    let state = cfg.initial[0];
    let idx = sample_indices(&grid, ORACLE_SAMPLES);
    let times: Vec<f64> = idx.iter().map(|&i| grid.t(i)).collect();
    let oracles = cfg
        .mu
        .par_iter()
        .map(|&mu| oracle_reference(&p, mu, &state, cfg.oracle_modes, cfg.oracle_omega_max, &times))
        .collect::<Result<Vec<_>, _>>()?;

    let mut combos = Vec::new();
    for &sign in &candidates(DissipationSign::ALL, cfg.sign.fixed()) {
        for &frequency in &candidates(FrequencyConvention::ALL, cfg.frequency.fixed()) {
            for &noise in &candidates(NoiseKernel::ALL, cfg.noise.fixed()) {
                combos.push(Switches { frequency, sign, noise, form: cfg.form });
            }
        }
    }
    let scored = combos
        .par_iter()
        .map(|sw| {
            let k = kernels(&p, grid, sw.sign)?;
            let mut worst = 0.0f64;
            for (mu, oracle) in cfg.mu.iter().zip(&oracles) {
                // scored without the Heisenberg check so unphysical candidates
                // still report their distance; a diverging one scores infinite
                let err = match run_mu_checked(&k, *mu, sw, &[state], false, false) {
                    Ok(run) => {
                        let analytic: Vec<GaussianState> = idx.iter().map(|&i| run.trajectories[0].states[i]).collect();
                        max_of(&relative_errors(&analytic, oracle))
                    }
                    Err(_) => f64::INFINITY,
                };
                worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
            }
            Ok((*sw, worst))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut best = scored[0];
    for c in &scored[1..] {
        if c.1 < best.1 {
            best = *c;
        }
    }
    if !(best.1 < CALIBRATION_TOLERANCE) {
        return Err(CliError::Calibration(format!(
            "no switch combination reaches relative error {CALIBRATION_TOLERANCE:e} (best {} with {:.3e})",
            describe(&best.0),
            best.1
        )));
    }
    Ok(Calibration { selected: best.0, error: best.1, candidates: scored })
}

pub fn describe(s: &Switches) -> String {
    format!("frequency={} sign={} noise={} form={}", s.frequency, s.sign, s.noise, s.form)
}

/// Switch set of a config, calibrating first when any switch is `auto`.
pub fn resolve_switches(cfg: &RunConfig) -> Result<(Switches, Option<Calibration>), CliError> {
    if cfg.needs_calibration() {
        let c = calibrate(cfg)?;
        Ok((c.selected, Some(c)))
    } else {
        Ok((cfg.switches_or_default(), None))
    }
}

/// Target asymptotic ratios.
pub const TARGET_RATIOS: [(f64, [f64; 3]); 2] = [(1.0, [1.20, 2.00, 0.84]), (2.0, [1.27, 2.07, 0.82])];
pub const TABLE1_MU: [f64; 3] = [0.0, 0.5, 1.0];
pub const TABLE1_NAMES: [&str; 3] = ["var_p(0)/var_p(0.5)", "var_p(0)/var_p(1)", "cov_qp(0.5)/cov_qp(1)"];

/// Asymptotic states of one ratio-table column, without applying the drift
/// threshold (the caller decides on convergence).
#[derive(Debug, Clone)]
pub struct Table1Column {
    pub s: f64,
    pub gamma: f64,
    pub t_end: f64,
    pub asymptotics: Vec<Asymptotic>,
}

impl Table1Column {
    pub fn ratios(&self) -> [f64; 3] {
        let a = &self.asymptotics;
        [
            a[0].state.var_p / a[1].state.var_p,
            a[0].state.var_p / a[2].state.var_p,
            a[1].state.cov_qp / a[2].state.cov_qp,
        ]
    }

    pub fn drift(&self) -> f64 {
        self.asymptotics.iter().map(|a| a.drift).fold(0.0, f64::max)
    }
}

pub fn table1_column(cfg: &RunConfig, switches: &Switches, s: f64, gamma: f64, t_end: f64) -> Result<Table1Column, CliError> {
    let mut p = cfg.params();
    p.s = s;
    p.gamma = gamma;
    let grid = TimeGrid::new(cfg.dt, t_end).map_err(|e| CliError::Config(format!("t_end: {e}")))?;
    let runs = run_sweep(&p, grid, &TABLE1_MU, switches, &cfg.initial[..1], false)?;
    let asymptotics = runs
        .iter()
        .map(|r| {
            asymptotic_state_with(&r.trajectories[0], cfg.window, f64::INFINITY)
                .map_err(|e| CliError::numerical(ctx(&p, r.mu), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table1Column { s, gamma, t_end, asymptotics })
}

/// Envelopes of the mean-value oscillations, [|q_a|, |p_a|]: E(t) is the
/// maximum over t' >= t.
pub fn decay_envelopes(traj: &Trajectory) -> [Vec<f64>; 2] {
    let n = traj.states.len();
    let mut out = [vec![0.0; n], vec![0.0; n]];
    let (mut mq, mut mp) = (0.0f64, 0.0f64);
    for (i, s) in traj.states.iter().enumerate().rev() {
        mq = mq.max(s.q_a.abs());
        mp = mp.max(s.p_a.abs());
        out[0][i] = mq;
        out[1][i] = mp;
    }
    out
}
