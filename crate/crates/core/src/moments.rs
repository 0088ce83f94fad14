//! First and second moments of Gaussian states, including the bath-induced
//! double integrals g1, g2, g3.

use crate::bath::KernelTable;
use crate::convolve;
use crate::error::{Error, Result};
use crate::greens::GreensFunctions;
use crate::grid::TimeGrid;
use crate::params::NoiseKernel;

/// Tolerance on the Heisenberg bound var_q var_p - cov_qp^2 >= 1/4.
pub const UNCERTAINTY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub q_a: f64,
    pub p_a: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
}

impl GaussianState {
    /// Minimum-uncertainty, uncorrelated state with the given position variance.
    pub fn minimum_uncertainty(q_a: f64, p_a: f64, var_q: f64) -> Self {
        Self { q_a, p_a, var_q, var_p: 0.25 / var_q, cov_qp: 0.0 }
    }

    pub fn uncertainty_det(&self) -> f64 {
        self.var_q * self.var_p - self.cov_qp * self.cov_qp
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.var_q > 0.0 && self.var_p > 0.0) {
            return Err(Error::InvalidParameter { name: "initial state", reason: "variances must be > 0".into() });
        }
        if self.uncertainty_det() < 0.25 - UNCERTAINTY_TOL {
            return Err(Error::UncertaintyViolation { t: 0.0, det: self.uncertainty_det() });
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.q_a, self.p_a, self.var_q, self.var_p, self.cov_qp]
    }
}

/// The three bath double integrals and their time derivatives.
#[derive(Debug, Clone)]
pub struct NoiseIntegrals {
    pub grid: TimeGrid,
    pub kernel: NoiseKernel,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
    pub g1_dot: Vec<f64>,
    pub g2_dot: Vec<f64>,
    pub g3_dot: Vec<f64>,
}

impl NoiseIntegrals {
    /// g1 = -w1 N[G3,G3], g2 = -w1 N[G6,G6], g3 = -2 w1 N[G3,G6] with
    /// N[a,b](t) = int int_[0,t]^2 K(v-u) a(u) b(v); w1 = 1/2 for the
    /// symmetrized noise kernel and 1/4 for the as-printed D^Im variant.
    ///
    /// Derivatives use dN[a,b]/dt = a(0) P+[b] + b(0) P-[a] + N[a',b] + N[a,b'],
    /// P+[b] = int_0^t K(u) b(u) du, P-[a] = int_0^t K(-u) a(u) du, which keeps
    /// the discrete identities among g1, g3 exact at mu = 0.
    pub fn compute(gf: &GreensFunctions, kernels: &KernelTable, kernel: NoiseKernel, derivatives: bool) -> Result<Self> {
        gf.grid.same_as(&kernels.grid)?;
        let dt = gf.grid.dt();
        let (k, parity, w1): (&[f64], f64, f64) = match kernel {
            NoiseKernel::Symmetrized => (&kernels.d_re[..kernels.mem_re], 1.0, 0.5),
            NoiseKernel::AsPrinted => (&kernels.d_im[..kernels.mem_im], -1.0, 0.25),
        };
        let n33 = convolve::double(k, parity, &gf.g3, &gf.g3, dt);
        let n66 = convolve::double(k, parity, &gf.g6, &gf.g6, dt);
        let n36 = convolve::double(k, parity, &gf.g3, &gf.g6, dt);
        let g1: Vec<f64> = n33.iter().map(|x| -w1 * x).collect();
        let g2: Vec<f64> = n66.iter().map(|x| -w1 * x).collect();
        let g3: Vec<f64> = n36.iter().map(|x| -2.0 * w1 * x).collect();
        let n = gf.grid.len();
        let (mut g1d, mut g2d, mut g3d) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        if derivatives {
            let kl = |d: usize| k.get(d).copied().unwrap_or(0.0);
            let p_plus = |b: &[f64]| -> Vec<f64> {
                let f: Vec<f64> = (0..n).map(|i| kl(i) * b[i]).collect();
                cumulative_trapezoid(&f, dt)
            };
            let p3 = p_plus(&gf.g3);
            let p6 = p_plus(&gf.g6);
            let d33 = convolve::double(k, parity, &gf.g3_dot, &gf.g3, dt);
            let d66 = convolve::double(k, parity, &gf.g6_dot, &gf.g6, dt);
            let d36a = convolve::double(k, parity, &gf.g3_dot, &gf.g6, dt);
            let d36b = convolve::double(k, parity, &gf.g3, &gf.g6_dot, dt);
            let (a3, a6) = (gf.g3[0], gf.g6[0]);
            for i in 0..n {
                // N[a,a]' = a0 (P+ + P-)[a] + N[a',a] + N[a,a'], and N[a,a'] = parity N[a',a]
                let n33d = a3 * (1.0 + parity) * p3[i] + (1.0 + parity) * d33[i];
                let n66d = a6 * (1.0 + parity) * p6[i] + (1.0 + parity) * d66[i];
                let n36d = a3 * p6[i] + a6 * parity * p3[i] + d36a[i] + d36b[i];
                g1d[i] = -w1 * n33d;
                g2d[i] = -w1 * n66d;
                g3d[i] = -2.0 * w1 * n36d;
            }
        }
        Ok(Self { grid: gf.grid, kernel, g1, g2, g3, g1_dot: g1d, g2_dot: g2d, g3_dot: g3d })
    }

    /// Zero noise (no bath or no thermal fluctuations requested).
    pub fn zero(grid: TimeGrid, kernel: NoiseKernel) -> Self {
        let z = vec![0.0; grid.len()];
        Self { grid, kernel, g1: z.clone(), g2: z.clone(), g3: z.clone(), g1_dot: z.clone(), g2_dot: z.clone(), g3_dot: z }
    }
}

/// Direct single-integral derivative of g1: for an even kernel
/// d/dt N[a,a] = 2 a(t) int_0^t K(t-v) a(v) dv. Independent of the tables in
/// [`NoiseIntegrals`]; used as a cross-check.
pub fn g1_dot_single_integral(gf: &GreensFunctions, kernels: &KernelTable) -> Vec<f64> {
    let k = &kernels.d_re[..kernels.mem_re];
    let conv = convolve::causal(k, &gf.g3, gf.grid.dt());
    conv.iter().zip(&gf.g3).map(|(c, a)| -0.5 * 2.0 * a * c).collect()
}

fn cumulative_trapezoid(f: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for i in 1..f.len() {
        out[i] = out[i - 1] + 0.5 * dt * (f[i - 1] + f[i]);
    }
    out
}

/// Means at grid index `i`.
pub fn evolve_means(s0: &GaussianState, gf: &GreensFunctions, i: usize) -> (f64, f64) {
    (gf.g1[i] * s0.q_a + gf.g2[i] * s0.p_a, gf.g4[i] * s0.q_a + gf.g5[i] * s0.p_a)
}

/// Covariances (var_q, var_p, cov_qp) at grid index `i`.
pub fn evolve_covariance(s0: &GaussianState, gf: &GreensFunctions, g: &NoiseIntegrals, i: usize) -> (f64, f64, f64) {
    let (g1, g2, g4, g5) = (gf.g1[i], gf.g2[i], gf.g4[i], gf.g5[i]);
    let vq = g1 * g1 * s0.var_q + g2 * g2 * s0.var_p + 2.0 * g1 * g2 * s0.cov_qp - 2.0 * g.g1[i];
    let vp = g4 * g4 * s0.var_q + g5 * g5 * s0.var_p + 2.0 * g4 * g5 * s0.cov_qp - 2.0 * g.g2[i];
    let c = g1 * g4 * s0.var_q + g2 * g5 * s0.var_p + (g1 * g5 + g2 * g4) * s0.cov_qp - g.g3[i];
    (vq, vp, c)
}

/// Time series of Gaussian states on a grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<GaussianState>,
}

impl Trajectory {
    pub fn compute(s0: &GaussianState, gf: &GreensFunctions, g: &NoiseIntegrals) -> Result<Self> {
        gf.grid.same_as(&g.grid)?;
        let states = (0..gf.grid.len())
            .map(|i| {
                let (q_a, p_a) = evolve_means(s0, gf, i);
                let (var_q, var_p, cov_qp) = evolve_covariance(s0, gf, g, i);
                GaussianState { q_a, p_a, var_q, var_p, cov_qp }
            })
            .collect();
        Ok(Self { grid: gf.grid, states })
    }

    /// First grid time at which the Heisenberg bound fails by more than
    /// [`UNCERTAINTY_TOL`], as an error.
    pub fn check_uncertainty(&self) -> Result<()> {
        for (i, s) in self.states.iter().enumerate() {
            let det = s.uncertainty_det();
            if !(det >= 0.25 - UNCERTAINTY_TOL) || s.var_q <= 0.0 || s.var_p <= 0.0 {
                return Err(Error::UncertaintyViolation { t: self.grid.t(i), det });
            }
        }
        Ok(())
    }

    /// Minimum of var_q var_p - cov_qp^2 - 1/4 over the run.
    pub fn min_uncertainty_margin(&self) -> f64 {
        self.states.iter().map(|s| s.uncertainty_det() - 0.25).fold(f64::INFINITY, f64::min)
    }

    /// CSV rows: t, q_a, p_a, var_q, var_p, cov_qp.
    pub fn csv_rows(&self) -> impl Iterator<Item = [f64; 6]> + '_ {
        self.states.iter().enumerate().map(move |(i, s)| {
            [self.grid.t(i), s.q_a, s.p_a, s.var_q, s.var_p, s.cov_qp]
        })
    }
}

/// Default relative-drift threshold for [`asymptotic_state`].
pub const DRIFT_THRESHOLD: f64 = 1e-3;

/// Window average of the final `window_fraction` of a trajectory and its drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotic {
    pub state: GaussianState,
    /// Largest deviation from the window mean, relative to the moment's scale
    /// (var_q, var_p, sqrt(var_q var_p) for cov_qp, sqrt(var) for the means).
    pub drift: f64,
}

pub fn asymptotic_state(traj: &Trajectory, window_fraction: f64) -> Result<Asymptotic> {
    asymptotic_state_with(traj, window_fraction, DRIFT_THRESHOLD)
}

pub fn asymptotic_state_with(traj: &Trajectory, window_fraction: f64, threshold: f64) -> Result<Asymptotic> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidParameter { name: "window_fraction", reason: format!("must be in (0, 1], got {window_fraction}") });
    }
    let n = traj.states.len();
    let w = ((n as f64 * window_fraction).ceil() as usize).clamp(1, n);
    let win = &traj.states[n - w..];
    let mut mean = [0.0; 5];
    for s in win {
        for (m, v) in mean.iter_mut().zip(s.as_array()) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= w as f64;
    }
    let state = GaussianState { q_a: mean[0], p_a: mean[1], var_q: mean[2], var_p: mean[3], cov_qp: mean[4] };
    let scale = [
        state.var_q.abs().sqrt(),
        state.var_p.abs().sqrt(),
        state.var_q.abs(),
        state.var_p.abs(),
        (state.var_q * state.var_p).abs().sqrt(),
    ];
    let mut drift = 0.0f64;
    for s in win {
        for k in 0..5 {
            let dev = (s.as_array()[k] - mean[k]).abs();
            drift = drift.max(if scale[k] > 0.0 { dev / scale[k] } else if dev > 0.0 { f64::INFINITY } else { 0.0 });
        }
    }
    if !(drift <= threshold) {
        return Err(Error::NotConverged { drift, threshold });
    }
    Ok(Asymptotic { state, drift })
}
