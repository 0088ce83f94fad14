//! Memory Green's function G(t), the six Heisenberg propagators, the
//! averaged Green's function and the auxiliary combinations F, H1, H2.

use num_complex::Complex64;

use crate::bath::{KernelTable, SystemConstants};
use crate::convolve;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// |F| below this is treated as a singular point of the coefficients.
pub const SINGULAR_F: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GreensFunctions {
    pub grid: TimeGrid,
    pub consts: SystemConstants,
    pub g: Vec<f64>,
    pub g_dot: Vec<f64>,
    pub g_ddot: Vec<f64>,
    /// I(t) = int_0^t D^Im(t-s) G(s) ds (imaginary part of Gbar).
    pub i_im: Vec<f64>,
    pub i_im_dot: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
    pub g4: Vec<f64>,
    pub g5: Vec<f64>,
    pub g6: Vec<f64>,
    pub g3_dot: Vec<f64>,
    pub g6_dot: Vec<f64>,
    pub gbar: Vec<Complex64>,
    pub gbar_dot: Vec<Complex64>,
    pub f: Vec<f64>,
    pub h1: Vec<Complex64>,
    pub h2: Vec<Complex64>,
    /// Grid points where |F| < SINGULAR_F.
    pub singular: Vec<bool>,
}

/// Memory-equation solution: G, Gdot, Gddot and the dissipative convolution
/// I = D^Im * G with its derivative.
#[derive(Debug, Clone)]
pub struct MemoryGreen {
    pub g: Vec<f64>,
    pub g_dot: Vec<f64>,
    pub g_ddot: Vec<f64>,
    pub i_im: Vec<f64>,
    pub i_im_dot: Vec<f64>,
}

/// Solves G'' + omega_R^2 G + (2/m') int_0^t D^Im(t-s) G(s) ds = 0,
/// G(0) = 0, G'(0) = 1.
///
/// The oscillator part is integrated exactly (variation of constants with the
/// memory force interpolated linearly over each step); the memory integral is
/// an endpoint-corrected trapezoid. Since D^Im(0) = 0 the scheme is explicit
/// apart from the scalar endpoint correction.
pub fn solve_memory_green(kernels: &KernelTable, consts: &SystemConstants) -> Result<MemoryGreen> {
    let grid = kernels.grid;
    let n = grid.len();
    let h = grid.dt();
    let w = consts.omega_r;
    let lam = 2.0 / consts.m_prime;
    let mem = kernels.mem_im.max(1);
    let k = &kernels.d_im[..mem];
    let kd = &kernels.d_im_dot[..mem];
    let kd0 = kd[0];
    let e2 = h * h / 12.0;

    let (c, s) = ((w * h).cos(), (w * h).sin());
    // response coefficients of the linear-force step
    let a0 = (1.0 - c) / (w * w);
    let a1 = (h - s / w) / (w * w * h);
    let b0 = s / w;
    let b1 = (1.0 - c) / (w * w * h);

    let mut g = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut ii = vec![0.0; n];
    let mut force = vec![0.0; n];
    v[0] = 1.0;
    for i in 0..n - 1 {
        let m = i + 1;
        // trapezoid without the (zero) lag-0 term, plus the K(t) f'(0) correction
        let trap = convolve::causal_at(k, &g, h, m);
        let k_t = k.get(m).copied().unwrap_or(0.0);
        let i_known = trap + e2 * k_t;
        // G_{m} = base + a1 * F_m with F_m = -lam (i_known + e2 kd0 G_m)
        let base = c * g[i] + s / w * v[i] + force[i] * (a0 - a1);
        let gm = (base - a1 * lam * i_known) / (1.0 + a1 * lam * e2 * kd0);
        let im = i_known + e2 * kd0 * gm;
        let fm = -lam * im;
        g[m] = gm;
        ii[m] = im;
        force[m] = fm;
        v[m] = -w * s * g[i] + c * v[i] + force[i] * (b0 - b1) + fm * b1;
    }
    let g_ddot: Vec<f64> = (0..n).map(|i| -w * w * g[i] + force[i]).collect();
    // I' = int Kdot(t-s) G(s) ds, endpoint-corrected (Kddot(0) = 0 for odd K)
    let kd_full = &kernels.d_im_dot[..kernels.mem_im.max(1)];
    let mut i_dot = convolve::causal(kd_full, &g, h);
    for (m, x) in i_dot.iter_mut().enumerate().skip(1) {
        let kt = kd_full.get(m).copied().unwrap_or(0.0);
        *x += e2 * (kt - kd0 * v[m]);
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("memory Green's function diverged".into()));
    }
    Ok(MemoryGreen { g, g_dot: v, g_ddot, i_im: ii, i_im_dot: i_dot })
}

impl GreensFunctions {
    /// Solves the memory equation and builds every derived table.
    pub fn compute(kernels: &KernelTable, consts: &SystemConstants) -> Result<Self> {
        let mg = solve_memory_green(kernels, consts)?;
        Ok(Self::from_memory_green(mg, kernels, consts))
    }

    pub fn from_memory_green(mg: MemoryGreen, kernels: &KernelTable, consts: &SystemConstants) -> Self {
        let grid = kernels.grid;
        let n = grid.len();
        let (m, mu, w) = (consts.m, consts.mu, consts.omega);
        let mw2 = m * w * w;
        let MemoryGreen { g, g_dot, g_ddot, i_im, i_im_dot } = mg;
        let mut out = Self {
            grid,
            consts: *consts,
            g1: vec![0.0; n],
            g2: vec![0.0; n],
            g3: vec![0.0; n],
            g4: vec![0.0; n],
            g5: vec![0.0; n],
            g6: vec![0.0; n],
            g3_dot: vec![0.0; n],
            g6_dot: vec![0.0; n],
            gbar: vec![Complex64::new(0.0, 0.0); n],
            gbar_dot: vec![Complex64::new(0.0, 0.0); n],
            f: vec![0.0; n],
            h1: vec![Complex64::new(0.0, 0.0); n],
            h2: vec![Complex64::new(0.0, 0.0); n],
            singular: vec![false; n],
            g,
            g_dot,
            g_ddot,
            i_im,
            i_im_dot,
        };
        for i in 0..n {
            let (g, gd, gdd, ii) = (out.g[i], out.g_dot[i], out.g_ddot[i], out.i_im[i]);
            out.g1[i] = gd - 2.0 * mu * ii;
            out.g2[i] = g / m + 2.0 * mu * mu * ii;
            out.g3[i] = g / m + mu * gd;
            out.g4[i] = -mw2 * g - 2.0 * ii;
            out.g5[i] = gd + 2.0 * mu * ii;
            out.g6[i] = -mw2 * mu * g + gd;
            out.g3_dot[i] = gd / m + mu * gdd;
            out.g6_dot[i] = -mw2 * mu * gd + gdd;
        }
        out.average_green(kernels);
        out.auxiliary_functions();
        out
    }

    /// Gbar(t) = int_0^t D(t-s) G(s) ds with D = D^Re + i D^Im, and its
    /// derivative by the Leibniz rule, D(0) G(t) + int Ddot(t-s) G(s) ds.
    fn average_green(&mut self, kernels: &KernelTable) {
        let h = self.grid.dt();
        let e2 = h * h / 12.0;
        let mem = kernels.mem_re.max(1);
        let k = &kernels.d_re[..mem];
        let kd = &kernels.d_re_dot[..mem];
        let mut re = convolve::causal(k, &self.g, h);
        for (m, x) in re.iter_mut().enumerate().skip(1) {
            // endpoint correction; D^Re'(0) = 0
            *x += e2 * (k.get(m).copied().unwrap_or(0.0) - k[0] * self.g_dot[m]);
        }
        let mut re_dot = convolve::causal(kd, &self.g, h);
        for (m, x) in re_dot.iter_mut().enumerate() {
            *x += k[0] * self.g[m];
        }
        for i in 0..self.grid.len() {
            self.gbar[i] = Complex64::new(re[i], self.i_im[i]);
            self.gbar_dot[i] = Complex64::new(re_dot[i], self.i_im_dot[i]);
        }
    }

    /// F = Gdot^2 - Gddot G, H1 = Gbar Gdot - Gbardot G, H2 = Gbardot Gdot - Gddot Gbar.
    fn auxiliary_functions(&mut self) {
        for i in 0..self.grid.len() {
            let (g, gd, gdd) = (self.g[i], self.g_dot[i], self.g_ddot[i]);
            self.f[i] = gd * gd - gdd * g;
            self.h1[i] = self.gbar[i] * gd - self.gbar_dot[i] * g;
            self.h2[i] = self.gbar_dot[i] * gd - self.gbar[i] * gdd;
            self.singular[i] = self.f[i].abs() < SINGULAR_F;
        }
    }

    /// Dissipative projections h1 = -2 Im H1, h2 = -2 Im H2 entering the drift.
    pub fn dissipative_h(&self, i: usize) -> (f64, f64) {
        (-2.0 * self.h1[i].im, -2.0 * self.h2[i].im)
    }

    /// Fraction of singular grid points.
    pub fn singular_fraction(&self) -> f64 {
        self.singular.iter().filter(|&&b| b).count() as f64 / self.grid.len() as f64
    }

    /// Rows of a CSV dump: t, G, Gdot, Gddot, G1..G6, F.
    pub fn csv_rows(&self) -> impl Iterator<Item = [f64; 11]> + '_ {
        (0..self.grid.len()).map(move |i| {
            [
                self.grid.t(i),
                self.g[i],
                self.g_dot[i],
                self.g_ddot[i],
                self.g1[i],
                self.g2[i],
                self.g3[i],
                self.g4[i],
                self.g5[i],
                self.g6[i],
                self.f[i],
            ]
        })
    }
}

/// Solves on `grid`, `grid/2` and `grid/4` and returns the largest relative
/// change of G, Gdot between successive refinements at the coarse points,
/// normalized by the peak magnitude. Errors when it exceeds `tol`.
pub fn refinement_check(
    p: &crate::params::SpectralDensityParams,
    consts: &SystemConstants,
    grid: TimeGrid,
    sign: crate::params::DissipationSign,
    tol: f64,
) -> Result<f64> {
    let mut prev: Option<MemoryGreen> = None;
    let mut worst = 0.0f64;
    let mut g = grid;
    for level in 0..3 {
        let k = KernelTable::build(p, g, sign)?;
        let mg = solve_memory_green(&k, consts)?;
        if let Some(pg) = prev.as_ref() {
            let stride = 1usize << level;
            let scale = pg.g.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1e-300);
            let vscale = pg.g_dot.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1e-300);
            for i in 0..grid.len() {
                let j = i * stride;
                let ic = i * (stride / 2);
                worst = worst.max((mg.g[j] - pg.g[ic]).abs() / scale);
                worst = worst.max((mg.g_dot[j] - pg.g_dot[ic]).abs() / vscale);
            }
        }
        prev = Some(mg);
        g = g.refined();
    }
    if worst > tol {
        return Err(Error::Accuracy { change: worst, tolerance: tol });
    }
    Ok(worst)
}
