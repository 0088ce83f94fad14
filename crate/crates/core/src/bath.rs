//! Bath model: spectral density, thermal correlation kernels, renormalized
//! frequency and effective mass.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::params::{DissipationSign, FrequencyConvention, SpectralDensityParams, Thermal};
use crate::quad;
use crate::special::{gamma, gaussian_moments};

const QUAD_REL: f64 = 1e-12;

fn prefactor(p: &SpectralDensityParams) -> f64 {
    2.0 * p.m * p.gamma / PI * p.cutoff.powf(1.0 - p.s)
}

/// J(w) = (2 m gamma / pi) w (w/Omega)^(s-1) exp(-w^2/Omega^2).
pub fn spectral_density(omega: f64, p: &SpectralDensityParams) -> Result<f64> {
    if omega < 0.0 || omega.is_nan() {
        return Err(Error::NegativeFrequency(omega));
    }
    Ok(density_unchecked(omega, p))
}

pub(crate) fn density_unchecked(omega: f64, p: &SpectralDensityParams) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let r = omega / p.cutoff;
    2.0 * p.m * p.gamma / PI * omega * r.powf(p.s - 1.0) * (-r * r).exp()
}

/// Dissipation kernel D^Im(t) = -int_0^inf J(w) sin(wt) dw (odd in t).
pub fn dissipation_kernel(t: f64, p: &SpectralDensityParams) -> Result<f64> {
    p.validate()?;
    Ok(im_pair(t, p)?.0)
}

/// Noise kernel D^Re(t) = int_0^inf J(w) w_T(w) cos(wt) dw (even in t), with
/// the thermal weight w_T selected by `p.thermal`.
pub fn noise_kernel(t: f64, p: &SpectralDensityParams) -> Result<f64> {
    p.validate()?;
    Ok(re_pair(t, p)?.0)
}

/// D^Im(t) and its time derivative.
pub(crate) fn im_pair(t: f64, p: &SpectralDensityParams) -> Result<(f64, f64)> {
    if p.gamma == 0.0 {
        return Ok((0.0, 0.0));
    }
    if let Some(n) = p.integer_s() {
        let (c, s) = gaussian_moments(1.0 / (p.cutoff * p.cutoff), t, n + 1);
        let k = prefactor(p);
        return Ok((-k * s[n], -k * c[n + 1]));
    }
    let top = p.omega_top();
    let scale = quad::integrate(|w| density_unchecked(w, p) * (1.0 + w), 0.0, top, 0.0, 1e-6)?;
    let abs_tol = 1e-14 * scale;
    let v = quad::integrate_oscillatory(|w| density_unchecked(w, p) * (w * t).sin(), 0.0, top, t, abs_tol, QUAD_REL)?;
    let d = quad::integrate_oscillatory(|w| density_unchecked(w, p) * w * (w * t).cos(), 0.0, top, t, abs_tol * top, QUAD_REL)?;
    Ok((-v, -d))
}

/// Number of terms of the small-beta expansion of w*coth(beta*w/2), or None
/// if that expansion is not numerically safe for these parameters.
fn quantum_series_terms(p: &SpectralDensityParams, beta: f64) -> Option<usize> {
    let n0 = p.integer_s()?;
    let r = beta * p.cutoff / (2.0 * PI);
    let mut k = 0usize;
    loop {
        k += 1;
        // |b_k| (beta/2)^2k <w^2k> relative to the leading term
        let ratio = 2.0 * gamma(k as f64 + 0.5 * p.s) / gamma(0.5 * p.s) * r.powi(2 * k as i32);
        if ratio < 1e-17 {
            break;
        }
        if k > 12 {
            return None;
        }
    }
    let nmax = n0 + 2 * k;
    // recurrence error amplification at the branch switch point
    let x_switch = 6.0 + 0.5 * nmax as f64;
    let amp = (x_switch * beta * p.cutoff / 2.0).powi(nmax as i32);
    (amp < 1e5).then_some(k)
}

/// Coefficients of x coth x = sum_k b_k x^(2k): b_k = 4^k B_2k / (2k)!.
fn xcothx_coefficients(k: usize) -> Vec<f64> {
    // Bernoulli numbers B_0, B_2, ..., B_26
    const B: [f64; 14] = [
        1.0,
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
        43867.0 / 798.0,
        -174611.0 / 330.0,
        854513.0 / 138.0,
        -236364091.0 / 2730.0,
        8553103.0 / 6.0,
    ];
    (0..=k)
        .map(|j| 4f64.powi(j as i32) * B[j] / statrs::function::factorial::factorial(2 * j as u64))
        .collect()
}

/// D^Re(t) and its time derivative.
pub(crate) fn re_pair(t: f64, p: &SpectralDensityParams) -> Result<(f64, f64)> {
    if p.gamma == 0.0 {
        return Ok((0.0, 0.0));
    }
    let k = prefactor(p);
    let a = 1.0 / (p.cutoff * p.cutoff);
    match (p.thermal, p.integer_s()) {
        (Thermal::Zero, Some(n)) => {
            let (c, s) = gaussian_moments(a, t, n + 1);
            return Ok((k * c[n], -k * s[n + 1]));
        }
        (Thermal::Classical { beta }, Some(n)) => {
            let (c, s) = gaussian_moments(a, t, n);
            return Ok((2.0 / beta * k * c[n - 1], -2.0 / beta * k * s[n]));
        }
        (Thermal::Quantum { beta }, Some(n)) => {
            if let Some(terms) = quantum_series_terms(p, beta) {
                let b = xcothx_coefficients(terms);
                let (c, s) = gaussian_moments(a, t, n + 2 * terms);
                let mut v = 0.0;
                let mut d = 0.0;
                let h2 = (0.5 * beta).powi(2);
                let mut hp = 1.0;
                for (j, bj) in b.iter().enumerate() {
                    v += bj * hp * c[n - 1 + 2 * j];
                    d -= bj * hp * s[n + 2 * j];
                    hp *= h2;
                }
                return Ok((2.0 / beta * k * v, 2.0 / beta * k * d));
            }
        }
        _ => {}
    }
    re_pair_quadrature(t, p)
}

fn re_pair_quadrature(t: f64, p: &SpectralDensityParams) -> Result<(f64, f64)> {
    let th = p.thermal;
    let f = |w: f64| {
        if w == 0.0 {
            // J(w) * weight(w) -> finite limit only when s >= 1 (classical/quantum)
            let lim = match th {
                Thermal::Zero => 0.0,
                _ if p.s > 1.0 => 0.0,
                _ => 2.0 * p.m * p.gamma / PI * 2.0 / th.beta(),
            };
            return lim;
        }
        density_unchecked(w, p) * th.weight(w)
    };
    let top = p.omega_top();
    // absolute tolerance relative to the kernel's natural size
    let scale = quad::integrate(|w| f(w) * (1.0 + w), 0.0, top, 0.0, 1e-6)?;
    let abs_tol = 1e-14 * scale;
    let split = match th {
        Thermal::Quantum { beta } => (2.0 / beta).min(top),
        _ => top,
    };
    let mut v = 0.0;
    let mut d = 0.0;
    for (lo, hi) in [(0.0, split), (split, top)] {
        if hi > lo {
            v += quad::integrate_oscillatory(|w| f(w) * (w * t).cos(), lo, hi, t, abs_tol, QUAD_REL)?;
            d -= quad::integrate_oscillatory(|w| f(w) * w * (w * t).sin(), lo, hi, t, abs_tol * top, QUAD_REL)?;
        }
    }
    Ok((v, d))
}

/// omega_R = sqrt(omega_S^2 + (2/m) int J(w)/w dw).
pub fn renormalized_frequency(p: &SpectralDensityParams) -> Result<f64> {
    p.validate()?;
    Ok((p.omega_s * p.omega_s + frequency_shift(p)?).sqrt())
}

/// (2/m) int J(w)/w dw = (2 gamma Omega / pi) Gamma(s/2).
pub fn frequency_shift(p: &SpectralDensityParams) -> Result<f64> {
    if p.s <= 0.0 {
        return Err(Error::DivergentShift { s: p.s });
    }
    Ok(2.0 * p.gamma * p.cutoff / PI * gamma(0.5 * p.s))
}

/// m' = (1/m + m omega_S^2 mu^2)^-1, with mu the dimensionless m*mu*omega_S.
pub fn effective_mass(p: &SpectralDensityParams, mu: f64) -> f64 {
    effective_mass_at(p.m, p.omega_s, dimensional_mu(p, mu))
}

fn effective_mass_at(m: f64, omega: f64, mu_dim: f64) -> f64 {
    1.0 / (1.0 / m + m * omega * omega * mu_dim * mu_dim)
}

fn dimensional_mu(p: &SpectralDensityParams, mu: f64) -> f64 {
    mu / (p.m * p.omega_s)
}

/// System constants derived from the bath and the momentum coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConstants {
    /// Dimensionless m*mu*omega_S, as reported.
    pub mu_reduced: f64,
    /// Coupling mu in system units (equal to `mu_reduced` when m = omega_S = 1).
    pub mu: f64,
    pub m: f64,
    pub omega_s: f64,
    pub omega_r: f64,
    /// Frequency used by the propagators and drift per the convention switch.
    pub omega: f64,
    pub m_prime: f64,
    pub convention: FrequencyConvention,
}

impl SystemConstants {
    pub fn new(p: &SpectralDensityParams, mu_reduced: f64, convention: FrequencyConvention) -> Result<Self> {
        if !mu_reduced.is_finite() {
            return Err(Error::InvalidParameter { name: "mu", reason: "must be finite".into() });
        }
        let omega_r = renormalized_frequency(p)?;
        let omega = match convention {
            FrequencyConvention::Renormalized => omega_r,
            FrequencyConvention::Bare => p.omega_s,
        };
        let mu = dimensional_mu(p, mu_reduced);
        Ok(Self {
            mu_reduced,
            mu,
            m: p.m,
            omega_s: p.omega_s,
            omega_r,
            omega,
            m_prime: effective_mass_at(p.m, omega, mu),
            convention,
        })
    }
}

/// Bath kernels sampled on a uniform grid. Samples past the memory length
/// are zero (super-exponential or power-law decay below 1e-12 of the peak).
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub grid: TimeGrid,
    pub d_re: Vec<f64>,
    pub d_re_dot: Vec<f64>,
    pub d_im: Vec<f64>,
    pub d_im_dot: Vec<f64>,
    /// Number of retained noise-kernel samples.
    pub mem_re: usize,
    /// Number of retained dissipation-kernel samples.
    pub mem_im: usize,
    pub sign: DissipationSign,
    pub params: SpectralDensityParams,
}

/// Relative threshold below which kernel samples are dropped.
pub const MEMORY_CUTOFF: f64 = 1e-12;

impl KernelTable {
    pub fn build(p: &SpectralDensityParams, grid: TimeGrid, sign: DissipationSign) -> Result<Self> {
        p.validate()?;
        let window = 64usize.max((2.0 * PI / (p.cutoff * grid.dt())).ceil() as usize);
        let (d_im, d_im_dot, mem_im) = sample_truncated(grid, window, |t| im_pair(t, p))?;
        let (d_re, d_re_dot, mem_re) = sample_truncated(grid, window, |t| re_pair(t, p))?;
        let sgn = match sign {
            DissipationSign::AsPrinted => 1.0,
            DissipationSign::Flipped => -1.0,
        };
        let d_im = d_im.into_iter().map(|v| sgn * v).collect();
        let d_im_dot = d_im_dot.into_iter().map(|v| sgn * v).collect();
        Ok(Self { grid, d_re, d_re_dot, d_im, d_im_dot, mem_re, mem_im, sign, params: *p })
    }

    /// D^Re at lag `d` steps (any sign).
    pub fn re_at(&self, d: isize) -> f64 {
        self.d_re.get(d.unsigned_abs()).copied().unwrap_or(0.0)
    }

    /// D^Im at lag `d` steps (any sign).
    pub fn im_at(&self, d: isize) -> f64 {
        let v = self.d_im.get(d.unsigned_abs()).copied().unwrap_or(0.0);
        if d < 0 { -v } else { v }
    }
}

type Sampled = (Vec<f64>, Vec<f64>, usize);

fn sample_truncated<F: Fn(f64) -> Result<(f64, f64)>>(grid: TimeGrid, window: usize, f: F) -> Result<Sampled> {
    let n = grid.len();
    let mut v = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut vmax = 0.0f64;
    let mut dmax = 0.0f64;
    let mut quiet = 0usize;
    let mut mem = n;
    for i in 0..n {
        let (a, b) = f(grid.t(i))?;
        vmax = vmax.max(a.abs());
        dmax = dmax.max(b.abs());
        v.push(a);
        d.push(b);
        let small = a.abs() <= MEMORY_CUTOFF * vmax && b.abs() <= MEMORY_CUTOFF * dmax;
        if small && i > 0 {
            quiet += 1;
            if quiet >= window {
                mem = i + 1 - quiet;
                break;
            }
        } else {
            quiet = 0;
        }
    }
    if vmax == 0.0 && dmax == 0.0 {
        mem = 0;
    }
    v.truncate(mem);
    d.truncate(mem);
    v.resize(n, 0.0);
    d.resize(n, 0.0);
    Ok((v, d, mem))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ohmic(thermal: Thermal) -> SpectralDensityParams {
        SpectralDensityParams::natural(1.0, 3e-3, 20.0, thermal)
    }

    #[test]
    fn density_values() {
        let p = ohmic(Thermal::Zero);
        assert_eq!(spectral_density(0.0, &p).unwrap(), 0.0);
        // direct closed form: 2*3e-3/pi * exp(-1/400)
        let expect = 2.0 * 3e-3 / PI * (-1.0f64 / 400.0).exp();
        assert_relative_eq!(spectral_density(1.0, &p).unwrap(), expect, max_relative = 1e-15);
        assert_relative_eq!(expect, 1.905e-3, max_relative = 1e-3);
        assert!(matches!(spectral_density(-1.0, &p), Err(Error::NegativeFrequency(_))));
        // argmax for s = 1 at Omega/sqrt(2)
        let (mut best, mut arg) = (0.0, 0.0);
        for i in 0..200_000 {
            let w = i as f64 * 1e-4;
            let j = spectral_density(w, &p).unwrap();
            if j > best {
                best = j;
                arg = w;
            }
        }
        assert!((arg - 20.0 / 2f64.sqrt()).abs() < 2e-4);
    }

    #[test]
    fn dissipation_closed_form_s1() {
        let p = ohmic(Thermal::Zero);
        let (g, om) = (3e-3f64, 20.0f64);
        for &t in &[0.0, 0.01, 0.1, 0.3, 1.0] {
            let expect = -(g * om.powi(3) * t / (2.0 * PI.sqrt())) * (-om * om * t * t / 4.0).exp();
            assert_relative_eq!(dissipation_kernel(t, &p).unwrap(), expect, max_relative = 1e-12, epsilon = 1e-300);
        }
    }

    fn quad_im(t: f64, p: &SpectralDensityParams) -> f64 {
        -quad::integrate_oscillatory(|w| density_unchecked(w, p) * (w * t).sin(), 0.0, p.omega_top(), t, 1e-17, 1e-13).unwrap()
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for s in [1.0, 2.0, 3.0] {
            for th in [Thermal::Zero, Thermal::Classical { beta: 0.01 }, Thermal::Quantum { beta: 0.01 }, Thermal::Quantum { beta: 0.5 }] {
                let p = SpectralDensityParams::natural(s, 3e-3, 20.0, th);
                let mut scale_re = 0.0f64;
                let mut scale_im = 0.0f64;
                let ts: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
                let mut rows = vec![];
                for &t in &ts {
                    let (re, red) = re_pair(t, &p).unwrap();
                    let (qre, qred) = re_pair_quadrature(t, &p).unwrap();
                    let im = im_pair(t, &p).unwrap().0;
                    let qim = quad_im(t, &p);
                    scale_re = scale_re.max(qre.abs());
                    scale_im = scale_im.max(qim.abs());
                    rows.push((t, re, qre, red, qred, im, qim));
                }
                for (t, re, qre, _red, _qred, im, qim) in rows {
                    // relative to the local value, floored by 1e-12 of the peak
                    let tol_re = 1e-8 * qre.abs().max(1e-4 * scale_re);
                    let tol_im = 1e-8 * qim.abs().max(1e-4 * scale_im);
                    assert!((re - qre).abs() <= tol_re, "s={s} {th:?} t={t}: re {re} vs {qre}");
                    assert!((im - qim).abs() <= tol_im, "s={s} t={t}: im {im} vs {qim}");
                }
            }
        }
    }

    #[test]
    fn zero_temperature_peak_value() {
        // int J = m gamma Omega^2 / pi for s = 1
        let p = ohmic(Thermal::Zero);
        assert_relative_eq!(noise_kernel(0.0, &p).unwrap(), 3e-3 * 400.0 / PI, max_relative = 1e-13);
    }

    #[test]
    fn renormalized_frequency_values() {
        let p = ohmic(Thermal::Zero);
        let w = renormalized_frequency(&p).unwrap();
        assert_relative_eq!(w * w, 1.0 + 2.0 * 3e-3 * 20.0 / PI.sqrt(), max_relative = 1e-14);
        assert!((w * w - 1.0677).abs() < 1e-4);
        let p2 = SpectralDensityParams::natural(2.0, 3.4e-3, 20.0, Thermal::Zero);
        let w2 = renormalized_frequency(&p2).unwrap();
        assert!((w2 * w2 - 1.0433).abs() < 1e-4);
        let p0 = SpectralDensityParams::natural(1.0, 0.0, 20.0, Thermal::Zero);
        assert_eq!(renormalized_frequency(&p0).unwrap(), 1.0);
        // quadrature cross-check of the shift integral
        let q = quad::integrate(|w| density_unchecked(w, &p2) / w, 0.0, p2.omega_top(), 1e-16, 1e-13).unwrap();
        assert_relative_eq!(frequency_shift(&p2).unwrap(), 2.0 * q, max_relative = 1e-10);
    }

    #[test]
    fn effective_mass_values() {
        let p = ohmic(Thermal::Zero);
        assert_eq!(effective_mass(&p, 0.0), 1.0);
        assert_relative_eq!(effective_mass(&p, 1.0), 0.5);
        assert_relative_eq!(effective_mass(&p, 0.5), 0.8);
    }

    #[test]
    fn high_temperature_kernel_weight() {
        // int_{-inf}^{inf} D^Re dt = 2 pi J(w)coth/... -> 2C with C = 2 m gamma / beta
        let beta = 0.01;
        let p = ohmic(Thermal::Classical { beta });
        let total = 2.0 * quad::integrate(|t| noise_kernel(t, &p).unwrap(), 0.0, 3.0, 1e-14, 1e-12).unwrap();
        let c = 2.0 * 3e-3 / beta;
        assert_relative_eq!(total, 2.0 * c, max_relative = 1e-9);
    }

    #[test]
    fn kernel_table_truncates_gaussian_tails() {
        let p = ohmic(Thermal::Classical { beta: 0.01 });
        let g = TimeGrid::new(2.0 * PI / 2000.0, 20.0).unwrap();
        let k = KernelTable::build(&p, g, DissipationSign::AsPrinted).unwrap();
        assert_eq!(k.d_im[0], 0.0);
        assert!(k.mem_re < 400 && k.mem_im < 400, "{} {}", k.mem_re, k.mem_im);
        assert_eq!(k.im_at(-5), -k.im_at(5));
        assert_eq!(k.re_at(-5), k.re_at(5));
        let f = KernelTable::build(&p, g, DissipationSign::Flipped).unwrap();
        assert_eq!(f.d_im[7], -k.d_im[7]);
        let z = KernelTable::build(&ohmic(Thermal::Zero), g, DissipationSign::AsPrinted).unwrap();
        assert_eq!(z.mem_re, g.len(), "power-law tail is kept in full");
    }

    proptest! {
        #[test]
        fn density_non_negative(w in 0.0f64..500.0, s in 0.1f64..4.0, g in 0.0f64..1.0, om in 0.1f64..100.0) {
            let p = SpectralDensityParams::natural(s, g, om, Thermal::Zero);
            prop_assert!(spectral_density(w, &p).unwrap() >= 0.0);
        }

        #[test]
        fn kernel_parities(t in 0.0f64..10.0, s in 1usize..4) {
            let p = SpectralDensityParams::natural(s as f64, 3e-3, 20.0, Thermal::Quantum { beta: 0.01 });
            let a = dissipation_kernel(t, &p).unwrap();
            let b = dissipation_kernel(-t, &p).unwrap();
            prop_assert!((a + b).abs() <= 1e-14 * a.abs().max(1e-300));
            let c = noise_kernel(t, &p).unwrap();
            let d = noise_kernel(-t, &p).unwrap();
            prop_assert!((c - d).abs() <= 1e-14 * c.abs().max(1e-300));
        }

        #[test]
        fn colder_never_raises_peak_noise(b1 in 0.01f64..20.0, f in 1.0f64..10.0) {
            let p1 = SpectralDensityParams::natural(1.0, 3e-3, 20.0, Thermal::Quantum { beta: b1 });
            let p2 = SpectralDensityParams::natural(1.0, 3e-3, 20.0, Thermal::Quantum { beta: b1 * f });
            let z = SpectralDensityParams::natural(1.0, 3e-3, 20.0, Thermal::Zero);
            let (d1, d2, d0) = (noise_kernel(0.0, &p1).unwrap(), noise_kernel(0.0, &p2).unwrap(), noise_kernel(0.0, &z).unwrap());
            prop_assert!(d2 <= d1 * (1.0 + 1e-12));
            prop_assert!(d0 <= d2 * (1.0 + 1e-12));
        }
    }
}
