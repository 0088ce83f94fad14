//! Time-local master-equation coefficients, the Kossakowski matrix, the
//! non-Markovianity witness and the delta-correlated (Lindblad) limit.
//!
//! Generator convention (hbar = 1):
//! d rho/dt = -i[H(t), rho] + i Xi [q^2, rho] + i Upsilon [q, {p, rho}]
//!            + Gamma [q,[q,rho]] + Theta [q,[p,rho]] + gamma [p,[p,rho]].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::GreensFunctions;
use crate::grid::TimeGrid;
use crate::moments::{GaussianState, NoiseIntegrals, Trajectory};
use crate::params::CoefficientForm;

#[derive(Debug, Clone)]
pub struct MasterEqCoefficients {
    pub grid: TimeGrid,
    pub form: CoefficientForm,
    pub mu: f64,
    pub m: f64,
    pub omega: f64,
    pub xi: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub gamma_big: Vec<f64>,
    pub theta: Vec<f64>,
    pub gamma_small: Vec<f64>,
    /// Correction to the p^2 coefficient of H(t) beyond 1/2m.
    pub h_p2: Vec<f64>,
    /// {q,p} coefficient of H(t).
    pub h_qp: Vec<f64>,
    /// K1..K5 drift functions.
    pub k: [Vec<f64>; 5],
    /// True where |F| is below the singularity threshold.
    pub masked: Vec<bool>,
}

/// Fraction of masked points above which [`compute_coefficients`] flags a warning.
pub const MASK_WARNING_FRACTION: f64 = 0.1;

/// Drift functions K1..K5 at one grid point.
fn drift_functions(gf: &GreensFunctions, i: usize, form: CoefficientForm) -> [f64; 5] {
    let c = &gf.consts;
    let (m, mu, w) = (c.m, c.mu, c.omega);
    let mw2 = m * w * w;
    let f = gf.f[i];
    let (h1, h2) = gf.dissipative_h(i);
    let (r1, r2) = (h1 / f, h2 / f);
    let k2 = r1 / m - mu * r2;
    let k3 = mw2 * mu * mu * r1 + mu * r2;
    match form {
        CoefficientForm::Derived => {
            let k1 = 1.0 / m + mu * r1 / m - mu * mu * r2;
            let k4 = -mw2 + mu * mw2 * r1 + r2;
            [k1, k2, k3, k4, 0.5 * (k2 + k3)]
        }
        CoefficientForm::AsPrinted => {
            let k1 = 1.0 / m + mu * r1 / m;
            let k4 = -mw2 + r2;
            let k5 = (0.5 / m + 0.5 * mw2 * mu * mu) * r1;
            [k1, k2, k3, k4, k5]
        }
    }
}

/// Evaluates all coefficient functions; grid times where F vanishes are masked.
pub fn compute_coefficients(gf: &GreensFunctions, g: &NoiseIntegrals, form: CoefficientForm) -> Result<MasterEqCoefficients> {
    gf.grid.same_as(&g.grid)?;
    let n = gf.grid.len();
    let c = gf.consts;
    let mw2 = c.m * c.omega * c.omega;
    let mut out = MasterEqCoefficients {
        grid: gf.grid,
        form,
        mu: c.mu,
        m: c.m,
        omega: c.omega,
        xi: vec![0.0; n],
        upsilon: vec![0.0; n],
        gamma_big: vec![0.0; n],
        theta: vec![0.0; n],
        gamma_small: vec![0.0; n],
        h_p2: vec![0.0; n],
        h_qp: vec![0.0; n],
        k: Default::default(),
        masked: gf.singular.clone(),
    };
    for kk in out.k.iter_mut() {
        kk.resize(n, 0.0);
    }
    for i in 0..n {
        let [k1, k2, k3, k4, k5] = drift_functions(gf, i, form);
        for (j, v) in [k1, k2, k3, k4, k5].into_iter().enumerate() {
            out.k[j][i] = v;
        }
        let (g1, g2, g3) = (g.g1[i], g.g2[i], g.g3[i]);
        out.gamma_small[i] = g.g1_dot[i] - k1 * g3 - 2.0 * k3 * g1;
        out.gamma_big[i] = g.g2_dot[i] - k4 * g3 - 2.0 * k2 * g2;
        out.theta[i] = match form {
            CoefficientForm::Derived => -g.g3_dot[i] + 2.0 * k1 * g2 + 2.0 * k5 * g3 + 2.0 * k4 * g1,
            CoefficientForm::AsPrinted => -g.g3_dot[i] + 2.0 * k1 * g2 + k5 * g3,
        };
        out.xi[i] = 0.5 * (k4 + mw2);
        out.upsilon[i] = k5;
        out.h_p2[i] = 0.5 * k1 - 0.5 / c.m;
        out.h_qp[i] = 0.5 * k3;
    }
    Ok(out)
}

impl MasterEqCoefficients {
    pub fn masked_fraction(&self) -> f64 {
        self.masked.iter().filter(|&&b| b).count() as f64 / self.masked.len().max(1) as f64
    }

    /// True when more than [`MASK_WARNING_FRACTION`] of the grid is masked.
    pub fn mask_warning(&self) -> bool {
        self.masked_fraction() > MASK_WARNING_FRACTION
    }

    fn check(&self, i: usize) -> Result<()> {
        if self.masked[i] {
            Err(Error::Singular { index: i, t: self.grid.t(i) })
        } else {
            Ok(())
        }
    }

    /// Drift matrix of the first moments, d(q,p)/dt = A (q,p).
    pub fn drift(&self, i: usize) -> [[f64; 2]; 2] {
        let [k1, k2, k3, k4, _] = [self.k[0][i], self.k[1][i], self.k[2][i], self.k[3][i], self.k[4][i]];
        match self.form {
            CoefficientForm::Derived => [[k3, k1], [k4, k2]],
            // the generator implied by the printed coefficients
            CoefficientForm::AsPrinted => {
                let a22 = 2.0 * self.upsilon[i] - k3;
                [[k3, k1], [2.0 * self.xi[i] - self.m * self.omega * self.omega, a22]]
            }
        }
    }

    /// Diffusion matrix of the covariance equation.
    pub fn diffusion(&self, i: usize) -> [[f64; 2]; 2] {
        [[-2.0 * self.gamma_small[i], self.theta[i]], [self.theta[i], -2.0 * self.gamma_big[i]]]
    }

    /// CSV rows: t, Xi, Upsilon, Gamma, Theta, gamma, detA, mask.
    pub fn csv_rows(&self) -> impl Iterator<Item = [f64; 8]> + '_ {
        (0..self.grid.len()).map(move |i| {
            let k = kossakowski_unchecked(self, i);
            [
                self.grid.t(i),
                self.xi[i],
                self.upsilon[i],
                self.gamma_big[i],
                self.theta[i],
                self.gamma_small[i],
                k.det(),
                if self.masked[i] { 1.0 } else { 0.0 },
            ]
        })
    }
}

/// Hermitian 2x2 matrix of the non-diagonal generator on (q, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KossakowskiMatrix {
    pub a11: f64,
    pub a22: f64,
    pub a12: Complex64,
}

impl KossakowskiMatrix {
    pub fn a21(&self) -> Complex64 {
        self.a12.conj()
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12.norm_sqr()
    }

    /// Eigenvalues (ascending) from the closed 2x2 formula.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let h = 0.5 * (self.a11 + self.a22);
        let d = (0.25 * (self.a11 - self.a22).powi(2) + self.a12.norm_sqr()).sqrt();
        [h - d, h + d]
    }

    pub fn as_matrix(&self) -> nalgebra::Matrix2<Complex64> {
        nalgebra::Matrix2::new(Complex64::from(self.a11), self.a12, self.a21(), Complex64::from(self.a22))
    }
}

fn kossakowski_unchecked(c: &MasterEqCoefficients, i: usize) -> KossakowskiMatrix {
    KossakowskiMatrix {
        a11: -2.0 * c.gamma_big[i],
        a22: -2.0 * c.gamma_small[i],
        a12: Complex64::new(-c.theta[i], c.upsilon[i]),
    }
}

pub fn kossakowski(c: &MasterEqCoefficients, i: usize) -> Result<KossakowskiMatrix> {
    c.check(i)?;
    Ok(kossakowski_unchecked(c, i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Markovianity {
    /// det A never significantly negative (delta-correlated limit).
    SemigroupLimit,
    NonMarkovian,
}

/// Witness series: det A(t) = 4 Gamma gamma - (Theta^2 + Upsilon^2), the
/// literal second form -[(Theta + mu Gamma)^2 + Upsilon^2] as a diagnostic,
/// and the classification.
#[derive(Debug, Clone)]
pub struct Witness {
    pub det: Vec<f64>,
    pub det_second_form: Vec<f64>,
    pub masked: Vec<bool>,
    pub classification: Markovianity,
    pub tolerance: f64,
}

impl Witness {
    pub fn max_det(&self) -> f64 {
        self.unmasked(&self.det).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_det(&self) -> f64 {
        self.unmasked(&self.det).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_det(&self) -> f64 {
        self.unmasked(&self.det).fold(0.0, |a, x| a.max(x.abs()))
    }

    /// Largest |first form - second form| over unmasked times.
    pub fn second_form_discrepancy(&self) -> f64 {
        self.det
            .iter()
            .zip(&self.det_second_form)
            .zip(&self.masked)
            .filter(|(_, m)| !**m)
            .fold(0.0, |a, ((x, y), _)| a.max((x - y).abs()))
    }

    fn unmasked<'a>(&'a self, v: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        v.iter().zip(&self.masked).filter(|(_, m)| !**m).map(|(x, _)| *x)
    }
}

pub fn nonmarkov_witness(c: &MasterEqCoefficients, tolerance: f64) -> Witness {
    let n = c.grid.len();
    let mut det = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        det.push(kossakowski_unchecked(c, i).det());
        let a = c.theta[i] + c.mu * c.gamma_big[i];
        second.push(-(a * a + c.upsilon[i] * c.upsilon[i]));
    }
    let negative = det.iter().zip(&c.masked).any(|(d, m)| !m && *d < -tolerance);
    Witness {
        det,
        det_second_form: second,
        masked: c.masked.clone(),
        classification: if negative { Markovianity::NonMarkovian } else { Markovianity::SemigroupLimit },
        tolerance,
    }
}

/// Constant-coefficient generator of a delta-correlated bath D(t) = C delta(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovLimit {
    pub c: f64,
    pub mu: f64,
    /// Lindblad rate 2C.
    pub rate: f64,
    /// Lindblad operator L = l_q q + l_p p.
    pub lindblad: (f64, f64),
    pub gamma_big: f64,
    pub theta: f64,
    pub gamma_small: f64,
    pub upsilon: f64,
    /// Hamiltonian shift (q^2, p^2, {q,p}) coefficients.
    pub hamiltonian_shift: (f64, f64, f64),
}

pub fn markov_limit(c: f64, mu: f64) -> Result<MarkovLimit> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter { name: "C", reason: format!("must be > 0, got {c}") });
    }
    Ok(MarkovLimit {
        c,
        mu,
        rate: 2.0 * c,
        lindblad: (1.0, -mu),
        gamma_big: -c,
        theta: 2.0 * mu * c,
        gamma_small: -mu * mu * c,
        upsilon: 0.0,
        hamiltonian_shift: (-c, -c * mu * mu, c * mu),
    })
}

impl MarkovLimit {
    pub fn kossakowski(&self) -> KossakowskiMatrix {
        KossakowskiMatrix {
            a11: -2.0 * self.gamma_big,
            a22: -2.0 * self.gamma_small,
            a12: Complex64::new(-self.theta, self.upsilon),
        }
    }
}

/// C = 2 m gamma / beta of the high-temperature Ohmic limit (hbar = 1).
pub fn ohmic_delta_weight(m: f64, gamma: f64, beta: f64) -> f64 {
    2.0 * m * gamma / beta
}

/// Quadratic-form coefficients (q^2, p^2, {q,p}) of
/// H~ = H(t) - Xi q^2 - (Upsilon/2) {q,p}.
pub fn reference_hamiltonian(c: &MasterEqCoefficients, i: usize) -> Result<(f64, f64, f64)> {
    c.check(i)?;
    Ok((
        0.5 * c.m * c.omega * c.omega - c.xi[i],
        0.5 / c.m + c.h_p2[i],
        c.h_qp[i] - 0.5 * c.upsilon[i],
    ))
}

/// Integrates the moment equations implied by the generator,
/// x' = A x, sigma' = A sigma + sigma A^T + D, with classical RK4 on a step
/// of two grid intervals (midpoints on the grid). Returns states at every
/// second grid point.
pub fn integrate_generator(c: &MasterEqCoefficients, s0: &GaussianState) -> Result<Trajectory> {
    let n = c.grid.len();
    let steps = (n - 1) / 2;
    let h = 2.0 * c.grid.dt();
    let rhs = |i: usize, y: &[f64; 5]| -> [f64; 5] {
        let a = c.drift(i);
        let d = c.diffusion(i);
        let (q, p, sq, sp, sc) = (y[0], y[1], y[2], y[3], y[4]);
        [
            a[0][0] * q + a[0][1] * p,
            a[1][0] * q + a[1][1] * p,
            2.0 * (a[0][0] * sq + a[0][1] * sc) + d[0][0],
            2.0 * (a[1][0] * sc + a[1][1] * sp) + d[1][1],
            a[0][0] * sc + a[0][1] * sp + a[1][0] * sq + a[1][1] * sc + d[0][1],
        ]
    };
    let mut y = s0.as_array();
    let mut states = Vec::with_capacity(steps + 1);
    let to_state = |y: &[f64; 5]| GaussianState { q_a: y[0], p_a: y[1], var_q: y[2], var_p: y[3], cov_qp: y[4] };
    states.push(to_state(&y));
    let add = |y: &[f64; 5], k: &[f64; 5], s: f64| -> [f64; 5] {
        let mut o = *y;
        for j in 0..5 {
            o[j] += s * k[j];
        }
        o
    };
    for k in 0..steps {
        let i = 2 * k;
        for j in i..=i + 2 {
            c.check(j)?;
        }
        let k1 = rhs(i, &y);
        let k2 = rhs(i + 1, &add(&y, &k1, 0.5 * h));
        let k3 = rhs(i + 1, &add(&y, &k2, 0.5 * h));
        let k4 = rhs(i + 2, &add(&y, &k3, h));
        for j in 0..5 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        states.push(to_state(&y));
    }
    Ok(Trajectory { grid: TimeGrid::from_steps(h, steps), states })
}
