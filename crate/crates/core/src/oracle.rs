//! Exact finite-bath validator: N discrete bath modes plus the system evolve
//! as a closed quadratic Hamiltonian; the reduced system moments are read off
//! the Gaussian state.
//!
//! Phase-space ordering is (q, p, q_1, p_1, ..., q_N, p_N).

use nalgebra::{DMatrix, DVector};

use crate::bath::{density_unchecked, frequency_shift, SystemConstants};
use crate::error::{Error, Result};
use crate::moments::GaussianState;
use crate::params::{SpectralDensityParams, Thermal};
use crate::quad;

#[derive(Debug, Clone)]
pub struct DiscreteBath {
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub masses: Vec<f64>,
    /// int_bin J(w) dw for each mode.
    pub weights: Vec<f64>,
    pub thermal: Thermal,
    pub omega_max: f64,
    /// int J/w over (0, inf) minus sum_k weights_k / omega_k: the static
    /// coupling of modes not represented by the discretization.
    pub missing_shift: f64,
}

/// Equal-width bins on (0, omega_max], one unit-mass mode at each midpoint with
/// c_k^2 = 2 m_k w_k int_bin J.
pub fn discretize_bath(p: &SpectralDensityParams, n: usize, omega_max: f64) -> Result<DiscreteBath> {
    p.validate()?;
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::InvalidParameter { name: "omega_max", reason: format!("must be > 0, got {omega_max}") });
    }
    let dw = if n > 0 { omega_max / n as f64 } else { 0.0 };
    let mut omegas = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut couplings = Vec::with_capacity(n);
    for k in 0..n {
        let (lo, hi) = (k as f64 * dw, (k + 1) as f64 * dw);
        let w = 0.5 * (lo + hi);
        let wt = quad::integrate(|x| density_unchecked(x, p), lo, hi, 1e-300, 1e-13)?;
        omegas.push(w);
        weights.push(wt);
        couplings.push((2.0 * w * wt).sqrt());
    }
    let represented: f64 = omegas.iter().zip(&weights).map(|(w, j)| j / w).sum();
    let missing_shift = 0.5 * p.m * frequency_shift(p)? - represented;
    Ok(DiscreteBath { omegas, couplings, masses: vec![1.0; n], weights, thermal: p.thermal, omega_max, missing_shift })
}

impl DiscreteBath {
    /// Largest relative difference between the bin weight and the midpoint
    /// estimate J(w_k) dw over bins carrying non-negligible weight.
    pub fn bin_error(&self, p: &SpectralDensityParams) -> f64 {
        let n = self.omegas.len();
        if n == 0 {
            return 0.0;
        }
        let dw = self.omega_max / n as f64;
        let wmax = self.weights.iter().fold(0.0f64, |a, &x| a.max(x));
        self.omegas
            .iter()
            .zip(&self.weights)
            .filter(|(_, &wt)| wt > 1e-6 * wmax)
            .map(|(&w, &wt)| (density_unchecked(w, p) * dw - wt).abs() / wt)
            .fold(0.0, f64::max)
    }

    /// Errors when the bin error exceeds `tol`.
    pub fn require_fidelity(&self, p: &SpectralDensityParams, tol: f64) -> Result<()> {
        let e = self.bin_error(p);
        if e > tol {
            return Err(Error::CoarseBath { achieved: e, requested: tol });
        }
        Ok(())
    }

    /// Time after which the equally spaced spectrum revives, 2 pi / dw.
    pub fn recurrence_time(&self) -> f64 {
        if self.omegas.is_empty() {
            f64::INFINITY
        } else {
            2.0 * std::f64::consts::PI * self.omegas.len() as f64 / self.omega_max
        }
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Gaussian state of system plus bath.
#[derive(Debug, Clone)]
pub struct TotalGaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl TotalGaussianState {
    /// Product of a system state with the thermal state of every bath mode.
    pub fn product(system: &GaussianState, bath: &DiscreteBath) -> Result<Self> {
        system.validate()?;
        let n = 2 * bath.len() + 2;
        let mut mean = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        mean[0] = system.q_a;
        mean[1] = system.p_a;
        cov[(0, 0)] = system.var_q;
        cov[(1, 1)] = system.var_p;
        cov[(0, 1)] = system.cov_qp;
        cov[(1, 0)] = system.cov_qp;
        for k in 0..bath.len() {
            let (w, m) = (bath.omegas[k], bath.masses[k]);
            let th = bath.thermal.weight(w);
            let (vq, vp) = (th / (2.0 * m * w), 0.5 * m * w * th);
            if vq * vp < 0.25 - 1e-12 {
                return Err(Error::UncertaintyViolation { t: 0.0, det: vq * vp });
            }
            cov[(2 + 2 * k, 2 + 2 * k)] = vq;
            cov[(3 + 2 * k, 3 + 2 * k)] = vp;
        }
        Ok(Self { mean, cov })
    }

    /// System (q, p) block.
    pub fn reduced(&self) -> GaussianState {
        reduced_moments(self)
    }
}

/// Partial trace over the bath: the (q, p) sub-block.
pub fn reduced_moments(s: &TotalGaussianState) -> GaussianState {
    GaussianState { q_a: s.mean[0], p_a: s.mean[1], var_q: s.cov[(0, 0)], var_p: s.cov[(1, 1)], cov_qp: 0.5 * (s.cov[(0, 1)] + s.cov[(1, 0)]) }
}

/// Symplectic form J in (q, p, q1, p1, ...) ordering.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let n = 2 * n_modes;
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n_modes {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

/// Exact linear flow of H = z^T Hs z / 2 via the antisymmetric similarity
/// transform A = L^T J L (Hs = L L^T): exp(J Hs t) = L^-T exp(A t) L^T with
/// exp(A t) = U cos(W t) U^T + A U sin(W t)/W U^T, -A^2 = U W^2 U^T.
#[derive(Debug, Clone)]
pub struct SymplecticFlow {
    l: DMatrix<f64>,
    a: DMatrix<f64>,
    u: DMatrix<f64>,
    freqs: DVector<f64>,
    t_rec: f64,
}

/// Quadratic-form matrix of the total Hamiltonian
/// p^2/2m + m w_b^2 q^2/2 + (q - mu p) sum c_k q_k + bath - delta (q - mu p)^2.
pub fn hamiltonian_matrix(bath: &DiscreteBath, m: f64, omega_bare: f64, mu: f64) -> DMatrix<f64> {
    let n = 2 * bath.len() + 2;
    let mut h = DMatrix::zeros(n, n);
    let d = bath.missing_shift;
    h[(0, 0)] = m * omega_bare * omega_bare - 2.0 * d;
    h[(1, 1)] = 1.0 / m - 2.0 * d * mu * mu;
    h[(0, 1)] = 2.0 * d * mu;
    h[(1, 0)] = 2.0 * d * mu;
    for k in 0..bath.len() {
        let (i, ip) = (2 + 2 * k, 3 + 2 * k);
        let (c, mk, w) = (bath.couplings[k], bath.masses[k], bath.omegas[k]);
        h[(0, i)] = c;
        h[(i, 0)] = c;
        h[(1, i)] = -mu * c;
        h[(i, 1)] = -mu * c;
        h[(i, i)] = mk * w * w;
        h[(ip, ip)] = 1.0 / mk;
    }
    h
}

impl SymplecticFlow {
    /// Flow for the system constants: the bare system frequency is the
    /// renormalized omega_R, so that the discrete bath's static pull restores
    /// omega_S at mu = 0.
    pub fn new(bath: &DiscreteBath, consts: &SystemConstants) -> Result<Self> {
        Self::with_frequency(bath, consts.m, consts.omega_r, consts.mu)
    }

    pub fn with_frequency(bath: &DiscreteBath, m: f64, omega_bare: f64, mu: f64) -> Result<Self> {
        let h = hamiltonian_matrix(bath, m, omega_bare, mu);
        let chol = nalgebra::Cholesky::new(h)
            .ok_or_else(|| Error::Numerical("total Hamiltonian is not positive definite".into()))?;
        let l = chol.l();
        let j = symplectic_form(bath.len() + 1);
        let a = l.transpose() * &j * &l;
        let b = -(&a * &a);
        let b = 0.5 * (&b + b.transpose());
        let eig = nalgebra::SymmetricEigen::new(b);
        let freqs = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
        Ok(Self { l, a, u: eig.eigenvectors, freqs, t_rec: bath.recurrence_time() })
    }

    pub fn recurrence_time(&self) -> f64 {
        self.t_rec
    }

    fn guard(&self, t: f64) -> Result<()> {
        if t > self.t_rec {
            return Err(Error::BeyondRecurrence { t, t_rec: self.t_rec });
        }
        Ok(())
    }

    /// Full flow matrix S(t).
    pub fn matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        self.guard(t)?;
        let n = self.freqs.len();
        let cos = DMatrix::from_diagonal(&self.freqs.map(|w| (w * t).cos()));
        let sinc = DMatrix::from_diagonal(&self.freqs.map(|w| sinc_t(w, t)));
        let ut = self.u.transpose();
        let e = &self.u * cos * &ut + &self.a * &self.u * sinc * &ut;
        let lt = self.l.transpose();
        let lt_inv = lt.clone().try_inverse().ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        debug_assert_eq!(e.nrows(), n);
        Ok(lt_inv * e * lt)
    }

    /// Evolves a total state to time t.
    pub fn evolve(&self, s0: &TotalGaussianState, t: f64) -> Result<TotalGaussianState> {
        let s = self.matrix(t)?;
        let cov = &s * &s0.cov * s.transpose();
        Ok(TotalGaussianState { mean: &s * &s0.mean, cov: 0.5 * (&cov + cov.transpose()) })
    }

    /// Reduced system moments at many times, O(n^2) per time after an
    /// O(n^3) setup.
    pub fn reduced_series(&self, s0: &TotalGaussianState, times: &[f64]) -> Result<Vec<GaussianState>> {
        if let Some(&t) = times.iter().find(|&&t| t > self.t_rec) {
            return Err(Error::BeyondRecurrence { t, t_rec: self.t_rec });
        }
        let ut = self.u.transpose();
        // rows of L^-T for the system coordinates: y_i = L^-1 e_i
        let mut rows = Vec::with_capacity(2);
        for i in 0..2 {
            let mut e = DVector::zeros(self.freqs.len());
            e[i] = 1.0;
            let y = self
                .l
                .solve_lower_triangular(&e)
                .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
            let r = &ut * &y;
            let rp = &ut * (self.a.transpose() * &y);
            rows.push((r, rp));
        }
        let w = &ut * self.l.transpose();
        let mean = &w * &s0.mean;
        let cov = &w * &s0.cov * w.transpose();
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let c = self.freqs.map(|x| (x * t).cos());
            let sn = self.freqs.map(|x| sinc_t(x, t));
            let v: Vec<DVector<f64>> = rows.iter().map(|(r, rp)| r.component_mul(&c) + rp.component_mul(&sn)).collect();
            let cv0 = &cov * &v[0];
            let cv1 = &cov * &v[1];
            out.push(GaussianState {
                q_a: v[0].dot(&mean),
                p_a: v[1].dot(&mean),
                var_q: v[0].dot(&cv0),
                var_p: v[1].dot(&cv1),
                cov_qp: v[0].dot(&cv1),
            });
        }
        Ok(out)
    }
}

/// sin(w t) / w, continuous at w = 0.
fn sinc_t(w: f64, t: f64) -> f64 {
    if (w * t).abs() < 1e-8 {
        t
    } else {
        (w * t).sin() / w
    }
}

/// Convenience: discretize, build the flow and return reduced moments.
pub fn reduced_trajectory(
    p: &SpectralDensityParams,
    consts: &SystemConstants,
    n_modes: usize,
    omega_max: f64,
    s0: &GaussianState,
    times: &[f64],
) -> Result<Vec<GaussianState>> {
    let bath = discretize_bath(p, n_modes, omega_max)?;
    let flow = SymplecticFlow::new(&bath, consts)?;
    let st = TotalGaussianState::product(s0, &bath)?;
    flow.reduced_series(&st, times)
}

/// Default number of oracle modes.
pub const DEFAULT_MODES: usize = 300;

/// Default discretization ceiling in units of the cutoff Omega.
pub const DEFAULT_OMEGA_MAX_OVER_CUTOFF: f64 = 1.5;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::FrequencyConvention;

    fn params(gamma: f64) -> SpectralDensityParams {
        SpectralDensityParams::natural(1.0, gamma, 20.0, Thermal::Quantum { beta: 0.01 })
    }

    #[test]
    fn single_bin_bookkeeping() {
        let p = params(3e-3);
        let b = discretize_bath(&p, 1, 60.0).unwrap();
        let total = quad::integrate(|x| density_unchecked(x, &p), 0.0, 60.0, 1e-300, 1e-13).unwrap();
        assert!((b.couplings[0].powi(2) - 2.0 * b.omegas[0] * total).abs() < 1e-12 * total);
        let z = discretize_bath(&params(0.0), 10, 60.0).unwrap();
        assert!(z.couplings.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn fine_bins_reproduce_weight() {
        let p = params(3e-3);
        let b = discretize_bath(&p, 300, 30.0).unwrap();
        assert!(b.bin_error(&p) < 1e-3);
        assert!(b.require_fidelity(&p, 1e-3).is_ok());
        let coarse = discretize_bath(&p, 3, 60.0).unwrap();
        assert!(matches!(coarse.require_fidelity(&p, 1e-3), Err(Error::CoarseBath { .. })));
    }

    #[test]
    fn no_bath_rotates() {
        let p = params(0.0);
        let c = SystemConstants::new(&p, 0.7, FrequencyConvention::Renormalized).unwrap();
        let bath = discretize_bath(&p, 0, 30.0).unwrap();
        let flow = SymplecticFlow::new(&bath, &c).unwrap();
        let s0 = GaussianState::minimum_uncertainty(1.0, 0.2, 0.3);
        let st = TotalGaussianState::product(&s0, &bath).unwrap();
        let ts = [0.0, 0.5, 2.0, 7.0];
        let r = flow.reduced_series(&st, &ts).unwrap();
        for (s, &t) in r.iter().zip(&ts) {
            assert!((s.q_a - (t.cos() + 0.2 * t.sin())).abs() < 1e-12);
            assert!((s.p_a - (-t.sin() + 0.2 * t.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_mode_beats() {
        // system and one mode at the same frequency, mu = 0: the normal modes
        // sit at sqrt(w^2 +- c) (unit masses) and energy swaps at their beat.
        let c = 0.02;
        let bath = DiscreteBath {
            omegas: vec![1.0],
            couplings: vec![c],
            masses: vec![1.0],
            weights: vec![0.0],
            thermal: Thermal::Zero,
            omega_max: 1e-3,
            missing_shift: 0.0,
        };
        let flow = SymplecticFlow::with_frequency(&bath, 1.0, 1.0, 0.0).unwrap();
        let (w1, w2) = ((1.0 - c).sqrt(), (1.0 + c).sqrt());
        let t = 3.7;
        let s = flow.matrix(t).unwrap();
        // q(t) for q(0) = 1: (cos w1 t + cos w2 t)/2
        assert!((s[(0, 0)] - 0.5 * ((w1 * t).cos() + (w2 * t).cos())).abs() < 1e-12);
        assert!((s[(2, 0)] - 0.5 * ((w2 * t).cos() - (w1 * t).cos())).abs() < 1e-12);
    }

    #[test]
    fn flow_is_symplectic_and_preserves_uncertainty() {
        let p = params(3e-3);
        let c = SystemConstants::new(&p, 1.0, FrequencyConvention::Renormalized).unwrap();
        let bath = discretize_bath(&p, 40, 30.0).unwrap();
        let flow = SymplecticFlow::new(&bath, &c).unwrap();
        let j = symplectic_form(41);
        let s = flow.matrix(5.0).unwrap();
        let err = (s.transpose() * &j * &s - &j).abs().max();
        assert!(err < 1e-10, "{err}");
        let st = TotalGaussianState::product(&GaussianState::minimum_uncertainty(1.0, 0.0, 0.5), &bath).unwrap();
        let ev = flow.evolve(&st, 5.0).unwrap();
        assert!(ev.reduced().uncertainty_det() >= 0.25 - 1e-9);
        assert!(flow.matrix(bath.recurrence_time() + 1.0).is_err());
    }

    #[test]
    fn reduced_at_start_is_system_state() {
        let p = params(3e-3);
        let c = SystemConstants::new(&p, 0.5, FrequencyConvention::Renormalized).unwrap();
        let s0 = GaussianState { q_a: 1.0, p_a: 0.01, var_q: 0.5, var_p: 0.6, cov_qp: 0.1 };
        let r = reduced_trajectory(&p, &c, 20, 30.0, &s0, &[0.0]).unwrap();
        for (x, y) in r[0].as_array().iter().zip(s0.as_array()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
