//! Finite-bath oracle: convergence in the number of modes and agreement with
//! the propagator solution at small coupling.

use qbm_core::bath::{KernelTable, SystemConstants};
use qbm_core::greens::GreensFunctions;
use qbm_core::grid::TimeGrid;
use qbm_core::moments::{GaussianState, NoiseIntegrals, Trajectory};
use qbm_core::oracle::{discretize_bath, reduced_trajectory, SymplecticFlow, TotalGaussianState};
use qbm_core::params::{DissipationSign, FrequencyConvention, NoiseKernel, SpectralDensityParams, Thermal};

fn base() -> SpectralDensityParams {
    SpectralDensityParams::natural(1.0, 3e-3, 20.0, Thermal::Quantum { beta: 0.01 })
}

fn rel_diff(a: &[GaussianState], b: &[GaussianState]) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..5 {
        let num = a.iter().zip(b).map(|(x, y)| (x.as_array()[k] - y.as_array()[k]).abs()).fold(0.0, f64::max);
        let den = b.iter().map(|y| y.as_array()[k].abs()).fold(0.0, f64::max);
        worst = worst.max(num / den);
    }
    worst
}

#[test]
fn oracle_is_cauchy_in_mode_number() {
    // N = 150 on [0, 30] keeps its recurrence time 2 pi N / omega_max = 31.4 ahead
    let p = base();
    let s0 = GaussianState::minimum_uncertainty(1.0, 1e-2, 0.5);
    let times: Vec<f64> = (0..=300).map(|i| 0.1 * i as f64).collect();
    for mu in [0.0, 1.0] {
        let c = SystemConstants::new(&p, mu, FrequencyConvention::Renormalized).unwrap();
        let coarse = reduced_trajectory(&p, &c, 150, 30.0, &s0, &times).unwrap();
        let fine = reduced_trajectory(&p, &c, 300, 30.0, &s0, &times).unwrap();
        let d = rel_diff(&coarse, &fine);
        assert!(d < 3e-3, "mu={mu}: N=150 vs N=300 differ by {d:.3e}");
    }
}

#[test]
fn oracle_refuses_times_past_recurrence() {
    let p = base();
    let c = SystemConstants::new(&p, 0.0, FrequencyConvention::Renormalized).unwrap();
    let s0 = GaussianState::minimum_uncertainty(1.0, 0.0, 0.5);
    assert!(reduced_trajectory(&p, &c, 50, 30.0, &s0, &[20.0]).is_err());
}

#[test]
fn total_uncertainty_is_preserved() {
    let p = base();
    let bath = discretize_bath(&p, 60, 30.0).unwrap();
    let c = SystemConstants::new(&p, 0.7, FrequencyConvention::Renormalized).unwrap();
    let flow = SymplecticFlow::new(&bath, &c).unwrap();
    let s0 = TotalGaussianState::product(&GaussianState::minimum_uncertainty(0.3, -0.2, 0.5), &bath).unwrap();
    for t in [1.0, 5.0, 10.0] {
        let st = flow.evolve(&s0, t).unwrap();
        // every mode pair of the evolved state stays above the bound
        let r = st.reduced();
        assert!(r.uncertainty_det() >= 0.25 - 1e-9);
        let n = st.cov.nrows();
        for k in (0..n).step_by(2) {
            let det = st.cov[(k, k)] * st.cov[(k + 1, k + 1)] - st.cov[(k, k + 1)].powi(2);
            assert!(det >= 0.25 - 1e-9, "mode {k} at t={t}: {det}");
        }
    }
}

#[test]
fn strong_coupling_propagators_match_oracle() {
    let p = SpectralDensityParams::natural(1.0, 0.02, 20.0, Thermal::Zero);
    let grid = TimeGrid::per_period(1.0, 2000, 20.0).unwrap();
    let k = KernelTable::build(&p, grid, DissipationSign::AsPrinted).unwrap();
    let s0 = GaussianState::minimum_uncertainty(1.0, 0.5, 0.5);
    let idx: Vec<usize> = (0..grid.len()).step_by(100).collect();
    let times: Vec<f64> = idx.iter().map(|&i| grid.t(i)).collect();
    for mu in [0.0, 0.5] {
        let c = SystemConstants::new(&p, mu, FrequencyConvention::Renormalized).unwrap();
        let gf = GreensFunctions::compute(&k, &c).unwrap();
        let g = NoiseIntegrals::compute(&gf, &k, NoiseKernel::Symmetrized, false).unwrap();
        let tr = Trajectory::compute(&s0, &gf, &g).unwrap();
        let analytic: Vec<GaussianState> = idx.iter().map(|&i| tr.states[i]).collect();
        let oracle = reduced_trajectory(&p, &c, 300, 30.0, &s0, &times).unwrap();
        let d = rel_diff(&analytic, &oracle);
        assert!(d < 1e-2, "mu={mu}: {d:.3e}");
    }
}
