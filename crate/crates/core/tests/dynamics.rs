//! Long-time behaviour of the moment equations.

use qbm_core::bath::{spectral_density, KernelTable, SystemConstants};
use qbm_core::greens::GreensFunctions;
use qbm_core::grid::TimeGrid;
use qbm_core::moments::{asymptotic_state, evolve_means, GaussianState, NoiseIntegrals, Trajectory};
use qbm_core::params::{DissipationSign, FrequencyConvention, NoiseKernel, SpectralDensityParams, Thermal};
use qbm_core::quad::integrate;

fn params(s: f64, gamma: f64) -> SpectralDensityParams {
    SpectralDensityParams::natural(s, gamma, 20.0, Thermal::Quantum { beta: 0.01 })
}

#[test]
fn super_ohmic_coupling_matches_ohmic_weight() {
    let weight = |p: SpectralDensityParams| integrate(|w| spectral_density(w, &p).unwrap(), 0.0, 200.0, 1e-14, 1e-12).unwrap();
    let (w1, w2) = (weight(params(1.0, 3e-3)), weight(params(2.0, 3.4e-3)));
    assert!((w2 / w1 - 1.0).abs() < 5e-3, "{}", w2 / w1);
}

#[test]
fn asymptotic_state_is_unique() {
    let p = params(1.0, 3e-3);
    let grid = TimeGrid::per_period(1.0, 400, 3000.0).unwrap();
    let k = KernelTable::build(&p, grid, DissipationSign::AsPrinted).unwrap();
    let states = [
        GaussianState::minimum_uncertainty(1.0, 1e-2, 0.5),
        GaussianState { q_a: -2.0, p_a: 4.0, var_q: 10.0, var_p: 3.0, cov_qp: -1.0 },
    ];
    for mu in [0.0, 1.0] {
        let c = SystemConstants::new(&p, mu, FrequencyConvention::Renormalized).unwrap();
        let gf = GreensFunctions::compute(&k, &c).unwrap();
        let g = NoiseIntegrals::compute(&gf, &k, NoiseKernel::Symmetrized, false).unwrap();
        let a: Vec<GaussianState> =
            states.iter().map(|s| asymptotic_state(&Trajectory::compute(s, &gf, &g).unwrap(), 0.2).unwrap().state).collect();
        assert!(((a[0].var_q - a[1].var_q) / a[0].var_q).abs() < 1e-2);
        assert!(((a[0].var_p - a[1].var_p) / a[0].var_p).abs() < 1e-2);
        assert!((a[0].cov_qp - a[1].cov_qp).abs() < 1e-2 * (a[0].var_q * a[0].var_p).sqrt());
    }
}

#[test]
fn high_temperature_asymptote_is_near_equipartition() {
    // weak coupling: var_q ~ var_p ~ kT = 1/beta at mu = 0
    let p = params(1.0, 3e-3);
    let grid = TimeGrid::per_period(1.0, 400, 3000.0).unwrap();
    let k = KernelTable::build(&p, grid, DissipationSign::AsPrinted).unwrap();
    let c = SystemConstants::new(&p, 0.0, FrequencyConvention::Renormalized).unwrap();
    let gf = GreensFunctions::compute(&k, &c).unwrap();
    let g = NoiseIntegrals::compute(&gf, &k, NoiseKernel::Symmetrized, false).unwrap();
    let tr = Trajectory::compute(&GaussianState::minimum_uncertainty(1.0, 1e-2, 0.5), &gf, &g).unwrap();
    let a = asymptotic_state(&tr, 0.2).unwrap().state;
    assert!((a.var_q / 100.0 - 1.0).abs() < 1e-2, "{}", a.var_q);
    assert!((a.var_p / 100.0 - 1.0).abs() < 1e-2, "{}", a.var_p);
    assert!(a.cov_qp.abs() < 1e-3);
}

fn mean_decay_rate(s: f64, gamma: f64) -> f64 {
    let p = params(s, gamma);
    let grid = TimeGrid::per_period(1.0, 400, 240.0).unwrap();
    let k = KernelTable::build(&p, grid, DissipationSign::AsPrinted).unwrap();
    let c = SystemConstants::new(&p, 0.0, FrequencyConvention::Renormalized).unwrap();
    let gf = GreensFunctions::compute(&k, &c).unwrap();
    let s0 = GaussianState::minimum_uncertainty(1.0, 0.0, 0.5);
    let amp = |t0: f64| {
        let (a, b) = ((t0 / grid.dt()) as usize, ((t0 + 2.0 * std::f64::consts::PI) / grid.dt()) as usize);
        (a..b).map(|i| evolve_means(&s0, &gf, i).0.abs()).fold(0.0, f64::max)
    };
    (amp(20.0) / amp(200.0)).ln() / 180.0
}

#[test]
fn super_ohmic_relaxation_is_much_slower() {
    let ohmic = mean_decay_rate(1.0, 3e-3);
    let super_ohmic = mean_decay_rate(2.0, 3.4e-3);
    assert!(ohmic > 10.0 * super_ohmic, "rates {ohmic:.3e} vs {super_ohmic:.3e}");
}
