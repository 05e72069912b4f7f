use std::f64::consts::PI;

use kerrsim::circuit::DerivedParams;
use kerrsim::dynamics::{evolve, evolve_with, g2_zero, steady_state, steady_state_with, DissipationSpec, EvolveOptions, SteadyMethod, SteadyOptions};
use kerrsim::hamiltonian::{build_drive, build_rotating_frame, FrameSpec, Sideband};
use kerrsim::operator::{expect, mode_destroy, mode_number, Mode, ModeLayout, QOperator, QState, C64};
use kerrsim::validation::cavity_check;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn single(dim: usize) -> ModeLayout {
    ModeLayout::single(Mode::A, dim).unwrap()
}

fn damped(kappa: f64) -> DissipationSpec {
    DissipationSpec { kappa_a: kappa, kappa_b: 0.0, nbar_a: 0.0, nbar_b: 0.0, kappa_s: None }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}

fn rsb_point(dims: usize) -> (QOperator, DissipationSpec) {
    let p = DerivedParams::effective(6.4716, 4.7129, -0.2442, -0.2382, -0.0065429, 0.0074615);
    let layout = ModeLayout::two_mode(dims, dims).unwrap();
    let f = FrameSpec::sideband(&p, Sideband::Rsb, Mode::B, p.omega_a - p.omega_b + 0.003, p.omega_b + 0.006, 0.0006).unwrap();
    (build_rotating_frame(&p, &f, &layout).unwrap().total(), DissipationSpec::uniform(0.0024393))
}

#[test]
fn fock_state_decays_exponentially() {
    let layout = single(4);
    let kappa = 0.01;
    let t_final = 3.0 / (2.0 * PI * kappa);
    let res = evolve(&QOperator::zeros(&layout), &damped(kappa), &QState::fock(&layout, &[1]).unwrap(), t_final, 0.0).unwrap();
    for (t, o) in res.times.iter().zip(&res.records) {
        assert!((o.n_a.unwrap() - (-2.0 * PI * kappa * t).exp()).abs() < 1e-5, "t = {t}");
    }
}

#[test]
fn coherent_amplitude_rotates_and_decays() {
    let layout = single(20);
    let (kappa, det) = (0.01, 0.02);
    let h = mode_number(&layout, Mode::A).unwrap().scale_real(2.0 * PI * det);
    let alpha = C64::new(1.2, 0.0);
    let rho0 = QState::coherent(20, alpha).unwrap();
    let res = evolve(&h, &damped(kappa), &rho0, 40.0, 0.0).unwrap();
    for (t, o) in res.times.iter().zip(&res.records) {
        let want = alpha * C64::from_polar((-PI * kappa * t).exp(), -2.0 * PI * det * t);
        assert!((o.a.unwrap() - want).norm() < 1e-5, "t = {t}");
    }
}

#[test]
fn driven_cavity_is_lorentzian() {
    for det in [0.0, 0.0012, -0.003, 0.01] {
        let c = cavity_check(det, 0.0024, 0.0003, 14).unwrap();
        assert!(c.pass, "{} {} vs {}", c.name, c.value, c.reference);
    }
}

#[test]
fn steady_state_matches_long_evolution() {
    let (h, diss) = rsb_point(4);
    let ss = steady_state(&h, &diss).unwrap();
    let t_final = 20.0 / diss.kappa_a;
    let opts = EvolveOptions { n_out: 3, ..EvolveOptions::default() };
    let res = evolve_with(&h, &diss, &QState::vacuum(h.layout()), t_final, 0.0, &opts).unwrap();
    assert!(max_abs(&(res.final_state.to_density() - ss.to_density())) < 1e-4);
    assert!(res.steady);
}

#[test]
fn steady_solvers_agree() {
    let (h, diss) = rsb_point(5);
    let rho = |m| steady_state_with(&h, &diss, &SteadyOptions { method: m, ..SteadyOptions::default() }).unwrap();
    let direct = rho(SteadyMethod::Direct);
    let krylov = rho(SteadyMethod::Krylov);
    assert_eq!(krylov.method, SteadyMethod::Krylov);
    assert!(max_abs(&(direct.state.to_density() - krylov.state.to_density())) < 1e-9);
    let integ = rho(SteadyMethod::Integrate);
    assert!(max_abs(&(direct.state.to_density() - integ.state.to_density())) < 1e-5);
}

#[test]
fn reference_state_statistics() {
    let coh = QState::coherent(30, C64::new(0.7, -0.4)).unwrap();
    assert!((g2_zero(&coh, Mode::A).unwrap() - 1.0).abs() < 1e-6);
    let th = QState::thermal(80, 0.3).unwrap();
    assert!((g2_zero(&th, Mode::A).unwrap() - 2.0).abs() < 1e-6);
    let fock = QState::fock(&single(5), &[1]).unwrap();
    assert!(g2_zero(&fock, Mode::A).unwrap().abs() < 1e-6);
    let two = QState::fock(&single(5), &[2]).unwrap();
    assert!((g2_zero(&two, Mode::A).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn strong_kerr_antibunches() {
    // one photon at a time: a resonant weak drive on a deep Kerr well
    let layout = single(6);
    let a = mode_destroy(&layout, Mode::A).unwrap();
    let ad = a.adjoint();
    let kerr = ad.matmul(&ad).unwrap().matmul(&a).unwrap().matmul(&a).unwrap().scale_real(2.0 * PI * -0.2 / 2.0);
    let h = kerr.add(&build_drive(2e-4, Mode::A, &layout).unwrap()).unwrap();
    let ss = steady_state(&h, &damped(0.002)).unwrap();
    assert!(g2_zero(&ss, Mode::A).unwrap() < 0.05);
    assert!(expect(&mode_number(&layout, Mode::A).unwrap(), &ss).unwrap().re < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_preserves_trace_and_positivity(det in -0.02f64..0.02, eps in 0.0f64..0.004, nbar in 0.0f64..0.2, kerr in -0.05f64..0.0) {
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        let a = mode_destroy(&layout, Mode::A).unwrap();
        let b = mode_destroy(&layout, Mode::B).unwrap();
        let hop = a.adjoint().matmul(&b).unwrap();
        let h = mode_number(&layout, Mode::A).unwrap().scale_real(2.0 * PI * det)
            .add(&hop.add(&hop.adjoint()).unwrap().scale_real(2.0 * PI * 0.003)).unwrap()
            .add(&mode_number(&layout, Mode::B).unwrap().matmul(&mode_number(&layout, Mode::B).unwrap()).unwrap().scale_real(2.0 * PI * kerr)).unwrap()
            .add(&build_drive(eps, Mode::A, &layout).unwrap()).unwrap();
        let diss = DissipationSpec { kappa_a: 0.003, kappa_b: 0.002, nbar_a: nbar, nbar_b: 0.0, kappa_s: None };
        let res = evolve(&h, &diss, &QState::fock(&layout, &[1, 0]).unwrap(), 150.0, 0.0).unwrap();
        prop_assert!(res.trace_errors.iter().all(|&e| e < 1e-8));
        prop_assert!(res.final_state.min_eigenvalue() > -1e-8);
        let ss = steady_state(&h, &diss).unwrap();
        prop_assert!((ss.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(ss.min_eigenvalue() > -1e-9);
    }
}
