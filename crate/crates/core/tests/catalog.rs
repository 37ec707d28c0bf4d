mod common;

use common::*;
use kpartite::catalog::*;
use kpartite::hierarchy::CoefficientScheme;
use kpartite::linalg::RMat;
use kpartite::optimizer::{maximize_tau, HierarchyTarget, OptimizerConfig};
use kpartite::poly::{MultiPoly, PolyGaussianState};
use kpartite::quadrature::wigner_normalization;
use kpartite::symplectic::{symplectic_eigenvalues, GaussianEnvelope};
use num_complex::Complex64;
use rand::Rng;

fn fig_state() -> PolyGaussianState {
    cps_tsvs_state(CpsTsvsParams::scan_point(0.0, 0.5).unwrap()).unwrap()
}

#[test]
fn ghz_is_pure_without_mixing() {
    assert!(
        (ghz_state(GhzParams::new(0.0, 0.0).unwrap()).unwrap().cov() - RMat::identity(6, 6) * 0.5)
            .amax()
            < 1e-15
    );
    for i in 0..=15 {
        let r = 0.1 * i as f64;
        let env = ghz_state(GhzParams::new(r, 0.0).unwrap()).unwrap();
        let nu = symplectic_eigenvalues(env.cov()).unwrap();
        assert!(nu.iter().all(|x| (x - 0.5).abs() < 1e-9), "r={r}: {nu:?}");
    }
}

#[test]
fn halved_coefficients_are_mixed() {
    let env = ghz_state_with(GhzParams::new(0.5, 0.0).unwrap(), GhzCoefficients::Halved).unwrap();
    let nu = symplectic_eigenvalues(env.cov()).unwrap();
    assert!(nu[2] > 0.7);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(GhzParams::new(-0.1, 0.0).is_err());
    assert!(GhzParams::new(0.1, -1.0).is_err());
    assert!(CpsTsvsParams::new(0.0, Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)).is_err());
    assert!(ThermalChannel::new(0.0, 1.0).is_err());
    let ch = ThermalChannel::new(1.0, 2.0).unwrap();
    assert!(green_propagate(&fig_state(), &ch, -1.0).is_err());
}

#[test]
fn single_photon_limit() {
    let s = cps_tsvs_state(
        CpsTsvsParams::new(0.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap(),
    )
    .unwrap();
    let want = MultiPoly::from_terms(
        4,
        [
            (vec![2, 0, 0, 0], Complex64::new(2.0, 0.0)),
            (vec![0, 2, 0, 0], Complex64::new(2.0, 0.0)),
            (vec![0, 0, 0, 0], Complex64::new(-1.0, 0.0)),
        ],
    )
    .unwrap();
    assert!(s.poly().max_coeff_diff(&want) < 1e-14);
}

#[test]
fn cps_wigner_is_normalized() {
    let mut r = rng(17);
    for _ in 0..10 {
        let a = r.random_range(0.0..1.0);
        let sq = r.random_range(-0.8..0.8);
        let ph = r.random_range(0.0..6.2);
        let p = CpsTsvsParams::new(
            sq,
            Complex64::from_polar(a, ph),
            Complex64::from_polar((1.0 - a * a).sqrt(), 0.3),
        )
        .unwrap();
        let s = cps_tsvs_state(p).unwrap();
        assert_eq!(s.poly().coeff(&[0, 0, 0, 0]), Complex64::new(-1.0, 0.0));
        let norm = wigner_normalization(&s, 16).unwrap();
        assert!((norm - 1.0).abs() < 1e-6, "{norm}");
    }
}

#[test]
fn channel_at_ln2() {
    let ch = ThermalChannel::new(1.0, 2.0).unwrap();
    let v = ch.covariance_at(GaussianEnvelope::vacuum(1).cov(), 2f64.ln());
    assert!((v - RMat::identity(2, 2) * 1.5).amax() < 1e-14);
}

#[test]
fn zero_time_is_identity() {
    let ch = ThermalChannel::new(1.0, 2.0).unwrap();
    assert_eq!(
        green_propagate(&fig_state(), &ch, 0.0).unwrap(),
        fig_state()
    );
}

#[test]
fn propagation_is_a_semigroup() {
    let ch = ThermalChannel::new(0.7, 4.0).unwrap();
    let mut r = rng(23);
    for _ in 0..5 {
        let s = random_poly_state(2, 4, &mut r, true);
        let (t1, t2) = (r.random_range(0.0..1.5), r.random_range(0.0..1.5));
        let two = green_propagate(&green_propagate(&s, &ch, t1).unwrap(), &ch, t2).unwrap();
        let one = green_propagate(&s, &ch, t1 + t2).unwrap();
        assert!((two.envelope().cov() - one.envelope().cov()).amax() < 1e-12);
        assert!((two.envelope().mean() - one.envelope().mean()).amax() < 1e-12);
        assert!(two.poly().max_coeff_diff(one.poly()) < 1e-9);
    }
}

#[test]
fn evolved_state_stays_normalized() {
    let ch = ThermalChannel::new(1.0, 2.0).unwrap();
    for t in [0.0, 0.5, 2.0] {
        let s = green_propagate(&fig_state(), &ch, t).unwrap();
        assert!(
            (wigner_normalization(&s, 16).unwrap() - 1.0).abs() < 1e-6,
            "t={t}"
        );
    }
}

#[test]
fn closed_form_agrees_for_quadratic_polynomials() {
    let ch = ThermalChannel::new(1.0, 2.0).unwrap();
    let one = PolyGaussianState::gaussian(GaussianEnvelope::vacuum(2));
    assert_eq!(
        evolved_polynomial_check(&one, &ch, 1.0)
            .unwrap()
            .max_deviation,
        0.0
    );
    let x2 = PolyGaussianState::new(
        GaussianEnvelope::thermal(1, 0.5).unwrap(),
        MultiPoly::from_terms(2, [(vec![2, 0], Complex64::new(1.0, 0.0))]).unwrap(),
    )
    .unwrap();
    assert!(
        evolved_polynomial_check(&x2, &ch, 0.8)
            .unwrap()
            .max_deviation
            < 1e-9
    );
    let rep = evolved_polynomial_check(&fig_state(), &ch, 1.0).unwrap();
    assert!(rep.max_deviation < 1e-9, "{:e}", rep.max_deviation);
    let cubic = PolyGaussianState::new(
        GaussianEnvelope::vacuum(1),
        MultiPoly::from_terms(
            2,
            [
                (vec![3, 0], Complex64::new(1.0, 0.0)),
                (vec![0, 0], Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap(),
    )
    .unwrap();
    assert!(evolved_polynomial_check(&cubic, &ch, 1.0).is_err());
}

#[test]
fn long_time_limit_is_thermal_and_separable() {
    let ch = ThermalChannel::new(1.0, 2.0).unwrap();
    let s = green_propagate(&fig_state(), &ch, 20.0).unwrap();
    assert!((s.envelope().cov() - RMat::identity(4, 4) * 2.5).amax() < 1e-6);
    assert!((s.poly().coeff(&[0, 0, 0, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-6);
    let cs = CoefficientScheme::biseparable(2).unwrap();
    let t = maximize_tau(
        HierarchyTarget::PolyGaussian(&s),
        &cs,
        &OptimizerConfig::default(),
    )
    .unwrap();
    assert!(t.best_value <= 1e-9, "{}", t.best_value);
}
