mod common;

use common::*;
use kpartite::catalog::{ghz_state, GhzParams};
use kpartite::hierarchy::*;
use kpartite::linalg::{block_diag, RMat, RVec};
use kpartite::optimizer::{maximize_tau, HierarchyTarget, OptimizerConfig};
use kpartite::poly::PolyGaussianState;
use kpartite::probes::{squeezed_block, ProbeSet};
use kpartite::symplectic::GaussianEnvelope;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_sigma(n: usize, r: &mut rand_chacha::ChaCha8Rng) -> RMat {
    let blocks: Vec<RMat> = (0..n)
        .map(|_| {
            let b = squeezed_block(r.random_range(-1.5..1.5), r.random_range(0.0..3.1));
            DMatrix::from_fn(2, 2, |i, j| b[(i, j)])
        })
        .collect();
    block_diag(&blocks)
}

#[test]
fn coefficient_schemes() {
    let g = CoefficientScheme::genuine(4).unwrap();
    assert!(g.coefficients().iter().all(|a| *a == 1.0));
    assert_eq!(g.coefficients().len(), 7);
    let b = CoefficientScheme::biseparable(4).unwrap();
    assert!(b
        .coefficients()
        .iter()
        .all(|a| (a - 1.0 / 7.0).abs() < 1e-15));
    assert!((b.total() - 1.0).abs() < 1e-14);
    // A 2-producible state of four modes may have only two blocks.
    assert_eq!(
        CoefficientScheme::for_level(4, 3).unwrap().coefficients(),
        g.coefficients()
    );
    let mid = CoefficientScheme::for_level(5, 3).unwrap();
    assert!(mid
        .coefficients()
        .iter()
        .all(|a| (a - 1.0 / 3.0).abs() < 1e-15));
    assert!(CoefficientScheme::genuine(1).is_err());
    assert!(CoefficientScheme::custom(3, 2, vec![0.5, 0.5]).is_err());
    assert_eq!(
        CoefficientScheme::for_level(3, 3).unwrap().kind(),
        SchemeKind::Genuine
    );
}

#[test]
fn zero_displacement_biseparable_is_zero() {
    let env = GaussianEnvelope::centered(
        kpartite::symplectic::TwoModeStandardForm::tmsv(0.7).covariance(),
    )
    .unwrap();
    let cs = CoefficientScheme::biseparable(2).unwrap();
    let sigma = RMat::identity(4, 4) * 0.5;
    let t = tau_symmetric(&env, &RVec::zeros(4), &sigma, &cs).unwrap();
    assert!(t.abs() < 1e-15);
}

#[test]
fn vacuum_probes_on_product_vacuum() {
    let env = GaussianEnvelope::vacuum(2);
    let cs = CoefficientScheme::biseparable(2).unwrap();
    let res = tau_gaussian(&env, &ProbeSet::vacuum(2), &cs).unwrap();
    assert!(res.value.abs() < 1e-14);
    assert_eq!(res.per_bipartition.len(), 1);
}

#[test]
fn invalid_probe_covariance_is_rejected() {
    let bad = RMat::identity(2, 2) * 0.3;
    assert!(check_probe_covariance(&bad).is_err());
    let env = GaussianEnvelope::vacuum(1 + 1);
    let cs = CoefficientScheme::biseparable(2).unwrap();
    assert!(tau_symmetric(&env, &RVec::zeros(4), &(RMat::identity(4, 4) * 0.3), &cs).is_err());
}

#[test]
fn mixing_never_increases_maximized_tau() {
    // Convexity bounds the mixture by an average over displaced probe sets, so
    // the statement holds for the maximum over probes, not for fixed probes.
    let cs = CoefficientScheme::genuine(3).unwrap();
    let config = OptimizerConfig::default();
    let mut prev = f64::INFINITY;
    for i in 0..6 {
        let env = ghz_state(GhzParams::new(0.6, 0.05 * i as f64).unwrap()).unwrap();
        let t = maximize_tau(HierarchyTarget::Gaussian(&env), &cs, &config)
            .unwrap()
            .best_value;
        assert!(
            t <= prev + 1e-6 * prev.abs().max(1e-3),
            "g step {i}: {t} > {prev}"
        );
        prev = t;
    }
}

#[test]
fn scheme_total_orders_tau_when_terms_are_equal() {
    let env = ghz_state(GhzParams::new(0.5, 0.0).unwrap()).unwrap();
    let mut r = rng(4);
    let sigma = random_sigma(3, &mut r);
    let x = RVec::zeros(6);
    let values: Vec<f64> = [3, 2]
        .iter()
        .map(|&k| {
            tau_symmetric(
                &env,
                &x,
                &sigma,
                &CoefficientScheme::for_level(3, k).unwrap(),
            )
            .unwrap()
        })
        .collect();
    assert!(values[0] < values[1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn general_with_unit_polynomial_matches_gaussian(seed in 0u64..100_000, n in 2usize..4) {
        let mut r = rng(seed);
        let env = random_envelope(n, &mut r, true);
        let ps = random_probe_set(n, &mut r, 1.2, 1.0);
        let cs = CoefficientScheme::biseparable(n).unwrap();
        let a = tau_general(&PolyGaussianState::gaussian(env.clone()), &ps, &cs).unwrap();
        let b = tau_gaussian(&env, &ps, &cs).unwrap();
        let scale = a.first_term.abs().max(1e-300);
        prop_assert!((a.value - b.value).abs() <= 1e-12 * scale.max(b.value.abs()));
    }

    #[test]
    fn symmetric_form_matches_general(seed in 0u64..100_000, n in 2usize..4, genuine in any::<bool>()) {
        let mut r = rng(seed);
        let env = random_envelope(n, &mut r, true);
        let sigma = random_sigma(n, &mut r);
        let x = RVec::from_fn(2 * n, |_, _| r.random_range(-1.0..1.0));
        let cs = if genuine { CoefficientScheme::genuine(n) } else { CoefficientScheme::biseparable(n) }.unwrap();
        let ps = symmetric_probe_set(&env, &x, &sigma).unwrap();
        let full = tau_gaussian(&env, &ps, &cs).unwrap().value;
        let sym = tau_symmetric(&env, &x, &sigma, &cs).unwrap();
        prop_assert!((full - sym).abs() < 1e-10 * full.abs().max(1e-3), "{} vs {}", full, sym);
    }

    #[test]
    fn displacing_state_and_probes_together_is_invariant(seed in 0u64..100_000) {
        let mut r = rng(seed);
        let state = random_poly_state(2, 2, &mut r, false);
        let ps = random_probe_set(2, &mut r, 1.0, 1.0);
        let cs = CoefficientScheme::biseparable(2).unwrap();
        let shift = RVec::from_fn(4, |_, _| r.random_range(-1.0..1.0));
        let env2 = state.envelope().with_mean(shift.clone()).unwrap();
        let poly2 = state.poly().affine_substitute_real(&RMat::identity(4, 4), &(-&shift)).unwrap();
        let moved = PolyGaussianState::new(env2, poly2).unwrap();
        // Non-positive diagonal elements are rejected; the verdict must match too.
        match (tau_general(&state, &ps, &cs), tau_general(&moved, &ps.displaced(&shift).unwrap(), &cs)) {
            (Ok(a), Ok(b)) => prop_assert!((a.value - b.value).abs() < 1e-9 * a.value.abs().max(1e-3)),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "verdicts differ: {:?} vs {:?}", a.map(|r| r.value), b.map(|r| r.value)),
        }
    }

    #[test]
    fn product_states_are_never_flagged(seed in 0u64..100_000, n in 2usize..4) {
        let mut r = rng(seed);
        let blocks: Vec<RMat> = (0..n).map(|_| {
            let b = squeezed_block(r.random_range(-1.0..1.0), r.random_range(0.0..3.1)) * r.random_range(1.0..2.0);
            DMatrix::from_fn(2, 2, |i, j| b[(i, j)])
        }).collect();
        let mean = RVec::from_fn(2 * n, |_, _| r.random_range(-1.0..1.0));
        let env = GaussianEnvelope::physical(block_diag(&blocks), mean).unwrap();
        let ps = random_probe_set(n, &mut r, 1.5, 1.5);
        let t = tau_gaussian(&env, &ps, &CoefficientScheme::biseparable(n).unwrap()).unwrap().value;
        prop_assert!(t <= 1e-10, "{}", t);
    }
}

#[test]
fn extreme_probes_stay_finite_and_agree() {
    use kpartite::optimizer::ProbeParameterization;
    let env = GaussianEnvelope::thermal(2, 2.5).unwrap();
    let state = PolyGaussianState::gaussian(env.clone());
    let cs = CoefficientScheme::biseparable(2).unwrap();
    for (s, x) in [(5.9, 1000.0), (-5.9, 300.0), (4.5, -200.0)] {
        let x = RVec::from_vec(vec![x, 0.3 * x, -0.7 * x, 0.2 * x]);
        let p = ProbeParameterization::symmetric(vec![s, -0.8 * s], vec![1.1, 2.3], x.clone(), 6.0)
            .unwrap();
        let ps = p.probe_set(env.mean()).unwrap();
        let general = tau_general(&state, &ps, &cs).unwrap().value;
        let closed = tau_symmetric(&env, &x, &p.sigma(), &cs).unwrap();
        assert!(
            general.abs() <= 1e-10 && (general - closed).abs() < 1e-12,
            "{general:e} vs {closed:e}"
        );
    }
}
