mod common;

use common::*;
use kpartite::catalog::{ghz_state, GhzParams};
use kpartite::linalg::{block_diag, RMat};
use kpartite::ppt::*;
use kpartite::probes::{enumerate_bipartitions, Bipartition};
use kpartite::symplectic::*;
use nalgebra::Schur;
use proptest::prelude::*;

fn cut() -> Bipartition {
    Bipartition::from_group(2, &[1]).unwrap()
}

/// `γ_A ⊕ γ_B + BBᵀ`: a classical mixture of displaced product states.
fn random_separable(seed: u64) -> RMat {
    let mut r = rng(seed);
    let a = random_covariance(1, 0.5, 0.0, &mut r);
    let b = random_covariance(1, 0.5, 0.0, &mut r);
    let noise = RMat::from_fn(4, 4, |i, j| {
        0.2 * (((seed as usize + 3 * i + 7 * j) % 11) as f64 / 11.0 - 0.5)
    });
    block_diag(&[a, b]) + &noise * noise.transpose()
}

#[test]
fn half_identity_gives_unit_spectrum() {
    let v = RMat::identity(4, 4) * 0.5;
    let z = z_matrix(&v, &v, &cut()).unwrap();
    assert!((z - RMat::identity(4, 4)).amax() < 1e-14);
}

#[test]
fn tmsv_spectrum_in_momentum_limit() {
    let sf = TwoModeStandardForm::new(1f64.cosh(), 1f64.cosh(), 1f64.sinh(), -1f64.sinh());
    let rep = z_report(&sf.covariance(), &cut(), 1e-6).unwrap();
    let want = [(-2f64).exp(), 1.0, 1.0, 2f64.exp()];
    for (got, w) in rep.eigenvalues.iter().zip(want) {
        assert!((got - w).abs() < 1e-4 * w.max(1.0), "{:?}", rep.eigenvalues);
    }
    assert!(!rep.inequality_holds);
}

#[test]
fn vacuum_limit_matrix_is_identity() {
    let sf = StandardForm::TwoMode(TwoModeStandardForm::new(1.0, 1.0, 0.0, 0.0));
    for dir in [LimitDirection::Momentum, LimitDirection::Position] {
        assert_eq!(
            z_limit_matrix(&sf, dir, &cut()).unwrap(),
            RMat::identity(4, 4)
        );
    }
}

#[test]
fn two_mode_limits_have_double_unit_eigenvalue() {
    let sf = StandardForm::TwoMode(TwoModeStandardForm::new(2.0, 1.5, 0.8, -0.6));
    for (dir, rows) in [
        (LimitDirection::Momentum, [0, 2]),
        (LimitDirection::Position, [1, 3]),
    ] {
        let z = z_limit_matrix(&sf, dir, &cut()).unwrap() - RMat::identity(4, 4);
        // Two zero rows: rank ≤ 2, so λ = 1 has multiplicity at least two.
        for r in rows {
            assert!(z.row(r).iter().all(|x| *x == 0.0));
        }
    }
}

#[test]
fn tmsv_limit_roots() {
    for rp in [0.2, 0.5, 1.0] {
        let sf = TwoModeStandardForm::tmsv(rp);
        let z =
            z_limit_matrix(&StandardForm::TwoMode(sf), LimitDirection::Momentum, &cut()).unwrap();
        // Nontrivial block on the momentum rows.
        let blk = RMat::from_fn(2, 2, |i, j| z[(2 * i + 1, 2 * j + 1)]);
        let (tr, det) = (blk.trace(), blk.determinant());
        let disc = (tr * tr - 4.0 * det).sqrt();
        let roots = [(tr - disc) / 2.0, (tr + disc) / 2.0];
        assert!((roots[0] - (-4.0 * rp).exp()).abs() < 1e-10, "{roots:?}");
        assert!((roots[1] - (4.0 * rp).exp()).abs() < 1e-9);
    }
}

#[test]
fn resemblance_for_tmsv_family() {
    for rp in [0.2, 0.5, 1.0] {
        let rep =
            verify_ppt_resemblance(&StandardForm::TwoMode(TwoModeStandardForm::tmsv(rp)), 1e-3)
                .unwrap();
        assert!(rep.passed);
    }
}

#[test]
fn resemblance_for_pure_ghz_all_cuts() {
    for r in [0.2, 0.5, 1.0] {
        let env = ghz_state(GhzParams::new(r, 0.0).unwrap()).unwrap();
        let sf = ThreeModePureStandardForm::from_covariance(env.cov(), 1e-8).unwrap();
        let rep = verify_ppt_resemblance(&StandardForm::ThreeModePure(sf), 1e-3).unwrap();
        assert_eq!(rep.checks.len(), 6);
        assert!(rep.passed, "r={r}: {:e}", rep.max_deviation());
    }
}

#[test]
fn mismatched_bipartition_is_rejected() {
    let sf = StandardForm::TwoMode(TwoModeStandardForm::tmsv(0.3));
    let b3 = enumerate_bipartitions(3).unwrap()[0].clone();
    assert!(z_limit_matrix(&sf, LimitDirection::Momentum, &b3).is_err());
    assert!(z_matrix(&RMat::identity(4, 4), &RMat::identity(6, 6), &cut()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spectrum_is_real_and_positive(seed in 0u64..100_000, r in -3.0f64..3.0) {
        let mut rg = rng(seed);
        let v = random_covariance(2, 0.4, 0.3, &mut rg);
        let sigma = squeezed_probe_covariance(2, 10f64.powf(r)).unwrap();
        let z = z_matrix(&v, &sigma, &cut()).unwrap();
        let eig = Schur::try_new(z.clone(), 1e-15, 100_000).unwrap().complex_eigenvalues();
        let radius = eig.iter().map(|e| e.norm()).fold(0.0, f64::max);
        prop_assert!(eig.iter().all(|e| e.im.abs() < 1e-8 * radius && e.re > 0.0));
        let sym = z_spectrum(&v, &sigma, &cut()).unwrap();
        let mut re: Vec<f64> = eig.iter().map(|e| e.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip(&sym) {
            prop_assert!((a - b).abs() < 1e-7 * radius);
        }
    }

    #[test]
    fn verdict_agrees_with_ppt(seed in 0u64..100_000) {
        let mut rg = rng(seed);
        let v = random_covariance(2, 0.5, 0.25, &mut rg);
        let z = z_report(&v, &cut(), LIMIT_R).unwrap();
        let ppt = ppt_separable(&v, &[1]).unwrap();
        prop_assert_eq!(z.inequality_holds, ppt.separable);
    }

    #[test]
    fn separable_states_satisfy_inequality(seed in 0u64..100_000) {
        let v = random_separable(seed);
        prop_assert!(ppt_separable(&v, &[1]).unwrap().separable);
        let z = z_report(&v, &cut(), LIMIT_R).unwrap();
        prop_assert!(z.min_eig >= 1.0 - 1e-6, "{}", z.min_eig);
    }
}
