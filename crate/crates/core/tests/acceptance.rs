//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if a criterion fails that is not listed in `EXPECTED_FAILURES`.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use kpartite::catalog::*;
use kpartite::hierarchy::*;
use kpartite::linalg::{RMat, RVec};
use kpartite::measurement::*;
use kpartite::optimizer::{maximize_tau, HierarchyTarget, OptimizerConfig, ProbeParameterization};
use kpartite::poly::PolyGaussianState;
use kpartite::ppt::*;
use kpartite::probes::{
    composite_offdiag_moments, enumerate_bipartitions, permuted_moments, Bipartition,
};
use kpartite::quadrature::quadrature_matrix_element_with;
use kpartite::scan::*;
use kpartite::symplectic::*;
use rand::Rng;

/// Criteria that fail for a documented reason (see the README).
const EXPECTED_FAILURES: &[u32] = &[7];

const DETECT: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "oracle equivalence", c1_oracle),
        (2, "Gaussian consistency", c2_gaussian),
        (3, "PPT resemblance, two-mode", c3_two_mode),
        (4, "PPT resemblance, pure three-mode", c4_three_mode),
        (5, "GHZ (g, r) grid", c5_ghz_grid),
        (6, "CPS-TSVS at r = 0", c6_cps),
        (7, "thermal evolution of CPS-TSVS", c7_evolution),
        (8, "separability soundness", c8_soundness),
        (9, "measurement identity and Monte Carlo", c9_measurement),
        (10, "evolution algebra", c10_evolution_algebra),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = match (o.passed, EXPECTED_FAILURES.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{tag} [{id:>2}] {name}: {} ({secs:.1} s)", o.detail);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn c1_oracle() -> Outcome {
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    let mut elements = 0;
    for case in 0..100 {
        let n = 1 + case % 2;
        let deg = [0, 2, 4][case % 3] as u32;
        let state = random_poly_state(n, deg, &mut r, case % 4 >= 2);
        let ps = random_probe_set(n, &mut r, 0.5, 0.7);
        let mut symbols = vec![composite_offdiag_moments(&ps)];
        if n > 1 {
            for b in enumerate_bipartitions(n).unwrap() {
                let (w1, w2) = permuted_moments(&ps, &b).unwrap();
                symbols.push(w1);
                symbols.push(w2);
            }
        }
        for w in &symbols {
            let exact = matrix_element(&state, w).unwrap();
            let quad = quadrature_matrix_element_with(&state, w, 24).unwrap();
            worst = worst.max(rel_err(exact, quad));
            elements += 1;
        }
    }
    outcome(
        worst < 1e-6,
        format!("{elements} elements over 100 pairs, max rel err {worst:.1e} (tol 1e-6)"),
    )
}

fn c2_gaussian() -> Outcome {
    let mut r = rng(202);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 2 + case % 2;
        let env = random_envelope(n, &mut r, true);
        let cs = CoefficientScheme::for_level(n, 2 + case % (n - 1)).unwrap();
        let p = random_symmetric_probe(n, &mut r);
        let ProbeParameterization::Symmetric { x, .. } = &p else {
            unreachable!()
        };
        let sigma = p.sigma();
        let ps = symmetric_probe_set(&env, x, &sigma).unwrap();
        let general = tau_general(&PolyGaussianState::gaussian(env.clone()), &ps, &cs)
            .unwrap()
            .value;
        let gaussian = tau_gaussian(&env, &ps, &cs).unwrap().value;
        let symmetric = tau_symmetric(&env, x, &sigma, &cs).unwrap();
        let scale = symmetric.abs().max(1.0);
        worst = worst
            .max((general - gaussian).abs() / scale)
            .max((gaussian - symmetric).abs() / scale);
    }
    outcome(
        worst < 1e-10,
        format!("100 draws, max deviation {worst:.1e} (tol 1e-10)"),
    )
}

fn random_symmetric_probe(n: usize, r: &mut rand_chacha::ChaCha8Rng) -> ProbeParameterization {
    ProbeParameterization::symmetric(
        (0..n).map(|_| r.random_range(-1.5..1.5)).collect(),
        (0..n).map(|_| r.random_range(0.0..PI)).collect(),
        RVec::from_fn(2 * n, |_, _| r.random_range(-1.0..1.0)),
        6.0,
    )
    .unwrap()
}

fn c3_two_mode() -> Outcome {
    let mut r = rng(303);
    let cut = Bipartition::from_group(2, &[0]).unwrap();
    let (mut agree, mut entangled, mut worst) = (0, 0, 0.0f64);
    let mut count = 0;
    while count < 500 {
        let a: f64 = r.random_range(1.0..3.0);
        let b = r.random_range(1.0..3.0);
        let cmax = (a * b - 1.0).max(0.0).sqrt();
        let sf = TwoModeStandardForm::new(
            a,
            b,
            r.random_range(-cmax..=cmax),
            r.random_range(-cmax..=cmax),
        );
        let v = sf.covariance();
        if symplectic_eigenvalues(&v).map_or(true, |nu| nu.iter().any(|x| *x < 0.5 + 1e-9)) {
            continue;
        }
        count += 1;
        let z = z_report(&v, &cut, LIMIT_R).unwrap();
        let ppt = ppt_separable(&v, &[0]).unwrap();
        agree += usize::from(z.inequality_holds == ppt.separable);
        entangled += usize::from(!ppt.separable);
        let rep = ppt_resemblance_report(&StandardForm::TwoMode(sf), 1e-3).unwrap();
        for c in rep
            .checks
            .iter()
            .filter(|c| c.direction == LimitDirection::Momentum)
        {
            worst = worst.max(c.eigen_deviation);
        }
    }
    outcome(
        agree == 500 && worst <= 1e-4,
        format!("verdicts agree {agree}/500 ({entangled} PPT-entangled), max eigenvalue deviation {worst:.1e} (tol 1e-4)"),
    )
}

fn c4_three_mode() -> Outcome {
    let mut passed = true;
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for r in [0.2, 0.5, 1.0] {
        let env = ghz_state(GhzParams::new(r, 0.0).unwrap()).unwrap();
        let sf = ThreeModePureStandardForm::from_covariance(env.cov(), 1e-9).unwrap();
        let rep = ppt_resemblance_report(&StandardForm::ThreeModePure(sf), 1e-3).unwrap();
        passed &= rep.passed;
        checks += rep.checks.len();
        worst = worst.max(rep.max_deviation());
    }
    outcome(passed, format!("{checks} checks over 3 bipartitions x 2 limits x 3 r, max deviation {worst:.1e} (tol 1e-3)"))
}

fn c5_ghz_grid() -> Outcome {
    let grid = GhzGrid {
        r: (1..=30).map(|i| 0.04 * i as f64).collect(),
        g: (0..30).map(|i| 0.02 * i as f64).collect(),
    };
    let rows = scan_ghz(&grid, &OptimizerConfig::default()).unwrap();
    let t3 = rows.iter().filter(|x| x.tau3 > DETECT).count();
    let contained_3_in_2 = rows.iter().all(|x| x.tau3 <= DETECT || x.tau2 > DETECT);
    let contained_2_in_ppt = rows.iter().all(|x| x.tau2 <= DETECT || !x.ppt_separable);
    let thresholds: Vec<f64> = grid
        .r
        .iter()
        .map(|&r| {
            rows.iter()
                .filter(|x| x.r == r && x.tau3 > DETECT)
                .map(|x| x.g)
                .fold(-1.0, f64::max)
        })
        .collect();
    let monotone = thresholds.windows(2).all(|w| w[1] >= w[0]);
    let at_zero = rows
        .iter()
        .filter(|x| x.g == 0.0)
        .all(|x| x.tau3 > DETECT && x.tau2 > DETECT && !x.ppt_separable);
    outcome(
        t3 > 0 && contained_3_in_2 && contained_2_in_ppt && monotone && at_zero,
        format!(
            "(a) {t3}/900 tau3-detected, tau3 in tau2: {contained_3_in_2}, tau2 in PPT: {contained_2_in_ppt}; \
             (b) tau3 threshold non-decreasing: {monotone} (g* from {:.2} to {:.2}); (c) g = 0 all detect: {at_zero}",
            thresholds[0],
            thresholds[29]
        ),
    )
}

fn c6_cps() -> Outcome {
    let alphas: Vec<f64> = (1..=9).map(|i| 0.1 * i as f64).collect();
    let rows = scan_cps(0.0, &alphas, &OptimizerConfig::default()).unwrap();
    let min_tau = rows.iter().map(|x| x.tau).fold(f64::INFINITY, f64::min);
    let separable = rows.iter().all(|x| x.ppt_separable);
    let half = alphas.iter().all(|&a| {
        let s = cps_tsvs_state(CpsTsvsParams::scan_point(0.0, a).unwrap()).unwrap();
        (s.envelope().cov() - RMat::identity(4, 4) * 0.5).amax() < 1e-15
    });
    outcome(
        min_tau > DETECT && separable && half,
        format!("min tau22 = {min_tau:.4} over |alpha| in 0.1..0.9; covariance V = I/2: {half}, PPT separable: {separable}"),
    )
}

fn c7_evolution() -> Outcome {
    let s0 = cps_tsvs_state(CpsTsvsParams::scan_point(0.0, 0.5).unwrap()).unwrap();
    let times = arange(0.0, 3.0, 0.05);
    let config = OptimizerConfig::default();
    let curve = |nth: f64| {
        let ch = ThermalChannel::new(1.0, nth).unwrap();
        evolution_curve(&s0, &ch, &times, &config)
            .unwrap()
            .into_iter()
            .map(|r| r.tau)
            .collect::<Vec<_>>()
    };
    let (c2, c4) = (curve(2.0), curve(4.0));
    let strict = |c: &[f64]| c.windows(2).all(|w| w[1] < w[0]);
    let death = |c: &[f64]| times[c.iter().position(|t| *t <= DETECT).unwrap_or(c.len() - 1)];
    let while_detected = |c: &[f64]| c.windows(2).all(|w| w[0] <= DETECT || w[1] < w[0]);
    let below = c4
        .iter()
        .zip(&c2)
        .skip(1)
        .all(|(a, b)| *a < *b || (*a <= DETECT && *b <= DETECT));
    let late = [2.0, 4.0]
        .iter()
        .map(|&nth| {
            let ch = ThermalChannel::new(1.0, nth).unwrap();
            let s = green_propagate(&s0, &ch, 20.0).unwrap();
            let cs = CoefficientScheme::biseparable(2).unwrap();
            maximize_tau(HierarchyTarget::PolyGaussian(&s), &cs, &config)
                .unwrap()
                .best_value
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let (s2, s4) = (strict(&c2), strict(&c4));
    outcome(
        s2 && s4 && below && late <= 1e-9,
        format!(
            "strictly decreasing on the whole grid: N2 {s2}, N4 {s4}; decreasing while detected: N2 {}, N4 {}; \
             tau reaches 0 at gt = {:.2} (N2) and {:.2} (N4); N4 below N2: {below}; max tau(20/g) = {late:.1e} (tol 1e-9)",
            while_detected(&c2),
            while_detected(&c4),
            death(&c2),
            death(&c4)
        ),
    )
}

fn c8_soundness() -> Outcome {
    let mut r = rng(808);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..200 {
        let n = 2 + case % 2;
        let blocks: Vec<RMat> = (0..n)
            .map(|_| random_covariance(1, 0.6, 0.0, &mut r))
            .collect();
        let mut v = kpartite::linalg::block_diag(&blocks);
        let noise = RMat::from_fn(2 * n, 2 * n, |_, _| r.random_range(-0.3..0.3));
        v += &noise * noise.transpose();
        let mean = RVec::from_fn(2 * n, |_, _| r.random_range(-1.0..1.0));
        let env = GaussianEnvelope::physical(v, mean).unwrap();
        let cs = CoefficientScheme::biseparable(n).unwrap();
        for _ in 0..50 {
            let ps = random_probe_set(n, &mut r, 1.0, 1.5);
            worst = worst.max(tau_gaussian(&env, &ps, &cs).unwrap().value);
        }
    }
    outcome(
        worst <= 1e-10,
        format!("10000 evaluations, max tau = {worst:.1e} (tol 1e-10)"),
    )
}

fn c9_measurement() -> Outcome {
    let mut r = rng(909);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 2 + case % 2;
        let env = random_envelope(n, &mut r, true);
        let cs = if case % 4 < 2 {
            CoefficientScheme::genuine(n)
        } else {
            CoefficientScheme::biseparable(n)
        }
        .unwrap();
        let p = random_symmetric_probe(n, &mut r);
        let ProbeParameterization::Symmetric { x, .. } = &p else {
            unreachable!()
        };
        let a = tau_from_statistics(&env, &p.sigma(), x, &cs).unwrap();
        let b = tau_symmetric(&env, x, &p.sigma(), &cs).unwrap();
        worst = worst.max((a - b).abs() / b.abs().max(1.0));
    }

    let env = GaussianEnvelope::centered(TwoModeStandardForm::tmsv(0.5).covariance()).unwrap();
    let cs = CoefficientScheme::biseparable(2).unwrap();
    let best = maximize_tau(
        HierarchyTarget::Gaussian(&env),
        &cs,
        &OptimizerConfig::default(),
    )
    .unwrap();
    let ProbeParameterization::Symmetric { x, .. } = &best.best_params else {
        unreachable!()
    };
    let sigma = best.best_params.sigma();
    let exact = tau_symmetric(&env, x, &sigma, &cs).unwrap();
    let m = GaussianMeasurement::new(sigma.clone()).unwrap();
    let mut covered = 0;
    for seed in 0..100 {
        let sample = sample_outcomes(&env, &m, 100_000, seed).unwrap();
        let est = estimate_tau_monte_carlo(&sample, &sigma, x, &cs).unwrap();
        covered += usize::from((est.estimate - exact).abs() <= 3.0 * est.stderr);
    }
    outcome(
        worst < 1e-8 && covered >= 95,
        format!("identity max deviation {worst:.1e} over 100 cases (tol 1e-8); MC within 3 stderr in {covered}/100 runs (need 95)"),
    )
}

fn c10_evolution_algebra() -> Outcome {
    let mut r = rng(1010);
    let (mut semigroup, mut closed): (f64, f64) = (0.0, 0.0);
    let mut closed_checks = 0;
    let cps = cps_tsvs_state(CpsTsvsParams::scan_point(0.3, 0.5).unwrap()).unwrap();
    for case in 0..20 {
        let state = if case == 0 {
            cps.clone()
        } else {
            random_poly_state(1 + case % 2, 2, &mut r, case % 3 == 0)
        };
        let ch = ThermalChannel::new(r.random_range(0.2..2.0), r.random_range(0.0..4.0)).unwrap();
        let (t1, t2) = (r.random_range(0.0..1.5), r.random_range(0.0..1.5));
        let two = green_propagate(&green_propagate(&state, &ch, t1).unwrap(), &ch, t2).unwrap();
        let one = green_propagate(&state, &ch, t1 + t2).unwrap();
        semigroup = semigroup
            .max((two.envelope().cov() - one.envelope().cov()).amax())
            .max((two.envelope().mean() - one.envelope().mean()).amax())
            .max(two.poly().max_coeff_diff(one.poly()));
        // The closed form is stated for zero-mean envelopes.
        if state.envelope().mean().iter().all(|x| *x == 0.0) {
            closed = closed.max(
                evolved_polynomial_check(&state, &ch, t1)
                    .unwrap()
                    .max_deviation,
            );
            closed_checks += 1;
        }
    }
    outcome(
        semigroup < 1e-9 && closed < 1e-9,
        format!(
            "20 quadratic states: semigroup deviation {semigroup:.1e}; closed-form deviation {closed:.1e} \
             over {closed_checks} zero-mean states (tol 1e-9)"
        ),
    )
}
