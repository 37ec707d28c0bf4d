#![allow(dead_code)]

use kpartite::linalg::{RMat, RVec};
use kpartite::poly::{MultiPoly, PolyGaussianState};
use kpartite::probes::{ProbeSet, SingleModeProbe};
use kpartite::symplectic::{j_form, GaussianEnvelope};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Random symplectic matrix `exp(J H)` with `H` symmetric of the given scale.
pub fn random_symplectic(n: usize, scale: f64, r: &mut ChaCha8Rng) -> RMat {
    let d = 2 * n;
    let a = RMat::from_fn(d, d, |_, _| normal(r) * scale);
    let h = (&a + a.transpose()) * 0.5;
    (j_form(n) * h).exp()
}

/// Random physical covariance `½ S Sᵀ + T` with `T` positive semidefinite.
pub fn random_covariance(n: usize, scale: f64, noise: f64, r: &mut ChaCha8Rng) -> RMat {
    let s = random_symplectic(n, scale, r);
    let d = 2 * n;
    let b = RMat::from_fn(d, d, |_, _| normal(r) * noise);
    &s * s.transpose() * 0.5 + &b * b.transpose()
}

pub fn random_envelope(n: usize, r: &mut ChaCha8Rng, with_mean: bool) -> GaussianEnvelope {
    let v = random_covariance(n, 0.4, 0.3, r);
    let mean = if with_mean {
        RVec::from_fn(2 * n, |_, _| normal(r) * 0.5)
    } else {
        RVec::zeros(2 * n)
    };
    GaussianEnvelope::new(v, mean).unwrap()
}

pub fn random_probe(r: &mut ChaCha8Rng, s_scale: f64, x_scale: f64) -> SingleModeProbe {
    let s = r.random_range(-s_scale..=s_scale);
    let th = r.random_range(0.0..std::f64::consts::PI);
    SingleModeProbe::squeezed(
        s,
        th,
        Vector2::new(normal(r) * x_scale, normal(r) * x_scale),
    )
}

pub fn random_probe_set(n: usize, r: &mut ChaCha8Rng, s_scale: f64, x_scale: f64) -> ProbeSet {
    ProbeSet::new(
        (0..2 * n)
            .map(|_| random_probe(r, s_scale, x_scale))
            .collect(),
    )
    .unwrap()
}

/// Random real polynomial of total degree ≤ `deg` in `nvars` variables.
pub fn random_poly(nvars: usize, deg: u32, r: &mut ChaCha8Rng) -> MultiPoly {
    let mut terms = Vec::new();
    let mut e = vec![0u32; nvars];
    loop {
        if e.iter().sum::<u32>() <= deg {
            let c = if e.iter().all(|x| *x == 0) {
                1.0
            } else {
                normal(r) * 0.3
            };
            terms.push((e.clone(), Complex64::new(c, 0.0)));
        }
        let mut i = 0;
        loop {
            if i == nvars {
                return MultiPoly::from_terms(nvars, terms).unwrap();
            }
            e[i] += 1;
            if e[i] <= deg {
                break;
            }
            e[i] = 0;
            i += 1;
        }
    }
}

pub fn random_poly_state(
    n: usize,
    deg: u32,
    r: &mut ChaCha8Rng,
    with_mean: bool,
) -> PolyGaussianState {
    let env = random_envelope(n, r, with_mean);
    PolyGaussianState::new(env, random_poly(2 * n, deg, r)).unwrap()
}

/// Pure single-mode covariance `½ R diag(e^{-2s}, e^{2s}) Rᵀ` as a 2×2 block.
pub fn single_mode_block(s: f64, th: f64) -> Matrix2<f64> {
    kpartite::probes::squeezed_block(s, th)
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
