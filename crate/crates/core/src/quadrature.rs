//! Tensor-product Gauss–Hermite quadrature: an independent oracle for the
//! Gaussian integrals that the hierarchy evaluates in closed form.

use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, complex_inverse, spd_inverse, spd_logdet, RMat, RVec};
use crate::poly::PolyGaussianState;
use crate::probes::GaussianWeylSymbol;

pub const DEFAULT_NODES: usize = 40;
/// Largest phase-space dimension the oracle accepts (two modes).
pub const MAX_DIM: usize = 4;

/// One-dimensional rule for the weight `e^{-y²/2}`.
#[derive(Debug, Clone)]
pub struct HermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl HermiteRule {
    pub fn new(nodes: usize) -> Result<Self> {
        let deg = NonZeroUsize::new(nodes)
            .ok_or_else(|| Error::InvalidParameter("quadrature needs at least one node".into()))?;
        let rule = GaussHermite::new(deg);
        let s = std::f64::consts::SQRT_2;
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|(x, w)| (x * s, w * s))
            .unzip();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_{R^dim} e^{-|y|²/2} f(y) dy` on the tensor grid. Parallel over the leading axis.
    pub fn integrate<F>(&self, dim: usize, f: F) -> Complex64
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let m = self.len();
        if dim == 0 {
            return f(&[]);
        }
        let inner = m.pow(dim as u32 - 1);
        (0..m)
            .into_par_iter()
            .map(|i0| {
                let mut y = vec![0.0; dim];
                let mut acc = Complex64::new(0.0, 0.0);
                for rest in 0..inner {
                    let mut w = self.weights[i0];
                    y[0] = self.nodes[i0];
                    let mut r = rest;
                    for slot in y.iter_mut().skip(1) {
                        let k = r % m;
                        r /= m;
                        *slot = self.nodes[k];
                        w *= self.weights[k];
                    }
                    acc += f(&y) * w;
                }
                acc
            })
            .sum()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DIM {
        return Err(Error::OracleInapplicable(format!(
            "tensor quadrature limited to {MAX_DIM} phase-space variables, got {dim}"
        )));
    }
    Ok(())
}

/// `(2π)^n ∫ W_ρ(x) W_u(x) d^{2n}x` by quadrature, with the default node count.
pub fn quadrature_matrix_element(
    state: &PolyGaussianState,
    w: &GaussianWeylSymbol,
) -> Result<Complex64> {
    quadrature_matrix_element_with(state, w, DEFAULT_NODES)
}

/// As [`quadrature_matrix_element`] with an explicit number of nodes per axis.
///
/// The grid is centered and whitened by the real part of the combined Gaussian
/// exponent, so only the polynomial and the oscillating imaginary part remain.
pub fn quadrature_matrix_element_with(
    state: &PolyGaussianState,
    w: &GaussianWeylSymbol,
    nodes: usize,
) -> Result<Complex64> {
    let env = state.envelope();
    let dim = 2 * env.n();
    check_dim(dim)?;
    if w.mean().len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: w.mean().len(),
        });
    }
    let v_inv = spd_inverse(env.cov())?;
    let logdet_v = spd_logdet(env.cov())?;
    let s_inv = complex_inverse(w.sigma())?;
    let s_inv_re = s_inv.map(|z| z.re);
    let a = &v_inv + &s_inv_re;
    let a_inv = spd_inverse(&a).map_err(|_| {
        Error::OracleInapplicable(
            "real part of the combined exponent is not positive definite".into(),
        )
    })?;
    let lin = &v_inv * env.mean() + (&s_inv * w.mean()).map(|z| z.re);
    let center = &a_inv * lin;
    let l = cholesky(&a_inv)?.l();
    let log_jac: f64 = l.diagonal().iter().map(|d| d.ln()).sum();

    // (2π)^n cancels the (2π)^{-n} of the Wigner normalization.
    let log_const = -0.5 * logdet_v + log_jac;
    let xbar = env.mean();
    let wmean = w.mean();
    let lognorm = w.lognorm();
    let poly = state.poly();

    let rule = HermiteRule::new(nodes)?;
    let total = rule.integrate(dim, |y| {
        let yv = RVec::from_column_slice(y);
        let x = &center + &l * &yv;
        let dx = &x - xbar;
        let ln_g = -0.5 * dx.dot(&(&v_inv * &dx));
        let du = x.map(|t| Complex64::new(t, 0.0)) - wmean;
        let ln_w = lognorm - (du.transpose() * &s_inv * &du)[(0, 0)] * 0.5;
        let f = poly.eval_real(x.as_slice()).unwrap_or_default();
        f * (ln_g + ln_w + 0.5 * yv.norm_squared() + log_const).exp()
    });
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::NumericalFailure(
            "quadrature produced a non-finite value".into(),
        ));
    }
    Ok(total)
}

/// `∫ W(x) d^{2n}x` by quadrature on the grid whitened by `V`.
pub fn wigner_normalization(state: &PolyGaussianState, nodes: usize) -> Result<f64> {
    let env = state.envelope();
    let dim = 2 * env.n();
    check_dim(dim)?;
    let l = cholesky(env.cov())?.l();
    let rule = HermiteRule::new(nodes)?;
    let mean = env.mean().clone();
    let poly = state.poly();
    let total = rule.integrate(dim, |y| {
        let x = &mean + &l * RVec::from_column_slice(y);
        poly.eval_real(x.as_slice()).unwrap_or_default()
    });
    Ok(total.re / (2.0 * std::f64::consts::PI).powi(dim as i32 / 2))
}

/// `∫ g(x) N(x; μ, C) dx` for a real integrand against a Gaussian density.
pub fn gaussian_expectation<F>(mean: &RVec, cov: &RMat, nodes: usize, g: F) -> Result<f64>
where
    F: Fn(&RVec) -> f64 + Sync,
{
    let dim = mean.len();
    check_dim(dim)?;
    let l = cholesky(cov)?.l();
    let rule = HermiteRule::new(nodes)?;
    let total = rule.integrate(dim, |y| {
        Complex64::new(g(&(mean + &l * RVec::from_column_slice(y))), 0.0)
    });
    Ok(total.re / (2.0 * std::f64::consts::PI).powf(dim as f64 / 2.0))
}
