//! Gaussian probe vectors, bipartitions and the Weyl-symbol moments built from them.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{block_diag, block_diag_complex, complex_asymmetry, CMat, CVec, RMat, RVec};
use crate::symplectic::j_form;

/// Purity tolerance on `det Σ = 1/4`.
pub const PURITY_TOL: f64 = 1e-9;

fn j1() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// A pure single-mode Gaussian probe `|φ⟩` with mean `(q̄, p̄)` and covariance `Σ`, `det Σ = 1/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeProbe {
    mean: Vector2<f64>,
    sigma: Matrix2<f64>,
}

impl SingleModeProbe {
    pub fn new(mean: Vector2<f64>, sigma: Matrix2<f64>) -> Result<Self> {
        if mean.iter().chain(sigma.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidProbe("non-finite probe parameter".into()));
        }
        let asym = (sigma[(0, 1)] - sigma[(1, 0)]).abs();
        if asym > 1e-12 * sigma.amax().max(1.0) {
            return Err(Error::InvalidProbe(format!(
                "covariance asymmetric by {asym:e}"
            )));
        }
        let sigma = (sigma + sigma.transpose()) * 0.5;
        let det = sigma.determinant();
        // Relative check so that strongly squeezed probes are not rejected by rounding.
        if (det - 0.25).abs() > PURITY_TOL * sigma.norm_squared().max(1.0) {
            return Err(Error::InvalidProbe(format!(
                "det Σ = {det} differs from 1/4"
            )));
        }
        if sigma[(0, 0)] <= 0.0 || sigma[(1, 1)] <= 0.0 {
            return Err(Error::InvalidProbe(
                "covariance is not positive definite".into(),
            ));
        }
        Ok(Self { mean, sigma })
    }

    /// `Σ(s, θ) = ½ R(θ) diag(e^{-2s}, e^{2s}) R(θ)ᵀ`, displaced to `mean`.
    pub fn squeezed(s: f64, theta: f64, mean: Vector2<f64>) -> Self {
        Self {
            mean,
            sigma: squeezed_block(s, theta),
        }
    }

    /// `Σ(r) = diag(1/(4r), r)`, the squeezing-parameter form used for limit analysis.
    pub fn from_squeezing_parameter(r: f64, mean: Vector2<f64>) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidProbe(format!(
                "squeezing parameter {r} must be positive"
            )));
        }
        Ok(Self {
            mean,
            sigma: Matrix2::new(0.25 / r, 0.0, 0.0, r),
        })
    }

    pub fn vacuum() -> Self {
        Self {
            mean: Vector2::zeros(),
            sigma: Matrix2::identity() * 0.5,
        }
    }

    pub fn mean(&self) -> &Vector2<f64> {
        &self.mean
    }

    pub fn sigma(&self) -> &Matrix2<f64> {
        &self.sigma
    }
}

/// `½ R(θ) diag(e^{-2s}, e^{2s}) R(θ)ᵀ`.
pub fn squeezed_block(s: f64, theta: f64) -> Matrix2<f64> {
    let (sn, cs) = theta.sin_cos();
    let r = Matrix2::new(cs, -sn, sn, cs);
    r * Matrix2::new((-2.0 * s).exp(), 0.0, 0.0, (2.0 * s).exp()) * r.transpose() * 0.5
}

fn to_dyn(m: &Matrix2<f64>) -> RMat {
    RMat::from_fn(2, 2, |i, j| m[(i, j)])
}

/// The `2n` probes defining `|Φ1⟩ = ⊗_m |φ_m⟩` and `|Φ2⟩ = ⊗_m |φ_{n+m}⟩`
/// (0-based: probes `0..n` and `n..2n`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    n: usize,
    probes: Vec<SingleModeProbe>,
}

impl ProbeSet {
    pub fn new(probes: Vec<SingleModeProbe>) -> Result<Self> {
        if probes.is_empty() || !probes.len().is_multiple_of(2) {
            return Err(Error::InvalidProbe(format!(
                "a probe set needs 2n probes, got {}",
                probes.len()
            )));
        }
        Ok(Self {
            n: probes.len() / 2,
            probes,
        })
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            n,
            probes: vec![SingleModeProbe::vacuum(); 2 * n],
        }
    }

    /// Probes with `Σ_m = Σ_{n+m}` (block `m` of `sigma`) and means
    /// `X_{Φ1} = center + x`, `X_{Φ2} = center - x`.
    pub fn symmetric(sigma: &RMat, x: &RVec, center: &RVec) -> Result<Self> {
        let n = sigma.nrows() / 2;
        crate::linalg::check_square(sigma, 2 * n)?;
        if x.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: x.len(),
            });
        }
        if center.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: center.len(),
            });
        }
        let mut probes = Vec::with_capacity(2 * n);
        for sign in [1.0, -1.0] {
            for m in 0..n {
                let b = Matrix2::new(
                    sigma[(2 * m, 2 * m)],
                    sigma[(2 * m, 2 * m + 1)],
                    sigma[(2 * m + 1, 2 * m)],
                    sigma[(2 * m + 1, 2 * m + 1)],
                );
                let mean = Vector2::new(
                    center[2 * m] + sign * x[2 * m],
                    center[2 * m + 1] + sign * x[2 * m + 1],
                );
                probes.push(SingleModeProbe::new(mean, b)?);
            }
        }
        Ok(Self { n, probes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probes(&self) -> &[SingleModeProbe] {
        &self.probes
    }

    pub fn probe(&self, i: usize) -> &SingleModeProbe {
        &self.probes[i]
    }

    fn stacked_mean(&self, idx: impl Iterator<Item = usize>) -> RVec {
        let mut out = RVec::zeros(2 * self.n);
        for (m, i) in idx.enumerate() {
            out[2 * m] = self.probes[i].mean[0];
            out[2 * m + 1] = self.probes[i].mean[1];
        }
        out
    }

    fn stacked_sigma(&self, idx: impl Iterator<Item = usize>) -> RMat {
        block_diag(
            &idx.map(|i| to_dyn(&self.probes[i].sigma))
                .collect::<Vec<_>>(),
        )
    }

    pub fn phi1_mean(&self) -> RVec {
        self.stacked_mean(0..self.n)
    }

    pub fn phi2_mean(&self) -> RVec {
        self.stacked_mean(self.n..2 * self.n)
    }

    pub fn phi1_sigma(&self) -> RMat {
        self.stacked_sigma(0..self.n)
    }

    pub fn phi2_sigma(&self) -> RMat {
        self.stacked_sigma(self.n..2 * self.n)
    }

    /// Shifts every probe mean by `delta` (a `2n` vector applied to both `Φ1` and `Φ2`).
    pub fn displaced(&self, delta: &RVec) -> Result<Self> {
        if delta.len() != 2 * self.n {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.n,
                got: delta.len(),
            });
        }
        let mut probes = self.probes.clone();
        for (i, p) in probes.iter_mut().enumerate() {
            let m = i % self.n;
            p.mean += Vector2::new(delta[2 * m], delta[2 * m + 1]);
        }
        Ok(Self { n: self.n, probes })
    }
}

/// A bipartition of `n` modes: binary vector `v` with `v[0] = 0` and 1-based index `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    index: usize,
    v: Vec<u8>,
}

impl Bipartition {
    /// Builds the bipartition from its canonical vector; the index follows
    /// [`enumerate_bipartitions`] order.
    pub fn from_vector(v: Vec<u8>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::InvalidBipartition("needs at least two modes".into()));
        }
        if v.iter().any(|&b| b > 1) {
            return Err(Error::InvalidBipartition("entries must be 0 or 1".into()));
        }
        // Canonical gauge: first mode on side 0.
        let v: Vec<u8> = if v[0] == 1 {
            v.iter().map(|b| 1 - b).collect()
        } else {
            v
        };
        if v.iter().all(|&b| b == 0) {
            return Err(Error::InvalidBipartition("all modes on one side".into()));
        }
        let index = v
            .iter()
            .skip(1)
            .fold(0usize, |acc, &b| 2 * acc + b as usize);
        Ok(Self { index, v })
    }

    /// The split `group | rest` (0-based mode indices).
    pub fn from_group(n: usize, group: &[usize]) -> Result<Self> {
        let mut v = vec![0u8; n];
        for &m in group {
            if m >= n {
                return Err(Error::InvalidBipartition(format!("mode {m} out of range")));
            }
            v[m] = 1;
        }
        if group.len() >= n {
            return Err(Error::InvalidBipartition(
                "group must be a proper subset".into(),
            ));
        }
        Self::from_vector(v)
    }

    /// 1-based index `j`.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn vector(&self) -> &[u8] {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// Modes with `v_m = 1` (0-based), i.e. the side not containing mode 0.
    pub fn group(&self) -> Vec<usize> {
        self.v
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(m, _)| m)
            .collect()
    }

    /// `P_j = ⊕_m (-1)^{v_m} I₂`.
    pub fn sign_matrix(&self) -> RMat {
        let n = self.v.len();
        RMat::from_diagonal(&RVec::from_fn(2 * n, |i, _| {
            if self.v[i / 2] == 1 {
                -1.0
            } else {
                1.0
            }
        }))
    }

    /// Diagonal of `P_j` as a vector.
    pub fn signs(&self) -> RVec {
        RVec::from_fn(2 * self.v.len(), |i, _| {
            if self.v[i / 2] == 1 {
                -1.0
            } else {
                1.0
            }
        })
    }
}

/// All `2^{n-1} - 1` canonical bipartitions in lexicographic order of `v`.
pub fn enumerate_bipartitions(n: usize) -> Result<Vec<Bipartition>> {
    if n < 2 {
        return Err(Error::InvalidBipartition(format!(
            "need n ≥ 2 modes, got {n}"
        )));
    }
    if n > 20 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} is too large to enumerate"
        )));
    }
    let count = (1usize << (n - 1)) - 1;
    Ok((1..=count)
        .map(|j| {
            let v: Vec<u8> = (0..n)
                .map(|m| {
                    if m == 0 {
                        0
                    } else {
                        ((j >> (n - 1 - m)) & 1) as u8
                    }
                })
                .collect();
            Bipartition { index: j, v }
        })
        .collect())
}

/// Gaussian Weyl symbol `N exp(-½(x-X)ᵀΣ⁻¹(x-X))` with complex moments.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWeylSymbol {
    mean: CVec,
    sigma: CMat,
    lognorm: Complex64,
}

impl GaussianWeylSymbol {
    pub fn new(mean: CVec, sigma: CMat, lognorm: Complex64) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() || mean.len() != sigma.nrows() {
            return Err(Error::DimensionMismatch {
                expected: sigma.nrows(),
                got: mean.len(),
            });
        }
        let scale = sigma.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let asym = complex_asymmetry(&sigma);
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self {
            mean,
            sigma,
            lognorm,
        })
    }

    /// Wigner function of a pure Gaussian: real moments, `N = π^{-n}`.
    pub fn diagonal(mean: &RVec, sigma: &RMat) -> Self {
        let n = mean.len() / 2;
        Self {
            mean: mean.map(|x| Complex64::new(x, 0.0)),
            sigma: sigma.map(|x| Complex64::new(x, 0.0)),
            lognorm: Complex64::new(-(n as f64) * PI.ln(), 0.0),
        }
    }

    pub fn mean(&self) -> &CVec {
        &self.mean
    }

    pub fn sigma(&self) -> &CMat {
        &self.sigma
    }

    pub fn lognorm(&self) -> Complex64 {
        self.lognorm
    }

    pub fn norm(&self) -> Complex64 {
        self.lognorm.exp()
    }

    /// Real part of the mean (exact for diagonal symbols).
    pub fn real_mean(&self) -> RVec {
        self.mean.map(|z| z.re)
    }

    pub fn real_sigma(&self) -> RMat {
        self.sigma.map(|z| z.re)
    }

    pub fn is_real(&self) -> bool {
        self.mean.iter().all(|z| z.im == 0.0) && self.sigma.iter().all(|z| z.im == 0.0)
    }

    pub fn value(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        let d = CVec::from_fn(x.len(), |i, _| Complex64::new(x[i], 0.0) - self.mean[i]);
        let inv = crate::linalg::complex_inverse(&self.sigma)?;
        let q = crate::linalg::bilinear(&d, &inv, &d);
        Ok((self.lognorm - q * 0.5).exp())
    }
}

/// Moments of the cross symbol `W_{|φ_l⟩⟨φ_m|}` for single-mode probes.
/// Returns `(Σ_{m,l}, X_{m,l}, ln|N_{m,l}|)`.
fn cross_symbol(pm: &SingleModeProbe, pl: &SingleModeProbe) -> (CMat, CVec, f64) {
    let s = pm.sigma + pl.sigma;
    let det = s.determinant();
    let jt = j1().transpose();
    let re = s / (2.0 * det);
    let im = (pm.sigma * jt * pl.sigma - pl.sigma * jt * pm.sigma) / (2.0 * det);
    let sigma = CMat::from_fn(2, 2, |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
    let dx = pm.mean - pl.mean;
    let jdx = j1() * dx;
    let jdx_c = CVec::from_fn(2, |i, _| Complex64::new(jdx[i], 0.0));
    let shift = &sigma * jdx_c;
    let avg = (pm.mean + pl.mean) * 0.5;
    let mean = CVec::from_fn(2, |i, _| {
        Complex64::new(avg[i], 0.0) + Complex64::i() * shift[i]
    });
    let jtdx = jt * dx;
    let quad = (jtdx.transpose() * s * jtdx)[(0, 0)];
    let lognorm = -quad / (4.0 * det) - PI.ln() - 0.25 * det.ln();
    (sigma, mean, lognorm)
}

/// Weyl symbol of `|Φ2⟩⟨Φ1|`. Only `|N|` is tracked; the overall phase is set to zero
/// since it never enters the hierarchy.
pub fn composite_offdiag_moments(ps: &ProbeSet) -> GaussianWeylSymbol {
    let n = ps.n();
    let mut blocks = Vec::with_capacity(n);
    let mut mean = CVec::zeros(2 * n);
    let mut lognorm = 0.0;
    for m in 0..n {
        let (s, x, ln) = cross_symbol(ps.probe(m), ps.probe(n + m));
        blocks.push(s);
        mean[2 * m] = x[0];
        mean[2 * m + 1] = x[1];
        lognorm += ln;
    }
    GaussianWeylSymbol {
        mean,
        sigma: block_diag_complex(&blocks),
        lognorm: Complex64::new(lognorm, 0.0),
    }
}

/// Weyl symbols of `|Φ1j⟩⟨Φ1j|` and `|Φ2j⟩⟨Φ2j|`, where `Φ1j` takes probe `m`
/// on side 0 and probe `n+m` on side 1 of the bipartition, and `Φ2j` the converse.
pub fn permuted_moments(
    ps: &ProbeSet,
    b: &Bipartition,
) -> Result<(GaussianWeylSymbol, GaussianWeylSymbol)> {
    let n = ps.n();
    if b.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.n(),
        });
    }
    let v = b.vector();
    let one: Vec<usize> = (0..n).map(|m| m + n * v[m] as usize).collect();
    let two: Vec<usize> = (0..n).map(|m| m + n - n * v[m] as usize).collect();
    let sym = |idx: &[usize]| {
        let mean = ps.stacked_mean(idx.iter().copied());
        let sigma = ps.stacked_sigma(idx.iter().copied());
        GaussianWeylSymbol::diagonal(&mean, &sigma)
    };
    Ok((sym(&one), sym(&two)))
}

/// `α` of the first hierarchy term:
/// `Re(X21ᵀ Σ21⁻¹ X21) + (X1-X2)ᵀ Jᵀ Re(Σ21) J (X1-X2)`.
pub fn alpha(ps: &ProbeSet, w21: &GaussianWeylSymbol) -> Result<f64> {
    let n = ps.n();
    let inv = crate::linalg::complex_inverse(&w21.sigma)?;
    let first = crate::linalg::bilinear(&w21.mean, &inv, &w21.mean).re;
    let dx = ps.phi1_mean() - ps.phi2_mean();
    let j = j_form(n);
    let jdx = &j * dx;
    let second = (jdx.transpose() * w21.real_sigma() * &jdx)[(0, 0)];
    Ok(first + second)
}

/// `β_j = X1jᵀ Σ1j⁻¹ X1j + X2jᵀ Σ2j⁻¹ X2j`.
pub fn beta(w1: &GaussianWeylSymbol, w2: &GaussianWeylSymbol) -> Result<f64> {
    let q = |w: &GaussianWeylSymbol| -> Result<f64> {
        let inv = crate::linalg::spd_inverse(&w.real_sigma())?;
        Ok(crate::linalg::quad_form(&w.real_mean(), &inv))
    };
    Ok(q(w1)? + q(w2)?)
}
