//! Sparse multivariate polynomials with complex coefficients and the
//! Gaussian differential operator `exp(½(∂+c)ᵀM(∂+c))` evaluated at the origin.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{complex_asymmetry, symmetrize_complex, to_complex, CMat, CVec, RMat, RVec};
use crate::symplectic::GaussianEnvelope;

/// Coefficients with modulus at or below this are dropped.
pub const PRUNE_TOL: f64 = 1e-15;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Polynomial in `nvars` variables, stored as exponent tuple → coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, ONE)
    }

    /// The coordinate polynomial `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, ONE);
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Complex64)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: e.len(),
                });
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidParameter(
                    "non-finite polynomial coefficient".into(),
                ));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Linear form `Σ a_i x_i + b`.
    pub fn linear(a: &[Complex64], b: Complex64) -> Self {
        let nvars = a.len();
        let mut p = Self::constant(nvars, b);
        for (i, &ai) in a.iter().enumerate() {
            let mut e = vec![0; nvars];
            e[i] = 1;
            p.add_term(e, ai);
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: Complex64) {
        match self.terms.entry(e) {
            Entry::Vacant(slot) => {
                if c.norm() > PRUNE_TOL {
                    slot.insert(c);
                }
            }
            Entry::Occupied(mut slot) => {
                let sum = *slot.get() + c;
                if sum.norm() <= PRUNE_TOL {
                    slot.remove();
                } else {
                    *slot.get_mut() = sum;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Complex64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> Complex64 {
        self.terms.get(e).copied().unwrap_or(ZERO)
    }

    /// Maximum total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Largest imaginary part among the coefficients.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn eval(&self, x: &[Complex64]) -> Result<Complex64> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e.iter()) {
                if k > 0 {
                    t *= xi.powu(k);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        let mut acc = ZERO;
        for (e, c) in &self.terms {
            let mut t = 1.0;
            for (xi, &k) in x.iter().zip(e.iter()) {
                if k > 0 {
                    t *= xi.powi(k as i32);
                }
            }
            acc += c * t;
        }
        Ok(acc)
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                let k = f[i];
                f[i] -= 1;
                out.add_term(f, c * k as f64);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Composition `p(A x + b)` with complex `A`, `b`.
    pub fn affine_substitute(&self, a: &CMat, b: &CVec) -> Result<Self> {
        let nv = self.nvars;
        if a.nrows() != nv || a.ncols() != nv {
            return Err(Error::DimensionMismatch {
                expected: nv,
                got: a.nrows().max(a.ncols()),
            });
        }
        if b.len() != nv {
            return Err(Error::DimensionMismatch {
                expected: nv,
                got: b.len(),
            });
        }
        let max_exp = self
            .terms
            .keys()
            .flat_map(|e| e.iter().copied())
            .max()
            .unwrap_or(0);
        // powers[i][k] = (row_i(A)·x + b_i)^k
        let mut powers: Vec<Vec<MultiPoly>> = Vec::with_capacity(nv);
        for i in 0..nv {
            let row: Vec<Complex64> = (0..nv).map(|j| a[(i, j)]).collect();
            let lin = Self::linear(&row, b[i]);
            let mut pw = vec![Self::one(nv)];
            for k in 1..=max_exp as usize {
                let next = &pw[k - 1] * &lin;
                pw.push(next);
            }
            powers.push(pw);
        }
        let mut out = Self::zero(nv);
        for (e, c) in &self.terms {
            let mut t = Self::constant(nv, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &powers[i][k as usize];
                }
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Real-matrix convenience wrapper around [`MultiPoly::affine_substitute`].
    pub fn affine_substitute_real(&self, a: &RMat, b: &RVec) -> Result<Self> {
        self.affine_substitute(&to_complex(a), &b.map(|x| Complex64::new(x, 0.0)))
    }

    /// `½ ∂ᵀ M ∂ p` for symmetric `M`.
    pub fn half_laplacian(&self, m: &CMat) -> Self {
        let nv = self.nvars;
        let mut out = Self::zero(nv);
        let firsts: Vec<MultiPoly> = (0..nv).map(|k| self.derivative(k)).collect();
        for k in 0..nv {
            if firsts[k].is_zero() {
                continue;
            }
            for l in 0..nv {
                let mkl = m[(k, l)];
                if mkl.norm() == 0.0 {
                    continue;
                }
                let second = firsts[k].derivative(l);
                for (e, c) in &second.terms {
                    out.add_term(e.clone(), c * mkl * 0.5);
                }
            }
        }
        out
    }

    /// `Σ_j (1/j!) (½∂ᵀM∂)^j p`, which terminates after `⌊deg/2⌋` steps.
    pub fn heat_series(&self, m: &CMat) -> Self {
        let mut out = self.clone();
        let mut term = self.clone();
        let mut j = 1u32;
        loop {
            term = term
                .half_laplacian(m)
                .scale(Complex64::new(1.0 / j as f64, 0.0));
            if term.is_zero() {
                break;
            }
            out = &out + &term;
            j += 1;
        }
        out
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert_eq!(self.nvars, other.nvars, "polynomial variable counts differ");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c * sign);
        }
        out
    }

    fn product(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "polynomial variable counts differ");
        let mut acc: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2.iter()).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert(ZERO) += c1 * c2;
            }
        }
        acc.retain(|_, c| c.norm() > PRUNE_TOL);
        Self {
            nvars: self.nvars,
            terms: acc,
        }
    }

    /// Largest coefficient-wise difference to `other`.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let zero = Complex64::new(0.0, 0.0);
        let one_way = self
            .terms
            .iter()
            .map(|(e, c)| (c - other.terms.get(e).unwrap_or(&zero)).norm());
        let missing = other
            .terms
            .iter()
            .filter(|(e, _)| !self.terms.contains_key(*e))
            .map(|(_, c)| c.norm());
        one_way.chain(missing).fold(0.0, f64::max)
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.combine(rhs, -1.0)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.product(rhs)
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// `M` and `c` of the operator `exp(½(∂+c)ᵀM(∂+c))`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticKernel {
    m: CMat,
    c: CVec,
}

impl QuadraticKernel {
    pub fn new(m: CMat, c: CVec) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if c.len() != m.nrows() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: c.len(),
            });
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let asym = complex_asymmetry(&m);
        if asym > 1e-12 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self {
            m: symmetrize_complex(&m),
            c,
        })
    }

    pub fn m(&self) -> &CMat {
        &self.m
    }

    pub fn c(&self) -> &CVec {
        &self.c
    }

    /// `½ cᵀ M c`.
    pub fn exponent(&self) -> Complex64 {
        (self.c.transpose() * &self.m * &self.c)[(0, 0)] * 0.5
    }

    /// The shift vector `M c`.
    pub fn shift(&self) -> CVec {
        &self.m * &self.c
    }
}

/// `[exp(½(∂+c)ᵀM(∂+c)) p](0)` split as `(½cᵀMc, q(Mc))`, where
/// `q = Σ_j (1/j!)(½∂ᵀM∂)^j p`; the value is `exp(first) · second`.
pub fn gaussian_operator_parts(
    p: &MultiPoly,
    k: &QuadraticKernel,
) -> Result<(Complex64, Complex64)> {
    if p.nvars() != k.m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: k.m.nrows(),
            got: p.nvars(),
        });
    }
    let q = p.heat_series(&k.m);
    let shift = k.shift();
    let at = q.eval_unchecked(shift.as_slice());
    Ok((k.exponent(), at))
}

/// `[exp(½(∂+c)ᵀM(∂+c)) p](0) = e^{½cᵀMc} · q(Mc)`.
pub fn apply_gaussian_operator(p: &MultiPoly, k: &QuadraticKernel) -> Result<Complex64> {
    let (e, q) = gaussian_operator_parts(p, k)?;
    Ok(e.exp() * q)
}

/// A Wigner function `F(x)·G(x)` with Gaussian envelope `G` and polynomial `F`
/// over the `2n` phase-space variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyGaussianState {
    envelope: GaussianEnvelope,
    poly: MultiPoly,
}

impl PolyGaussianState {
    pub fn new(envelope: GaussianEnvelope, poly: MultiPoly) -> Result<Self> {
        let nv = 2 * envelope.n();
        if poly.nvars() != nv {
            return Err(Error::DimensionMismatch {
                expected: nv,
                got: poly.nvars(),
            });
        }
        if poly.is_zero() {
            return Err(Error::InvalidParameter(
                "polynomial factor is identically zero".into(),
            ));
        }
        Ok(Self { envelope, poly })
    }

    pub fn gaussian(envelope: GaussianEnvelope) -> Self {
        let nv = 2 * envelope.n();
        Self {
            envelope,
            poly: MultiPoly::one(nv),
        }
    }

    pub fn envelope(&self) -> &GaussianEnvelope {
        &self.envelope
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn n(&self) -> usize {
        self.envelope.n()
    }

    /// `W(x) = F(x) exp(-½(x-x̄)ᵀV⁻¹(x-x̄)) / ((2π)^n √det V)`, real part.
    pub fn wigner(&self, x: &[f64]) -> Result<f64> {
        let n = self.n();
        let v = self.envelope.cov();
        let d = RVec::from_column_slice(x) - self.envelope.mean();
        let chol = crate::linalg::cholesky(v)?;
        let sol = chol.solve(&d);
        let logdet = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let g = (-0.5 * d.dot(&sol) - n as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * logdet)
            .exp();
        Ok(self.poly.eval_real(x)?.re * g)
    }
}
