//! Phase-space linear algebra: symplectic forms, Gaussian envelopes,
//! symplectic spectra, partial transposition and standard forms.
//!
//! Quadratures are ordered `(q1, p1, ..., qn, pn)` throughout.

use nalgebra::{Matrix2, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, check_square, validated_symmetric, RMat, RVec};

/// Tolerance on `ν ≥ 1/2` for physical covariance matrices.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// The symplectic form `J_n = ⊕ [[0, -1], [1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n: usize,
    matrix: RMat,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        let mut matrix = RMat::zeros(2 * n, 2 * n);
        for m in 0..n {
            matrix[(2 * m, 2 * m + 1)] = -1.0;
            matrix[(2 * m + 1, 2 * m)] = 1.0;
        }
        Self { n, matrix }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &RMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> RMat {
        self.matrix
    }
}

/// Shorthand for `SymplecticForm::new(n).into_matrix()`.
pub fn j_form(n: usize) -> RMat {
    SymplecticForm::new(n).into_matrix()
}

/// Covariance matrix and first moments of a Gaussian Wigner factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnvelope {
    n: usize,
    cov: RMat,
    mean: RVec,
}

impl GaussianEnvelope {
    /// Validates shape, symmetry and positive definiteness. Physicality is not required.
    pub fn new(cov: RMat, mean: RVec) -> Result<Self> {
        if !cov.nrows().is_multiple_of(2) || cov.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "covariance dimension {} is not a positive even number",
                cov.nrows()
            )));
        }
        let cov = validated_symmetric(&cov)?;
        let n = cov.nrows() / 2;
        if mean.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: mean.len(),
            });
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalFailure("non-finite mean entry".into()));
        }
        crate::linalg::cholesky(&cov)?;
        Ok(Self { n, cov, mean })
    }

    /// Like [`GaussianEnvelope::new`] but also requires every symplectic eigenvalue to be ≥ 1/2.
    pub fn physical(cov: RMat, mean: RVec) -> Result<Self> {
        let env = Self::new(cov, mean)?;
        let nu = symplectic_eigenvalues(&env.cov)?;
        if nu[0] < 0.5 - PHYSICALITY_TOL {
            return Err(Error::Unphysical(nu[0]));
        }
        Ok(env)
    }

    pub fn centered(cov: RMat) -> Result<Self> {
        let dim = cov.nrows();
        Self::physical(cov, RVec::zeros(dim))
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            n,
            cov: RMat::identity(2 * n, 2 * n) * 0.5,
            mean: RVec::zeros(2 * n),
        }
    }

    /// Product of identical thermal states with mean photon number `nbar`.
    pub fn thermal(n: usize, nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thermal occupation {nbar} < 0"
            )));
        }
        Ok(Self {
            n,
            cov: RMat::identity(2 * n, 2 * n) * (0.5 + nbar),
            mean: RVec::zeros(2 * n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cov(&self) -> &RMat {
        &self.cov
    }

    pub fn mean(&self) -> &RVec {
        &self.mean
    }

    pub fn is_physical(&self) -> bool {
        symplectic_eigenvalues(&self.cov)
            .map(|nu| nu[0] >= 0.5 - PHYSICALITY_TOL)
            .unwrap_or(false)
    }

    pub fn with_mean(&self, mean: RVec) -> Result<Self> {
        Self::new(self.cov.clone(), mean)
    }
}

/// Symplectic eigenvalues `ν1 ≤ … ≤ νn` of a positive-definite `V`: the moduli of
/// the eigenvalues of `J_nᵀ V`. With `A = V^{1/2} J V^{1/2}` (similar to `JV`,
/// antisymmetric), `AᵀA` is symmetric with each `ν²` appearing twice.
pub fn symplectic_eigenvalues(v: &RMat) -> Result<Vec<f64>> {
    let v = validated_symmetric(v)?;
    if v.nrows() % 2 != 0 {
        return Err(Error::InvalidParameter("odd phase-space dimension".into()));
    }
    crate::linalg::cholesky(&v)?;
    let n = v.nrows() / 2;
    let eig = nalgebra::SymmetricEigen::new(v.clone());
    let root = &eig.eigenvectors
        * RMat::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    let a = &root * j_form(n) * &root;
    let mut sq: Vec<f64> = nalgebra::SymmetricEigen::new(a.transpose() * &a)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    sq.sort_by(f64::total_cmp);
    Ok(sq.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

fn validate_group(n: usize, group: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &m in group {
        if m >= n {
            return Err(Error::InvalidBipartition(format!(
                "mode {m} out of range for n = {n}"
            )));
        }
        if mask[m] {
            return Err(Error::InvalidBipartition(format!("mode {m} listed twice")));
        }
        mask[m] = true;
    }
    if group.is_empty() || group.len() == n {
        return Err(Error::InvalidBipartition(
            "group must be a nonempty proper subset".into(),
        ));
    }
    Ok(mask)
}

/// Partial transpose `Λ V Λ`, flipping the momentum of every mode in `group`
/// (0-based mode indices).
pub fn partial_transpose(v: &RMat, group: &[usize]) -> Result<RMat> {
    if !v.nrows().is_multiple_of(2) {
        return Err(Error::InvalidParameter("odd phase-space dimension".into()));
    }
    let n = v.nrows() / 2;
    check_square(v, 2 * n)?;
    let mask = validate_group(n, group)?;
    let mut out = v.clone();
    for (m, &flip) in mask.iter().enumerate() {
        if flip {
            let k = 2 * m + 1;
            for j in 0..2 * n {
                out[(k, j)] = -out[(k, j)];
                out[(j, k)] = -out[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Outcome of the PPT test on one bipartition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptVerdict {
    pub separable: bool,
    pub min_symplectic_eigenvalue: f64,
}

/// PPT verdict for the split `group | rest`.
pub fn ppt_separable(v: &RMat, group: &[usize]) -> Result<PptVerdict> {
    let vt = partial_transpose(v, group)?;
    let nu = symplectic_eigenvalues(&vt)?;
    Ok(PptVerdict {
        separable: nu[0] >= 0.5 - PHYSICALITY_TOL,
        min_symplectic_eigenvalue: nu[0],
    })
}

/// Sums of principal minors of order `2, 4, …, 2n` of `J_nᵀ V`. These are the
/// coefficients of `λ^{2n} + Δ1 λ^{2n-2} + … + Δn`, the characteristic
/// polynomial of `J_nᵀ V`.
pub fn symplectic_invariants(v: &RMat) -> Result<Vec<f64>> {
    let v = validated_symmetric(v)?;
    if v.nrows() % 2 != 0 {
        return Err(Error::InvalidParameter("odd phase-space dimension".into()));
    }
    let n = v.nrows() / 2;
    let a = j_form(n).transpose() * v;
    let dim = 2 * n;
    let mut sums = vec![0.0; n];
    // Enumerate every subset of indices by bitmask; dim ≤ 20 in practice.
    for mask in 1u32..(1u32 << dim) {
        let k = mask.count_ones() as usize;
        if !k.is_multiple_of(2) {
            continue;
        }
        let idx: Vec<usize> = (0..dim).filter(|i| mask & (1 << i) != 0).collect();
        let sub = RMat::from_fn(k, k, |i, j| a[(idx[i], idx[j])]);
        sums[k / 2 - 1] += sub.determinant();
    }
    Ok(sums)
}

/// The three invariants of a 6×6 (partially transposed) covariance matrix.
pub fn symplectic_invariants_3mode(vt: &RMat) -> Result<[f64; 3]> {
    check_square(vt, 6)?;
    let s = symplectic_invariants(vt)?;
    Ok([s[0], s[1], s[2]])
}

/// Two-mode standard form `½[[a,0,c,0],[0,a,0,d],[c,0,b,0],[0,d,0,b]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeStandardForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl TwoModeStandardForm {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Two-mode squeezed vacuum with squeezing `r`.
    pub fn tmsv(r: f64) -> Self {
        let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        Self {
            a: ch,
            b: ch,
            c: sh,
            d: -sh,
        }
    }

    pub fn covariance(&self) -> RMat {
        let Self { a, b, c, d } = *self;
        RMat::from_row_slice(
            4,
            4,
            &[
                a, 0.0, c, 0.0, 0.0, a, 0.0, d, c, 0.0, b, 0.0, 0.0, d, 0.0, b,
            ],
        ) * 0.5
    }

    /// `(Δ̃1², Δ̃2²)` of the partial transpose: `λ⁴ + Δ̃1² λ² + Δ̃2² = 0`.
    pub fn partial_transpose_invariants(&self) -> (f64, f64) {
        let Self { a, b, c, d } = *self;
        (
            0.25 * (a * a + b * b - 2.0 * c * d),
            (a * b - c * c) * (a * b - d * d) / 16.0,
        )
    }
}

/// Standard form of a pure three-mode Gaussian state (`e±_ij` entries supplied
/// explicitly, purity checked numerically).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeModePureStandardForm {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub e12p: f64,
    pub e12m: f64,
    pub e13p: f64,
    pub e13m: f64,
    pub e23p: f64,
    pub e23m: f64,
}

impl ThreeModePureStandardForm {
    pub fn covariance(&self) -> RMat {
        let s = self;
        let mut v = RMat::zeros(6, 6);
        let a = [s.a1, s.a2, s.a3];
        for (i, ai) in a.iter().enumerate() {
            v[(2 * i, 2 * i)] = *ai;
            v[(2 * i + 1, 2 * i + 1)] = *ai;
        }
        let pairs = [
            (0, 1, s.e12p, s.e12m),
            (0, 2, s.e13p, s.e13m),
            (1, 2, s.e23p, s.e23m),
        ];
        for (i, j, ep, em) in pairs {
            v[(2 * i, 2 * j)] = ep;
            v[(2 * j, 2 * i)] = ep;
            v[(2 * i + 1, 2 * j + 1)] = em;
            v[(2 * j + 1, 2 * i + 1)] = em;
        }
        v * 0.5
    }

    /// Largest deviation of the symplectic spectrum from 1/2.
    pub fn purity_deviation(&self) -> Result<f64> {
        let nu = symplectic_eigenvalues(&self.covariance())?;
        Ok(nu.iter().map(|x| (x - 0.5).abs()).fold(0.0, f64::max))
    }

    /// Rejects forms whose symplectic eigenvalues are not all 1/2 within `tol`.
    pub fn check_purity(&self, tol: f64) -> Result<()> {
        let dev = self.purity_deviation()?;
        if dev > tol {
            return Err(Error::InvalidParameter(format!(
                "standard form is not pure: symplectic eigenvalues deviate by {dev:e}"
            )));
        }
        Ok(())
    }

    /// Brings a pure three-mode covariance matrix into standard form by local
    /// symplectic operations: per-mode Williamson normalization followed by
    /// local rotations that diagonalize the 1-2 and 1-3 correlation blocks.
    pub fn from_covariance(v: &RMat, tol: f64) -> Result<Self> {
        check_square(v, 6)?;
        let v = validated_symmetric(v)?;
        let block = |m: &RMat, i: usize, j: usize| -> Matrix2<f64> {
            Matrix2::new(
                m[(2 * i, 2 * j)],
                m[(2 * i, 2 * j + 1)],
                m[(2 * i + 1, 2 * j)],
                m[(2 * i + 1, 2 * j + 1)],
            )
        };

        let mut locals = Vec::with_capacity(3);
        for i in 0..3 {
            let a = block(&v, i, i);
            let nu = a.determinant().sqrt();
            let eig = SymmetricEigen::new(a);
            let mut u = eig.eigenvectors;
            if u.determinant() < 0.0 {
                u.set_column(1, &(-u.column(1)));
            }
            let scale = Matrix2::from_diagonal(&eig.eigenvalues.map(|w| (nu / w).sqrt()));
            locals.push(scale * u.transpose());
        }
        let to_dyn = |m: &Matrix2<f64>| RMat::from_fn(2, 2, |i, j| m[(i, j)]);
        let l = block_diag(&locals.iter().map(to_dyn).collect::<Vec<_>>());
        let w = &l * &v * l.transpose();

        let c12 = block(&w, 0, 1);
        let svd = SVD::new(c12, true, true);
        let mut u = svd.u.ok_or_else(|| Error::NumericalFailure("svd".into()))?;
        let mut vt = svd
            .v_t
            .ok_or_else(|| Error::NumericalFailure("svd".into()))?;
        if u.determinant() < 0.0 {
            u.set_column(1, &(-u.column(1)));
        }
        if vt.determinant() < 0.0 {
            vt.set_row(1, &(-vt.row(1)));
        }
        let r1 = u.transpose();
        let r2 = vt;
        let d = r1 * block(&w, 0, 2);
        let mut r3 = Matrix2::identity();
        for k in 0..2 {
            let norm = d.row(k).norm();
            if norm > 1e-12 {
                r3.set_row(k, &(d.row(k) / norm));
            }
        }
        if (r3.row(0).dot(&r3.row(1))).abs() > 1e-6 || (r3.determinant().abs() - 1.0).abs() > 1e-6 {
            r3 = Matrix2::identity();
        } else if r3.determinant() < 0.0 {
            r3.set_row(1, &(-r3.row(1)));
        }
        let rot = block_diag(&[to_dyn(&r1), to_dyn(&r2), to_dyn(&r3)]);
        let s = &rot * &w * rot.transpose();

        let form = Self {
            a1: 2.0 * s[(0, 0)],
            a2: 2.0 * s[(2, 2)],
            a3: 2.0 * s[(4, 4)],
            e12p: 2.0 * s[(0, 2)],
            e12m: 2.0 * s[(1, 3)],
            e13p: 2.0 * s[(0, 4)],
            e13m: 2.0 * s[(1, 5)],
            e23p: 2.0 * s[(2, 4)],
            e23m: 2.0 * s[(3, 5)],
        };
        let residual = (&form.covariance() - &s).amax();
        if residual > tol * s.amax().max(1.0) {
            return Err(Error::NumericalDegeneracy(format!(
                "covariance does not reduce to the pure three-mode standard form (residual {residual:e})"
            )));
        }
        form.check_purity(tol)?;
        Ok(form)
    }
}

/// Reorders the modes of a covariance matrix: new mode `i` is old mode `order[i]`.
pub fn permute_modes(v: &RMat, order: &[usize]) -> Result<RMat> {
    let n = v.nrows() / 2;
    check_square(v, 2 * n)?;
    if order.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: order.len(),
        });
    }
    let mut seen = vec![false; n];
    for &o in order {
        if o >= n || seen[o] {
            return Err(Error::InvalidParameter(
                "mode order is not a permutation".into(),
            ));
        }
        seen[o] = true;
    }
    Ok(RMat::from_fn(2 * n, 2 * n, |i, j| {
        v[(2 * order[i / 2] + i % 2, 2 * order[j / 2] + j % 2)]
    }))
}
