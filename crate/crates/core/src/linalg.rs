//! Small dense-matrix helpers shared by the phase-space modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &RMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn complex_asymmetry(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).norm());
        }
    }
    worst
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

pub fn symmetrize_complex(m: &CMat) -> CMat {
    (m + m.transpose()) * Complex64::new(0.5, 0.0)
}

pub fn check_square(m: &RMat, size: usize) -> Result<()> {
    if m.nrows() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: m.nrows(),
        });
    }
    if m.ncols() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: m.ncols(),
        });
    }
    Ok(())
}

/// Validates symmetry (relative tolerance 1e-12) and returns the symmetrized copy.
pub fn validated_symmetric(m: &RMat) -> Result<RMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure("non-finite matrix entry".into()));
    }
    let scale = m.amax().max(1.0);
    let asym = asymmetry(m);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(symmetrize(m))
}

/// Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(m: &RMat) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    m.clone().cholesky().ok_or(Error::NotPositiveDefinite)
}

pub fn spd_inverse(m: &RMat) -> Result<RMat> {
    Ok(cholesky(m)?.inverse())
}

/// log det of a symmetric positive-definite matrix.
pub fn spd_logdet(m: &RMat) -> Result<f64> {
    let l = cholesky(m)?;
    Ok(2.0 * l.l().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn to_complex_vec(v: &RVec) -> CVec {
    v.map(|x| Complex64::new(x, 0.0))
}

pub fn complex_inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("singular complex matrix".into()))
}

/// Principal branch of log det for a complex matrix via LU.
pub fn complex_logdet(m: &CMat) -> Result<Complex64> {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d.norm() == 0.0 {
            return Err(Error::NumericalFailure("singular complex matrix".into()));
        }
        acc += d.ln();
    }
    if lu.p().determinant::<f64>() < 0.0 {
        acc += Complex64::new(0.0, std::f64::consts::PI);
    }
    Ok(acc)
}

/// Block-diagonal assembly of square blocks.
pub fn block_diag(blocks: &[RMat]) -> RMat {
    let size: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = RMat::zeros(size, size);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols()))
            .copy_from(b);
        off += b.nrows();
    }
    out
}

pub fn block_diag_complex(blocks: &[CMat]) -> CMat {
    let size: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(size, size);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols()))
            .copy_from(b);
        off += b.nrows();
    }
    out
}

/// xᵀ A y for complex operands (no conjugation).
pub fn bilinear(x: &CVec, a: &CMat, y: &CVec) -> Complex64 {
    (x.transpose() * a * y)[(0, 0)]
}

pub fn quad_form(x: &RVec, a: &RMat) -> f64 {
    (x.transpose() * a * x)[(0, 0)]
}
