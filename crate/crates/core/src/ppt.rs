//! Infinite-squeezing limit of the biseparability matrix inequality
//! `4Jᵀ(Σ⁻¹+V⁻¹)⁻¹J ≥ P_j(Σ+V)⁻¹P_j` and its relation to the PPT criterion.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::{block_diag, cholesky, spd_inverse, symmetrize, RMat};
use crate::probes::Bipartition;
use crate::symplectic::{
    j_form, partial_transpose, symplectic_eigenvalues, ThreeModePureStandardForm,
    TwoModeStandardForm,
};

/// Tolerance of the `λ_min ≥ 1` test.
pub const INEQUALITY_TOL: f64 = 1e-8;
/// Squeezing parameter used for the momentum limit; its inverse gives the position limit.
pub const LIMIT_R: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrixReport {
    pub bipartition: Bipartition,
    pub r: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eig: f64,
    pub inequality_holds: bool,
}

fn check_inputs(v: &RMat, sigma: &RMat, b: &Bipartition) -> Result<usize> {
    let dim = v.nrows();
    crate::linalg::check_square(v, dim)?;
    crate::linalg::check_square(sigma, dim)?;
    if b.n() * 2 != dim {
        return Err(Error::DimensionMismatch {
            expected: dim / 2,
            got: b.n(),
        });
    }
    Ok(dim / 2)
}

/// `Z_j = 4 P_j(Σ+V)P_j · Jᵀ(Σ⁻¹+V⁻¹)⁻¹J`.
pub fn z_matrix(v: &RMat, sigma: &RMat, b: &Bipartition) -> Result<RMat> {
    let n = check_inputs(v, sigma, b)?;
    let p = b.sign_matrix();
    let j = j_form(n);
    let m = spd_inverse(&(spd_inverse(sigma)? + spd_inverse(v)?))?;
    Ok(&p * (sigma + v) * &p * (j.transpose() * m * &j) * 4.0)
}

/// Spectrum of `Z_j` from the generalized problem `A u = λ B u` with
/// `A = 4JᵀMJ`, `B = P(Σ+V)⁻¹P`, solved after Cholesky whitening of `B`.
pub fn z_spectrum(v: &RMat, sigma: &RMat, b: &Bipartition) -> Result<Vec<f64>> {
    let n = check_inputs(v, sigma, b)?;
    let p = b.sign_matrix();
    let j = j_form(n);
    let m = spd_inverse(&(spd_inverse(sigma)? + spd_inverse(v)?))?;
    let a = symmetrize(&(j.transpose() * m * &j * 4.0));
    let bm = symmetrize(&(&p * spd_inverse(&(sigma + v))? * &p));
    let l = cholesky(&bm)?.l();
    let li = l
        .solve_lower_triangular(&RMat::identity(2 * n, 2 * n))
        .ok_or_else(|| Error::NumericalFailure("singular whitening factor".into()))?;
    let c = symmetrize(&(&li * a * li.transpose()));
    let mut eig: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Probe covariance `⊕ diag(1/(4r), r)`.
pub fn squeezed_probe_covariance(n: usize, r: f64) -> Result<RMat> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidProbe(format!(
            "squeezing parameter {r} must be positive"
        )));
    }
    let block = RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![0.25 / r, r]));
    Ok(block_diag(&vec![block; n]))
}

pub fn z_report(v: &RMat, b: &Bipartition, r: f64) -> Result<ZMatrixReport> {
    let sigma = squeezed_probe_covariance(b.n(), r)?;
    let eigenvalues = z_spectrum(v, &sigma, b)?;
    let min_eig = eigenvalues[0];
    Ok(ZMatrixReport {
        bipartition: b.clone(),
        r,
        eigenvalues,
        min_eig,
        inequality_holds: min_eig >= 1.0 - INEQUALITY_TOL,
    })
}

/// Direction of infinite probe squeezing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitDirection {
    /// `σ_pp → 0` (`r → 0`).
    Momentum,
    /// `σ_xx → 0` (`r → ∞`).
    Position,
}

impl LimitDirection {
    pub fn r(self) -> f64 {
        match self {
            LimitDirection::Momentum => LIMIT_R,
            LimitDirection::Position => 1.0 / LIMIT_R,
        }
    }
}

/// A standard form accepted by the limit analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StandardForm {
    TwoMode(TwoModeStandardForm),
    ThreeModePure(ThreeModePureStandardForm),
}

impl StandardForm {
    pub fn n(&self) -> usize {
        match self {
            StandardForm::TwoMode(_) => 2,
            StandardForm::ThreeModePure(_) => 3,
        }
    }

    pub fn covariance(&self) -> RMat {
        match self {
            StandardForm::TwoMode(s) => s.covariance(),
            StandardForm::ThreeModePure(s) => s.covariance(),
        }
    }
}

fn two_mode_limit(s: &TwoModeStandardForm, dir: LimitDirection) -> RMat {
    let TwoModeStandardForm { a, b, c, d } = *s;
    #[rustfmt::skip]
    let m = match dir {
        LimitDirection::Momentum => [
            1.0, 0.0,           0.0, 0.0,
            0.0, a * a - c * d, 0.0, a * c - b * d,
            0.0, 0.0,           1.0, 0.0,
            0.0, b * c - a * d, 0.0, b * b - c * d,
        ],
        LimitDirection::Position => [
            a * a - c * d,  0.0, -b * c + a * d, 0.0,
            0.0,            1.0, 0.0,            0.0,
            -a * c + b * d, 0.0, b * b - c * d,  0.0,
            0.0,            0.0, 0.0,            1.0,
        ],
    };
    RMat::from_row_slice(4, 4, &m)
}

/// Limit matrix for the cut `S₁|S₂S₃`.
fn three_mode_limit(s: &ThreeModePureStandardForm, dir: LimitDirection) -> RMat {
    let ThreeModePureStandardForm {
        a1,
        a2,
        a3,
        e12p,
        e12m,
        e13p,
        e13m,
        e23p,
        e23m,
    } = *s;
    let d1 = a1 * a1 - e13p * e13m - e12p * e12m;
    let d2 = a2 * a2 - e12p * e12m + e23p * e23m;
    let d3 = a3 * a3 - e13p * e13m + e23m * e23p;
    let mut z = RMat::identity(6, 6);
    let (idx, m): ([usize; 3], [[f64; 3]; 3]) = match dir {
        LimitDirection::Momentum => (
            [1, 3, 5],
            [
                [
                    d1,
                    a1 * e12p - a2 * e12m - e13m * e23p,
                    a1 * e13p - a3 * e13m - e12m * e23p,
                ],
                [
                    a2 * e12p - a1 * e12m + e13p * e23m,
                    d2,
                    a2 * e23p + a3 * e23m - e12m * e13p,
                ],
                [
                    a3 * e13p - a1 * e13m + e12p * e23m,
                    a3 * e23p + a2 * e23m - e13m * e12p,
                    d3,
                ],
            ],
        ),
        LimitDirection::Position => (
            [0, 2, 4],
            [
                [
                    d1,
                    a1 * e12m - a2 * e12p - e13p * e23m,
                    a1 * e13m - a3 * e13p - e12p * e23m,
                ],
                [
                    a2 * e12m - a1 * e12p + e13m * e23p,
                    d2,
                    a2 * e23m + a3 * e23p - e12p * e13m,
                ],
                [
                    a3 * e13m - a1 * e13p + e12m * e23p,
                    a3 * e23m + a2 * e23p - e13p * e12m,
                    d3,
                ],
            ],
        ),
    };
    for (i, &ri) in idx.iter().enumerate() {
        for (k, &ck) in idx.iter().enumerate() {
            z[(ri, ck)] = m[i][k];
        }
    }
    z
}

/// Relabels modes so that `first` becomes mode 1 (order `[first, others…]`).
fn relabel(s: &ThreeModePureStandardForm, first: usize) -> (ThreeModePureStandardForm, [usize; 3]) {
    let order = match first {
        0 => [0, 1, 2],
        1 => [1, 0, 2],
        _ => [2, 0, 1],
    };
    let a = [s.a1, s.a2, s.a3];
    let e = |i: usize, j: usize| -> (f64, f64) {
        match (i.min(j), i.max(j)) {
            (0, 1) => (s.e12p, s.e12m),
            (0, 2) => (s.e13p, s.e13m),
            _ => (s.e23p, s.e23m),
        }
    };
    let (e12p, e12m) = e(order[0], order[1]);
    let (e13p, e13m) = e(order[0], order[2]);
    let (e23p, e23m) = e(order[1], order[2]);
    let form = ThreeModePureStandardForm {
        a1: a[order[0]],
        a2: a[order[1]],
        a3: a[order[2]],
        e12p,
        e12m,
        e13p,
        e13m,
        e23p,
        e23m,
    };
    (form, order)
}

/// Closed-form limit of `Z_j` under infinite probe squeezing, in the original mode order.
/// For three modes the bipartition must separate a single mode.
pub fn z_limit_matrix(sf: &StandardForm, dir: LimitDirection, b: &Bipartition) -> Result<RMat> {
    if b.n() != sf.n() {
        return Err(Error::DimensionMismatch {
            expected: sf.n(),
            got: b.n(),
        });
    }
    match sf {
        StandardForm::TwoMode(s) => Ok(two_mode_limit(s, dir)),
        StandardForm::ThreeModePure(s) => {
            let group = b.group();
            let single = if group.len() == 1 {
                group[0]
            } else {
                (0..3)
                    .find(|m| !group.contains(m))
                    .expect("three-mode complement")
            };
            let (form, order) = relabel(s, single);
            let zp = three_mode_limit(&form, dir);
            // Z in permuted coordinates: Z'[i][k] = Z[order[i]][order[k]] per quadrature.
            let mut z = RMat::zeros(6, 6);
            for i in 0..6 {
                for k in 0..6 {
                    z[(2 * order[i / 2] + i % 2, 2 * order[k / 2] + k % 2)] = zp[(i, k)];
                }
            }
            Ok(z)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResemblanceCheck {
    pub bipartition: Bipartition,
    pub direction: LimitDirection,
    /// Max entrywise `|Z(r) - Z_lim| / max(1, |Z_lim|)`.
    pub entry_deviation: f64,
    /// Max relative deviation of the spectrum of `Z(r)` from `{1,…,1} ∪ {4ν̃_k²}`.
    pub eigen_deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResemblanceReport {
    pub checks: Vec<ResemblanceCheck>,
    pub passed: bool,
}

impl ResemblanceReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.entry_deviation.max(c.eigen_deviation))
            .fold(0.0, f64::max)
    }
}

/// Like [`ppt_resemblance_report`], but a failed check becomes
/// [`Error::ConvergenceFailure`] carrying the largest deviation.
pub fn verify_ppt_resemblance(sf: &StandardForm, tolerance: f64) -> Result<ResemblanceReport> {
    let report = ppt_resemblance_report(sf, tolerance)?;
    if report.passed {
        Ok(report)
    } else {
        Err(Error::ConvergenceFailure(report.max_deviation()))
    }
}

/// Compares `Z_j(r)` at `r = 1e-6` and `1e6` against the limit matrices and the
/// spectrum against `{1,…,1} ∪ {4ν̃_k²}` from the partial transpose.
/// Entry tolerance `tolerance`; eigenvalue tolerance `1e-4`.
pub fn ppt_resemblance_report(sf: &StandardForm, tolerance: f64) -> Result<ResemblanceReport> {
    let n = sf.n();
    let v = sf.covariance();
    let mut checks = Vec::new();
    for b in crate::probes::enumerate_bipartitions(n)? {
        let group = b.group();
        let vt = partial_transpose(&v, &group)?;
        let mut expected: Vec<f64> = symplectic_eigenvalues(&vt)?
            .iter()
            .map(|nu| 4.0 * nu * nu)
            .collect();
        expected.extend(std::iter::repeat_n(1.0, n));
        expected.sort_by(f64::total_cmp);
        for dir in [LimitDirection::Momentum, LimitDirection::Position] {
            let sigma = squeezed_probe_covariance(n, dir.r())?;
            let z = z_matrix(&v, &sigma, &b)?;
            let lim = z_limit_matrix(sf, dir, &b)?;
            let entry_deviation = z
                .iter()
                .zip(lim.iter())
                .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
                .fold(0.0, f64::max);
            let eigen_deviation = spectrum_deviation(&z_spectrum(&v, &sigma, &b)?, &expected);
            let passed = entry_deviation <= tolerance && eigen_deviation <= 1e-4;
            checks.push(ResemblanceCheck {
                bipartition: b.clone(),
                direction: dir,
                entry_deviation,
                eigen_deviation,
                passed,
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ResemblanceReport { checks, passed })
}

/// Relative deviation between two ascending spectra.
fn spectrum_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
