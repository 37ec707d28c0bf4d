//! The separability hierarchy `τ_{k,n}`: general polynomial-Gaussian form,
//! Gaussian closed form, and the simplified symmetric-probe form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, complex_inverse, complex_logdet, spd_inverse, spd_logdet, symmetrize_complex,
    to_complex, to_complex_vec, CMat, CVec, RMat, RVec,
};
use crate::poly::{gaussian_operator_parts, MultiPoly, PolyGaussianState, QuadraticKernel};
use crate::probes::{
    composite_offdiag_moments, enumerate_bipartitions, permuted_moments, Bipartition,
    GaussianWeylSymbol, ProbeSet, PURITY_TOL,
};
use crate::symplectic::{j_form, GaussianEnvelope};

/// Diagonal matrix elements below `-DIAGONAL_TOL` are reported as numerical failures.
pub const DIAGONAL_TOL: f64 = 1e-10;

/// How the coefficients of a scheme were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    /// `k = n`, all `a_j = 1`.
    Genuine,
    /// `k = 2`, all `a_j = 1/(2^{n-1}-1)`.
    Biseparable,
    /// `2 < k < n`: uniform weights `1/(2^{b-1}-1)` with `b = ⌈n/(k-1)⌉`.
    ProducibleUniform,
    /// Supplied by the caller.
    Custom,
}

/// Coefficients `a_j^{(k,n)}`, indexed by bipartition index `j - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientScheme {
    n: usize,
    k: usize,
    kind: SchemeKind,
    coefficients: Vec<f64>,
}

fn bipartition_count(n: usize) -> usize {
    (1usize << (n - 1)) - 1
}

impl CoefficientScheme {
    fn check_nk(n: usize, k: usize) -> Result<()> {
        if !(2..=20).contains(&n) {
            return Err(Error::InvalidParameter(format!(
                "mode count n = {n} outside 2..=20"
            )));
        }
        if k < 2 || k > n {
            return Err(Error::InvalidParameter(format!(
                "level k = {k} outside 2..={n}"
            )));
        }
        Ok(())
    }

    pub fn genuine(n: usize) -> Result<Self> {
        Self::check_nk(n, n)?;
        Ok(Self {
            n,
            k: n,
            kind: SchemeKind::Genuine,
            coefficients: vec![1.0; bipartition_count(n)],
        })
    }

    pub fn biseparable(n: usize) -> Result<Self> {
        Self::check_nk(n, 2)?;
        let m = bipartition_count(n);
        Ok(Self {
            n,
            k: 2,
            kind: SchemeKind::Biseparable,
            coefficients: vec![1.0 / m as f64; m],
        })
    }

    /// Built-in scheme for level `k`. For `2 < k < n` every bipartition gets the
    /// weight `1/(2^{b-1}-1)`, `b = ⌈n/(k-1)⌉`. A pure state that factorizes into
    /// blocks of at most `k-1` modes has at least `b` blocks and is therefore a
    /// product across at least `2^{b-1}-1` bipartitions, whose weights sum to ≥ 1;
    /// this keeps `τ ≤ 0` on such states. It is not claimed to be the strongest choice.
    pub fn for_level(n: usize, k: usize) -> Result<Self> {
        Self::check_nk(n, k)?;
        if k == n {
            return Self::genuine(n);
        }
        if k == 2 {
            return Self::biseparable(n);
        }
        let blocks = n.div_ceil(k - 1);
        let w = 1.0 / ((1usize << (blocks - 1)) - 1) as f64;
        Ok(Self {
            n,
            k,
            kind: SchemeKind::ProducibleUniform,
            coefficients: vec![w; bipartition_count(n)],
        })
    }

    /// User-supplied coefficients (one per bipartition, in enumeration order).
    pub fn custom(n: usize, k: usize, coefficients: Vec<f64>) -> Result<Self> {
        Self::check_nk(n, k)?;
        let m = bipartition_count(n);
        if coefficients.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: coefficients.len(),
            });
        }
        if let Some(bad) = coefficients.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "coefficient {bad} is not a non-negative number"
            )));
        }
        Ok(Self {
            n,
            k,
            kind: SchemeKind::Custom,
            coefficients,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `a_j` for the 1-based bipartition index `j`.
    pub fn coefficient(&self, j: usize) -> f64 {
        self.coefficients[j - 1]
    }

    pub fn total(&self) -> f64 {
        self.coefficients.iter().sum()
    }
}

/// One subtracted term `a_j e^{-β_j/4} √(f_{Φ1j} f_{Φ2j})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartitionTerm {
    pub index: usize,
    pub coefficient: f64,
    pub term: f64,
}

/// `τ` together with its decomposition and the probes used.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyResult {
    pub value: f64,
    pub first_term: f64,
    pub per_bipartition: Vec<BipartitionTerm>,
    pub probes: ProbeSet,
}

/// A state moved to zero mean: `F(y + x̄)` with envelope covariance `V`.
struct CenteredState {
    v: RMat,
    v_inv: RMat,
    poly: Option<MultiPoly>,
    mean: RVec,
}

impl CenteredState {
    fn new(env: &GaussianEnvelope, poly: Option<&MultiPoly>) -> Result<Self> {
        let v = env.cov().clone();
        let v_inv = spd_inverse(&v)?;
        let mean = env.mean().clone();
        let poly = match poly {
            None => None,
            Some(p) if mean.iter().all(|x| *x == 0.0) => Some(p.clone()),
            Some(p) => {
                let dim = mean.len();
                Some(p.affine_substitute_real(&RMat::identity(dim, dim), &mean)?)
            }
        };
        Ok(Self {
            v,
            v_inv,
            poly,
            mean,
        })
    }

    /// `[exp(½∂ᵀM∂)F](Vs)` with `M = (Σ⁻¹+V⁻¹)⁻¹ = V(Σ+V)⁻¹Σ` and `s = (Σ+V)⁻¹μ`,
    /// or `1` for Gaussian states. `k = (Σ+V)⁻¹`.
    fn poly_factor(&self, k: &CMat, sigma: &CMat, kmu: &CVec) -> Result<Complex64> {
        let Some(p) = &self.poly else {
            return Ok(Complex64::new(1.0, 0.0));
        };
        let v = to_complex(&self.v);
        let m = symmetrize_complex(&(&v * k * sigma));
        let shift = &v * kmu;
        p.heat_series(&m).eval(shift.as_slice())
    }

    /// Log-magnitude of the first term, `ln|f_21| - ½α`, written as
    /// `-½Re(bᵀ(Σ21+V)⁻¹b) - ½wᵀVw + ln|q| - ½ln|det(Σ21+V)|` with `w = J(X1-X2)` and
    /// `b = (X1+X2)/2 - iVw`. No inverse of the (possibly very squeezed) `Σ21` appears.
    fn log_first(&self, ps: &ProbeSet, w: &GaussianWeylSymbol) -> Result<f64> {
        let n = ps.n();
        let sv = w.sigma() + to_complex(&self.v);
        let k = complex_inverse(&sv)?;
        let jd = j_form(n) * (ps.phi1_mean() - ps.phi2_mean());
        let vw = &self.v * &jd;
        let avg = (ps.phi1_mean() + ps.phi2_mean()) * 0.5;
        let b = CVec::from_fn(2 * n, |i, _| Complex64::new(avg[i], -vw[i]));
        let gauss = -0.5 * (b.transpose() * &k * &b)[(0, 0)].re - 0.5 * jd.dot(&vw);
        let q = self.poly_factor(&k, w.sigma(), &(&k * w.mean()))?;
        Ok(gauss + q.norm().ln() - 0.5 * complex_logdet(&sv)?.re)
    }

    /// `ln⟨Φ|ρ|Φ⟩` up to constants for a real diagonal symbol:
    /// `-½Xᵀ(Σ+V)⁻¹X + ln q - ½ln det(Σ+V)`.
    fn log_diagonal(&self, w: &GaussianWeylSymbol) -> Result<f64> {
        let sigma = w.real_sigma();
        let mean = w.real_mean();
        let sv = &sigma + &self.v;
        let chol = cholesky(&sv)?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let kx = chol.solve(&mean);
        let gauss = -0.5 * mean.dot(&kx) - 0.5 * logdet;
        let q = match &self.poly {
            None => return Ok(gauss),
            Some(_) => {
                let k = to_complex(&chol.inverse());
                self.poly_factor(&k, &to_complex(&sigma), &to_complex_vec(&kx))?
            }
        };
        if q.re < 0.0 {
            let value = -(gauss + (-q.re).ln()).exp();
            if value < -DIAGONAL_TOL {
                return Err(Error::NumericalFailure(format!(
                    "negative diagonal matrix element {value:e}"
                )));
            }
            return Ok(f64::NEG_INFINITY);
        }
        Ok(gauss + q.re.ln())
    }
}

fn evaluate(
    env: &GaussianEnvelope,
    poly: Option<&MultiPoly>,
    ps: &ProbeSet,
    cs: &CoefficientScheme,
) -> Result<HierarchyResult> {
    let n = env.n();
    if ps.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: ps.n(),
        });
    }
    if cs.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cs.n(),
        });
    }
    let state = CenteredState::new(env, poly)?;
    let shifted = ps.displaced(&(-&state.mean))?;

    let w21 = composite_offdiag_moments(&shifted);
    let ld12 = spd_logdet(&(shifted.phi1_sigma() + shifted.phi2_sigma()))?;
    let first_term = (state.log_first(&shifted, &w21)? - 0.25 * ld12).exp();

    let mut per_bipartition = Vec::new();
    let mut subtracted = 0.0;
    for b in enumerate_bipartitions(n)? {
        let aj = cs.coefficient(b.index());
        let (w1, w2) = permuted_moments(&shifted, &b)?;
        let l1 = state.log_diagonal(&w1)?;
        let l2 = state.log_diagonal(&w2)?;
        let term = aj * (0.5 * (l1 + l2)).exp();
        subtracted += term;
        per_bipartition.push(BipartitionTerm {
            index: b.index(),
            coefficient: aj,
            term,
        });
    }
    let value = first_term - subtracted;
    if !value.is_finite() {
        return Err(Error::NumericalFailure("non-finite hierarchy value".into()));
    }
    Ok(HierarchyResult {
        value,
        first_term,
        per_bipartition,
        probes: ps.clone(),
    })
}

/// `τ_{k,n}` for a polynomial-Gaussian state and an arbitrary probe set.
pub fn tau_general(
    state: &PolyGaussianState,
    ps: &ProbeSet,
    cs: &CoefficientScheme,
) -> Result<HierarchyResult> {
    evaluate(state.envelope(), Some(state.poly()), ps, cs)
}

/// `τ_{k,n}` for a Gaussian state (`F = 1`) using the closed-form `f_u`.
pub fn tau_gaussian(
    env: &GaussianEnvelope,
    ps: &ProbeSet,
    cs: &CoefficientScheme,
) -> Result<HierarchyResult> {
    evaluate(env, None, ps, cs)
}

/// Complex matrix element `(2π)^n ∫ W_ρ W_u`, i.e. `Tr(ρ Â_u)` for the operator
/// whose Weyl symbol is `w`. Uses the square-root branch of the convergent Gaussian integral.
pub fn matrix_element(state: &PolyGaussianState, w: &GaussianWeylSymbol) -> Result<Complex64> {
    let env = state.envelope();
    let n = env.n();
    let cstate = CenteredState::new(env, Some(state.poly()))?;
    let mean = w.mean() - to_complex_vec(&cstate.mean);
    let sigma_inv = complex_inverse(w.sigma())?;
    let a = &sigma_inv + to_complex(&cstate.v_inv);
    let m = complex_inverse(&a)?;
    let c = &sigma_inv * &mean;
    let kernel = QuadraticKernel::new(m, c)?;
    let (e, q) = gaussian_operator_parts(cstate.poly.as_ref().unwrap(), &kernel)?;
    let x_quad = (mean.transpose() * &sigma_inv * &mean)[(0, 0)];
    let log_sqrt_det_a = sqrt_det_branch(&a)?;
    let log_det_v = spd_logdet(&cstate.v)?;
    let log = w.lognorm() - x_quad * 0.5 + e - log_sqrt_det_a - 0.5 * log_det_v
        + Complex64::new(n as f64 * (2.0 * std::f64::consts::PI).ln(), 0.0);
    Ok(log.exp() * q)
}

/// `ln √det A` on the branch continuous in `A` for complex symmetric `A`
/// with positive-definite real part (all eigenvalues in the right half-plane).
fn sqrt_det_branch(a: &CMat) -> Result<Complex64> {
    let schur = nalgebra::Schur::try_new(a.clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::NumericalFailure("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..t.nrows() {
        acc += t[(i, i)].ln() * 0.5;
    }
    Ok(acc)
}

/// Checks that `sigma` is block-diagonal with pure 2×2 blocks.
pub fn check_probe_covariance(sigma: &RMat) -> Result<()> {
    let dim = sigma.nrows();
    if !dim.is_multiple_of(2) || sigma.ncols() != dim {
        return Err(Error::InvalidProbe("probe covariance must be 2n×2n".into()));
    }
    for i in 0..dim {
        for j in 0..dim {
            if i / 2 != j / 2 && sigma[(i, j)] != 0.0 {
                return Err(Error::InvalidProbe(
                    "probe covariance is not block-diagonal".into(),
                ));
            }
        }
    }
    for m in 0..dim / 2 {
        let b = sigma.fixed_view::<2, 2>(2 * m, 2 * m);
        let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
        if (det - 0.25).abs() > PURITY_TOL * b.norm_squared().max(1.0) || b[(0, 0)] <= 0.0 {
            return Err(Error::InvalidProbe(format!(
                "block {m} has det {det}, expected 1/4"
            )));
        }
        if (b[(0, 1)] - b[(1, 0)]).abs() > 1e-12 * b.amax().max(1.0) {
            return Err(Error::InvalidProbe(format!("block {m} is not symmetric")));
        }
    }
    Ok(())
}

/// Precomputed pieces of the symmetric-probe hierarchy `τ̃_{k,n}` for one state.
#[derive(Debug, Clone)]
pub struct SymmetricTau {
    v: RMat,
    j: RMat,
    signs: Vec<(RVec, f64)>,
}

impl SymmetricTau {
    pub fn new(env: &GaussianEnvelope, cs: &CoefficientScheme) -> Result<Self> {
        let n = env.n();
        if cs.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: cs.n(),
            });
        }
        let signs = enumerate_bipartitions(n)?
            .iter()
            .map(|b: &Bipartition| (b.signs(), cs.coefficient(b.index())))
            .collect();
        Ok(Self {
            v: env.cov().clone(),
            j: j_form(n),
            signs,
        })
    }

    pub fn n(&self) -> usize {
        self.v.nrows() / 2
    }

    pub fn cov(&self) -> &RMat {
        &self.v
    }

    /// `τ̃ = [e^{-2XᵀJᵀ(Σ⁻¹+V⁻¹)⁻¹JX} - Σ_j a_j e^{-½XᵀP_j(Σ+V)⁻¹P_jX}] / √det(Σ+V)`,
    /// without validating `sigma`.
    pub fn eval_unchecked(&self, x: &RVec, sigma: &RMat) -> Result<f64> {
        let s = sigma + &self.v;
        let chol = cholesky(&s)?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        // (Σ⁻¹+V⁻¹)⁻¹ = Σ (Σ+V)⁻¹ V
        let jx = &self.j * x;
        let vjx = &self.v * &jx;
        let sjx = sigma * &jx;
        let q0 = 2.0 * sjx.dot(&chol.solve(&vjx));
        let mut sub = 0.0;
        for (p, aj) in &self.signs {
            if *aj == 0.0 {
                continue;
            }
            let px = x.component_mul(p);
            let qj = 0.5 * px.dot(&chol.solve(&px));
            sub += aj * (-qj).exp();
        }
        Ok(((-q0).exp() - sub) * (-0.5 * logdet).exp())
    }

    pub fn eval(&self, x: &RVec, sigma: &RMat) -> Result<f64> {
        let dim = self.v.nrows();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        crate::linalg::check_square(sigma, dim)?;
        check_probe_covariance(sigma)?;
        self.eval_unchecked(x, sigma)
    }
}

/// Simplified hierarchy `τ̃_{k,n}` with `Σ_{Φ1} = Σ_{Φ2} = Σ` and
/// `X_{Φ1} - x̄ = X = -(X_{Φ2} - x̄)`.
pub fn tau_symmetric(
    env: &GaussianEnvelope,
    x: &RVec,
    sigma: &RMat,
    cs: &CoefficientScheme,
) -> Result<f64> {
    SymmetricTau::new(env, cs)?.eval(x, sigma)
}

/// The probe set realizing the symmetric identification for `(X, Σ)` around the state mean.
pub fn symmetric_probe_set(env: &GaussianEnvelope, x: &RVec, sigma: &RMat) -> Result<ProbeSet> {
    ProbeSet::symmetric(sigma, x, env.mean())
}
