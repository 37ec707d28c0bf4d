//! Example states and their evolution in a thermal loss channel.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, to_complex, to_complex_vec, RMat, RVec};
use crate::poly::{MultiPoly, PolyGaussianState};
use crate::symplectic::GaussianEnvelope;

/// Mixed continuous-variable GHZ family of three modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzParams {
    /// Squeezing, `r ≥ 0`.
    pub r: f64,
    /// Mixing (added isotropic noise), `g ≥ 0`.
    pub g: f64,
}

impl GhzParams {
    pub fn new(r: f64, g: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "squeezing r = {r} must be ≥ 0"
            )));
        }
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mixing g = {g} must be ≥ 0"
            )));
        }
        Ok(Self { r, g })
    }
}

/// Coefficients of the GHZ covariance block pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GhzCoefficients {
    /// `a = (e^{2r} + 2cosh2r)/3`, `b = (e^{-2r} + 2cosh2r)/3`, `c = (2/3) sinh2r`:
    /// the pure CV GHZ state at `g = 0`.
    #[default]
    Pure,
    /// `a = (e^{2r} + cosh2r)/2`, `b = (e^{-2r} + cosh2r)/2`, `c = sinh(2r)/2`.
    /// Same sign pattern, but mixed at `g = 0` for `r > 0`.
    Halved,
}

impl GhzCoefficients {
    /// `(a, b, c)` at squeezing `r`.
    pub fn entries(self, r: f64) -> (f64, f64, f64) {
        let ch = (2.0 * r).cosh();
        match self {
            GhzCoefficients::Pure => (
                ((2.0 * r).exp() + 2.0 * ch) / 3.0,
                ((-2.0 * r).exp() + 2.0 * ch) / 3.0,
                2.0 * (2.0 * r).sinh() / 3.0,
            ),
            GhzCoefficients::Halved => (
                ((2.0 * r).exp() + ch) / 2.0,
                ((-2.0 * r).exp() + ch) / 2.0,
                (2.0 * r).sinh() / 2.0,
            ),
        }
    }
}

/// Covariance `V_GHZ(r) + g I₆` with the pure coefficients.
pub fn ghz_state(p: GhzParams) -> Result<GaussianEnvelope> {
    ghz_state_with(p, GhzCoefficients::Pure)
}

pub fn ghz_state_with(p: GhzParams, coeffs: GhzCoefficients) -> Result<GaussianEnvelope> {
    let GhzParams { r, g } = GhzParams::new(p.r, p.g)?;
    let (a, b, c) = coeffs.entries(r);
    #[rustfmt::skip]
    let rows = [
         a, 0.0,  -c, 0.0,  -c, 0.0,
       0.0,   b, 0.0,   c, 0.0,   c,
        -c, 0.0,   a, 0.0,  -c, 0.0,
       0.0,   c, 0.0,   b, 0.0,   c,
        -c, 0.0,  -c, 0.0,   a, 0.0,
       0.0,   c, 0.0,   c, 0.0,   b,
    ];
    let v = RMat::from_row_slice(6, 6, &rows) * 0.5 + RMat::identity(6, 6) * g;
    GaussianEnvelope::physical(v, RVec::zeros(6))
}

/// Coherently photon-subtracted two-mode squeezed vacuum, one subtraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpsTsvsParams {
    pub r: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl CpsTsvsParams {
    pub fn new(r: f64, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "squeezing r = {r} is not finite"
            )));
        }
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "|α|² + |β|² = {norm}, expected 1"
            )));
        }
        Ok(Self { r, alpha, beta })
    }

    /// `α = |α| e^{i√2/2}`, `β = √(1-|α|²) e^{iπ/2}`, the phases used for the amplitude scans.
    pub fn scan_point(r: f64, alpha_abs: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha_abs) {
            return Err(Error::InvalidParameter(format!(
                "|α| = {alpha_abs} outside [0, 1]"
            )));
        }
        let alpha = Complex64::from_polar(alpha_abs, std::f64::consts::FRAC_1_SQRT_2);
        let beta = Complex64::from_polar(
            (1.0 - alpha_abs * alpha_abs).sqrt(),
            std::f64::consts::FRAC_PI_2,
        );
        Self::new(r, alpha, beta)
    }
}

fn real_poly(terms: &[(&[u32], f64)]) -> Result<MultiPoly> {
    MultiPoly::from_terms(
        4,
        terms
            .iter()
            .map(|(e, c)| (e.to_vec(), Complex64::new(*c, 0.0))),
    )
}

/// Wigner function `F(x) G_V(x)` with `V = ½ diag(e^{-2r}, e^{2r}, e^{-2r}, e^{2r})`;
/// `F` is expanded into real monomials in `(x₁, p₁, x₂, p₂)`.
pub fn cps_tsvs_state(p: CpsTsvsParams) -> Result<PolyGaussianState> {
    let CpsTsvsParams { r, alpha, beta } = CpsTsvsParams::new(p.r, p.alpha, p.beta)?;
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let w = alpha.conj() * beta;
    let (ch, sh) = (r.cosh(), r.sinh());
    let (c2, s2, cs) = (ch * ch, sh * sh, ch * sh);

    // 2cosh²r (...) + 2sinh²r (...): the |α|², |β|² parts add up; the cross terms
    // Re((x₁ ∓ ip₁)(x₂ ± ip₂) α*β) differ in the sign of the imaginary part.
    let diag = 2.0 * (c2 + s2);
    let sym = 4.0 * (c2 + s2) * w.re; // x₁x₂ + p₁p₂
    let anti = -4.0 * (c2 - s2) * w.im; // x₁p₂ - p₁x₂
                                        // -4 cosh r sinh r (|αp₁+βp₂|² - |αx₁+βx₂|²)
    let k = -4.0 * cs;
    let terms: [(&[u32], f64); 9] = [
        (&[2, 0, 0, 0], diag * a2 - k * a2),
        (&[0, 2, 0, 0], diag * a2 + k * a2),
        (&[0, 0, 2, 0], diag * b2 - k * b2),
        (&[0, 0, 0, 2], diag * b2 + k * b2),
        (&[1, 0, 1, 0], sym - 2.0 * k * w.re),
        (&[0, 1, 0, 1], sym + 2.0 * k * w.re),
        (&[1, 0, 0, 1], anti),
        (&[0, 1, 1, 0], -anti),
        (&[0, 0, 0, 0], -1.0),
    ];
    let poly = real_poly(&terms)?;
    let e = (2.0 * r).exp();
    let v = RMat::from_diagonal(&RVec::from_vec(vec![0.5 / e, 0.5 * e, 0.5 / e, 0.5 * e]));
    PolyGaussianState::new(GaussianEnvelope::centered(v)?, poly)
}

/// Independent thermal baths with equal rate and temperature on every mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalChannel {
    pub gamma: f64,
    pub n_th: f64,
}

impl ThermalChannel {
    pub fn new(gamma: f64, n_th: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rate γ = {gamma} must be positive"
            )));
        }
        if !(n_th >= 0.0 && n_th.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "N_th = {n_th} must be ≥ 0"
            )));
        }
        Ok(Self { gamma, n_th })
    }

    /// Drift matrix `Γ = (γ/2) I`.
    pub fn drift(&self, n: usize) -> RMat {
        RMat::identity(2 * n, 2 * n) * (self.gamma / 2.0)
    }

    /// Diffusion matrix `D = γ(1+2N_th)/4 I`.
    pub fn diffusion(&self, n: usize) -> RMat {
        RMat::identity(2 * n, 2 * n) * (self.gamma * (1.0 + 2.0 * self.n_th) / 4.0)
    }

    /// `σ(∞)`, solving `Γσ + σΓ = 2D`.
    pub fn stationary_variance(&self) -> f64 {
        (1.0 + 2.0 * self.n_th) / 2.0
    }

    /// Scalar `b(t) = e^{-γt/2}` (the drift is isotropic).
    pub fn damping(&self, t: f64) -> f64 {
        (-self.gamma * t / 2.0).exp()
    }

    /// Scalar `σ(t) = (1 - e^{-γt}) σ(∞)`.
    pub fn added_noise(&self, t: f64) -> f64 {
        -(-self.gamma * t).exp_m1() * self.stationary_variance()
    }

    pub fn covariance_at(&self, v0: &RMat, t: f64) -> RMat {
        let b = self.damping(t);
        let dim = v0.nrows();
        v0 * (b * b) + RMat::identity(dim, dim) * self.added_noise(t)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be ≥ 0")));
    }
    Ok(())
}

/// Propagates `W = F G_V` through the channel for time `t`.
///
/// With `x = b x' + noise`, the evolved Wigner function is `G_{V(t)}(x)` times
/// the conditional expectation of `F(x')` given `x`, i.e.
/// `F_t(x) = [exp(½∂ᵀS∂) F](x̄ + K(x - b x̄))`, `K = b V V(t)⁻¹`, `S = V - b² V V(t)⁻¹ V`.
pub fn green_propagate(
    state: &PolyGaussianState,
    ch: &ThermalChannel,
    t: f64,
) -> Result<PolyGaussianState> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(state.clone());
    }
    let env = state.envelope();
    let v = env.cov();
    let mean = env.mean();
    let b = ch.damping(t);
    let vt = ch.covariance_at(v, t);
    let vt_inv = spd_inverse(&vt)?;
    let k = v * &vt_inv * b;
    let s = crate::linalg::symmetrize(&(v - v * &vt_inv * v * (b * b)));
    let smoothed = state.poly().heat_series(&to_complex(&s));
    let offset = mean - &k * mean * b;
    let poly = smoothed.affine_substitute(&to_complex(&k), &to_complex_vec(&offset))?;
    let envelope = GaussianEnvelope::new(vt, mean * b)?;
    PolyGaussianState::new(envelope, poly)
}

/// Coefficient-wise comparison of [`green_propagate`] with the closed form for
/// quadratic `F` and zero mean:
/// `F(b⁻¹(ε⁻¹σ + I)⁻¹x) + ½ Σ (ε⁻¹+σ⁻¹)⁻¹_{lm} ∂_l∂_m F(b⁻¹x)|₀`, `ε = b² V`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionCheck {
    pub max_deviation: f64,
    pub propagated: MultiPoly,
    pub closed_form: MultiPoly,
}

pub fn evolved_polynomial_check(
    state: &PolyGaussianState,
    ch: &ThermalChannel,
    t: f64,
) -> Result<EvolutionCheck> {
    check_time(t)?;
    if state.poly().degree() > 2 {
        return Err(Error::InvalidParameter(
            "closed form applies to polynomials of degree ≤ 2".into(),
        ));
    }
    if state.envelope().mean().iter().any(|x| *x != 0.0) {
        return Err(Error::InvalidParameter(
            "closed form applies to zero-mean states".into(),
        ));
    }
    let propagated = green_propagate(state, ch, t)?.poly().clone();
    let closed_form = if t == 0.0 {
        state.poly().clone()
    } else {
        let v = state.envelope().cov();
        let dim = v.nrows();
        let id = RMat::identity(dim, dim);
        let b = ch.damping(t);
        let eps = v * (b * b);
        let sigma = &id * ch.added_noise(t);
        let eps_inv = spd_inverse(&eps)?;
        let m = (&eps_inv * &sigma + &id)
            .try_inverse()
            .ok_or_else(|| Error::NumericalFailure("singular ε⁻¹σ + I".into()))?;
        let zero = RVec::zeros(dim);
        let first = state.poly().affine_substitute_real(&(m / b), &zero)?;
        let scaled = state.poly().affine_substitute_real(&(&id / b), &zero)?;
        let sp = spd_inverse(&(&eps_inv + spd_inverse(&sigma)?))?;
        let second = scaled.half_laplacian(&to_complex(&crate::linalg::symmetrize(&sp)));
        let c = second.coeff(&vec![0; dim]);
        &first + &MultiPoly::constant(dim, c)
    };
    let max_deviation = propagated.max_coeff_diff(&closed_form);
    Ok(EvolutionCheck {
        max_deviation,
        propagated,
        closed_form,
    })
}
