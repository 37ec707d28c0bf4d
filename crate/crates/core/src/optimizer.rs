//! Multi-start simplex maximization of the hierarchy over probe parameters.
//!
//! Squeezing is bounded smoothly, `s = s_max tanh(u / s_max)`, and the displacement
//! is expressed in units of the Cholesky factor of `Σ + V`, so that the natural
//! length scale of the Gaussian factors does not depend on how strongly the probes
//! are squeezed.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hierarchy::{tau_general, CoefficientScheme, SymmetricTau};
use crate::linalg::{block_diag, cholesky, RMat, RVec};
use crate::nelder_mead::{minimize, NelderMeadOptions};
use crate::poly::PolyGaussianState;
use crate::probes::{squeezed_block, ProbeSet, SingleModeProbe};
use crate::symplectic::GaussianEnvelope;

pub const DETECTION_THRESHOLD: f64 = 1e-9;
pub const DEFAULT_S_MAX: f64 = 6.0;
/// Squeezing of the axis-aligned deterministic starts.
pub const START_SQUEEZING: f64 = 3.0;

/// Probe parameters found by the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeParameterization {
    /// `Σ_{Φ1} = Σ_{Φ2}` with blocks `(s_m, θ_m)`; `X_{Φ1} - x̄ = X = -(X_{Φ2} - x̄)`.
    Symmetric {
        s: Vec<f64>,
        theta: Vec<f64>,
        x: RVec,
        s_max: f64,
    },
    /// All `2n` probes independent.
    Full {
        s: Vec<f64>,
        theta: Vec<f64>,
        means: Vec<Vector2<f64>>,
        s_max: f64,
    },
}

fn wrap_angle(t: f64) -> f64 {
    t.rem_euclid(std::f64::consts::PI)
}

impl ProbeParameterization {
    pub fn symmetric(s: Vec<f64>, theta: Vec<f64>, x: RVec, s_max: f64) -> Result<Self> {
        let n = s.len();
        if theta.len() != n || x.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: theta.len().min(x.len() / 2),
            });
        }
        if let Some(bad) = s.iter().find(|v| !(v.abs() <= s_max)) {
            return Err(Error::InvalidProbe(format!(
                "squeezing {bad} exceeds bound {s_max}"
            )));
        }
        let theta = theta.into_iter().map(wrap_angle).collect();
        Ok(Self::Symmetric { s, theta, x, s_max })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Symmetric { s, .. } => s.len(),
            Self::Full { s, .. } => s.len() / 2,
        }
    }

    pub fn s_max(&self) -> f64 {
        match self {
            Self::Symmetric { s_max, .. } | Self::Full { s_max, .. } => *s_max,
        }
    }

    /// Block-diagonal probe covariance (of `Φ1` for the full form).
    pub fn sigma(&self) -> RMat {
        let (s, theta) = match self {
            Self::Symmetric { s, theta, .. } | Self::Full { s, theta, .. } => (s, theta),
        };
        let n = self.n();
        let blocks: Vec<RMat> = (0..n)
            .map(|m| {
                let b = squeezed_block(s[m], theta[m]);
                RMat::from_fn(2, 2, |i, j| b[(i, j)])
            })
            .collect();
        block_diag(&blocks)
    }

    /// The probe set realized around `center` (the state mean).
    pub fn probe_set(&self, center: &RVec) -> Result<ProbeSet> {
        match self {
            Self::Symmetric { x, .. } => ProbeSet::symmetric(&self.sigma(), x, center),
            Self::Full {
                s, theta, means, ..
            } => {
                let n = self.n();
                let probes = (0..2 * n)
                    .map(|i| {
                        let m = i % n;
                        let c = Vector2::new(center[2 * m], center[2 * m + 1]);
                        SingleModeProbe::squeezed(s[i], theta[i], c + means[i])
                    })
                    .collect();
                ProbeSet::new(probes)
            }
        }
    }
}

/// What is being maximized.
#[derive(Debug, Clone, Copy)]
pub enum HierarchyTarget<'a> {
    /// Gaussian state: the symmetric closed form `τ̃`.
    Gaussian(&'a GaussianEnvelope),
    /// General polynomial-Gaussian state: `τ` through the probe matrix elements.
    PolyGaussian(&'a PolyGaussianState),
}

impl HierarchyTarget<'_> {
    pub fn envelope(&self) -> &GaussianEnvelope {
        match self {
            HierarchyTarget::Gaussian(e) => e,
            HierarchyTarget::PolyGaussian(s) => s.envelope(),
        }
    }

    pub fn n(&self) -> usize {
        self.envelope().n()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_evals: usize,
    pub s_max: f64,
    pub threshold: f64,
    /// Simplex diameter at which a restart counts as converged.
    pub tolerance: f64,
    /// Use the symmetric probe identification; `false` optimizes all `2n` probes
    /// (only for polynomial-Gaussian targets).
    pub symmetric: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0,
            max_evals: 2000,
            s_max: DEFAULT_S_MAX,
            threshold: DETECTION_THRESHOLD,
            tolerance: 1e-8,
            symmetric: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub best_value: f64,
    pub best_params: ProbeParameterization,
    pub restarts: usize,
    pub converged_restarts: usize,
    pub evaluations: usize,
    /// Index of the start that produced the best value (extra starts come first).
    pub best_start: usize,
}

impl OptimizationReport {
    pub fn detected(&self, threshold: f64) -> bool {
        self.best_value > threshold
    }
}

/// Objective in raw coordinates; the decoder maps them to probe parameters.
struct Objective<'a> {
    target: HierarchyTarget<'a>,
    cs: &'a CoefficientScheme,
    sym: Option<SymmetricTau>,
    s_max: f64,
    symmetric: bool,
}

impl<'a> Objective<'a> {
    fn new(
        target: HierarchyTarget<'a>,
        cs: &'a CoefficientScheme,
        config: &OptimizerConfig,
    ) -> Result<Self> {
        let symmetric = config.symmetric || matches!(target, HierarchyTarget::Gaussian(_));
        let sym = match target {
            HierarchyTarget::Gaussian(env) => Some(SymmetricTau::new(env, cs)?),
            HierarchyTarget::PolyGaussian(_) => None,
        };
        Ok(Self {
            target,
            cs,
            sym,
            s_max: config.s_max,
            symmetric,
        })
    }

    fn n(&self) -> usize {
        self.target.n()
    }

    fn squeeze(&self, u: f64) -> f64 {
        self.s_max * (u / self.s_max).tanh()
    }

    fn unsqueeze(&self, s: f64) -> f64 {
        let t = (s / self.s_max).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
        self.s_max * t.atanh()
    }

    /// Raw layout, symmetric: `[u_1..u_n, θ_1..θ_n, y_1..y_2n]` with `X = L y`,
    /// `L Lᵀ = Σ + V`. Full: `[u (2n), θ (2n), y (4n)]`, `L` from `Σ_{Φ1} + V`.
    fn decode(&self, p: &[f64]) -> Result<ProbeParameterization> {
        let n = self.n();
        let v = self.target.envelope().cov();
        if self.symmetric {
            let s: Vec<f64> = p[..n].iter().map(|u| self.squeeze(*u)).collect();
            let theta: Vec<f64> = p[n..2 * n].iter().map(|t| wrap_angle(*t)).collect();
            let probe = ProbeParameterization::Symmetric {
                s,
                theta,
                x: RVec::zeros(2 * n),
                s_max: self.s_max,
            };
            let l = cholesky(&(probe.sigma() + v))?.l();
            let x = l * RVec::from_column_slice(&p[2 * n..]);
            match probe {
                ProbeParameterization::Symmetric { s, theta, .. } => {
                    Ok(ProbeParameterization::Symmetric {
                        s,
                        theta,
                        x,
                        s_max: self.s_max,
                    })
                }
                _ => unreachable!(),
            }
        } else {
            let s: Vec<f64> = p[..2 * n].iter().map(|u| self.squeeze(*u)).collect();
            let theta: Vec<f64> = p[2 * n..4 * n].iter().map(|t| wrap_angle(*t)).collect();
            let head = ProbeParameterization::Full {
                s,
                theta,
                means: Vec::new(),
                s_max: self.s_max,
            };
            let l = cholesky(&(head.sigma() + v))?.l();
            let y = RVec::from_column_slice(&p[4 * n..6 * n]);
            let z = RVec::from_column_slice(&p[6 * n..8 * n]);
            let x1 = &l * y;
            let x2 = &l * z;
            let mut means = Vec::with_capacity(2 * n);
            for x in [&x1, &x2] {
                for m in 0..n {
                    means.push(Vector2::new(x[2 * m], x[2 * m + 1]));
                }
            }
            match head {
                ProbeParameterization::Full { s, theta, .. } => Ok(ProbeParameterization::Full {
                    s,
                    theta,
                    means,
                    s_max: self.s_max,
                }),
                _ => unreachable!(),
            }
        }
    }

    /// Inverse of `decode` (up to angle wrapping).
    fn encode(&self, params: &ProbeParameterization) -> Result<Vec<f64>> {
        let n = self.n();
        let v = self.target.envelope().cov();
        let solve_l = |sigma: RMat, x: &RVec| -> Result<RVec> {
            let l = cholesky(&(sigma + v))?.l();
            l.solve_lower_triangular(x)
                .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))
        };
        match (params, self.symmetric) {
            (ProbeParameterization::Symmetric { s, theta, x, .. }, true) => {
                if s.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: s.len(),
                    });
                }
                let y = solve_l(params.sigma(), x)?;
                let mut p: Vec<f64> = s.iter().map(|v| self.unsqueeze(*v)).collect();
                p.extend(theta);
                p.extend(y.iter());
                Ok(p)
            }
            (ProbeParameterization::Symmetric { s, theta, x, s_max }, false) => {
                let mut s2 = s.clone();
                s2.extend(s);
                let mut t2 = theta.clone();
                t2.extend(theta);
                let means = (0..2 * n)
                    .map(|i| {
                        let m = i % n;
                        let sign = if i < n { 1.0 } else { -1.0 };
                        Vector2::new(sign * x[2 * m], sign * x[2 * m + 1])
                    })
                    .collect();
                self.encode(&ProbeParameterization::Full {
                    s: s2,
                    theta: t2,
                    means,
                    s_max: *s_max,
                })
            }
            (
                ProbeParameterization::Full {
                    s, theta, means, ..
                },
                false,
            ) => {
                if s.len() != 2 * n {
                    return Err(Error::DimensionMismatch {
                        expected: 2 * n,
                        got: s.len(),
                    });
                }
                let sigma = params.sigma();
                let mut p: Vec<f64> = s.iter().map(|v| self.unsqueeze(*v)).collect();
                p.extend(theta);
                for half in 0..2 {
                    let x = RVec::from_fn(2 * n, |i, _| means[half * n + i / 2][i % 2]);
                    p.extend(solve_l(sigma.clone(), &x)?.iter());
                }
                Ok(p)
            }
            (ProbeParameterization::Full { .. }, true) => Err(Error::InvalidParameter(
                "a full probe parameterization cannot seed a symmetric search".into(),
            )),
        }
    }

    fn value(&self, params: &ProbeParameterization) -> Result<f64> {
        match (&self.sym, self.target) {
            (Some(sym), _) => match params {
                ProbeParameterization::Symmetric { x, .. } => {
                    sym.eval_unchecked(x, &params.sigma())
                }
                _ => Err(Error::InvalidParameter(
                    "Gaussian targets use the symmetric form".into(),
                )),
            },
            (None, HierarchyTarget::PolyGaussian(state)) => {
                let ps = params.probe_set(state.envelope().mean())?;
                Ok(tau_general(state, &ps, self.cs)?.value)
            }
            (None, HierarchyTarget::Gaussian(_)) => unreachable!(),
        }
    }

    fn raw_value(&self, p: &[f64]) -> f64 {
        match self.decode(p).and_then(|params| self.value(&params)) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NAN,
        }
    }

    /// Start `i` of the deterministic sequence: vacuum probes at `X = 0`, then
    /// axis-aligned squeezing `s = ±3`, then random draws.
    fn start(&self, i: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.n();
        let (nq, nx) = if self.symmetric {
            (n, 2 * n)
        } else {
            (2 * n, 4 * n)
        };
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let wide = Normal::new(0.0, 1.5).expect("normal");
        let mut p = Vec::with_capacity(2 * nq + nx);
        match i {
            0 => {
                p.extend(std::iter::repeat_n(0.0, 2 * nq + nx));
            }
            1 | 2 => {
                let s = if i == 1 {
                    START_SQUEEZING
                } else {
                    -START_SQUEEZING
                };
                p.extend(std::iter::repeat_n(self.unsqueeze(s), nq));
                p.extend(std::iter::repeat_n(0.0, nq));
                p.extend((0..nx).map(|_| unit.sample(rng)));
            }
            _ => {
                let bound = START_SQUEEZING.min(self.s_max);
                p.extend((0..nq).map(|_| self.unsqueeze(rng.random_range(-bound..=bound))));
                p.extend((0..nq).map(|_| rng.random_range(0.0..std::f64::consts::PI)));
                p.extend((0..nx).map(|_| wide.sample(rng)));
            }
        }
        p
    }
}

fn initial_step(p: &[f64]) -> Vec<f64> {
    p.iter().map(|_| 0.25).collect()
}

struct RestartOutcome {
    value: f64,
    raw: Vec<f64>,
    evaluations: usize,
    converged: bool,
}

fn run_restart(obj: &Objective, x0: Vec<f64>, config: &OptimizerConfig) -> RestartOutcome {
    let opts = NelderMeadOptions {
        max_evals: config.max_evals,
        x_tol: config.tolerance,
    };
    let step = initial_step(&x0);
    let res = minimize(|p| -obj.raw_value(p), &x0, &step, &opts);
    RestartOutcome {
        value: -res.value,
        raw: res.x,
        evaluations: res.evaluations,
        converged: res.converged,
    }
}

/// Maximizes the hierarchy over probes. Deterministic in `config.seed`: restart `i`
/// draws from its own ChaCha stream, so adding restarts never changes earlier ones.
pub fn maximize_tau(
    target: HierarchyTarget,
    cs: &CoefficientScheme,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    maximize_tau_with_starts(target, cs, config, &[])
}

/// As [`maximize_tau`], additionally starting from each of `extra` (run first).
pub fn maximize_tau_with_starts(
    target: HierarchyTarget,
    cs: &CoefficientScheme,
    config: &OptimizerConfig,
    extra: &[ProbeParameterization],
) -> Result<OptimizationReport> {
    if config.restarts == 0 && extra.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one restart is required".into(),
        ));
    }
    if !(config.s_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "s_max = {} must be positive",
            config.s_max
        )));
    }
    if cs.n() != target.n() {
        return Err(Error::DimensionMismatch {
            expected: target.n(),
            got: cs.n(),
        });
    }
    let obj = Objective::new(target, cs, config)?;

    let mut starts = Vec::with_capacity(extra.len() + config.restarts);
    for e in extra {
        let clamped = clamp_squeezing(e, config.s_max);
        starts.push(obj.encode(&clamped)?);
    }
    for i in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(i as u64);
        starts.push(obj.start(i, &mut rng));
    }

    let outcomes: Vec<RestartOutcome> = starts
        .into_par_iter()
        .map(|x0| run_restart(&obj, x0, config))
        .collect();

    let mut best: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value.is_finite() && best.is_none_or(|b| o.value > outcomes[b].value) {
            best = Some(i);
        }
    }
    let Some(bi) = best else {
        return Err(Error::OptimizationFailed(format!(
            "none of {} restarts produced a finite value",
            outcomes.len()
        )));
    };
    let best_params = obj.decode(&outcomes[bi].raw)?;
    let best_value = obj.value(&best_params)?;
    Ok(OptimizationReport {
        best_value,
        best_params,
        restarts: outcomes.len(),
        converged_restarts: outcomes.iter().filter(|o| o.converged).count(),
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        best_start: bi,
    })
}

/// The first `config.restarts` deterministic starts of [`maximize_tau`], decoded.
pub fn start_parameters(
    target: HierarchyTarget,
    cs: &CoefficientScheme,
    config: &OptimizerConfig,
) -> Result<Vec<ProbeParameterization>> {
    let obj = Objective::new(target, cs, config)?;
    (0..config.restarts)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            obj.decode(&obj.start(i, &mut rng))
        })
        .collect()
}

fn clamp_squeezing(p: &ProbeParameterization, s_max: f64) -> ProbeParameterization {
    let c = |s: &Vec<f64>| {
        s.iter()
            .map(|v| v.clamp(-0.999 * s_max, 0.999 * s_max))
            .collect()
    };
    match p {
        ProbeParameterization::Symmetric { s, theta, x, .. } => ProbeParameterization::Symmetric {
            s: c(s),
            theta: theta.clone(),
            x: x.clone(),
            s_max,
        },
        ProbeParameterization::Full {
            s, theta, means, ..
        } => ProbeParameterization::Full {
            s: c(s),
            theta: theta.clone(),
            means: means.clone(),
            s_max,
        },
    }
}

/// Re-evaluates the objective at given parameters (the certificate check).
pub fn evaluate_params(
    target: HierarchyTarget,
    cs: &CoefficientScheme,
    params: &ProbeParameterization,
) -> Result<f64> {
    let symmetric = matches!(params, ProbeParameterization::Symmetric { .. });
    let config = OptimizerConfig {
        symmetric,
        s_max: params.s_max(),
        ..Default::default()
    };
    Objective::new(target, cs, &config)?.value(params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelVerdict {
    pub detected: bool,
    pub report: OptimizationReport,
}

/// Runs the optimizer for each level `k` (default `2..=n`, built-in schemes).
/// Levels are processed from the highest down and each search is also started
/// from the optimum of the level above: with weights that do not increase as
/// `k` decreases, the lower level's value at that point is at least as large.
pub fn classify_state(
    target: HierarchyTarget,
    levels: Option<&[usize]>,
    config: &OptimizerConfig,
) -> Result<BTreeMap<usize, LevelVerdict>> {
    let n = target.n();
    let mut ks: Vec<usize> = match levels {
        Some(l) => l.to_vec(),
        None => (2..=n).collect(),
    };
    ks.sort_unstable();
    ks.dedup();
    let mut out = BTreeMap::new();
    let mut seeds: Vec<ProbeParameterization> = Vec::new();
    for &k in ks.iter().rev() {
        let cs = CoefficientScheme::for_level(n, k)?;
        let report = maximize_tau_with_starts(target, &cs, config, &seeds)?;
        seeds = vec![report.best_params.clone()];
        out.insert(
            k,
            LevelVerdict {
                detected: report.best_value > config.threshold,
                report,
            },
        );
    }
    Ok(out)
}
