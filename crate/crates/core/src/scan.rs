//! Parameter scans over the catalog states.

use rayon::prelude::*;

use crate::catalog::{
    cps_tsvs_state, ghz_state, green_propagate, CpsTsvsParams, GhzParams, ThermalChannel,
};
use crate::error::Result;
use crate::hierarchy::CoefficientScheme;
use crate::optimizer::{
    classify_state, maximize_tau, maximize_tau_with_starts, HierarchyTarget, OptimizationReport,
    OptimizerConfig, ProbeParameterization,
};
use crate::poly::PolyGaussianState;
use crate::symplectic::{partial_transpose, ppt_separable, symplectic_eigenvalues};

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Points `start, start+step, …` up to `stop` (inclusive, to rounding).
pub fn arange(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhzGrid {
    pub r: Vec<f64>,
    pub g: Vec<f64>,
}

impl GhzGrid {
    /// `g, r ∈ [0, 1.2]` in steps of 0.02.
    pub fn preset() -> Self {
        Self {
            r: arange(0.0, 1.2, 0.02),
            g: arange(0.0, 1.2, 0.02),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhzRow {
    pub r: f64,
    pub g: f64,
    pub tau2: f64,
    pub tau3: f64,
    /// Smallest symplectic eigenvalue of the partial transposes over the three 1|23-type cuts.
    pub ppt_min_eigenvalue: f64,
    pub ppt_separable: bool,
}

/// One GHZ grid point: `T_{3,3}`, then `T_{2,3}` seeded with the `k = 3` optimum.
pub fn ghz_point(r: f64, g: f64, config: &OptimizerConfig) -> Result<GhzRow> {
    let env = ghz_state(GhzParams::new(r, g)?)?;
    let levels = classify_state(HierarchyTarget::Gaussian(&env), Some(&[2, 3]), config)?;
    let mut nu = f64::INFINITY;
    let mut separable = true;
    for m in 0..3 {
        let v = ppt_separable(env.cov(), &[m])?;
        nu = nu.min(v.min_symplectic_eigenvalue);
        separable &= v.separable;
    }
    Ok(GhzRow {
        r,
        g,
        tau2: levels[&2].report.best_value,
        tau3: levels[&3].report.best_value,
        ppt_min_eigenvalue: nu,
        ppt_separable: separable,
    })
}

/// Row-major over `r` (outer) and `g` (inner); points run in parallel, output order is fixed.
pub fn scan_ghz(grid: &GhzGrid, config: &OptimizerConfig) -> Result<Vec<GhzRow>> {
    let points: Vec<(f64, f64)> = grid
        .r
        .iter()
        .flat_map(|&r| grid.g.iter().map(move |&g| (r, g)))
        .collect();
    points
        .into_par_iter()
        .map(|(r, g)| ghz_point(r, g, config))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpsRow {
    pub alpha_abs: f64,
    pub tau: f64,
    pub ppt_separable: bool,
    pub report: OptimizationReport,
}

/// `|α| ∈ [0, 1]` in steps of 0.02.
pub fn cps_preset_alphas() -> Vec<f64> {
    arange(0.0, 1.0, 0.02)
}

pub fn cps_point(r: f64, alpha_abs: f64, config: &OptimizerConfig) -> Result<CpsRow> {
    let state = cps_tsvs_state(CpsTsvsParams::scan_point(r, alpha_abs)?)?;
    let cs = CoefficientScheme::biseparable(2)?;
    let report = maximize_tau(HierarchyTarget::PolyGaussian(&state), &cs, config)?;
    let ppt = ppt_separable(state.envelope().cov(), &[0])?;
    Ok(CpsRow {
        alpha_abs,
        tau: report.best_value,
        ppt_separable: ppt.separable,
        report,
    })
}

/// `T_{2,2}` of the CPS-TSVS family along `|α|`.
pub fn scan_cps(r: f64, alphas: &[f64], config: &OptimizerConfig) -> Result<Vec<CpsRow>> {
    alphas
        .par_iter()
        .map(|&a| cps_point(r, a, config))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRow {
    pub t: f64,
    pub tau: f64,
    pub report: OptimizationReport,
}

/// `T_{2,n}(t)` along `times` (ascending). Each step also restarts from the
/// previous step's optimum, since the optimal probes move continuously in time.
pub fn evolution_curve(
    state: &PolyGaussianState,
    ch: &ThermalChannel,
    times: &[f64],
    config: &OptimizerConfig,
) -> Result<Vec<EvolutionRow>> {
    let n = state.n();
    let cs = CoefficientScheme::biseparable(n)?;
    let mut rows = Vec::with_capacity(times.len());
    let mut seed: Vec<ProbeParameterization> = Vec::new();
    for &t in times {
        let evolved = green_propagate(state, ch, t)?;
        let report =
            maximize_tau_with_starts(HierarchyTarget::PolyGaussian(&evolved), &cs, config, &seed)?;
        seed = vec![report.best_params.clone()];
        rows.push(EvolutionRow {
            t,
            tau: report.best_value,
            report,
        });
    }
    Ok(rows)
}

/// Minimal symplectic eigenvalue of `V` partially transposed on `group`.
pub fn ppt_eigenvalue(v: &crate::linalg::RMat, group: &[usize]) -> Result<f64> {
    let vt = partial_transpose(v, group)?;
    Ok(symplectic_eigenvalues(&vt)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}
