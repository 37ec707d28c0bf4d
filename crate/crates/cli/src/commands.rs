//! Subcommand implementations. Reports go to the supplied writer; CSV goes to
//! `--out` when given, otherwise to the same writer.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use kpartite::catalog::{cps_tsvs_state, CpsTsvsParams, ThermalChannel};
use kpartite::hierarchy::{tau_symmetric, CoefficientScheme};
use kpartite::linalg::{RMat, RVec};
use kpartite::measurement::{estimate_tau_monte_carlo, sample_outcomes, GaussianMeasurement};
use kpartite::optimizer::{
    maximize_tau, HierarchyTarget, OptimizationReport, OptimizerConfig, ProbeParameterization,
};
use kpartite::poly::PolyGaussianState;
use kpartite::ppt::{ppt_resemblance_report, z_report, LimitDirection, StandardForm, LIMIT_R};
use kpartite::probes::{enumerate_bipartitions, Bipartition};
use kpartite::scan::{evolution_curve, linspace, scan_cps, scan_ghz, GhzGrid};
use kpartite::symplectic::{ppt_separable, ThreeModePureStandardForm, TwoModeStandardForm};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::state_file::StateFile;
use crate::{
    EvolveArgs, LimitsArgs, MeasureArgs, OptimizerArgs, PptArgs, Preset, ScanArgs, TauArgs,
};

/// Off-diagonal entries allowed in a two-mode standard form.
const STANDARD_FORM_TOL: f64 = 1e-12;

fn config(opt: &OptimizerArgs) -> OptimizerConfig {
    OptimizerConfig {
        restarts: opt.restarts,
        seed: opt.seed,
        ..OptimizerConfig::default()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Runs `body` against `--out` if given, else against `stdout`.
fn with_output(
    out: &Option<PathBuf>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        None => body(stdout),
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
            body(&mut w)?;
            w.flush().map_err(io_err(path))
        }
    }
}

fn write_err(e: std::io::Error) -> CliError {
    CliError::Io {
        path: "output".into(),
        source: e,
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::input(format!("csv: {e}"))
}

/// Shortest round-trip text; scientific outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) || !x.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn join(xs: impl IntoIterator<Item = f64>) -> String {
    let parts: Vec<String> = xs.into_iter().map(num).collect();
    format!("[{}]", parts.join(", "))
}

/// `1|23`-style label with 1-based modes, mode 1 on the left.
fn cut_label(b: &Bipartition) -> String {
    let group = b.group();
    let first = group.contains(&0);
    let side = |inside: bool| -> String {
        (0..b.n())
            .filter(|m| group.contains(m) == inside)
            .map(|m| (m + 1).to_string())
            .collect()
    };
    format!("{}|{}", side(first), side(!first))
}

fn scheme_label(cs: &CoefficientScheme) -> String {
    format!(
        "{:?} k={} a={}",
        cs.kind(),
        cs.k(),
        join(cs.coefficients().iter().copied())
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffFile {
    coefficients: Vec<f64>,
}

fn load_scheme(n: usize, k: usize, path: &Option<PathBuf>) -> Result<CoefficientScheme> {
    match path {
        None => {
            Ok(CoefficientScheme::for_level(n, k)
                .map_err(|e| CliError::input(format!("--k: {e}")))?)
        }
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            let f: CoeffFile = toml::from_str(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            CoefficientScheme::custom(n, k, f.coefficients)
                .map_err(|e| CliError::input(format!("{}: coefficients: {e}", p.display())))
        }
    }
}

fn optimize(
    state: &PolyGaussianState,
    gaussian: bool,
    cs: &CoefficientScheme,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    let target = if gaussian {
        HierarchyTarget::Gaussian(state.envelope())
    } else {
        HierarchyTarget::PolyGaussian(state)
    };
    Ok(maximize_tau(target, cs, config)?)
}

fn write_probe(w: &mut dyn Write, p: &ProbeParameterization) -> std::io::Result<()> {
    match p {
        ProbeParameterization::Symmetric { s, theta, x, .. } => {
            writeln!(w, "probes: symmetric")?;
            writeln!(w, "s: {}", join(s.iter().copied()))?;
            writeln!(w, "theta: {}", join(theta.iter().copied()))?;
            writeln!(w, "x: {}", join(x.iter().copied()))
        }
        ProbeParameterization::Full {
            s, theta, means, ..
        } => {
            writeln!(w, "probes: full")?;
            writeln!(w, "s: {}", join(s.iter().copied()))?;
            writeln!(w, "theta: {}", join(theta.iter().copied()))?;
            writeln!(
                w,
                "means: {}",
                join(means.iter().flat_map(|m| [m[0], m[1]]))
            )
        }
    }
}

pub fn tau(a: &TauArgs, w: &mut dyn Write) -> Result<()> {
    let file = StateFile::load(&a.state)?;
    let state = file.state()?;
    let cs = load_scheme(state.n(), a.k, &a.coeffs)?;
    let cfg = config(&a.opt);
    let report = optimize(&state, file.is_gaussian(), &cs, &cfg)?;
    let verdict = if report.detected(cfg.threshold) {
        "detected"
    } else {
        "not-detected"
    };
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "scheme: {}", scheme_label(&cs))?;
        writeln!(w, "tau: {}", num(report.best_value))?;
        writeln!(w, "verdict: {verdict}")?;
        writeln!(w, "threshold: {}", num(cfg.threshold))?;
        writeln!(w, "restarts: {}", report.restarts)?;
        writeln!(w, "seed: {}", cfg.seed)?;
        writeln!(w, "best_start: {}", report.best_start)?;
        writeln!(w, "evaluations: {}", report.evaluations)?;
        write_probe(w, &report.best_params)
    };
    body().map_err(write_err)
}

pub fn ppt(a: &PptArgs, stdout: &mut dyn Write) -> Result<()> {
    let file = StateFile::load(&a.state)?;
    let env = file.envelope()?;
    let n = env.n();
    if n < 2 {
        return Err(CliError::input(
            "n: the PPT report needs at least two modes",
        ));
    }
    let mut rows = Vec::new();
    for b in enumerate_bipartitions(n)? {
        let v = ppt_separable(env.cov(), &b.group())?;
        let z = z_report(env.cov(), &b, LIMIT_R)?;
        rows.push((
            cut_label(&b),
            v.min_symplectic_eigenvalue,
            v.separable,
            z.min_eig,
            z.inequality_holds,
        ));
    }
    with_output(&a.out, stdout, |w| {
        writeln!(w, "# ppt state={}", a.state.display()).map_err(write_err)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            "bipartition",
            "min_symplectic_eigenvalue",
            "ppt_separable",
            "z_min_eigenvalue",
            "z_inequality_holds",
        ])
        .map_err(csv_err)?;
        for (label, nu, sep, zmin, holds) in rows {
            csv.write_record([
                label,
                num(nu),
                sep.to_string(),
                num(zmin),
                holds.to_string(),
            ])
            .map_err(csv_err)?;
        }
        csv.flush().map_err(write_err)
    })
}

fn grid(name: &str, min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !(min.is_finite() && max.is_finite()) || max < min {
        return Err(CliError::input(format!(
            "--{name}-*: need finite min <= max and at least one step"
        )));
    }
    Ok(linspace(min, max, steps))
}

pub fn scan(a: &ScanArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = config(&a.opt);
    let meta = format!(
        "# seed={} restarts={} threshold={}",
        cfg.seed,
        cfg.restarts,
        num(cfg.threshold)
    );
    match a.preset {
        Preset::Ghz => {
            let g = GhzGrid {
                r: grid("r", a.r_min, a.r_max, a.r_steps)?,
                g: grid("g", a.g_min, a.g_max, a.g_steps)?,
            };
            let rows = scan_ghz(&g, &cfg)?;
            with_output(&a.out, stdout, |w| {
                writeln!(w, "# preset=ghz schemes=genuine(k=3),biseparable(k=2)")
                    .map_err(write_err)?;
                writeln!(w, "{meta}").map_err(write_err)?;
                writeln!(
                    w,
                    "# grid r={}..{} ({}) g={}..{} ({})",
                    a.r_min, a.r_max, a.r_steps, a.g_min, a.g_max, a.g_steps
                )
                .map_err(write_err)?;
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record([
                    "r",
                    "g",
                    "tau2",
                    "tau3",
                    "ppt_min_eigenvalue",
                    "ppt_separable",
                ])
                .map_err(csv_err)?;
                for x in rows {
                    csv.write_record([
                        num(x.r),
                        num(x.g),
                        num(x.tau2),
                        num(x.tau3),
                        num(x.ppt_min_eigenvalue),
                        x.ppt_separable.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
                csv.flush().map_err(write_err)
            })
        }
        Preset::CpsTsvs => {
            let alphas = grid("alpha", a.alpha_min, a.alpha_max, a.alpha_steps)?;
            let rows = scan_cps(a.r, &alphas, &cfg)?;
            with_output(&a.out, stdout, |w| {
                writeln!(w, "# preset=cps-tsvs scheme=biseparable(k=2) r={}", a.r)
                    .map_err(write_err)?;
                writeln!(w, "{meta}").map_err(write_err)?;
                writeln!(
                    w,
                    "# grid alpha={}..{} ({})",
                    a.alpha_min, a.alpha_max, a.alpha_steps
                )
                .map_err(write_err)?;
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(["alpha_abs", "tau22", "ppt_separable"])
                    .map_err(csv_err)?;
                for x in rows {
                    csv.write_record([num(x.alpha_abs), num(x.tau), x.ppt_separable.to_string()])
                        .map_err(csv_err)?;
                }
                csv.flush().map_err(write_err)
            })
        }
    }
}

pub fn evolve(a: &EvolveArgs, stdout: &mut dyn Write) -> Result<()> {
    let (state, source) = match &a.state {
        Some(p) => (
            StateFile::load(p)?.state()?,
            format!("state={}", p.display()),
        ),
        None => (
            cps_tsvs_state(CpsTsvsParams::scan_point(a.r, a.alpha)?)?,
            format!("state-preset=cps-tsvs r={} alpha={}", a.r, a.alpha),
        ),
    };
    let ch = ThermalChannel::new(a.gamma, a.nth)?;
    if !(a.t_max >= 0.0 && a.t_max.is_finite()) || a.steps == 0 {
        return Err(CliError::input(
            "--t-max must be finite and >= 0, --steps >= 1",
        ));
    }
    let times = linspace(0.0, a.t_max, a.steps + 1);
    let cfg = config(&a.opt);
    let rows = evolution_curve(&state, &ch, &times, &cfg)?;
    with_output(&a.out, stdout, |w| {
        writeln!(w, "# evolve {source} gamma={} nth={}", a.gamma, a.nth).map_err(write_err)?;
        writeln!(
            w,
            "# seed={} restarts={} scheme=biseparable(k=2)",
            cfg.seed, cfg.restarts
        )
        .map_err(write_err)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["t", "tau"]).map_err(csv_err)?;
        for r in rows {
            csv.write_record([num(r.t), num(r.tau)]).map_err(csv_err)?;
        }
        csv.flush().map_err(write_err)
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeFile {
    s: Vec<f64>,
    theta: Vec<f64>,
    x: Vec<f64>,
}

pub fn measure(a: &MeasureArgs, w: &mut dyn Write) -> Result<()> {
    let file = StateFile::load(&a.state)?;
    if !file.is_gaussian() {
        return Err(CliError::input(
            "polynomial: measure needs a Gaussian state",
        ));
    }
    let env = file.envelope()?;
    let n = env.n();
    let cs =
        CoefficientScheme::for_level(n, a.k).map_err(|e| CliError::input(format!("--k: {e}")))?;
    let params = match &a.probes {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            let f: ProbeFile = toml::from_str(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            if f.x.len() != 2 * n {
                return Err(CliError::input(format!(
                    "{}: x: {} entries, expected {}",
                    p.display(),
                    f.x.len(),
                    2 * n
                )));
            }
            ProbeParameterization::symmetric(
                f.s,
                f.theta,
                RVec::from_vec(f.x),
                OptimizerConfig::default().s_max,
            )
            .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?
        }
        None => {
            let cfg = OptimizerConfig {
                restarts: a.restarts,
                seed: a.seed,
                ..OptimizerConfig::default()
            };
            maximize_tau(HierarchyTarget::Gaussian(&env), &cs, &cfg)?.best_params
        }
    };
    let ProbeParameterization::Symmetric { x, .. } = &params else {
        return Err(CliError::input(
            "probes: expected a symmetric probe parameterization",
        ));
    };
    let sigma: RMat = params.sigma();
    let exact = tau_symmetric(&env, x, &sigma, &cs)?;
    let m = GaussianMeasurement::new(sigma.clone())?;
    let sample = sample_outcomes(&env, &m, a.samples, a.seed)?;
    if let Some(path) = &a.out {
        let mut f = BufWriter::new(File::create(path).map_err(io_err(path))?);
        sample.write_csv(&mut f)?;
        f.flush().map_err(io_err(path))?;
    }
    let est = estimate_tau_monte_carlo(&sample, &sigma, x, &cs)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "scheme: {}", scheme_label(&cs))?;
        writeln!(w, "exact: {}", num(exact))?;
        writeln!(w, "estimate: {}", num(est.estimate))?;
        writeln!(w, "stderr: {}", num(est.stderr))?;
        writeln!(w, "bandwidth: {}", num(est.bandwidth))?;
        writeln!(w, "samples: {}", a.samples)?;
        writeln!(w, "seed: {}", a.seed)?;
        write_probe(w, &params)
    };
    body().map_err(write_err)
}

fn standard_form(v: &RMat) -> Result<StandardForm> {
    match v.nrows() {
        4 => {
            let allowed = [
                (0, 0),
                (1, 1),
                (2, 2),
                (3, 3),
                (0, 2),
                (2, 0),
                (1, 3),
                (3, 1),
            ];
            for i in 0..4 {
                for j in 0..4 {
                    if !allowed.contains(&(i, j)) && v[(i, j)].abs() > STANDARD_FORM_TOL {
                        return Err(CliError::input(format!(
                            "covariance: entry ({}, {}) must vanish in a two-mode standard form",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
            if (v[(0, 0)] - v[(1, 1)]).abs() > STANDARD_FORM_TOL
                || (v[(2, 2)] - v[(3, 3)]).abs() > STANDARD_FORM_TOL
            {
                return Err(CliError::input(
                    "covariance: local blocks of a two-mode standard form must be multiples of I",
                ));
            }
            Ok(StandardForm::TwoMode(TwoModeStandardForm::new(
                2.0 * v[(0, 0)],
                2.0 * v[(2, 2)],
                2.0 * v[(0, 2)],
                2.0 * v[(1, 3)],
            )))
        }
        6 => ThreeModePureStandardForm::from_covariance(v, 1e-9)
            .map(StandardForm::ThreeModePure)
            .map_err(|e| CliError::input(format!("covariance: {e}"))),
        d => Err(CliError::input(format!(
            "n: limits supports two-mode and pure three-mode states, got {} modes",
            d / 2
        ))),
    }
}

pub fn limits(a: &LimitsArgs, w: &mut dyn Write) -> Result<()> {
    let file = StateFile::load(&a.state)?;
    let env = file.envelope()?;
    let sf = standard_form(env.cov())?;
    let report = ppt_resemblance_report(&sf, a.tolerance)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(
            w,
            "# limits tolerance={} eigenvalue_tolerance=1e-4",
            a.tolerance
        )?;
        writeln!(
            w,
            "bipartition,direction,entry_deviation,eigen_deviation,passed"
        )?;
        for c in &report.checks {
            let dir = match c.direction {
                LimitDirection::Momentum => "momentum",
                LimitDirection::Position => "position",
            };
            writeln!(
                w,
                "{},{dir},{},{},{}",
                cut_label(&c.bipartition),
                num(c.entry_deviation),
                num(c.eigen_deviation),
                c.passed
            )?;
        }
        Ok(())
    };
    body().map_err(write_err)?;
    if report.passed {
        Ok(())
    } else {
        Err(kpartite::error::Error::ConvergenceFailure(report.max_deviation()).into())
    }
}
