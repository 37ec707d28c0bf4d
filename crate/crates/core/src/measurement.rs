//! Gaussian-measurement statistics and the measurement form of `τ̃_{k,n}`.
//!
//! Outcomes of a Gaussian measurement with covariance `σ_M` on a Gaussian state
//! are distributed as `N(x̄, σ_M + V)`. The hierarchy only depends on the
//! centered statistics, so the estimator works with outcomes relative to their mean.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hierarchy::{check_probe_covariance, CoefficientScheme};
use crate::linalg::{check_square, cholesky, validated_symmetric, RMat, RVec};
use crate::probes::enumerate_bipartitions;
use crate::symplectic::{j_form, GaussianEnvelope};

/// Minimum sample size accepted by [`estimate_tau_monte_carlo`].
pub const MIN_SAMPLES: usize = 1000;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasurement {
    sigma_m: RMat,
}

impl GaussianMeasurement {
    pub fn new(sigma_m: RMat) -> Result<Self> {
        let sigma_m = validated_symmetric(&sigma_m)?;
        cholesky(&sigma_m)?;
        Ok(Self { sigma_m })
    }

    /// Heterodyne-type measurement, `σ_M = ½ I`.
    pub fn coherent(n: usize) -> Self {
        Self {
            sigma_m: RMat::identity(2 * n, 2 * n) * 0.5,
        }
    }

    pub fn sigma_m(&self) -> &RMat {
        &self.sigma_m
    }

    pub fn n(&self) -> usize {
        self.sigma_m.nrows() / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSample {
    pub samples: Vec<RVec>,
    pub seed: u64,
}

impl OutcomeSample {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }

    pub fn mean(&self) -> RVec {
        let dim = self.dim();
        let sum = self.samples.iter().fold(RVec::zeros(dim), |acc, s| acc + s);
        sum / self.len().max(1) as f64
    }

    /// Sample covariance (normalized by `N`).
    pub fn covariance(&self) -> RMat {
        let dim = self.dim();
        let m = self.mean();
        let sum = self.samples.iter().fold(RMat::zeros(dim, dim), |acc, s| {
            let d = s - &m;
            acc + &d * d.transpose()
        });
        sum / self.len().max(1) as f64
    }

    /// Writes a `# seed=<seed>` line, a `q1,p1,…` header and one outcome per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidParameter(format!("write failed: {e}"));
        writeln!(w, "# seed={}", self.seed).map_err(io)?;
        let mut writer = csv::Writer::from_writer(w);
        let header: Vec<String> = (1..=self.dim() / 2)
            .flat_map(|m| [format!("q{m}"), format!("p{m}")])
            .collect();
        let csv_err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        writer.write_record(&header).map_err(csv_err)?;
        for s in &self.samples {
            writer
                .write_record(s.iter().map(|x| format!("{x:e}")))
                .map_err(csv_err)?;
        }
        writer.flush().map_err(io)?;
        Ok(())
    }

    /// Reads the format of [`write_csv`](Self::write_csv); a missing seed line reads as seed 0.
    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Self> {
        let mut seed = 0;
        let mut first = String::new();
        r.read_line(&mut first)
            .map_err(|e| Error::InvalidParameter(format!("read failed: {e}")))?;
        let rest: Box<dyn std::io::Read> = if let Some(meta) = first.trim().strip_prefix('#') {
            for field in meta.split_whitespace() {
                if let Some(v) = field.strip_prefix("seed=") {
                    seed = v
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad seed `{v}`")))?;
                }
            }
            Box::new(r)
        } else {
            Box::new(std::io::Cursor::new(first.into_bytes()).chain(r))
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(rest);
        let csv_err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
        let dim = reader.headers().map_err(csv_err)?.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "expected an even number of columns, got {dim}"
            )));
        }
        let mut samples = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(csv_err)?;
            let row: Vec<f64> = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("bad number `{s}`")))
                })
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            samples.push(RVec::from_vec(row));
        }
        Ok(Self { samples, seed })
    }
}

fn outcome_cov(state: &GaussianEnvelope, m: &GaussianMeasurement) -> Result<RMat> {
    check_square(m.sigma_m(), state.cov().nrows())?;
    Ok(state.cov() + m.sigma_m())
}

fn gaussian_density(x: &RVec, cov: &RMat) -> Result<f64> {
    let chol = cholesky(cov)?;
    let dim = x.len() as f64;
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let q = x.dot(&chol.solve(x));
    Ok((-0.5 * q - 0.5 * logdet - 0.5 * dim * (2.0 * std::f64::consts::PI).ln()).exp())
}

/// Draws `count` outcomes from `N(x̄, σ_M + V)`. Chunks of 4096 use separate
/// ChaCha streams, so the result depends only on `seed` and `count`.
pub fn sample_outcomes(
    state: &GaussianEnvelope,
    m: &GaussianMeasurement,
    count: usize,
    seed: u64,
) -> Result<OutcomeSample> {
    let c = outcome_cov(state, m)?;
    let l = cholesky(&c)?.l();
    let dim = c.nrows();
    let mean = state.mean().clone();
    let chunks = count.div_ceil(CHUNK);
    let samples = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci as u64);
            let len = CHUNK.min(count - ci * CHUNK);
            let (l, mean) = (&l, &mean);
            (0..len)
                .map(move |_| {
                    let z = RVec::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                    mean + l * z
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(OutcomeSample { samples, seed })
}

/// `p(X_M) = N(X_M; x̄, σ_M + V)`.
pub fn outcome_pdf(state: &GaussianEnvelope, m: &GaussianMeasurement, x_m: &RVec) -> Result<f64> {
    let c = outcome_cov(state, m)?;
    if x_m.len() != c.nrows() {
        return Err(Error::DimensionMismatch {
            expected: c.nrows(),
            got: x_m.len(),
        });
    }
    gaussian_density(&(x_m - state.mean()), &c)
}

/// `p̂(ω) = (2π)^{-n} ∫ e^{-iωᵀX} p(X) dX = (2π)^{-n} e^{-iωᵀx̄ - ½ωᵀ(σ_M+V)ω}`.
pub fn characteristic_fn(
    state: &GaussianEnvelope,
    m: &GaussianMeasurement,
    omega: &RVec,
) -> Result<Complex64> {
    let c = outcome_cov(state, m)?;
    if omega.len() != c.nrows() {
        return Err(Error::DimensionMismatch {
            expected: c.nrows(),
            got: omega.len(),
        });
    }
    let n = state.n() as f64;
    let re = -0.5 * omega.dot(&(&c * omega));
    let im = -omega.dot(state.mean());
    Ok(Complex64::new(re, im).exp() / (2.0 * std::f64::consts::PI).powf(n))
}

fn check_probe(
    state: &GaussianEnvelope,
    sigma: &RMat,
    x: &RVec,
    cs: &CoefficientScheme,
) -> Result<()> {
    let dim = state.cov().nrows();
    check_square(sigma, dim)?;
    check_probe_covariance(sigma)?;
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if cs.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: state.n(),
            got: cs.n(),
        });
    }
    Ok(())
}

/// `τ̃` from the statistics of a measurement with `σ_M = Σ`:
/// `e^{-2XᵀJᵀΣJX} ∫dω e^{-2ωᵀΣJX} p̂(ω) - (2π)ⁿ Σ_j a_j p(x̄ + P_j X)`,
/// with `p̂` of the centered outcomes and the ω-integral done in closed form.
pub fn tau_from_statistics(
    state: &GaussianEnvelope,
    sigma: &RMat,
    x: &RVec,
    cs: &CoefficientScheme,
) -> Result<f64> {
    check_probe(state, sigma, x, cs)?;
    let n = state.n();
    let m = GaussianMeasurement::new(sigma.clone())?;
    let c = outcome_cov(state, &m)?;
    let chol = cholesky(&c)?;
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let u = j_form(n) * x;
    let y = sigma * &u;
    // ∫dω e^{-2ωᵀy} (2π)^{-n} e^{-½ωᵀCω} = e^{2yᵀC⁻¹y} / √det C
    let first = (-2.0 * u.dot(&y) + 2.0 * y.dot(&chol.solve(&y)) - 0.5 * logdet).exp();
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(n as i32);
    let mut sub = 0.0;
    for b in enumerate_bipartitions(n)? {
        let a = cs.coefficient(b.index());
        if a != 0.0 {
            let px = x.component_mul(&b.signs());
            sub += a * two_pi_n * outcome_pdf(state, &m, &(state.mean() + px))?;
        }
    }
    Ok(first - sub)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Scalar kernel bandwidth `h`; the kernel covariance is `h² Ĉ`.
    pub bandwidth: f64,
}

/// Closed-form first term for outcome covariance `c`.
fn first_term(c: &RMat, sigma: &RMat, u: &RVec) -> Result<f64> {
    let chol = cholesky(c).map_err(|_| Error::DegenerateBandwidth)?;
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let y = sigma * u;
    Ok((-2.0 * u.dot(&y) + 2.0 * y.dot(&chol.solve(&y)) - 0.5 * logdet).exp())
}

struct KernelPoint {
    x: RVec,
    weight: f64,
}

/// Estimates `τ̃` at `(X, Σ)` from outcomes of a measurement with `σ_M = Σ`.
///
/// First term: the ω-integral evaluated for the Gaussian fit of the empirical
/// characteristic function, i.e. its curvature at `ω = 0`, the sample covariance `Ĉ`.
/// Integrating the empirical characteristic function itself amounts to
/// continuing the density to the imaginary point `2iΣJX`, which amplifies the
/// sampling noise by `e^{2yᵀĈ⁻¹y}`. Subtrahend: Gaussian kernel estimates of
/// `p(P_jX)` with kernel covariance `h²Ĉ` (Silverman `h`), times
/// `N(x;Ĉ)/N(x;Ĉ+h²Ĉ)` to undo the smoothing bias. The standard error is the
/// spread over 200 bootstrap resamples.
pub fn estimate_tau_monte_carlo(
    sample: &OutcomeSample,
    sigma: &RMat,
    x: &RVec,
    cs: &CoefficientScheme,
) -> Result<MonteCarloEstimate> {
    let count = sample.len();
    if count < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SAMPLES,
            got: count,
        });
    }
    let dim = sample.dim();
    let n = dim / 2;
    if !dim.is_multiple_of(2) || sample.samples.iter().any(|s| s.len() != dim) {
        return Err(Error::InvalidParameter(
            "outcomes must have a common even dimension".into(),
        ));
    }
    check_square(sigma, dim)?;
    check_probe_covariance(sigma)?;
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if cs.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cs.n(),
        });
    }

    let mean = sample.mean();
    let centered: Vec<RVec> = sample.samples.par_iter().map(|s| s - &mean).collect();
    let c = crate::linalg::symmetrize(&sample.covariance());
    cholesky(&c).map_err(|_| Error::DegenerateBandwidth)?;
    let d = dim as f64;
    let h = (4.0 / (d + 2.0)).powf(1.0 / (d + 4.0)) * (count as f64).powf(-1.0 / (d + 4.0));
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::DegenerateBandwidth);
    }
    let h_cov = &c * (h * h);
    let kernel_chol = cholesky(&h_cov).map_err(|_| Error::DegenerateBandwidth)?;
    let kernel_logdet = 2.0
        * kernel_chol
            .l()
            .diagonal()
            .iter()
            .map(|v| v.ln())
            .sum::<f64>();
    let kernel_norm = (-0.5 * kernel_logdet - 0.5 * d * (2.0 * std::f64::consts::PI).ln()).exp();
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(n as i32);
    let u = j_form(n) * x;

    let mut points = Vec::new();
    for b in enumerate_bipartitions(n)? {
        let a = cs.coefficient(b.index());
        if a != 0.0 {
            points.push(KernelPoint {
                x: x.component_mul(&b.signs()),
                weight: a * two_pi_n,
            });
        }
    }
    // Kernel values per sample and point, shared by all resamples.
    let kernels: Vec<Vec<f64>> = centered
        .par_iter()
        .map(|xs| {
            points
                .iter()
                .map(|p| {
                    let diff = &p.x - xs;
                    kernel_norm * (-0.5 * diff.dot(&kernel_chol.solve(&diff))).exp()
                })
                .collect()
        })
        .collect();

    let evaluate = |c: &RMat, kde: &[f64]| -> Result<f64> {
        let mut value = first_term(c, sigma, &u)?;
        for (p, k) in points.iter().zip(kde) {
            let correction = gaussian_density(&p.x, c)? / gaussian_density(&p.x, &(c + &h_cov))?;
            value -= p.weight * correction * k;
        }
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::DegenerateBandwidth)
        }
    };
    let resample = |idx: &mut dyn FnMut() -> usize| -> Result<f64> {
        let mut second = RMat::zeros(dim, dim);
        let mut kde = vec![0.0; points.len()];
        for _ in 0..count {
            let k = idx();
            second.syger(1.0, &centered[k], &centered[k], 1.0);
            for (acc, v) in kde.iter_mut().zip(&kernels[k]) {
                *acc += v;
            }
        }
        let inv = 1.0 / count as f64;
        kde.iter_mut().for_each(|v| *v *= inv);
        second.fill_upper_triangle_with_lower_triangle();
        evaluate(&(second * inv), &kde)
    };

    let mut k = 0;
    let estimate = resample(&mut || {
        k += 1;
        k - 1
    })?;
    let resamples: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|bi| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample.seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(bi as u64);
            resample(&mut || rng.random_range(0..count))
        })
        .collect::<Result<_>>()?;
    let bm = resamples.iter().sum::<f64>() / resamples.len() as f64;
    let var =
        resamples.iter().map(|v| (v - bm).powi(2)).sum::<f64>() / (resamples.len() - 1) as f64;
    Ok(MonteCarloEstimate {
        estimate,
        stderr: var.sqrt(),
        bandwidth: h,
    })
}
