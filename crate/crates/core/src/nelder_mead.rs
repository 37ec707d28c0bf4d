//! Nelder–Mead simplex minimization with dimension-adaptive coefficients.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged once every vertex lies within this distance (max norm) of the best one.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn guarded<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` from `x0`; vertex `i+1` of the initial simplex is `x0 + step[i] e_i`.
/// NaN values are treated as `+∞`.
pub fn minimize<F>(mut f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    let dd = d.max(1) as f64;
    let (alpha, gamma, rho, shrink) = (1.0, 1.0 + 2.0 / dd, 0.75 - 0.5 / dd, 1.0 - 1.0 / dd);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| guarded(&mut f, v)).collect();
    let mut evals = d + 1;
    let mut converged = false;

    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
    };

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; d];
        for v in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dd;
            }
        }
        let worst = simplex[d].clone();
        let xr = point(&centroid, &worst, -alpha);
        let fr = guarded(&mut f, &xr);
        evals += 1;

        if fr < values[0] {
            let xe = point(&centroid, &worst, -alpha * gamma);
            let fe = guarded(&mut f, &xe);
            evals += 1;
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[d] {
            let xc = point(&centroid, &worst, -alpha * rho);
            let fc = guarded(&mut f, &xc);
            (xc, fc)
        } else {
            let xc = point(&centroid, &worst, rho);
            let fc = guarded(&mut f, &xc);
            (xc, fc)
        };
        evals += 1;
        if fc < fr.min(values[d]) {
            simplex[d] = xc;
            values[d] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=d {
            simplex[i] = point(&best, &simplex[i], shrink);
            values[i] = guarded(&mut f, &simplex[i]);
        }
        evals += d;
    }

    let (ib, _) =
        values.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc },
        );
    NelderMeadResult {
        x: simplex[ib].clone(),
        value: values[ib],
        evaluations: evals,
        converged,
    }
}
