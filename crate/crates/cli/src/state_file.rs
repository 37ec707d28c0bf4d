//! TOML state files.
//!
//! ```toml
//! n = 1
//! covariance = [[0.5, 0.0], [0.0, 0.5]]
//! mean = [0.0, 0.0]            # optional
//!
//! [[polynomial]]               # optional, default F = 1
//! exponents = [2, 0]
//! re = 2.0
//! im = 0.0
//! ```

use std::path::Path;

use kpartite::linalg::{RMat, RVec};
use kpartite::poly::{MultiPoly, PolyGaussianState};
use kpartite::symplectic::GaussianEnvelope;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n: usize,
    pub covariance: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polynomial: Vec<PolyTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub exponents: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl StateFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::input(format!("state file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::input(format!("cannot serialize state: {e}")))
    }

    pub fn from_state(state: &PolyGaussianState) -> Self {
        let env = state.envelope();
        let v = env.cov();
        let covariance = (0..v.nrows())
            .map(|i| v.row(i).iter().copied().collect())
            .collect();
        let mean = env
            .mean()
            .iter()
            .any(|x| *x != 0.0)
            .then(|| env.mean().iter().copied().collect());
        let polynomial = if *state.poly() == MultiPoly::one(2 * state.n()) {
            Vec::new()
        } else {
            state
                .poly()
                .terms()
                .map(|(e, c)| PolyTerm {
                    exponents: e.to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect()
        };
        Self {
            n: state.n(),
            covariance,
            mean,
            polynomial,
        }
    }

    pub fn covariance_matrix(&self) -> Result<RMat> {
        let dim = 2 * self.n;
        if self.n == 0 {
            return Err(CliError::input("n: must be at least 1"));
        }
        if self.covariance.len() != dim {
            return Err(CliError::input(format!(
                "covariance: {} rows, expected {dim} (2n for n = {})",
                self.covariance.len(),
                self.n
            )));
        }
        for (i, row) in self.covariance.iter().enumerate() {
            if row.len() != dim {
                return Err(CliError::input(format!(
                    "covariance: row {} has {} entries, expected {dim}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                return Err(CliError::input(format!(
                    "covariance: entry ({}, {}) is not finite",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(RMat::from_fn(dim, dim, |i, j| self.covariance[i][j]))
    }

    pub fn mean_vector(&self) -> Result<RVec> {
        let dim = 2 * self.n;
        match &self.mean {
            None => Ok(RVec::zeros(dim)),
            Some(m) if m.len() != dim => Err(CliError::input(format!(
                "mean: {} entries, expected {dim}",
                m.len()
            ))),
            Some(m) if m.iter().any(|x| !x.is_finite()) => {
                Err(CliError::input("mean: entries must be finite"))
            }
            Some(m) => Ok(RVec::from_column_slice(m)),
        }
    }

    pub fn envelope(&self) -> Result<GaussianEnvelope> {
        let v = self.covariance_matrix()?;
        let mean = self.mean_vector()?;
        GaussianEnvelope::physical(v, mean).map_err(|e| CliError::input(format!("covariance: {e}")))
    }

    pub fn polynomial(&self) -> Result<MultiPoly> {
        let dim = 2 * self.n;
        if self.polynomial.is_empty() {
            return Ok(MultiPoly::one(dim));
        }
        for (i, t) in self.polynomial.iter().enumerate() {
            if t.exponents.len() != dim {
                return Err(CliError::input(format!(
                    "polynomial[{i}].exponents: {} entries, expected {dim}",
                    t.exponents.len()
                )));
            }
            if !(t.re.is_finite() && t.im.is_finite()) {
                return Err(CliError::input(format!(
                    "polynomial[{i}]: coefficient must be finite"
                )));
            }
        }
        let terms = self
            .polynomial
            .iter()
            .map(|t| (t.exponents.clone(), Complex64::new(t.re, t.im)));
        MultiPoly::from_terms(dim, terms).map_err(|e| CliError::input(format!("polynomial: {e}")))
    }

    pub fn state(&self) -> Result<PolyGaussianState> {
        let env = self.envelope()?;
        PolyGaussianState::new(env, self.polynomial()?)
            .map_err(|e| CliError::input(format!("polynomial: {e}")))
    }

    pub fn is_gaussian(&self) -> bool {
        self.polynomial.is_empty()
    }
}
