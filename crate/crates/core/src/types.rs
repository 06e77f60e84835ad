//! Shared value types: parameters, summaries, weight matrices and the
//! weighted-sample record every sampler emits.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Generative parameter with component names.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub names: Arc<[String]>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, names: Arc<[String]>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("parameter vector"));
        }
        check_dim(names.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideSupport(format!("non-finite parameter {values:?}")));
        }
        Ok(Self { values, names })
    }

    /// Names `theta_1..theta_p`.
    pub fn unnamed(values: Vec<f64>) -> Self {
        let names = default_names(values.len());
        Self { values, names }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub fn default_names(p: usize) -> Arc<[String]> {
    (1..=p).map(|i| format!("theta_{i}")).collect()
}

pub fn names_from<S: AsRef<str>>(names: &[S]) -> Arc<[String]> {
    names.iter().map(|s| s.as_ref().to_string()).collect()
}

/// Auxiliary parameter estimate plus fit metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxParameter {
    pub values: Vec<f64>,
    pub loglik_at_fit: f64,
    pub converged: bool,
}

impl AuxParameter {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            loglik_at_fit: f64::NAN,
            converged: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryKind {
    AuxParam,
    AuxScore,
    CompositeParam,
    ExtremalGroups,
    Simple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStatistic {
    pub values: Vec<f64>,
    pub kind: SummaryKind,
}

impl SummaryStatistic {
    pub fn new(values: Vec<f64>, kind: SummaryKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("summary statistic"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideSupport(format!("non-finite summary {values:?}")));
        }
        Ok(Self { values, kind })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Symmetric positive definite weighting matrix with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    entries: DMatrix<f64>,
    lower: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 {
            return Err(Error::Empty("weight matrix"));
        }
        check_dim(entries.nrows(), entries.ncols())?;
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        for i in 0..entries.nrows() {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        let chol = entries
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            lower: chol.l(),
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.len();
        for r in rows {
            check_dim(q, r.len())?;
        }
        Self::new(DMatrix::from_fn(q, q, |i, j| rows[i][j]))
    }

    pub fn identity(q: usize) -> Self {
        Self {
            entries: DMatrix::identity(q, q),
            lower: DMatrix::identity(q, q),
        }
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Lower Cholesky factor `L` with `M = L Lᵀ`.
    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.entries * factor)
    }

    pub fn inverse(&self) -> Result<Self> {
        let chol = self
            .entries
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let inv = chol.inverse();
        Self::new((&inv + inv.transpose()) * 0.5)
    }

    pub fn determinant(&self) -> f64 {
        self.lower.diagonal().iter().map(|d| d * d).product()
    }

    /// `dᵀ M d`, evaluated as `‖Lᵀ d‖²` so it is never negative.
    pub fn quadratic_form(&self, d: &[f64]) -> Result<f64> {
        check_dim(self.dim(), d.len())?;
        let q = self.dim();
        let mut total = 0.0;
        for k in 0..q {
            let mut acc = 0.0;
            for (i, di) in d.iter().enumerate().skip(k) {
                acc += self.lower[(i, k)] * di;
            }
            total += acc * acc;
        }
        Ok(total)
    }
}

/// `sqrt(dᵀ M d)`.
pub fn weighted_norm(d: &[f64], m: &WeightMatrix) -> Result<f64> {
    Ok(m.quadratic_form(d)?.sqrt())
}

/// One posterior draw: parameter, weight, discrepancy and the seed that made it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub theta: ParameterVector,
    pub weight: f64,
    pub discrepancy: f64,
    pub seed_id: u64,
}

/// Rescale weights to sum to one.
pub fn normalize_weights(mut samples: Vec<WeightedSample>) -> Result<Vec<WeightedSample>> {
    if samples.iter().any(|s| !(s.weight >= 0.0) || !s.weight.is_finite()) {
        return Err(Error::OutsideSupport("weights must be finite and non-negative".into()));
    }
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    for s in &mut samples {
        s.weight /= total;
    }
    Ok(samples)
}

/// Column `k` of the sample parameters.
pub fn component(samples: &[WeightedSample], k: usize) -> Vec<f64> {
    samples.iter().map(|s| s.theta.values[k]).collect()
}

pub fn weights(samples: &[WeightedSample]) -> Vec<f64> {
    samples.iter().map(|s| s.weight).collect()
}
