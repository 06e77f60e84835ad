use std::sync::Arc;

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::types::{default_names, names_from};

/// Prior density over the generative parameter.
pub trait Prior: Sync {
    fn dim(&self) -> usize;

    fn names(&self) -> Arc<[String]>;

    /// Log density up to a constant; `-inf` outside the support.
    fn log_density(&self, theta: &[f64]) -> f64;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>>;

    fn density(&self, theta: &[f64]) -> f64 {
        self.log_density(theta).exp()
    }

    fn contains(&self, theta: &[f64]) -> bool {
        self.log_density(theta) > f64::NEG_INFINITY
    }
}

/// Independent uniform priors on a box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
    names: Arc<[String]>,
}

impl UniformBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::Empty("prior box"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidConfig(format!("bad prior interval [{l}, {u}]")));
            }
        }
        let names = default_names(lower.len());
        Ok(Self { lower, upper, names })
    }

    pub fn with_names<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self> {
        check_dim(self.lower.len(), names.len())?;
        self.names = names_from(names);
        Ok(self)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.lower.iter().copied().zip(self.upper.iter().copied()).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(u)
            .map(|((l, h), t)| l + (h - l) * t)
            .collect()
    }
}

impl Prior for UniformBox {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn names(&self) -> Arc<[String]> {
        self.names.clone()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.lower.len() {
            return f64::NEG_INFINITY;
        }
        let inside = theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(t, (l, u))| *t >= *l && *t <= *u);
        if inside {
            -self.widths().iter().map(|w| w.ln()).sum::<f64>()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        Ok(self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect())
    }
}

/// Improper flat prior on the whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPrior {
    names: Arc<[String]>,
}

impl FlatPrior {
    pub fn new(dim: usize) -> Self {
        Self {
            names: default_names(dim),
        }
    }
}

impl Prior for FlatPrior {
    fn dim(&self) -> usize {
        self.names.len()
    }

    fn names(&self) -> Arc<[String]> {
        self.names.clone()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.iter().all(|t| t.is_finite()) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn sample<R: Rng + ?Sized>(&self, _rng: &mut R) -> Result<Vec<f64>> {
        Err(Error::ImproperPrior)
    }
}
