use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{whittle_matern, CorrelationParams, FrechetPanel, SpatialLayout};
use crate::error::{Error, Result};
use crate::models::Simulator;
use crate::rng::NoiseSeed;

/// Bound used in the stopping rule for `√(2π) max(0, ε)`; a standard normal
/// exceeds 5 with probability about 3e-7.
const FIELD_BOUND: f64 = 5.0 * 2.506_628_274_631_000_7;
const MAX_STORMS: usize = 1_000_000;

fn correlation_factor(layout: &SpatialLayout, p: &CorrelationParams) -> Result<DMatrix<f64>> {
    let d = layout.sites();
    let mut c = DMatrix::identity(d, d);
    for (i, j, h) in layout.pairs() {
        let r = whittle_matern(h, p)?;
        c[(i, j)] = r;
        c[(j, i)] = r;
    }
    let mut jitter = 0.0;
    loop {
        let m = &c + DMatrix::identity(d, d) * jitter;
        if let Some(ch) = m.cholesky() {
            return Ok(ch.l());
        }
        jitter = if jitter == 0.0 { 1e-12 } else { jitter * 10.0 };
        if jitter > 1e-3 {
            return Err(Error::NotPositiveDefinite);
        }
    }
}

/// Schlather max-stable process with unit-Fréchet margins:
/// `Z(x) = max_i ζ_i √(2π) max(0, ε_i(x))`, with `{ζ_i}` a Poisson process of
/// intensity `dζ/ζ²` generated in decreasing order and `ε_i` independent
/// Gaussian fields with Whittle-Matérn correlation. A replicate stops once
/// `ζ_i` times a high quantile bound on the field cannot raise the smallest
/// site value. Replicate `t` uses the seed `seed.child(t)`.
pub fn simulate_maxstable(layout: &SpatialLayout, p: &CorrelationParams, t: usize, seed: NoiseSeed) -> Result<FrechetPanel> {
    if t == 0 {
        return Err(Error::InvalidConfig("at least one replicate is required".into()));
    }
    let l = correlation_factor(layout, p)?;
    let d = layout.sites();
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let mut rows = Vec::with_capacity(t);
    for r in 0..t {
        let mut rng = seed.child(r as u64).rng();
        let mut z = vec![0.0f64; d];
        let mut arrival = 0.0;
        for _ in 0..MAX_STORMS {
            arrival += rng.sample::<f64, _>(Exp1);
            let zeta = 1.0 / arrival;
            let floor = z.iter().copied().fold(f64::INFINITY, f64::min);
            if floor > 0.0 && zeta * FIELD_BOUND <= floor {
                break;
            }
            let e = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let field = &l * e;
            for (zi, f) in z.iter_mut().zip(field.iter()) {
                let v = zeta * norm * f.max(0.0);
                if v > *zi {
                    *zi = v;
                }
            }
        }
        rows.push(z);
    }
    FrechetPanel::new(rows)
}

/// `T` replicates of the Schlather process on a fixed layout with
/// `θ = (c2, ν)` and a fixed sill.
#[derive(Debug, Clone)]
pub struct MaxStableModel {
    pub layout: SpatialLayout,
    pub replicates: usize,
    pub c1: f64,
}

impl MaxStableModel {
    pub fn new(layout: SpatialLayout, replicates: usize) -> Self {
        Self { layout, replicates, c1: 1.0 }
    }

    pub fn try_simulate(&self, theta: &[f64], xi: NoiseSeed) -> Result<FrechetPanel> {
        let p = CorrelationParams::new(self.c1, theta[0], theta[1])?;
        simulate_maxstable(&self.layout, &p, self.replicates, xi)
    }
}

impl Simulator for MaxStableModel {
    /// `None` when `θ` is not a valid parameter.
    type Output = Option<FrechetPanel>;

    fn dim(&self) -> usize {
        2
    }

    fn simulate(&self, theta: &[f64], xi: NoiseSeed) -> Self::Output {
        match self.try_simulate(theta, xi) {
            Ok(p) => Some(p),
            Err(e) => {
                warn!("max-stable simulation failed at {theta:?}: {e}");
                None
            }
        }
    }
}
