//! Parametric Bayesian indirect likelihood on the full data.
//!
//! The intractable likelihood is replaced by the auxiliary likelihood of the
//! observed data evaluated at a binding estimate `φ_n(θ)`. With a simulated
//! binding this is a pseudo-marginal Metropolis-Hastings sampler: the
//! estimate attached to the current state is stored and reused until the
//! chain moves.

use std::borrow::Borrow;
use std::time::Instant;

use log::warn;
use rand::Rng;
use serde::Serialize;

use crate::abc::RandomWalk;
use crate::auxiliary::{aux_fit, binding, AuxModel, BindingForm};
use crate::error::{check_dim, Error, Result};
use crate::models::Simulator;
use crate::par::Execution;
use crate::prior::Prior;
use crate::rng::NoiseSeed;
use crate::types::{ParameterVector, WeightedSample};

/// Piecewise-linear interpolation of a pre-computed one-dimensional binding
/// function; flat beyond the grid ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BindingLookup {
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl BindingLookup {
    pub fn new(grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(grid.len(), values.len())?;
        if grid.len() < 2 {
            return Err(Error::InvalidConfig("lookup grid needs at least two points".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("lookup grid must be strictly increasing".into()));
        }
        Ok(Self { grid, values })
    }

    /// Estimates `φ_n` at every grid point by simulation; point `k` uses the
    /// seed `xi.child(k)`.
    #[allow(clippy::too_many_arguments)]
    pub fn simulate<M, A>(
        model: &M,
        spec: &A,
        grid: Vec<f64>,
        n: usize,
        form: BindingForm,
        phi_init: &[f64],
        xi: NoiseSeed,
        exec: Execution,
    ) -> Result<Self>
    where
        M: Simulator,
        A: AuxModel + ?Sized,
        M::Output: Borrow<A::Data>,
    {
        let values = exec.try_map(grid.len(), |k| {
            Ok::<_, Error>(
                binding(form, model, spec, &[grid[k]], n, xi.child(k as u64), phi_init, Execution::Sequential)?
                    .phi_n
                    .values,
            )
        })?;
        Self::new(grid, values)
    }

    pub fn eval(&self, theta: f64) -> Vec<f64> {
        let g = &self.grid;
        if theta <= g[0] {
            return self.values[0].clone();
        }
        if theta >= g[g.len() - 1] {
            return self.values[g.len() - 1].clone();
        }
        let k = g.partition_point(|x| *x <= theta) - 1;
        let t = (theta - g[k]) / (g[k + 1] - g[k]);
        self.values[k]
            .iter()
            .zip(&self.values[k + 1])
            .map(|(a, b)| a + t * (b - a))
            .collect()
    }
}

/// Where `φ(θ)` comes from.
pub enum BindingSource<'a> {
    Simulated { n: usize, form: BindingForm },
    Known(&'a (dyn Fn(&[f64]) -> Vec<f64> + Sync)),
    Lookup(&'a BindingLookup),
}

pub struct PdbilConfig<'a> {
    pub binding: BindingSource<'a>,
    pub iterations: usize,
    pub burn_in: f64,
    pub exec: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdbilRow {
    pub iteration: usize,
    pub theta: Vec<f64>,
    /// Stored log-likelihood estimate of the state after the iteration.
    pub loglik: f64,
    pub accepted: bool,
    pub fit_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdbilDiagnostics {
    pub iterations: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub fit_failures: usize,
    pub wall_time_secs: f64,
    pub seed: NoiseSeed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdbilOutput {
    pub trace: Vec<PdbilRow>,
    pub samples: Vec<WeightedSample>,
    pub phi_obs: Vec<f64>,
    pub diagnostics: PdbilDiagnostics,
}

impl PdbilOutput {
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta.values[k]).collect()
    }
}

/// Pseudo-marginal MH on `π(θ) p_A(y_obs | φ_n(θ))`.
///
/// `phi_start` initialises the fit of the observed data; that fit in turn
/// initialises every binding fit. The binding at iteration `i` uses the seed
/// `seed.child(1).child(i)`; proposals and uniforms come from
/// `seed.child(0)`.
#[allow(clippy::too_many_arguments)]
pub fn pdbil_mcmc<P, M, A>(
    prior: &P,
    model: &M,
    spec: &A,
    cfg: &PdbilConfig<'_>,
    y_obs: &A::Data,
    proposal: &RandomWalk,
    theta0: &[f64],
    phi_start: &[f64],
    seed: NoiseSeed,
) -> Result<PdbilOutput>
where
    P: Prior,
    M: Simulator,
    A: AuxModel + ?Sized,
    M::Output: Borrow<A::Data>,
{
    if cfg.iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be positive".into()));
    }
    if let BindingSource::Simulated { n: 0, .. } = cfg.binding {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    check_dim(prior.dim(), theta0.len())?;
    let mut log_pi = prior.log_density(theta0);
    if log_pi == f64::NEG_INFINITY {
        return Err(Error::OutsideSupport(format!("theta0 {theta0:?} has zero prior density")));
    }
    let start = Instant::now();
    let phi_obs = aux_fit(spec, y_obs, phi_start)?.values;
    let estimate = |theta: &[f64], xi: NoiseSeed| -> Option<f64> {
        let phi = match &cfg.binding {
            BindingSource::Simulated { n, form } => {
                binding(*form, model, spec, theta, *n, xi, &phi_obs, cfg.exec).ok()?.phi_n.values
            }
            BindingSource::Known(f) => f(theta),
            BindingSource::Lookup(l) => l.eval(theta[0]),
        };
        let ll = spec.loglik(y_obs, &phi);
        ll.is_finite().then_some(ll)
    };
    let mut loglik = estimate(theta0, seed.child(2)).ok_or_else(|| Error::NonFiniteLoglik(theta0.to_vec()))?;

    let mut rng = seed.child(0).rng();
    let sim_seed = seed.child(1);
    let mut theta = theta0.to_vec();
    let mut trace = Vec::with_capacity(cfg.iterations);
    let burn = (cfg.burn_in * cfg.iterations as f64).floor() as usize;
    let names = prior.names();
    let mut samples = Vec::new();
    let (mut accepted, mut failures) = (0usize, 0usize);
    for i in 0..cfg.iterations {
        let prop = proposal.propose(&theta, &mut rng);
        let u: f64 = rng.random();
        let log_pi_prop = prior.log_density(&prop);
        let mut row = PdbilRow {
            iteration: i,
            theta: Vec::new(),
            loglik,
            accepted: false,
            fit_failed: false,
        };
        if log_pi_prop > f64::NEG_INFINITY {
            match estimate(&prop, sim_seed.child(i as u64)) {
                Some(ll_prop) => {
                    if u.ln() < ll_prop + log_pi_prop - loglik - log_pi {
                        theta = prop;
                        loglik = ll_prop;
                        log_pi = log_pi_prop;
                        row.accepted = true;
                        accepted += 1;
                    }
                }
                None => {
                    row.fit_failed = true;
                    failures += 1;
                }
            }
        }
        row.theta = theta.clone();
        row.loglik = loglik;
        if i >= burn {
            samples.push(WeightedSample {
                theta: ParameterVector {
                    values: theta.clone(),
                    names: names.clone(),
                },
                weight: 1.0,
                discrepancy: 0.0,
                seed_id: i as u64,
            });
        }
        trace.push(row);
    }
    if failures > 0 {
        warn!("{failures} binding fits failed; those proposals were rejected");
    }
    Ok(PdbilOutput {
        trace,
        samples,
        phi_obs,
        diagnostics: PdbilDiagnostics {
            iterations: cfg.iterations,
            accepted,
            acceptance_rate: accepted as f64 / cfg.iterations as f64,
            fit_failures: failures,
            wall_time_secs: start.elapsed().as_secs_f64(),
            seed,
        },
    })
}
