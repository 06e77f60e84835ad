//! MCMC-ABC with early rejection, and its lazy variant.
//!
//! Random streams: proposals and Metropolis uniforms come from
//! `seed.child(0)`, the simulation at iteration `i` from
//! `seed.child(1).child(i)` and the lazy continuation coin at iteration `i`
//! from `seed.child(2).child(i)`. The Metropolis uniform is drawn at every
//! iteration, so the lazy sampler with `alpha = 1` follows exactly the path
//! of the standard sampler.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::Discrepancy;
use crate::error::{check_dim, Error, Result};
use crate::models::Simulator;
use crate::par::Execution;
use crate::prior::Prior;
use crate::rng::{NoiseSeed, StreamRng};
use crate::types::{ParameterVector, WeightMatrix, WeightedSample};

/// Gaussian random-walk proposal `θ* = θ + L z`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalk {
    lower: DMatrix<f64>,
}

impl RandomWalk {
    pub fn diagonal(sds: &[f64]) -> Self {
        Self {
            lower: DMatrix::from_diagonal(&DVector::from_column_slice(sds)),
        }
    }

    pub fn from_covariance(cov: &WeightMatrix) -> Self {
        Self {
            lower: cov.cholesky_lower().clone(),
        }
    }

    /// Sample covariance of pilot draws scaled by `2.38² / p`.
    pub fn from_pilot(draws: &[Vec<f64>]) -> Result<Self> {
        let p = draws.first().ok_or(Error::Empty("pilot draws"))?.len();
        let n = draws.len() as f64;
        let mut mean = vec![0.0; p];
        for d in draws {
            for (m, v) in mean.iter_mut().zip(d) {
                *m += v / n;
            }
        }
        let mut cov = DMatrix::zeros(p, p);
        for d in draws {
            for r in 0..p {
                for c in 0..p {
                    cov[(r, c)] += (d[r] - mean[r]) * (d[c] - mean[c]) / (n - 1.0);
                }
            }
        }
        let scale = 2.38 * 2.38 / p as f64;
        Ok(Self::from_covariance(&crate::auxiliary::repair_information(cov * scale)?))
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn propose<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Vec<f64> {
        let p = theta.len();
        let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        (0..p)
            .map(|r| theta[r] + (0..=r).map(|c| self.lower[(r, c)] * z[c]).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    /// Fraction of leading iterations dropped from the returned samples.
    pub burn_in: f64,
    pub h: f64,
}

impl McmcConfig {
    pub fn new(iterations: usize, h: f64) -> Self {
        Self {
            iterations,
            burn_in: 0.1,
            h,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(Error::InvalidConfig("burn_in must lie in [0, 1)".into()));
        }
        if !(self.h >= 0.0) {
            return Err(Error::InvalidConfig("h must be non-negative".into()));
        }
        Ok(())
    }
}

/// Gate of the lazy sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LazyConfig {
    pub h_lazy: f64,
    /// Continuation probability when the lazy discrepancy exceeds `h_lazy`.
    pub alpha: f64,
}

/// What happened at one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Prior ratio test failed; nothing simulated.
    EarlyReject,
    /// Lazy gate failed and the continuation coin said stop.
    LazySkip,
    /// Lazy gate failed, continued with inflated weight `1/alpha`.
    LazyContinue,
    /// Expensive discrepancy computed with weight 1.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Chain state after the iteration.
    pub theta: Vec<f64>,
    /// Inflation factor of the state after the iteration.
    pub c: f64,
    /// Lazy discrepancy of the proposal (`NaN` if not simulated).
    pub rho_lazy: f64,
    /// Expensive discrepancy of the proposal (`NaN` if not computed).
    pub rho: f64,
    pub accepted: bool,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    pub iterations: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub simulations: usize,
    pub early_rejections: usize,
    pub expensive_evaluations: usize,
    pub skipped: usize,
    /// Skipped expensive evaluations over simulations.
    pub skip_fraction: f64,
    pub failures: usize,
    pub wall_time_secs: f64,
    pub seed: NoiseSeed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub trace: Vec<TraceRow>,
    /// Post-burn-in states, weight 1 each.
    pub samples: Vec<WeightedSample>,
    pub diagnostics: ChainDiagnostics,
}

impl ChainOutput {
    /// Column `k` of the post-burn-in states.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta.values[k]).collect()
    }
}

/// The two-point likelihood estimate of the lazy scheme: on the gate-fail
/// branch it is `I(ρ ≤ h)/α` with probability `α` and 0 otherwise.
pub fn lazy_estimate(gate_passed: bool, within_h: bool, alpha: f64, coin: f64) -> f64 {
    let hit = if within_h { 1.0 } else { 0.0 };
    if gate_passed {
        hit
    } else if coin < alpha {
        hit / alpha
    } else {
        0.0
    }
}

/// Lazy MCMC-ABC. `lazy == None` gives the standard sampler.
#[allow(clippy::too_many_arguments)]
fn run_chain<P, M, D, L>(
    prior: &P,
    model: &M,
    disc: &D,
    cfg: &McmcConfig,
    lazy: Option<(&L, LazyConfig)>,
    proposal: &RandomWalk,
    theta0: &[f64],
    seed: NoiseSeed,
) -> Result<ChainOutput>
where
    P: Prior,
    M: Simulator,
    D: Discrepancy<M::Output> + ?Sized,
    L: Fn(&M::Output) -> f64 + ?Sized,
{
    cfg.validate()?;
    check_dim(prior.dim(), theta0.len())?;
    check_dim(prior.dim(), proposal.dim())?;
    if let Some((_, lc)) = &lazy {
        if !(lc.alpha > 0.0 && lc.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1], got {}", lc.alpha)));
        }
    }
    let log_pi0 = prior.log_density(theta0);
    if log_pi0 == f64::NEG_INFINITY {
        return Err(Error::OutsideSupport(format!("theta0 {theta0:?} has zero prior density")));
    }
    let start = Instant::now();
    let mut chain_rng: StreamRng = seed.child(0).rng();
    let sim_seed = seed.child(1);
    let coin_seed = seed.child(2);

    let mut theta = theta0.to_vec();
    let mut log_pi = log_pi0;
    let mut c: f64 = 1.0;
    let mut rho_state = f64::NAN;
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut diag = ChainDiagnostics {
        iterations: cfg.iterations,
        accepted: 0,
        acceptance_rate: 0.0,
        simulations: 0,
        early_rejections: 0,
        expensive_evaluations: 0,
        skipped: 0,
        skip_fraction: 0.0,
        failures: 0,
        wall_time_secs: 0.0,
        seed,
    };
    let burn = (cfg.burn_in * cfg.iterations as f64).floor() as usize;
    let names = prior.names();
    let mut samples = Vec::with_capacity(cfg.iterations - burn);

    for i in 0..cfg.iterations {
        let prop = proposal.propose(&theta, &mut chain_rng);
        let u: f64 = chain_rng.random();
        let log_pi_prop = prior.log_density(&prop);
        // min(1, π(θ*) / (C π(θ)))
        let log_r = (log_pi_prop - log_pi - c.ln()).min(0.0);
        let mut row = TraceRow {
            iteration: i,
            theta: Vec::new(),
            c,
            rho_lazy: f64::NAN,
            rho: f64::NAN,
            accepted: false,
            branch: Branch::EarlyReject,
        };
        if log_pi_prop > f64::NEG_INFINITY && u.ln() < log_r {
            let y = model.simulate(&prop, sim_seed.child(i as u64));
            diag.simulations += 1;
            let mut c_prop = 1.0;
            let mut go_on = true;
            row.branch = Branch::Full;
            if let Some((lazy_fn, lc)) = &lazy {
                let rho_lazy = lazy_fn(&y);
                row.rho_lazy = rho_lazy;
                if !(rho_lazy <= lc.h_lazy) {
                    let coin: f64 = coin_seed.child(i as u64).rng().random();
                    if coin < lc.alpha {
                        c_prop = 1.0 / lc.alpha;
                        row.branch = Branch::LazyContinue;
                    } else {
                        go_on = false;
                        row.branch = Branch::LazySkip;
                        diag.skipped += 1;
                    }
                }
            }
            if go_on {
                diag.expensive_evaluations += 1;
                let rho = match disc.discrepancy(&y) {
                    Ok(r) if !r.is_nan() => r,
                    _ => {
                        diag.failures += 1;
                        f64::INFINITY
                    }
                };
                row.rho = rho;
                if rho <= cfg.h {
                    theta = prop;
                    log_pi = log_pi_prop;
                    c = c_prop;
                    rho_state = rho;
                    row.accepted = true;
                    diag.accepted += 1;
                }
            }
        } else {
            diag.early_rejections += 1;
        }
        row.theta = theta.clone();
        row.c = c;
        if i >= burn {
            samples.push(WeightedSample {
                theta: ParameterVector {
                    values: theta.clone(),
                    names: names.clone(),
                },
                weight: 1.0,
                discrepancy: if rho_state.is_nan() { 0.0 } else { rho_state },
                seed_id: i as u64,
            });
        }
        trace.push(row);
    }
    diag.acceptance_rate = diag.accepted as f64 / cfg.iterations as f64;
    diag.skip_fraction = if diag.simulations > 0 {
        diag.skipped as f64 / diag.simulations as f64
    } else {
        0.0
    };
    diag.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(ChainOutput {
        trace,
        samples,
        diagnostics: diag,
    })
}

/// MCMC-ABC with the uniform kernel and early rejection: the prior ratio
/// test is done before simulating.
pub fn abc_mcmc<P, M, D>(
    prior: &P,
    model: &M,
    disc: &D,
    cfg: &McmcConfig,
    proposal: &RandomWalk,
    theta0: &[f64],
    seed: NoiseSeed,
) -> Result<ChainOutput>
where
    P: Prior,
    M: Simulator,
    D: Discrepancy<M::Output> + ?Sized,
{
    run_chain::<P, M, D, fn(&M::Output) -> f64>(prior, model, disc, cfg, None, proposal, theta0, seed)
}

/// Lazy MCMC-ABC. The cheap discrepancy `lazy` gates the expensive one;
/// proposals failing the gate continue with probability `alpha` and carry
/// the inflation factor `1/alpha`, which keeps the sampler pseudo-marginal.
/// The acceptance pre-test uses `min(1, π(θ*)/(C π(θ)))`, which is exact
/// for a uniform prior and a symmetric proposal.
#[allow(clippy::too_many_arguments)]
pub fn abc_mcmc_lazy<P, M, D, L>(
    prior: &P,
    model: &M,
    disc: &D,
    cfg: &McmcConfig,
    lazy: &L,
    lazy_cfg: LazyConfig,
    proposal: &RandomWalk,
    theta0: &[f64],
    seed: NoiseSeed,
) -> Result<ChainOutput>
where
    P: Prior,
    M: Simulator,
    D: Discrepancy<M::Output> + ?Sized,
    L: Fn(&M::Output) -> f64 + ?Sized,
{
    run_chain(prior, model, disc, cfg, Some((lazy, lazy_cfg)), proposal, theta0, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotRow {
    pub theta: Vec<f64>,
    pub lazy_value: f64,
    pub rho: f64,
    pub accepted: bool,
}

/// Rejection-ABC pilot recording the lazy summary of every simulation and
/// whether the expensive discrepancy passed `h`. Seeds follow
/// [`super::abc_rejection`].
#[allow(clippy::too_many_arguments)]
pub fn pilot_run<P, M, D, L>(
    prior: &P,
    model: &M,
    disc: &D,
    h: f64,
    lazy_summary: &L,
    draws: usize,
    seed: NoiseSeed,
    exec: Execution,
) -> Result<Vec<PilotRow>>
where
    P: Prior,
    M: Simulator,
    D: Discrepancy<M::Output> + ?Sized,
    L: Fn(&M::Output) -> f64 + Sync + ?Sized,
{
    if draws == 0 {
        return Err(Error::InvalidConfig("at least one draw is required".into()));
    }
    exec.try_map(draws, |i| {
        let s = seed.child(i as u64);
        let theta = prior.sample(&mut s.child(0).rng())?;
        let y = model.simulate(&theta, s.child(1));
        let rho = disc.discrepancy(&y).unwrap_or(f64::INFINITY);
        Ok(PilotRow {
            lazy_value: lazy_summary(&y),
            accepted: rho <= h,
            rho,
            theta,
        })
    })
}
