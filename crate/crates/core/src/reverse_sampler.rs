//! The reverse sampler.
//!
//! Each draw fixes a fresh noise seed `ξ`, solves the single-replicate
//! matching problem `min_θ (s(θ, ξ) − s_obs)ᵀ W (s(θ, ξ) − s_obs)` and weights
//! the solution by `π(θ) / vol(θ)` with `vol = sqrt(det(JᵀJ))` and `J` the
//! Jacobian of `θ ↦ s(θ, ξ)` at the solution. Optional post-processing:
//! keeping the draws with the smallest discrepancy and local-linear
//! regression adjustment.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::models::SmoothSimulator;
use crate::optim::NelderMead;
use crate::par::Execution;
use crate::prior::Prior;
use crate::rng::NoiseSeed;
use crate::types::{ParameterVector, WeightMatrix, WeightedSample};

#[derive(Debug, Clone, PartialEq)]
pub struct RsDraw {
    pub theta: ParameterVector,
    pub s_sim: Vec<f64>,
    /// Optimised objective at `theta`.
    pub discrepancy: f64,
    /// `q × p` Jacobian of the summaries in `θ`.
    pub jacobian: DMatrix<f64>,
    pub volume: f64,
    pub weight: f64,
    pub xi: NoiseSeed,
    /// Set when the optimiser did not converge or the volume vanished; such
    /// draws carry zero weight.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsConfig {
    pub draws: usize,
    pub w: WeightMatrix,
    /// Optimiser start for every draw.
    pub theta_init: Vec<f64>,
    /// Relative finite-difference step for the Jacobian.
    pub jac_step: f64,
    pub tol: f64,
    /// Uniform kernel `I(ρ ≤ h)` multiplied into the weights when set.
    pub kernel_h: Option<f64>,
}

impl RsConfig {
    pub fn new(draws: usize, q: usize, theta_init: Vec<f64>) -> Self {
        Self {
            draws,
            w: WeightMatrix::identity(q),
            theta_init,
            jac_step: 1e-5,
            tol: 1e-10,
            kernel_h: None,
        }
    }
}

fn objective<M, S>(model: &M, summary: &S, s_obs: &[f64], w: &WeightMatrix, theta: &[f64], xi: NoiseSeed) -> f64
where
    M: SmoothSimulator,
    S: Fn(&M::Output) -> Result<Vec<f64>> + Sync + ?Sized,
{
    match summary(&model.simulate(theta, xi)) {
        Ok(s) => {
            let d: Vec<f64> = s.iter().zip(s_obs).map(|(a, b)| a - b).collect();
            w.quadratic_form(&d).unwrap_or(f64::INFINITY)
        }
        Err(_) => f64::INFINITY,
    }
}

/// One reverse-sampler draw with the noise held at `xi`.
pub fn rs_solve_one<M, S>(
    model: &M,
    summary: &S,
    s_obs: &[f64],
    w: &WeightMatrix,
    xi: NoiseSeed,
    theta_init: &[f64],
    jac_step: f64,
    tol: f64,
) -> Result<RsDraw>
where
    M: SmoothSimulator,
    S: Fn(&M::Output) -> Result<Vec<f64>> + Sync + ?Sized,
{
    check_dim(model.dim(), theta_init.len())?;
    check_dim(s_obs.len(), w.dim())?;
    let m = NelderMead::default()
        .with_tol(tol)
        .minimize(|t| objective(model, summary, s_obs, w, t, xi), theta_init);
    let theta = m.x;
    let s_sim = summary(&model.simulate(&theta, xi))?;
    check_dim(s_obs.len(), s_sim.len())?;
    let (q, p) = (s_sim.len(), theta.len());
    let mut jac = DMatrix::zeros(q, p);
    let mut t = theta.clone();
    for j in 0..p {
        let h = jac_step * theta[j].abs().max(1.0);
        t[j] = theta[j] + h;
        let up = summary(&model.simulate(&t, xi))?;
        t[j] = theta[j] - h;
        let down = summary(&model.simulate(&t, xi))?;
        t[j] = theta[j];
        for r in 0..q {
            jac[(r, j)] = (up[r] - down[r]) / (2.0 * h);
        }
    }
    let volume = (jac.transpose() * &jac).determinant().max(0.0).sqrt();
    let flagged = !m.converged || !(volume > 0.0) || !m.value.is_finite();
    Ok(RsDraw {
        theta: ParameterVector::unnamed(theta),
        s_sim,
        discrepancy: m.value,
        jacobian: jac,
        volume,
        weight: 0.0,
        xi,
        flagged,
    })
}

/// `cfg.draws` independent draws; draw `i` uses the noise seed
/// `seed.child(i)`. Weights are `π(θ) vol⁻¹` (times the kernel, if any),
/// normalised over unflagged draws.
pub fn rs_sample<M, S, P>(
    model: &M,
    summary: &S,
    s_obs: &[f64],
    prior: &P,
    cfg: &RsConfig,
    seed: NoiseSeed,
    exec: Execution,
) -> Result<Vec<RsDraw>>
where
    M: SmoothSimulator,
    S: Fn(&M::Output) -> Result<Vec<f64>> + Sync + ?Sized,
    P: Prior,
{
    if cfg.draws == 0 {
        return Err(Error::InvalidConfig("at least one draw is required".into()));
    }
    let names = prior.names();
    let mut draws = exec.try_map(cfg.draws, |i| {
        rs_solve_one(
            model,
            summary,
            s_obs,
            &cfg.w,
            seed.child(i as u64),
            &cfg.theta_init,
            cfg.jac_step,
            cfg.tol,
        )
    })?;
    for d in &mut draws {
        d.theta.names = names.clone();
        if d.flagged {
            continue;
        }
        let kernel = match cfg.kernel_h {
            Some(h) if d.discrepancy > h => 0.0,
            _ => 1.0,
        };
        d.weight = prior.density(&d.theta.values) / d.volume * kernel;
    }
    if draws.iter().all(|d| d.flagged) {
        return Err(Error::AllDrawsFlagged(draws.len()));
    }
    normalize(&mut draws)?;
    Ok(draws)
}

fn normalize(draws: &mut [RsDraw]) -> Result<()> {
    let total: f64 = draws.iter().map(|d| d.weight).sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    for d in draws.iter_mut() {
        d.weight /= total;
    }
    Ok(())
}

/// Keeps the `keep_fraction` of unflagged draws with the smallest
/// discrepancy and renormalises their weights.
pub fn rs_threshold(draws: &[RsDraw], keep_fraction: f64) -> Result<Vec<RsDraw>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("keep_fraction must lie in (0, 1], got {keep_fraction}")));
    }
    let mut live: Vec<&RsDraw> = draws.iter().filter(|d| !d.flagged).collect();
    if live.is_empty() {
        return Err(Error::Empty("reverse-sampler draws"));
    }
    live.sort_by(|a, b| a.discrepancy.total_cmp(&b.discrepancy));
    let keep = ((live.len() as f64 * keep_fraction).round() as usize).clamp(1, live.len());
    let mut out: Vec<RsDraw> = live.into_iter().take(keep).cloned().collect();
    normalize(&mut out)?;
    Ok(out)
}

/// Weighted local-linear regression adjustment
/// `θ̃_i = θ_i − β̂ᵀ (s_i − s_obs)`, with `β̂` from weighted least squares of
/// `θ` on `(1, s − s_obs)` solved by SVD pseudo-inverse (collinear summaries
/// are allowed). If every `s_i` is identical the input is returned unchanged.
pub fn regression_adjust(thetas: &[Vec<f64>], s: &[Vec<f64>], weights: &[f64], s_obs: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_dim(thetas.len(), s.len())?;
    check_dim(thetas.len(), weights.len())?;
    let n = thetas.len();
    if n == 0 {
        return Err(Error::Empty("samples to adjust"));
    }
    let p = thetas[0].len();
    let q = s_obs.len();
    let positive = weights.iter().filter(|w| **w > 0.0).count();
    if positive < p + q + 1 {
        return Err(Error::InvalidConfig(format!(
            "regression adjustment needs at least {} positively weighted samples, got {positive}",
            p + q + 1
        )));
    }
    for row in s {
        check_dim(q, row.len())?;
    }
    if s.iter().all(|row| row == &s[0]) {
        warn!("all summaries identical; regression adjustment skipped");
        return Ok(thetas.to_vec());
    }
    let x = DMatrix::from_fn(n, q + 1, |i, j| if j == 0 { 1.0 } else { s[i][j - 1] - s_obs[j - 1] });
    let wsqrt = DVector::from_iterator(n, weights.iter().map(|w| w.max(0.0).sqrt()));
    let xw = DMatrix::from_fn(n, q + 1, |i, j| x[(i, j)] * wsqrt[i]);
    let svd = xw.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let pinv = svd
        .pseudo_inverse(1e-10 * smax)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut out = thetas.to_vec();
    for k in 0..p {
        let yw = DVector::from_iterator(n, (0..n).map(|i| thetas[i][k] * wsqrt[i]));
        let coef = &pinv * yw;
        for i in 0..n {
            let shift: f64 = (1..=q).map(|j| coef[j] * x[(i, j)]).sum();
            out[i][k] = thetas[i][k] - shift;
        }
    }
    Ok(out)
}

/// Regression-adjusts reverse-sampler draws in place of their `θ`.
pub fn adjust_draws(draws: &[RsDraw], s_obs: &[f64]) -> Result<Vec<RsDraw>> {
    let thetas: Vec<Vec<f64>> = draws.iter().map(|d| d.theta.values.clone()).collect();
    let s: Vec<Vec<f64>> = draws.iter().map(|d| d.s_sim.clone()).collect();
    let w: Vec<f64> = draws.iter().map(|d| d.weight).collect();
    let adjusted = regression_adjust(&thetas, &s, &w, s_obs)?;
    Ok(draws
        .iter()
        .zip(adjusted)
        .map(|(d, t)| RsDraw {
            theta: ParameterVector {
                values: t,
                names: d.theta.names.clone(),
            },
            ..d.clone()
        })
        .collect())
}

/// Draws as generic weighted samples.
pub fn to_weighted_samples(draws: &[RsDraw]) -> Vec<WeightedSample> {
    draws
        .iter()
        .map(|d| WeightedSample {
            theta: d.theta.clone(),
            weight: d.weight,
            discrepancy: d.discrepancy,
            seed_id: d.xi.stream_id,
        })
        .collect()
}
