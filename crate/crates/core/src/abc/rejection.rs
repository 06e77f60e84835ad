use log::warn;

use super::Discrepancy;
use crate::error::{Error, Result};
use crate::models::Simulator;
use crate::par::Execution;
use crate::prior::Prior;
use crate::rng::NoiseSeed;
use crate::types::{ParameterVector, WeightedSample};

/// One prior draw with its discrepancy (`+inf` if the discrepancy failed).
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionDraw {
    pub theta: Vec<f64>,
    pub rho: f64,
    pub seed_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionOutput {
    /// Draws with `rho <= h`, weight 1 each.
    pub accepted: Vec<WeightedSample>,
    /// Every draw, in draw order.
    pub draws: Vec<RejectionDraw>,
    pub acceptance_rate: f64,
    pub failures: usize,
}

/// Rejection ABC with the uniform kernel `I(ρ ≤ h)`.
///
/// Draw `i` takes its prior sample from `seed.child(i).child(0)` and its
/// simulation noise from `seed.child(i).child(1)`.
pub fn abc_rejection<P, M, D>(
    prior: &P,
    model: &M,
    disc: &D,
    h: f64,
    draws: usize,
    seed: NoiseSeed,
    exec: Execution,
) -> Result<RejectionOutput>
where
    P: Prior,
    M: Simulator,
    D: Discrepancy<M::Output> + ?Sized,
{
    if draws == 0 {
        return Err(Error::InvalidConfig("at least one draw is required".into()));
    }
    if !(h >= 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be non-negative, got {h}")));
    }
    let rows = exec.try_map(draws, |i| -> Result<(RejectionDraw, bool)> {
        let s = seed.child(i as u64);
        let theta = prior.sample(&mut s.child(0).rng())?;
        let y = model.simulate(&theta, s.child(1));
        let (rho, failed) = match disc.discrepancy(&y) {
            Ok(r) if !r.is_nan() => (r, false),
            _ => (f64::INFINITY, true),
        };
        Ok((
            RejectionDraw {
                theta,
                rho,
                seed_id: i as u64,
            },
            failed,
        ))
    })?;
    let failures = rows.iter().filter(|(_, f)| *f).count();
    let draws: Vec<RejectionDraw> = rows.into_iter().map(|(d, _)| d).collect();
    let names = prior.names();
    let accepted: Vec<WeightedSample> = draws
        .iter()
        .filter(|d| d.rho <= h)
        .map(|d| WeightedSample {
            theta: ParameterVector {
                values: d.theta.clone(),
                names: names.clone(),
            },
            weight: 1.0,
            discrepancy: d.rho,
            seed_id: d.seed_id,
        })
        .collect();
    if accepted.is_empty() {
        warn!("rejection ABC accepted none of {} draws at h = {h}", draws.len());
    }
    Ok(RejectionOutput {
        acceptance_rate: accepted.len() as f64 / draws.len() as f64,
        accepted,
        draws,
        failures,
    })
}

/// The `fraction` of draws with the smallest discrepancy (ties broken by
/// draw order), as unit-weight samples. Equivalent to choosing `h` as the
/// corresponding discrepancy quantile.
pub fn keep_nearest(draws: &[RejectionDraw], fraction: f64, names: &std::sync::Arc<[String]>) -> Vec<WeightedSample> {
    let keep = ((draws.len() as f64 * fraction).round() as usize).clamp(1, draws.len().max(1));
    let mut idx: Vec<usize> = (0..draws.len()).collect();
    idx.sort_by(|&a, &b| draws[a].rho.total_cmp(&draws[b].rho).then(a.cmp(&b)));
    idx.into_iter()
        .take(keep.min(draws.len()))
        .map(|i| WeightedSample {
            theta: ParameterVector {
                values: draws[i].theta.clone(),
                names: names.clone(),
            },
            weight: 1.0,
            discrepancy: draws[i].rho,
            seed_id: draws[i].seed_id,
        })
        .collect()
}
