use std::sync::Arc;

use super::{ec_group_summary, fit_composite, CompositeFitConfig, MaxStableModel, TriangleGrouping};
use crate::abc::{keep_nearest, RejectionDraw};
use crate::error::{check_dim, Error, Result};
use crate::par::Execution;
use crate::prior::Prior;
use crate::rng::NoiseSeed;
use crate::types::{weighted_norm, WeightMatrix, WeightedSample};

/// Prior draws with both spatial summaries of their simulated panels.
/// Summaries do not depend on the observed data, so one table serves any
/// number of observed datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub theta: Vec<Vec<f64>>,
    /// Composite-likelihood estimate; `None` if simulation or fitting failed.
    pub cp: Vec<Option<Vec<f64>>>,
    /// Extremal-coefficient group means; `None` on failure.
    pub ec: Vec<Option<Vec<f64>>>,
    pub names: Arc<[String]>,
}

/// Draw `i` takes its prior sample from `seed.child(i).child(0)` and its
/// panel from `seed.child(i).child(1)`. Every composite fit starts at
/// `cp_start`.
#[allow(clippy::too_many_arguments)]
pub fn build_reference_table<P: Prior>(
    model: &MaxStableModel,
    prior: &P,
    grouping: &TriangleGrouping,
    draws: usize,
    cp_start: &[f64],
    fit_cfg: &CompositeFitConfig,
    seed: NoiseSeed,
    exec: Execution,
) -> Result<ReferenceTable> {
    check_dim(2, prior.dim())?;
    if draws == 0 {
        return Err(Error::InvalidConfig("at least one draw is required".into()));
    }
    let rows = exec.try_map(draws, |i| -> Result<_> {
        let s = seed.child(i as u64);
        let theta = prior.sample(&mut s.child(0).rng())?;
        let (cp, ec) = match model.try_simulate(&theta, s.child(1)) {
            Ok(panel) => (
                fit_composite(&panel, &model.layout, cp_start, fit_cfg).ok().map(|f| f.theta),
                ec_group_summary(&panel, grouping).ok().map(|s| s.values),
            ),
            Err(_) => (None, None),
        };
        Ok((theta, cp, ec))
    })?;
    let mut table = ReferenceTable {
        theta: Vec::with_capacity(draws),
        cp: Vec::with_capacity(draws),
        ec: Vec::with_capacity(draws),
        names: prior.names(),
    };
    for (t, c, e) in rows {
        table.theta.push(t);
        table.cp.push(c);
        table.ec.push(e);
    }
    Ok(table)
}

fn nearest(table: &ReferenceTable, rho: impl Fn(usize) -> f64, keep_fraction: f64) -> Result<Vec<WeightedSample>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("keep_fraction must lie in (0, 1], got {keep_fraction}")));
    }
    let draws: Vec<RejectionDraw> = (0..table.theta.len())
        .map(|i| RejectionDraw {
            theta: table.theta[i].clone(),
            rho: rho(i),
            seed_id: i as u64,
        })
        .collect();
    Ok(keep_nearest(&draws, keep_fraction, &table.names))
}

/// ABC-cp: Mahalanobis distance `sqrt(dᵀ J d)` between composite estimates,
/// with `J` the composite information at the observed estimate.
pub fn abc_cp(table: &ReferenceTable, cp_obs: &[f64], info: &WeightMatrix, keep_fraction: f64) -> Result<Vec<WeightedSample>> {
    check_dim(2, cp_obs.len())?;
    check_dim(2, info.dim())?;
    nearest(
        table,
        |i| match &table.cp[i] {
            Some(c) => {
                let d: Vec<f64> = c.iter().zip(cp_obs).map(|(a, b)| a - b).collect();
                weighted_norm(&d, info).unwrap_or(f64::INFINITY)
            }
            None => f64::INFINITY,
        },
        keep_fraction,
    )
}

/// ABC-ec: L1 distance between extremal-coefficient group means.
pub fn abc_ec(table: &ReferenceTable, ec_obs: &[f64], keep_fraction: f64) -> Result<Vec<WeightedSample>> {
    nearest(
        table,
        |i| match &table.ec[i] {
            Some(e) if e.len() == ec_obs.len() => e.iter().zip(ec_obs).map(|(a, b)| (a - b).abs()).sum(),
            _ => f64::INFINITY,
        },
        keep_fraction,
    )
}
