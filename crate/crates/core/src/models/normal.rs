use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Simulator, SmoothSimulator};
use crate::error::{Error, Result};
use crate::rng::NoiseSeed;
use crate::types::{SummaryKind, SummaryStatistic};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalLocationConfig {
    pub n: usize,
    pub mu: f64,
}

/// `y_i = mu + ξ_i` with `ξ_i` standard normal drawn from `xi`.
pub fn simulate_normal(cfg: NormalLocationConfig, xi: NoiseSeed) -> Vec<f64> {
    let mut rng = xi.rng();
    (0..cfg.n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            cfg.mu + e
        })
        .collect()
}

/// Normal location family with `θ = (mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalLocationModel {
    pub n: usize,
}

impl Simulator for NormalLocationModel {
    type Output = Vec<f64>;

    fn dim(&self) -> usize {
        1
    }

    fn simulate(&self, theta: &[f64], xi: NoiseSeed) -> Vec<f64> {
        simulate_normal(NormalLocationConfig { n: self.n, mu: theta[0] }, xi)
    }
}

impl SmoothSimulator for NormalLocationModel {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalSummary {
    Mean,
    Median,
    Min,
    Max,
    Midrange,
}

/// Selected summaries of `y`, always in the order mean, median, min, max,
/// midrange regardless of the selector's order.
pub fn summarize_normal(y: &[f64], selector: &[NormalSummary]) -> Result<SummaryStatistic> {
    if selector.is_empty() {
        return Err(Error::Empty("summary selector"));
    }
    if y.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut sel = selector.to_vec();
    sel.sort();
    sel.dedup();
    let (min, max) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let values = sel
        .iter()
        .map(|s| match s {
            NormalSummary::Mean => crate::stats::mean(y),
            NormalSummary::Median => crate::stats::median(y),
            NormalSummary::Min => min,
            NormalSummary::Max => max,
            NormalSummary::Midrange => 0.5 * (min + max),
        })
        .collect();
    SummaryStatistic::new(values, SummaryKind::Simple)
}
