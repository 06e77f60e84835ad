//! Generative simulators.

mod normal;
mod si;

pub use normal::{
    simulate_normal, summarize_normal, NormalLocationConfig, NormalLocationModel, NormalSummary,
};
pub use si::{
    final_observation_summary, simulate_si, EpidemicPath, EventKind, SiConfig, SiModel,
};

use crate::rng::NoiseSeed;

/// A simulator `y = g(θ, ξ)`: the dataset is a deterministic function of the
/// parameter and the noise seed.
pub trait Simulator: Sync {
    type Output: Send + Sync;

    fn dim(&self) -> usize;

    fn simulate(&self, theta: &[f64], xi: NoiseSeed) -> Self::Output;
}

/// Simulators whose output is a smooth function of `θ` under fixed noise.
/// Only these can be inverted by the reverse sampler.
pub trait SmoothSimulator: Simulator {}
