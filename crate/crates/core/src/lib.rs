//! Likelihood-free Bayesian inference: classical indirect inference, ABC with
//! auxiliary-model summaries, parametric Bayesian indirect likelihood, the
//! reverse sampler and lazy MCMC-ABC, plus the simulators and spatial-extremes
//! tools they are exercised on.

pub mod abc;
pub mod auxiliary;
pub mod bil;
pub mod error;
pub mod ii;
pub mod io;
pub mod models;
pub mod optim;
pub mod par;
pub mod prior;
pub mod reverse_sampler;
pub mod rng;
pub mod spatial;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use par::Execution;
pub use prior::{FlatPrior, Prior, UniformBox};
pub use rng::NoiseSeed;
pub use types::{
    normalize_weights, weighted_norm, AuxParameter, ParameterVector, SummaryKind,
    SummaryStatistic, WeightMatrix, WeightedSample,
};
