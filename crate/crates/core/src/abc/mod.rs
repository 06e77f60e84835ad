//! Approximate Bayesian computation with auxiliary-model discrepancies:
//! rejection sampling, MCMC with early rejection, and lazy MCMC that skips
//! the expensive discrepancy when a cheap one already looks poor.

mod discrepancy;
mod mcmc;
mod rejection;

pub use discrepancy::{
    disc_il, disc_ip, disc_is, Discrepancy, IndirectLikelihood, IndirectParameter, IndirectScore,
    ScoreWeighting, SimpleSummary,
};
pub use mcmc::{
    abc_mcmc, abc_mcmc_lazy, lazy_estimate, pilot_run, Branch, ChainDiagnostics, ChainOutput,
    LazyConfig, McmcConfig, PilotRow, RandomWalk, TraceRow,
};
pub use rejection::{abc_rejection, keep_nearest, RejectionDraw, RejectionOutput};
