//! Experiment recipes. Each one turns a validated configuration into an
//! [`Outcome`]; [`run`] adds `diagnostics.json` and returns the artifacts.
//!
//! Seed layout: the root stream is `NoiseSeed::new(seed, 0)`. Observed data
//! come from `root.child(0)`, pilot or reference-table draws from
//! `root.child(1)` and the main sampler from `root.child(2)`.

mod epidemic;
mod spatial;
mod toy;

use std::time::Instant;

use lfi_core::io::write_columns;
use lfi_core::stats::{kde_grid, weighted_mean, weighted_quantile, weighted_variance};
use lfi_core::{Execution, NoiseSeed};
use serde_json::{json, Map, Value};

use crate::artifacts::Artifacts;
use crate::config::{Params, RunConfig};
use crate::error::{Context, Result};

pub use spatial::{run_abc as run_spatial_abc, SpatialAbcInput, Summary as SpatialSummary};

/// What a recipe produced, before diagnostics are assembled.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub acceptance_rate: Option<f64>,
    pub skip_fraction: Option<f64>,
    /// Named streams the recipe drew from, beyond the root.
    pub streams: Vec<(&'static str, NoiseSeed)>,
    pub results: Value,
    /// Text for standard output.
    pub stdout: Option<String>,
}

/// Per-run values shared by the recipes.
pub struct Ctx {
    pub root: NoiseSeed,
    pub preamble: String,
    pub exec: Execution,
}

impl Ctx {
    pub fn new(label: &str, seed: u64, hash: &str, exec: Execution) -> Self {
        Self {
            root: NoiseSeed::new(seed, 0),
            preamble: format!("lfi {label} config_sha256={hash} seed={seed}"),
            exec,
        }
    }

    pub fn data(&self) -> NoiseSeed {
        self.root.child(0)
    }

    pub fn pilot(&self) -> NoiseSeed {
        self.root.child(1)
    }

    pub fn main(&self) -> NoiseSeed {
        self.root.child(2)
    }

    pub fn preamble(&self) -> Option<&str> {
        Some(&self.preamble)
    }
}

/// Run the configured experiment and return every artifact, including
/// `diagnostics.json`, plus any text for standard output.
pub fn run(cfg: &RunConfig, exec: Execution) -> Result<(Artifacts, Option<String>)> {
    let started = Instant::now();
    let hash = cfg.hash();
    let ctx = Ctx::new(cfg.experiment.key(), cfg.seed, &hash, exec);
    log::info!("running {} with seed {} (config {hash})", cfg.experiment.key(), cfg.seed);
    let out = match &cfg.params {
        Params::ToyRs(p) => toy::toy_rs(&ctx, p)?,
        Params::IiDemo(p) => toy::ii_demo(&ctx, p)?,
        Params::PdbilToy(p) => toy::pdbil_toy(&ctx, p)?,
        Params::EpidemicAbc(p) => epidemic::epidemic_abc(&ctx, p, None)?,
        Params::EpidemicLazy(p) => epidemic::epidemic_abc(&ctx, &p.base(), Some((p.h_lazy, p.alpha)))?,
        Params::EpidemicLnaDirect(p) => epidemic::lna_direct(&ctx, p)?,
        Params::Pilot(p) => epidemic::pilot(&ctx, p)?,
        Params::SpatialAbcCp(p) => spatial::spatial_abc(&ctx, p, spatial::Summary::Composite)?,
        Params::SpatialAbcEc(p) => spatial::spatial_abc(&ctx, p, spatial::Summary::Extremal)?,
    };
    let wall = started.elapsed().as_secs_f64();
    let diagnostics = json!({
        "experiment": cfg.experiment.key(),
        "config_sha256": hash,
        "config": cfg.canonical(),
        "lfi_version": env!("CARGO_PKG_VERSION"),
    });
    finish(out, ctx.root, diagnostics, wall)
}

/// Merge recipe diagnostics into `header` and queue `diagnostics.json`.
pub fn finish(out: Outcome, root: NoiseSeed, header: Value, wall: f64) -> Result<(Artifacts, Option<String>)> {
    let Outcome {
        mut artifacts,
        acceptance_rate,
        skip_fraction,
        streams,
        results,
        stdout,
    } = out;
    let mut seeds = Map::new();
    seeds.insert("root".into(), json!(root));
    for (name, s) in streams {
        seeds.insert(name.into(), json!(s));
    }
    let mut d = match header {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    d.insert("seed".into(), json!(root.seed));
    d.insert("seeds".into(), Value::Object(seeds));
    d.insert("acceptance_rate".into(), json!(acceptance_rate));
    d.insert("skip_fraction".into(), json!(skip_fraction));
    d.insert("wall_time_secs".into(), json!(wall));
    d.insert("artifacts".into(), json!(artifacts.paths().map(|p| p.display().to_string()).collect::<Vec<_>>()));
    d.insert("results".into(), results);
    let mut text = serde_json::to_vec_pretty(&Value::Object(d)).expect("diagnostics serialise");
    text.push(b'\n');
    artifacts.add("diagnostics.json", text);
    Ok((artifacts, stdout))
}

/// Kernel density of a weighted sample as `theta,density[,analytic]`.
pub fn density_grid(
    x: &[f64],
    w: Option<&[f64]>,
    points: usize,
    analytic: Option<&dyn Fn(f64) -> f64>,
    preamble: Option<&str>,
) -> Result<Vec<u8>> {
    let grid = kde_grid(x, w, points);
    let theta: Vec<f64> = grid.iter().map(|g| g.0).collect();
    let mut names = vec!["theta", "density"];
    let mut columns = vec![theta.clone(), grid.iter().map(|g| g.1).collect()];
    if let Some(f) = analytic {
        names.push("analytic");
        columns.push(theta.iter().map(|t| f(*t)).collect());
    }
    write_columns(Vec::new(), &names, &columns, preamble).context("density grid")
}

/// Weighted mean, standard deviation and 5/50/95% quantiles.
pub fn describe(x: &[f64], w: Option<&[f64]>) -> Value {
    if x.is_empty() {
        return Value::Null;
    }
    let unit = vec![1.0; x.len()];
    let w = w.unwrap_or(&unit);
    json!({
        "mean": weighted_mean(x, w),
        "sd": weighted_variance(x, w).sqrt(),
        "q05": weighted_quantile(x, w, 0.05),
        "q50": weighted_quantile(x, w, 0.5),
        "q95": weighted_quantile(x, w, 0.95),
    })
}

/// Marginal summaries keyed by parameter name.
pub fn describe_columns(names: &[String], draws: &[Vec<f64>], w: Option<&[f64]>) -> Value {
    let mut m = Map::new();
    for (k, name) in names.iter().enumerate() {
        let x: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        m.insert(name.clone(), describe(&x, w));
    }
    Value::Object(m)
}

/// pdBIL trace rows. The stored auxiliary log-likelihood goes in its own
/// column; `rho` is not defined for this sampler and is written as NaN.
pub fn write_pdbil(chain: &lfi_core::bil::PdbilOutput, preamble: Option<&str>) -> Result<Vec<u8>> {
    let p = chain.trace.first().map_or(0, |r| r.theta.len());
    let burn = chain.trace.len() - chain.samples.len();
    let mut w = lfi_core::io::SampleWriter::new(Vec::new(), p, &["loglik", "accepted", "fit_failed", "burn_in"], preamble)
        .context("samples.csv")?;
    for (i, r) in chain.trace.iter().enumerate() {
        let extras = [
            r.loglik.to_string(),
            (r.accepted as u8).to_string(),
            (r.fit_failed as u8).to_string(),
            ((i < burn) as u8).to_string(),
        ];
        w.row(r.iteration, &r.theta, 1.0, f64::NAN, &extras).context("samples.csv")?;
    }
    w.finish().context("samples.csv")
}
