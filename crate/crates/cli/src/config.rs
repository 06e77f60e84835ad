//! Versioned TOML experiment configuration.
//!
//! A file holds `schema_version`, an optional `experiment` tag that must
//! match the subcommand, the `seed`, an optional `output_dir` and one
//! section named after the experiment. Missing keys take documented
//! defaults; unknown keys, foreign sections and out-of-range values are hard
//! errors reported with their key path.

use std::path::{Path, PathBuf};

use lfi_core::auxiliary::BindingForm;
use lfi_core::models::NormalSummary;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ToyRs,
    IiDemo,
    EpidemicAbc,
    EpidemicLazy,
    EpidemicLnaDirect,
    PdbilToy,
    SpatialAbcCp,
    SpatialAbcEc,
    Pilot,
}

impl ExperimentKind {
    pub fn key(self) -> &'static str {
        match self {
            ExperimentKind::ToyRs => "toy_rs",
            ExperimentKind::IiDemo => "ii_demo",
            ExperimentKind::EpidemicAbc => "epidemic_abc",
            ExperimentKind::EpidemicLazy => "epidemic_lazy",
            ExperimentKind::EpidemicLnaDirect => "epidemic_lna_direct",
            ExperimentKind::PdbilToy => "pdbil_toy",
            ExperimentKind::SpatialAbcCp => "spatial_abc_cp",
            ExperimentKind::SpatialAbcEc => "spatial_abc_ec",
            ExperimentKind::Pilot => "pilot",
        }
    }
}

/// Gaussian auxiliary model for the normal toy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxChoice {
    MeanOnly,
    MeanLogSd,
}

/// Weighting of the auxiliary score in the epidemic discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Identity,
    InverseInformation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyRs {
    /// Observed sample size.
    pub n: usize,
    /// Mean used to generate the observed data.
    pub mu: f64,
    pub draws: usize,
    pub summaries: Vec<NormalSummary>,
    pub keep_fraction: f64,
    pub theta_init: f64,
    pub grid_points: usize,
}

impl Default for ToyRs {
    fn default() -> Self {
        Self {
            n: 100,
            mu: 1.0,
            draws: 2000,
            summaries: vec![NormalSummary::Mean],
            keep_fraction: 0.5,
            theta_init: 0.0,
            grid_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IiDemo {
    pub n: usize,
    pub mu: f64,
    /// Simulated datasets per objective evaluation.
    pub replicates: usize,
    pub aux: AuxChoice,
    pub lower: f64,
    pub upper: f64,
    pub theta_init: f64,
    pub profile_points: usize,
}

impl Default for IiDemo {
    fn default() -> Self {
        Self {
            n: 1000,
            mu: 1.0,
            replicates: 100,
            aux: AuxChoice::MeanOnly,
            lower: -5.0,
            upper: 5.0,
            theta_init: 0.0,
            profile_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdbilToy {
    pub n: usize,
    pub mu: f64,
    pub aux: AuxChoice,
    pub binding_n: usize,
    pub binding_form: BindingForm,
    pub iterations: usize,
    pub burn_in: f64,
    pub proposal_sd: f64,
    pub lower: f64,
    pub upper: f64,
    pub grid_points: usize,
}

impl Default for PdbilToy {
    fn default() -> Self {
        Self {
            n: 50,
            mu: 1.0,
            aux: AuxChoice::MeanLogSd,
            binding_n: 100,
            binding_form: BindingForm::Pooled,
            iterations: 12_000,
            burn_in: 0.1,
            proposal_sd: 0.25,
            lower: -5.0,
            upper: 5.0,
            grid_points: 200,
        }
    }
}

/// Generating values of the synthetic epidemic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicData {
    pub beta: f64,
    pub gamma: f64,
    pub s0: u32,
    pub i0: u32,
    pub t_end: f64,
}

impl Default for EpidemicData {
    fn default() -> Self {
        let c = lfi_core::models::SiConfig::default();
        Self {
            beta: c.beta,
            gamma: c.gamma,
            s0: c.s0,
            i0: c.i0,
            t_end: c.t_end,
        }
    }
}

/// Uniform box on `(ln β, ln γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicPrior {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl Default for EpidemicPrior {
    fn default() -> Self {
        Self {
            lower: [1e-4f64.ln(), 0.01f64.ln()],
            upper: [1e-2f64.ln(), 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicAbc {
    pub data: EpidemicData,
    pub prior: EpidemicPrior,
    pub weighting: Weighting,
    pub pilot_draws: usize,
    /// Tolerance as a quantile of pilot discrepancies, unless `h` is set.
    pub h_quantile: f64,
    pub h: Option<f64>,
    pub iterations: usize,
    pub burn_in: f64,
}

impl Default for EpidemicAbc {
    fn default() -> Self {
        Self {
            data: EpidemicData::default(),
            prior: EpidemicPrior::default(),
            weighting: Weighting::Identity,
            pilot_draws: 20_000,
            h_quantile: 0.01,
            h: None,
            iterations: 20_000,
            burn_in: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicLazy {
    pub data: EpidemicData,
    pub prior: EpidemicPrior,
    pub weighting: Weighting,
    pub pilot_draws: usize,
    pub h_quantile: f64,
    pub h: Option<f64>,
    pub iterations: usize,
    pub burn_in: f64,
    /// Gate on the distance between final observations.
    pub h_lazy: f64,
    pub alpha: f64,
}

impl Default for EpidemicLazy {
    fn default() -> Self {
        let base = EpidemicAbc::default();
        Self {
            data: base.data,
            prior: base.prior,
            weighting: base.weighting,
            pilot_draws: base.pilot_draws,
            h_quantile: base.h_quantile,
            h: base.h,
            iterations: base.iterations,
            burn_in: base.burn_in,
            h_lazy: 20.0,
            alpha: 0.1,
        }
    }
}

impl EpidemicLazy {
    pub fn base(&self) -> EpidemicAbc {
        EpidemicAbc {
            data: self.data.clone(),
            prior: self.prior.clone(),
            weighting: self.weighting,
            pilot_draws: self.pilot_draws,
            h_quantile: self.h_quantile,
            h: self.h,
            iterations: self.iterations,
            burn_in: self.burn_in,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicLnaDirect {
    pub data: EpidemicData,
    pub prior: EpidemicPrior,
    pub iterations: usize,
    pub burn_in: f64,
    /// Random-walk covariance is `scale² / 2` times the inverse observed
    /// information of the LNA fit.
    pub proposal_scale: f64,
}

impl Default for EpidemicLnaDirect {
    fn default() -> Self {
        Self {
            data: EpidemicData::default(),
            prior: EpidemicPrior::default(),
            iterations: 20_000,
            burn_in: 0.1,
            proposal_scale: 2.38,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pilot {
    pub data: EpidemicData,
    pub prior: EpidemicPrior,
    pub weighting: Weighting,
    pub draws: usize,
    pub h_quantile: f64,
    pub h: Option<f64>,
}

impl Default for Pilot {
    fn default() -> Self {
        Self {
            data: EpidemicData::default(),
            prior: EpidemicPrior::default(),
            weighting: Weighting::Identity,
            draws: 20_000,
            h_quantile: 0.01,
            h: None,
        }
    }
}

/// Shared by the composite-likelihood and extremal-coefficient recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpatialAbc {
    pub sites: usize,
    /// Sites are uniform on `[0, side]²`.
    pub side: f64,
    pub replicates: usize,
    /// Generating `(c2, ν)`.
    pub truth: [f64; 2],
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub draws: usize,
    pub keep_fraction: f64,
    /// Triangle groups for the extremal-coefficient summaries.
    pub groups: usize,
    /// Start of every composite-likelihood fit.
    pub start: [f64; 2],
    pub grid_points: usize,
}

impl Default for SpatialAbc {
    fn default() -> Self {
        Self {
            sites: 10,
            side: 10.0,
            replicates: 50,
            truth: [3.0, 1.0],
            lower: [0.0, 0.0],
            upper: [20.0, 20.0],
            draws: 3000,
            keep_fraction: 0.02,
            groups: 15,
            start: [5.0, 2.0],
            grid_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Params {
    ToyRs(ToyRs),
    IiDemo(IiDemo),
    EpidemicAbc(EpidemicAbc),
    EpidemicLazy(EpidemicLazy),
    EpidemicLnaDirect(EpidemicLnaDirect),
    PdbilToy(PdbilToy),
    SpatialAbcCp(SpatialAbc),
    SpatialAbcEc(SpatialAbc),
    Pilot(Pilot),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    schema_version: u32,
    experiment: Option<ExperimentKind>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    toy_rs: Option<ToyRs>,
    ii_demo: Option<IiDemo>,
    epidemic_abc: Option<EpidemicAbc>,
    epidemic_lazy: Option<EpidemicLazy>,
    epidemic_lna_direct: Option<EpidemicLnaDirect>,
    pdbil_toy: Option<PdbilToy>,
    spatial_abc_cp: Option<SpatialAbc>,
    spatial_abc_ec: Option<SpatialAbc>,
    pilot: Option<Pilot>,
}

impl FileConfig {
    fn sections(&self) -> Vec<&'static str> {
        let present = [
            ("toy_rs", self.toy_rs.is_some()),
            ("ii_demo", self.ii_demo.is_some()),
            ("epidemic_abc", self.epidemic_abc.is_some()),
            ("epidemic_lazy", self.epidemic_lazy.is_some()),
            ("epidemic_lna_direct", self.epidemic_lna_direct.is_some()),
            ("pdbil_toy", self.pdbil_toy.is_some()),
            ("spatial_abc_cp", self.spatial_abc_cp.is_some()),
            ("spatial_abc_ec", self.spatial_abc_ec.is_some()),
            ("pilot", self.pilot.is_some()),
        ];
        present.into_iter().filter(|(_, p)| *p).map(|(k, _)| k).collect()
    }

    fn take_params(self, kind: ExperimentKind) -> Params {
        match kind {
            ExperimentKind::ToyRs => Params::ToyRs(self.toy_rs.unwrap_or_default()),
            ExperimentKind::IiDemo => Params::IiDemo(self.ii_demo.unwrap_or_default()),
            ExperimentKind::EpidemicAbc => Params::EpidemicAbc(self.epidemic_abc.unwrap_or_default()),
            ExperimentKind::EpidemicLazy => Params::EpidemicLazy(self.epidemic_lazy.unwrap_or_default()),
            ExperimentKind::EpidemicLnaDirect => Params::EpidemicLnaDirect(self.epidemic_lna_direct.unwrap_or_default()),
            ExperimentKind::PdbilToy => Params::PdbilToy(self.pdbil_toy.unwrap_or_default()),
            ExperimentKind::SpatialAbcCp => Params::SpatialAbcCp(self.spatial_abc_cp.unwrap_or_default()),
            ExperimentKind::SpatialAbcEc => Params::SpatialAbcEc(self.spatial_abc_ec.unwrap_or_default()),
            ExperimentKind::Pilot => Params::Pilot(self.pilot.unwrap_or_default()),
        }
    }
}

/// Fully resolved run: file values with command-line overrides applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: Params,
}

#[derive(Serialize)]
struct Canonical<'a> {
    schema_version: u32,
    experiment: ExperimentKind,
    seed: u64,
    params: &'a Params,
}

impl RunConfig {
    /// Canonical JSON of everything that affects results. The output
    /// directory and thread count are excluded.
    pub fn canonical(&self) -> serde_json::Value {
        let c = Canonical {
            schema_version: SCHEMA_VERSION,
            experiment: self.experiment,
            seed: self.seed,
            params: &self.params,
        };
        // Round-tripping through `Value` sorts object keys.
        serde_json::to_value(&c).expect("configuration serialises")
    }

    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.canonical()).expect("configuration serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

pub fn load(path: &Path, kind: ExperimentKind, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, kind, overrides).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str, kind: ExperimentKind, overrides: &Overrides) -> Result<RunConfig> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| CliError::config(e.to_string().trim_end().to_owned()))?;
    let file: FileConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let inner = inner.trim_end();
        if path == "." {
            CliError::config(inner.to_owned())
        } else {
            CliError::config(format!("key `{path}`: {inner}"))
        }
    })?;

    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::config(format!(
            "key `schema_version`: unsupported version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    if let Some(declared) = file.experiment {
        if declared != kind {
            return Err(CliError::config(format!(
                "key `experiment`: file declares `{}` but the subcommand runs `{}`",
                declared.key(),
                kind.key()
            )));
        }
    }
    if let Some(other) = file.sections().into_iter().find(|s| *s != kind.key()) {
        return Err(CliError::config(format!("section `{other}` does not belong to experiment `{}`", kind.key())));
    }
    let seed = overrides
        .seed
        .or(file.seed)
        .ok_or_else(|| CliError::config("key `seed`: missing (set it in the file or pass --seed)"))?;
    let output_dir = overrides
        .output_dir
        .clone()
        .or_else(|| file.output_dir.clone())
        .ok_or_else(|| CliError::config("key `output_dir`: missing (set it in the file or pass --output)"))?;
    let params = file.take_params(kind);
    validate(&params, kind.key())?;
    Ok(RunConfig {
        experiment: kind,
        seed,
        output_dir,
        params,
    })
}

fn require(ok: bool, section: &str, key: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(format!("key `{section}.{key}`: {msg}")))
    }
}

fn finite(x: f64) -> bool {
    x.is_finite()
}

fn unit_open(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

fn validate_data(d: &EpidemicData, s: &str) -> Result<()> {
    require(finite(d.beta) && d.beta > 0.0, s, "data.beta", "must be positive")?;
    require(finite(d.gamma) && d.gamma > 0.0, s, "data.gamma", "must be positive")?;
    require(d.i0 >= 1, s, "data.i0", "must be at least 1")?;
    require(d.s0 >= 1, s, "data.s0", "must be at least 1")?;
    require(finite(d.t_end) && d.t_end >= 1.0, s, "data.t_end", "must be at least one day")?;
    require(d.t_end <= 10_000.0, s, "data.t_end", "must be at most 10000 days")
}

fn validate_box(lower: &[f64], upper: &[f64], s: &str, key: &str) -> Result<()> {
    let ok = lower.iter().zip(upper).all(|(l, u)| finite(*l) && finite(*u) && l < u);
    require(ok, s, key, "each lower bound must be finite and below its upper bound")
}

fn validate_prior(p: &EpidemicPrior, s: &str) -> Result<()> {
    validate_box(&p.lower, &p.upper, s, "prior")
}

fn validate_tolerance(h: Option<f64>, q: f64, s: &str) -> Result<()> {
    require(unit_open(q), s, "h_quantile", "must lie in (0, 1)")?;
    if let Some(h) = h {
        require(h >= 0.0 && !h.is_nan(), s, "h", "must be non-negative")?;
    }
    Ok(())
}

fn validate_chain(iterations: usize, burn_in: f64, s: &str) -> Result<()> {
    require(iterations >= 10, s, "iterations", "must be at least 10")?;
    require((0.0..1.0).contains(&burn_in), s, "burn_in", "must lie in [0, 1)")
}

fn validate(params: &Params, s: &str) -> Result<()> {
    match params {
        Params::ToyRs(p) => {
            require(p.n >= 2, s, "n", "must be at least 2")?;
            require(finite(p.mu), s, "mu", "must be finite")?;
            require(p.draws >= 10, s, "draws", "must be at least 10")?;
            require(!p.summaries.is_empty(), s, "summaries", "must name at least one summary")?;
            let mut sorted = p.summaries.clone();
            sorted.sort();
            sorted.dedup();
            require(sorted.len() == p.summaries.len(), s, "summaries", "must not repeat a summary")?;
            require(p.keep_fraction > 0.0 && p.keep_fraction <= 1.0, s, "keep_fraction", "must lie in (0, 1]")?;
            require(finite(p.theta_init), s, "theta_init", "must be finite")?;
            require(p.grid_points >= 2, s, "grid_points", "must be at least 2")
        }
        Params::IiDemo(p) => {
            require(p.n >= 2, s, "n", "must be at least 2")?;
            require(finite(p.mu), s, "mu", "must be finite")?;
            require(p.replicates >= 1, s, "replicates", "must be at least 1")?;
            validate_box(&[p.lower], &[p.upper], s, "lower")?;
            require(p.lower <= p.theta_init && p.theta_init <= p.upper, s, "theta_init", "must lie in [lower, upper]")?;
            require(p.profile_points >= 2, s, "profile_points", "must be at least 2")
        }
        Params::PdbilToy(p) => {
            require(p.n >= 2, s, "n", "must be at least 2")?;
            require(finite(p.mu), s, "mu", "must be finite")?;
            require(p.binding_n >= 1, s, "binding_n", "must be at least 1")?;
            validate_chain(p.iterations, p.burn_in, s)?;
            require(finite(p.proposal_sd) && p.proposal_sd > 0.0, s, "proposal_sd", "must be positive")?;
            validate_box(&[p.lower], &[p.upper], s, "lower")?;
            require(p.grid_points >= 2, s, "grid_points", "must be at least 2")
        }
        Params::EpidemicAbc(p) => validate_epidemic(p, s),
        Params::EpidemicLazy(p) => {
            validate_epidemic(&p.base(), s)?;
            require(p.h_lazy >= 0.0 && !p.h_lazy.is_nan(), s, "h_lazy", "must be non-negative")?;
            require(p.alpha > 0.0 && p.alpha <= 1.0, s, "alpha", "must lie in (0, 1]")
        }
        Params::EpidemicLnaDirect(p) => {
            validate_data(&p.data, s)?;
            validate_prior(&p.prior, s)?;
            validate_chain(p.iterations, p.burn_in, s)?;
            require(finite(p.proposal_scale) && p.proposal_scale > 0.0, s, "proposal_scale", "must be positive")
        }
        Params::Pilot(p) => {
            validate_data(&p.data, s)?;
            validate_prior(&p.prior, s)?;
            require(p.draws >= 10, s, "draws", "must be at least 10")?;
            validate_tolerance(p.h, p.h_quantile, s)
        }
        Params::SpatialAbcCp(p) | Params::SpatialAbcEc(p) => {
            require(p.sites >= 3, s, "sites", "must be at least 3")?;
            require(finite(p.side) && p.side > 0.0, s, "side", "must be positive")?;
            require(p.replicates >= 2, s, "replicates", "must be at least 2")?;
            validate_box(&p.lower, &p.upper, s, "lower")?;
            require(p.lower.iter().all(|l| *l >= 0.0), s, "lower", "range and smoothness bounds must be non-negative")?;
            require(p.truth.iter().all(|t| finite(*t) && *t > 0.0), s, "truth", "must be positive")?;
            require(p.start.iter().all(|t| finite(*t) && *t > 0.0), s, "start", "must be positive")?;
            require(p.draws >= 10, s, "draws", "must be at least 10")?;
            require(unit_open(p.keep_fraction), s, "keep_fraction", "must lie in (0, 1)")?;
            require(p.keep_fraction * p.draws as f64 >= 2.0, s, "keep_fraction", "must keep at least two draws")?;
            require(p.groups >= 1, s, "groups", "must be at least 1")?;
            require(p.grid_points >= 2, s, "grid_points", "must be at least 2")
        }
    }
}

fn validate_epidemic(p: &EpidemicAbc, s: &str) -> Result<()> {
    validate_data(&p.data, s)?;
    validate_prior(&p.prior, s)?;
    require(p.pilot_draws >= 100, s, "pilot_draws", "must be at least 100")?;
    validate_tolerance(p.h, p.h_quantile, s)?;
    validate_chain(p.iterations, p.burn_in, s)
}
