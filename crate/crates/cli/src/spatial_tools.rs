//! `lfi spatial-tools`: max-stable utilities working on CSV panels and
//! layouts.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Subcommand};
use lfi_core::io::{read_layout, read_panel, write_layout, write_panel};
use lfi_core::spatial::{
    composite_information, ec_group_summary, fit_composite, simulate_maxstable, CompositeFitConfig, CorrelationParams,
    FrechetPanel, SpatialLayout, TriangleGrouping,
};
use lfi_core::{Execution, NoiseSeed};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::artifacts::{self, Artifacts};
use crate::error::{CliError, Context, Result};
use crate::experiments::{self, Ctx, SpatialAbcInput, SpatialSummary};

#[derive(Debug, Subcommand)]
pub enum Tool {
    /// Simulate a unit-Fréchet max-stable panel.
    Simulate(SimulateArgs),
    /// Fit `(c2, ν)` by pairwise composite likelihood; prints JSON.
    #[command(alias = "fit_cl")]
    FitCl(FitArgs),
    /// Grouped triplet extremal coefficients; prints JSON.
    #[command(alias = "ec_summary")]
    EcSummary(EcArgs),
    /// Rejection ABC with the composite-likelihood summary.
    #[command(alias = "abc_cp")]
    AbcCp(AbcArgs),
    /// Rejection ABC with grouped extremal coefficients.
    #[command(alias = "abc_ec")]
    AbcEc(AbcArgs),
}

fn pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|e| format!("`{a}`: {e}"))?,
            b.parse().map_err(|e| format!("`{b}`: {e}"))?,
        ]),
        _ => Err(format!("expected two comma-separated numbers, got `{s}`")),
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Layout CSV with columns x,y.
    #[arg(long, value_name = "FILE", required_unless_present = "sites")]
    layout: Option<PathBuf>,
    /// Draw this many sites uniformly on a square instead of reading a layout.
    #[arg(long, conflicts_with = "layout")]
    sites: Option<usize>,
    /// Side of the square for `--sites`.
    #[arg(long, default_value_t = 10.0)]
    side: f64,
    #[arg(long)]
    c2: f64,
    #[arg(long)]
    nu: f64,
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Panel CSV to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the layout used.
    #[arg(long, value_name = "FILE")]
    layout_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_name = "FILE")]
    panel: PathBuf,
    #[arg(long, value_name = "FILE")]
    layout: PathBuf,
    /// Starting `c2,nu`.
    #[arg(long, value_parser = pair, default_value = "5,2")]
    start: [f64; 2],
}

#[derive(Debug, Args)]
pub struct EcArgs {
    #[arg(long, value_name = "FILE")]
    panel: PathBuf,
    #[arg(long, value_name = "FILE")]
    layout: PathBuf,
    #[arg(long, default_value_t = 15)]
    groups: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AbcArgs {
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    panel: PathBuf,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    layout: PathBuf,
    /// Prior lower corner `c2,nu`.
    #[arg(long, value_parser = pair, default_value = "0,0")]
    lower: [f64; 2],
    /// Prior upper corner `c2,nu`.
    #[arg(long, value_parser = pair, default_value = "20,20")]
    upper: [f64; 2],
    #[arg(long, default_value_t = 3000)]
    draws: usize,
    #[arg(long, default_value_t = 0.02)]
    keep_fraction: f64,
    #[arg(long, default_value_t = 15)]
    groups: usize,
    #[arg(long, value_parser = pair, default_value = "5,2")]
    start: [f64; 2],
    #[arg(long, default_value_t = 200)]
    grid_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "output", value_name = "DIR")]
    #[serde(skip)]
    output: PathBuf,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))
}

fn load_inputs(panel: &Path, layout: &Path) -> Result<(FrechetPanel, SpatialLayout)> {
    let p = read_panel(open(panel)?).context(&panel.display().to_string())?;
    let l = read_layout(open(layout)?).context(&layout.display().to_string())?;
    if p.sites() != l.sites() {
        return Err(CliError::config(format!(
            "panel has {} sites but layout has {}",
            p.sites(),
            l.sites()
        )));
    }
    Ok((p, l))
}

fn write_file(path: &Path, bytes: Vec<u8>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON serialises"));
}

pub fn run(tool: Tool, exec: Execution) -> Result<()> {
    match tool {
        Tool::Simulate(a) => simulate(a),
        Tool::FitCl(a) => fit(a),
        Tool::EcSummary(a) => ec_summary(a),
        Tool::AbcCp(a) => abc(a, SpatialSummary::Composite, exec),
        Tool::AbcEc(a) => abc(a, SpatialSummary::Extremal, exec),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    if a.replicates < 1 {
        return Err(CliError::config("--replicates must be at least 1"));
    }
    let root = NoiseSeed::new(a.seed, 0);
    let layout = match (&a.layout, a.sites) {
        (Some(path), _) => read_layout(open(path)?).context(&path.display().to_string())?,
        (None, Some(d)) => SpatialLayout::uniform_square(d, a.side, root.child(0)).context("layout")?,
        (None, None) => return Err(CliError::config("pass --layout or --sites")),
    };
    let params = CorrelationParams::range_smoothness(a.c2, a.nu).context("correlation parameters")?;
    let panel = simulate_maxstable(&layout, &params, a.replicates, root.child(1)).context("simulation")?;
    let preamble = format!("lfi spatial-tools simulate c2={} nu={} seed={}", a.c2, a.nu, a.seed);
    write_file(&a.out, write_panel(Vec::new(), &panel, Some(&preamble)).context("panel")?)?;
    if let Some(path) = &a.layout_out {
        write_file(path, write_layout(Vec::new(), &layout, Some(&preamble)).context("layout")?)?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let (panel, layout) = load_inputs(&a.panel, &a.layout)?;
    let cfg = CompositeFitConfig::default();
    let f = fit_composite(&panel, &layout, &a.start, &cfg).context("composite fit")?;
    let info = match composite_information(&panel, &layout, &f.theta, cfg.c1) {
        Ok(j) => {
            let e = j.entries();
            json!([[e[(0, 0)], e[(0, 1)]], [e[(1, 0)], e[(1, 1)]]])
        }
        Err(e) => {
            log::warn!("composite information unavailable: {e}");
            serde_json::Value::Null
        }
    };
    print_json(&json!({
        "c2": f.theta[0],
        "nu": f.theta[1],
        "loglik": f.loglik,
        "converged": f.converged,
        "information": info,
    }));
    Ok(())
}

fn ec_summary(a: EcArgs) -> Result<()> {
    if a.groups < 1 {
        return Err(CliError::config("--groups must be at least 1"));
    }
    let (panel, layout) = load_inputs(&a.panel, &a.layout)?;
    let grouping = TriangleGrouping::new(&layout, a.groups).context("triangle grouping")?;
    let ec = ec_group_summary(&panel, &grouping).context("extremal coefficients")?;
    let groups: Vec<_> = grouping
        .groups()
        .iter()
        .zip(&ec.values)
        .map(|(g, v)| {
            let per: Vec<f64> = g.iter().map(|t| t.perimeter()).collect();
            json!({
                "triangles": g.len(),
                "perimeter_min": per.iter().copied().fold(f64::INFINITY, f64::min),
                "perimeter_max": per.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                "extremal_coefficient": v,
            })
        })
        .collect();
    print_json(&json!({ "groups": groups }));
    Ok(())
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn abc(a: AbcArgs, summary: SpatialSummary, exec: Execution) -> Result<()> {
    let started = Instant::now();
    let ok = a.draws >= 10
        && a.keep_fraction > 0.0
        && a.keep_fraction < 1.0
        && a.groups >= 1
        && a.grid_points >= 2
        && (0..2).all(|k| a.lower[k] >= 0.0 && a.lower[k] < a.upper[k] && a.upper[k].is_finite());
    if !ok {
        return Err(CliError::config(
            "need --draws >= 10, --keep-fraction in (0, 1), --groups >= 1, --grid-points >= 2 and 0 <= lower < upper",
        ));
    }
    let (panel, layout) = load_inputs(&a.panel, &a.layout)?;
    let label = match summary {
        SpatialSummary::Composite => "abc-cp",
        SpatialSummary::Extremal => "abc-ec",
    };
    // Arguments plus input contents, so the hash pins the whole run.
    let canonical = json!({
        "tool": label,
        "args": &a,
        "panel_sha256": file_digest(&a.panel)?,
        "layout_sha256": file_digest(&a.layout)?,
    });
    let hash = hex::encode(Sha256::digest(canonical.to_string().as_bytes()));
    artifacts::probe(&a.output)?;
    let ctx = Ctx::new(&format!("spatial-tools {label}"), a.seed, &hash, exec);
    let input = SpatialAbcInput {
        layout: &layout,
        panel: &panel,
        lower: a.lower,
        upper: a.upper,
        draws: a.draws,
        keep_fraction: a.keep_fraction,
        groups: a.groups,
        start: a.start,
        grid_points: a.grid_points,
        truth: None,
    };
    let out = experiments::run_spatial_abc(&ctx, &input, summary)?;
    let header = json!({ "experiment": format!("spatial_tools_{}", label.replace('-', "_")), "config_sha256": hash, "config": canonical });
    let (artifacts, _): (Artifacts, _) = experiments::finish(out, ctx.root, header, started.elapsed().as_secs_f64())?;
    artifacts.commit(&a.output)?;
    Ok(())
}
