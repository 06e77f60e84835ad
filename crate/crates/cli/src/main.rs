//! `lfi`: run likelihood-free inference experiments from a TOML config and
//! write samples, diagnostics and density grids to an output directory.
//!
//! Exit status is 0 on success, 2 for configuration or input errors and 3
//! when the computation fails.

mod artifacts;
mod config;
mod error;
mod experiments;
mod spatial_tools;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lfi_core::Execution;

use crate::config::{ExperimentKind, Overrides};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "lfi", version, about = "Likelihood-free inference experiments")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true, value_name = "K", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides `output_dir` in the config.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reverse sampler on the normal toy, with thresholding and regression
    /// adjustment.
    #[command(alias = "toy_rs")]
    ToyRs(RunArgs),
    /// Wald, SQML and EMM indirect inference on the normal toy.
    #[command(alias = "ii_demo")]
    IiDemo(RunArgs),
    /// Pilot-tuned MCMC-ABC on a synthetic epidemic.
    #[command(alias = "epidemic_abc")]
    EpidemicAbc(RunArgs),
    /// Lazy MCMC-ABC on a synthetic epidemic.
    #[command(alias = "epidemic_lazy")]
    EpidemicLazy(RunArgs),
    /// MCMC with the LNA likelihood used directly.
    #[command(alias = "epidemic_lna_direct")]
    EpidemicLnaDirect(RunArgs),
    /// Parametric Bayesian indirect likelihood on the normal toy.
    #[command(alias = "pdbil_toy")]
    PdbilToy(RunArgs),
    /// ABC with composite-likelihood summaries on synthetic max-stable data.
    #[command(alias = "spatial_abc_cp")]
    SpatialAbcCp(RunArgs),
    /// ABC with extremal-coefficient summaries on synthetic max-stable data.
    #[command(alias = "spatial_abc_ec")]
    SpatialAbcEc(RunArgs),
    /// Rejection pilot for choosing the tolerance and lazy gate.
    Pilot(RunArgs),
    /// Max-stable tools on CSV panels and layouts.
    #[command(subcommand, alias = "spatial_tools")]
    SpatialTools(spatial_tools::Tool),
}

impl Command {
    fn experiment(self) -> std::result::Result<(ExperimentKind, RunArgs), spatial_tools::Tool> {
        use ExperimentKind as K;
        Ok(match self {
            Command::ToyRs(a) => (K::ToyRs, a),
            Command::IiDemo(a) => (K::IiDemo, a),
            Command::EpidemicAbc(a) => (K::EpidemicAbc, a),
            Command::EpidemicLazy(a) => (K::EpidemicLazy, a),
            Command::EpidemicLnaDirect(a) => (K::EpidemicLnaDirect, a),
            Command::PdbilToy(a) => (K::PdbilToy, a),
            Command::SpatialAbcCp(a) => (K::SpatialAbcCp, a),
            Command::SpatialAbcEc(a) => (K::SpatialAbcEc, a),
            Command::Pilot(a) => (K::Pilot, a),
            Command::SpatialTools(t) => return Err(t),
        })
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<u16>) -> Result<()> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.into())
            .build_global()
            .map_err(|e| error::CliError::numeric(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<u16>) -> Result<()> {
    if threads.is_some_and(|k| k > 1) {
        log::warn!("built without the `parallel` feature; --threads is ignored");
    }
    Ok(())
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let overrides = Overrides {
        seed: args.seed,
        output_dir: args.output,
    };
    let cfg = config::load(&args.config, kind, &overrides)?;
    artifacts::probe(&cfg.output_dir)?;
    let (outputs, stdout) = experiments::run(&cfg, Execution::default())?;
    let written = outputs.commit(&cfg.output_dir)?;
    if let Some(text) = stdout {
        print!("{text}");
    }
    log::info!("wrote {} files to {}", written.len(), cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = configure_threads(cli.threads).and_then(|()| match cli.command.experiment() {
        Ok((kind, args)) => run_experiment(kind, args),
        Err(tool) => spatial_tools::run(tool, Execution::default()),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lfi: {e}");
            e.exit_code()
        }
    }
}
