//! Rejection ABC for max-stable `(c2, ν)` from a shared reference table,
//! with either the composite-likelihood fit or grouped extremal
//! coefficients as the summary.

use lfi_core::io::{write_layout, write_panel, write_samples};
use lfi_core::spatial::{
    abc_cp, abc_ec, build_reference_table, composite_information, ec_group_summary, fit_composite, simulate_maxstable,
    CompositeFitConfig, CorrelationParams, FrechetPanel, MaxStableModel, SpatialLayout, TriangleGrouping,
};
use lfi_core::stats::weighted_quantile;
use lfi_core::UniformBox;
use serde_json::json;

use super::{density_grid, describe_columns, Ctx, Outcome};
use crate::config::SpatialAbc;
use crate::error::{Context, Result};

const NAMES: [&str; 2] = ["c2", "nu"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summary {
    Composite,
    Extremal,
}

/// Observed data and sampler settings.
pub struct SpatialAbcInput<'a> {
    pub layout: &'a SpatialLayout,
    pub panel: &'a FrechetPanel,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub draws: usize,
    pub keep_fraction: f64,
    pub groups: usize,
    pub start: [f64; 2],
    pub grid_points: usize,
    /// Generating values, when known.
    pub truth: Option<[f64; 2]>,
}

/// Synthetic layout and panel, then [`run_abc`].
pub fn spatial_abc(ctx: &Ctx, p: &SpatialAbc, summary: Summary) -> Result<Outcome> {
    let layout = SpatialLayout::uniform_square(p.sites, p.side, ctx.data().child(0)).context("layout")?;
    let params = CorrelationParams::range_smoothness(p.truth[0], p.truth[1]).context("truth")?;
    let panel = simulate_maxstable(&layout, &params, p.replicates, ctx.data().child(1)).context("observed panel")?;
    let input = SpatialAbcInput {
        layout: &layout,
        panel: &panel,
        lower: p.lower,
        upper: p.upper,
        draws: p.draws,
        keep_fraction: p.keep_fraction,
        groups: p.groups,
        start: p.start,
        grid_points: p.grid_points,
        truth: Some(p.truth),
    };
    let mut out = run_abc(ctx, &input, summary)?;
    out.artifacts.add("layout.csv", write_layout(Vec::new(), &layout, ctx.preamble()).context("layout.csv")?);
    out.artifacts.add("observed_panel.csv", write_panel(Vec::new(), &panel, ctx.preamble()).context("observed_panel.csv")?);
    out.streams.insert(0, ("data", ctx.data()));
    Ok(out)
}

/// The reference table is drawn from the pilot stream of `ctx`.
pub fn run_abc(ctx: &Ctx, input: &SpatialAbcInput, summary: Summary) -> Result<Outcome> {
    let prior = UniformBox::new(input.lower.to_vec(), input.upper.to_vec())
        .and_then(|p| p.with_names(&NAMES))
        .context("prior")?;
    let grouping = TriangleGrouping::new(input.layout, input.groups).context("triangle grouping")?;
    let model = MaxStableModel::new(input.layout.clone(), input.panel.replicates());
    let fit_cfg = CompositeFitConfig::default();
    let fit = fit_composite(input.panel, input.layout, &input.start, &fit_cfg).context("observed composite fit")?;
    let ec_obs = ec_group_summary(input.panel, &grouping).context("observed extremal coefficients")?.values;
    let table = build_reference_table(&model, &prior, &grouping, input.draws, &input.start, &fit_cfg, ctx.pilot(), ctx.exec)
        .context("reference table")?;
    let failed = table.cp.iter().filter(|c| c.is_none()).count();
    let posterior = match summary {
        Summary::Composite => {
            let info = composite_information(input.panel, input.layout, &fit.theta, fit_cfg.c1).context("composite information")?;
            abc_cp(&table, &fit.theta, &info, input.keep_fraction).context("ABC with composite-likelihood summaries")?
        }
        Summary::Extremal => abc_ec(&table, &ec_obs, input.keep_fraction).context("ABC with extremal-coefficient summaries")?,
    };

    let draws: Vec<Vec<f64>> = posterior.iter().map(|s| s.theta.values.clone()).collect();
    let w: Vec<f64> = posterior.iter().map(|s| s.weight).collect();
    let mut out = Outcome::default();
    out.artifacts.add("samples.csv", write_samples(Vec::new(), &posterior, ctx.preamble()).context("samples.csv")?);
    for (k, name) in NAMES.iter().enumerate() {
        let x: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        out.artifacts.add(format!("grids/{name}.csv"), density_grid(&x, Some(&w), input.grid_points, None, ctx.preamble())?);
    }

    let covers = input.truth.map(|t| {
        (0..2)
            .map(|k| {
                let x: Vec<f64> = draws.iter().map(|d| d[k]).collect();
                weighted_quantile(&x, &w, 0.05) <= t[k] && t[k] <= weighted_quantile(&x, &w, 0.95)
            })
            .collect::<Vec<_>>()
    });
    out.acceptance_rate = Some(posterior.len() as f64 / input.draws as f64);
    out.streams = vec![("reference_table", ctx.pilot())];
    let names: Vec<String> = NAMES.map(String::from).to_vec();
    out.results = json!({
        "summary": match summary { Summary::Composite => "composite_likelihood", Summary::Extremal => "extremal_coefficients" },
        "truth": input.truth,
        "observed": {
            "sites": input.layout.sites(),
            "replicates": input.panel.replicates(),
            "composite_fit": fit.theta,
            "composite_fit_converged": fit.converged,
            "extremal_coefficients": ec_obs,
        },
        "reference_draws": input.draws,
        "failed_reference_fits": failed,
        "kept": posterior.len(),
        "posterior": describe_columns(&names, &draws, Some(&w)),
        "posterior_covariance_determinant": covariance_determinant(&draws, &w),
        "marginal_90_intervals_cover_truth": covers,
    });
    Ok(out)
}

fn covariance_determinant(draws: &[Vec<f64>], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let m: Vec<f64> = (0..2).map(|k| draws.iter().zip(w).map(|(d, wi)| wi * d[k]).sum::<f64>() / total).collect();
    let c = |a: usize, b: usize| draws.iter().zip(w).map(|(d, wi)| wi * (d[a] - m[a]) * (d[b] - m[b])).sum::<f64>() / total;
    c(0, 0) * c(1, 1) - c(0, 1) * c(0, 1)
}
