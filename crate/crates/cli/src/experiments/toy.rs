//! Recipes on the normal location toy, where the posterior under a flat
//! prior is `N(ȳ, 1/n)`.

use std::collections::HashSet;
use std::fmt::Write as _;

use lfi_core::abc::RandomWalk;
use lfi_core::auxiliary::{aux_fit, aux_obs_info, AuxModel, GaussianAux};
use lfi_core::bil::{pdbil_mcmc, BindingSource, PdbilConfig};
use lfi_core::ii::{default_emm_weight, ii_emm, ii_sqml, ii_wald, IiEstimate, IiProblem};
use lfi_core::io::{write_columns, SampleWriter};
use lfi_core::models::{simulate_normal, summarize_normal, NormalLocationConfig, NormalLocationModel, NormalSummary};
use lfi_core::reverse_sampler::{adjust_draws, rs_sample, rs_threshold, RsConfig, RsDraw};
use lfi_core::stats::{effective_sample_size, ks_critical, ks_statistic, mean, normal_cdf};
use lfi_core::{FlatPrior, UniformBox, WeightMatrix};
use serde_json::{json, Map, Value};

use super::{density_grid, describe, write_pdbil, Ctx, Outcome};
use crate::config::{AuxChoice, IiDemo, PdbilToy, ToyRs};
use crate::error::{Context, Result};

fn normal_pdf(x: f64, m: f64, sd: f64) -> f64 {
    let z = (x - m) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

fn observed(n: usize, mu: f64, ctx: &Ctx) -> Vec<f64> {
    simulate_normal(NormalLocationConfig { n, mu }, ctx.data())
}

fn gaussian(aux: AuxChoice) -> GaussianAux {
    match aux {
        AuxChoice::MeanOnly => GaussianAux::mean_only(),
        AuxChoice::MeanLogSd => GaussianAux::mean_log_sd(),
    }
}

fn summary_name(s: NormalSummary) -> String {
    match serde_json::to_value(s) {
        Ok(Value::String(name)) => name,
        _ => format!("{s:?}").to_lowercase(),
    }
}

/// KS distance of the live draws to the exact posterior, with the 1%
/// critical value at the Kish effective sample size.
fn ks_report(draws: &[RsDraw], ybar: f64, sd: f64) -> Value {
    let live: Vec<&RsDraw> = draws.iter().filter(|d| !d.flagged && d.weight > 0.0).collect();
    let x: Vec<f64> = live.iter().map(|d| d.theta.values[0]).collect();
    let w: Vec<f64> = live.iter().map(|d| d.weight).collect();
    if x.is_empty() {
        return Value::Null;
    }
    let stat = ks_statistic(&x, Some(&w), |v| normal_cdf(v, ybar, sd));
    let ess = effective_sample_size(&w);
    let crit = ks_critical(0.01, (ess.floor() as usize).max(1));
    json!({
        "statistic": stat,
        "effective_sample_size": ess,
        "critical_1pct": crit,
        "below_critical": stat < crit,
    })
}

fn live_sample(draws: &[RsDraw]) -> (Vec<f64>, Vec<f64>) {
    draws
        .iter()
        .filter(|d| !d.flagged && d.weight > 0.0)
        .map(|d| (d.theta.values[0], d.weight))
        .unzip()
}

pub fn toy_rs(ctx: &Ctx, p: &ToyRs) -> Result<Outcome> {
    let model = NormalLocationModel { n: p.n };
    let y = observed(p.n, p.mu, ctx);
    let mut selected = p.summaries.clone();
    // Summaries always come out in this order.
    selected.sort();
    let sel = selected.clone();
    let summary = move |y: &Vec<f64>| Ok(summarize_normal(y, &sel)?.values);
    let s_obs = summary(&y).context("observed summary")?;
    let cfg = RsConfig::new(p.draws, s_obs.len(), vec![p.theta_init]);
    let draws = rs_sample(&model, &summary, &s_obs, &FlatPrior::new(1), &cfg, ctx.main(), ctx.exec).context("reverse sampler")?;
    let thresholded = rs_threshold(&draws, p.keep_fraction).context("thresholding")?;
    let adjusted = adjust_draws(&draws, &s_obs).context("regression adjustment")?;
    let thresholded_adjusted = adjust_draws(&thresholded, &s_obs).context("regression adjustment")?;
    let kept: HashSet<u64> = thresholded.iter().map(|d| d.xi.stream_id).collect();
    let flagged = draws.iter().filter(|d| d.flagged).count();

    let names: Vec<String> = selected.iter().map(|s| format!("s_{}", summary_name(*s))).collect();
    let mut extras = names.clone();
    extras.extend(["volume", "flagged", "kept", "theta_adjusted"].map(String::from));
    let mut w = SampleWriter::new(Vec::new(), 1, &extras, ctx.preamble()).context("samples.csv")?;
    for (i, (d, a)) in draws.iter().zip(&adjusted).enumerate() {
        let mut row: Vec<String> = d.s_sim.iter().map(f64::to_string).collect();
        row.push(d.volume.to_string());
        row.push((d.flagged as u8).to_string());
        row.push((kept.contains(&d.xi.stream_id) as u8).to_string());
        row.push(a.theta.values[0].to_string());
        w.row(i, &d.theta.values, d.weight, d.discrepancy, &row).context("samples.csv")?;
    }
    let mut out = Outcome::default();
    out.artifacts.add("samples.csv", w.finish().context("samples.csv")?);

    let ybar = mean(&y);
    let sd = 1.0 / (p.n as f64).sqrt();
    let exact = move |t: f64| normal_pdf(t, ybar, sd);
    let variants: [(&str, &[RsDraw]); 4] = [
        ("raw_unadjusted", &draws),
        ("raw_adjusted", &adjusted),
        ("thresholded_unadjusted", &thresholded),
        ("thresholded_adjusted", &thresholded_adjusted),
    ];
    let mut ks = Map::new();
    let mut posteriors = Map::new();
    for (name, set) in variants {
        ks.insert(name.into(), ks_report(set, ybar, sd));
        let (x, w) = live_sample(set);
        posteriors.insert(name.into(), describe(&x, Some(&w)));
        let grid = density_grid(&x, Some(&w), p.grid_points, Some(&exact), ctx.preamble())?;
        out.artifacts.add(format!("grids/{name}.csv"), grid);
    }
    let observed: Map<String, Value> = names.iter().zip(&s_obs).map(|(k, v)| (k.clone(), json!(v))).collect();
    out.acceptance_rate = Some(thresholded.len() as f64 / draws.len() as f64);
    out.streams = vec![("data", ctx.data()), ("draws", ctx.main())];
    out.results = json!({
        "observed": { "n": p.n, "mean": ybar, "summaries": observed },
        "exact_posterior": { "mean": ybar, "sd": sd },
        "draws": draws.len(),
        "flagged": flagged,
        "kept": thresholded.len(),
        "ks": ks,
        "posterior": posteriors,
    });
    Ok(out)
}

fn estimate_json(e: &IiEstimate, ybar: f64) -> Value {
    json!({
        "theta": e.theta.values,
        "objective": e.objective,
        "converged": e.converged,
        "distance_to_observed_mean": (e.theta.values[0] - ybar).abs(),
    })
}

pub fn ii_demo(ctx: &Ctx, p: &IiDemo) -> Result<Outcome> {
    let model = NormalLocationModel { n: p.n };
    let y = observed(p.n, p.mu, ctx);
    let spec = gaussian(p.aux);
    let phi_obs = aux_fit(&spec, &y[..], &vec![0.0; spec.dim()]).context("observed auxiliary fit")?.values;
    let search = UniformBox::new(vec![p.lower], vec![p.upper]).context("search box")?;
    let prob = IiProblem::new(&model, &spec, &y[..], phi_obs.clone(), p.replicates, search).context("indirect inference")?;
    let xi = ctx.main();
    let init = [p.theta_init];
    let sigma: WeightMatrix = default_emm_weight(&aux_obs_info(&spec, &y[..], &phi_obs).context("observed information")?)
        .context("EMM weight")?;
    let estimates = [
        ("wald", ii_wald(&prob, &init, xi).context("Wald estimator")?),
        ("sqml", ii_sqml(&prob, &init, xi).context("SQML estimator")?),
        ("emm", ii_emm(&prob, &sigma, &init, xi).context("EMM estimator")?),
    ];

    let mut stdout = String::from("estimator,theta_1,objective,converged\n");
    let mut traces = format!("# {}\nestimator,start,theta_1,objective\n", ctx.preamble);
    let mut w = SampleWriter::new(Vec::new(), 1, &["estimator", "converged"], ctx.preamble()).context("samples.csv")?;
    for (i, (name, e)) in estimates.iter().enumerate() {
        let _ = writeln!(stdout, "{name},{},{},{}", e.theta.values[0], e.objective, e.converged);
        for t in &e.trace {
            let _ = writeln!(traces, "{name},{},{},{}", t.start, t.theta[0], t.objective);
        }
        w.row(i, &e.theta.values, 1.0, e.objective, &[name.to_string(), (e.converged as u8).to_string()])
            .context("samples.csv")?;
    }

    // Each objective on a grid over the search box, same noise throughout.
    let k = p.profile_points;
    let theta: Vec<f64> = (0..k).map(|i| p.lower + (p.upper - p.lower) * i as f64 / (k - 1) as f64).collect();
    let eval = |f: &dyn Fn(f64) -> lfi_core::Result<f64>| theta.iter().map(|t| f(*t).unwrap_or(f64::NAN)).collect::<Vec<_>>();
    let columns = vec![
        theta.clone(),
        eval(&|t| prob.wald_objective(&[t], xi)),
        eval(&|t| prob.sqml_objective(&[t], xi)),
        eval(&|t| prob.emm_objective(&sigma, &[t], xi)),
    ];
    let profile = write_columns(Vec::new(), &["theta", "wald", "sqml", "emm"], &columns, ctx.preamble()).context("objective profile")?;

    let mut out = Outcome::default();
    out.artifacts.add("samples.csv", w.finish().context("samples.csv")?);
    out.artifacts.add("grids/objective_traces.csv", traces.into_bytes());
    out.artifacts.add("grids/objective_profile.csv", profile);
    let ybar = mean(&y);
    let results: Map<String, Value> = estimates.iter().map(|(n, e)| (n.to_string(), estimate_json(e, ybar))).collect();
    out.streams = vec![("data", ctx.data()), ("simulation", xi)];
    out.results = json!({
        "observed": { "n": p.n, "mean": ybar, "phi": phi_obs },
        "replicates": p.replicates,
        "estimates": results,
    });
    out.stdout = Some(stdout);
    Ok(out)
}

pub fn pdbil_toy(ctx: &Ctx, p: &PdbilToy) -> Result<Outcome> {
    let model = NormalLocationModel { n: p.n };
    let y = observed(p.n, p.mu, ctx);
    let spec = gaussian(p.aux);
    let phi_obs = aux_fit(&spec, &y[..], &vec![0.0; spec.dim()]).context("observed auxiliary fit")?.values;
    let prior = UniformBox::new(vec![p.lower], vec![p.upper]).context("prior")?.with_names(&["mu"]).context("prior")?;
    let cfg = PdbilConfig {
        binding: BindingSource::Simulated {
            n: p.binding_n,
            form: p.binding_form,
        },
        iterations: p.iterations,
        burn_in: p.burn_in,
        exec: ctx.exec,
    };
    let ybar = mean(&y);
    let theta0 = [ybar.clamp(p.lower, p.upper)];
    let proposal = RandomWalk::diagonal(&[p.proposal_sd]);
    let chain = pdbil_mcmc(&prior, &model, &spec, &cfg, &y[..], &proposal, &theta0, &phi_obs, ctx.main()).context("pdBIL chain")?;

    let mut out = Outcome::default();
    out.artifacts.add("samples.csv", write_pdbil(&chain, ctx.preamble())?);
    let mu = chain.component(0);
    let sd = 1.0 / (p.n as f64).sqrt();
    let exact = move |t: f64| normal_pdf(t, ybar, sd);
    out.artifacts.add("grids/mu.csv", density_grid(&mu, None, p.grid_points, Some(&exact), ctx.preamble())?);
    out.acceptance_rate = Some(chain.diagnostics.acceptance_rate);
    out.streams = vec![("data", ctx.data()), ("chain", ctx.main())];
    out.results = json!({
        "observed": { "n": p.n, "mean": ybar, "phi": phi_obs },
        "exact_posterior": { "mean": ybar, "sd": sd },
        "posterior": describe(&mu, None),
        "ks_to_exact": ks_statistic(&mu, None, |v| normal_cdf(v, ybar, sd)),
        "chain": chain.diagnostics,
    });
    Ok(out)
}
