//! Recipes on the synthetic SI epidemic with `θ = (ln β, ln γ)`.

use lfi_core::abc::{
    abc_mcmc, abc_mcmc_lazy, pilot_run, IndirectScore, LazyConfig, McmcConfig, PilotRow, RandomWalk, ScoreWeighting,
};
use lfi_core::auxiliary::{aux_fit, aux_obs_info, LnaAux};
use lfi_core::bil::{pdbil_mcmc, BindingSource, PdbilConfig};
use lfi_core::io::{write_columns, write_pilot, write_trace};
use lfi_core::models::{EpidemicPath, SiModel, Simulator};
use lfi_core::stats::quantile;
use lfi_core::{Prior, UniformBox};
use serde_json::{json, Value};

use super::{density_grid, describe_columns, write_pdbil, Ctx, Outcome};
use crate::config::{EpidemicAbc, EpidemicData, EpidemicLnaDirect, EpidemicPrior, Pilot, Weighting};
use crate::error::{CliError, Context, Result};

const NAMES: [&str; 2] = ["log_beta", "log_gamma"];
const GRID_POINTS: usize = 200;

struct Setup {
    model: SiModel,
    y: EpidemicPath,
    prior: UniformBox,
    truth: [f64; 2],
    spec: LnaAux,
    phi_obs: Vec<f64>,
}

impl Setup {
    /// Simulate the observed epidemic at the generating values and fit the
    /// LNA to it, starting from those values.
    fn new(ctx: &Ctx, data: &EpidemicData, prior: &EpidemicPrior) -> Result<Self> {
        let model = SiModel {
            s0: data.s0,
            i0: data.i0,
            t_end: data.t_end,
        };
        let truth = [data.beta.ln(), data.gamma.ln()];
        let y = model.simulate(&truth, ctx.data());
        let prior = UniformBox::new(prior.lower.to_vec(), prior.upper.to_vec())
            .and_then(|p| p.with_names(&NAMES))
            .context("prior")?;
        let spec = LnaAux::default();
        let phi_obs = aux_fit(&spec, &y, &truth).context("LNA fit to the observed epidemic")?.values;
        Ok(Self {
            model,
            y,
            prior,
            truth,
            spec,
            phi_obs,
        })
    }

    fn discrepancy(&self, weighting: Weighting) -> Result<IndirectScore<'_, LnaAux>> {
        let weighting = match weighting {
            Weighting::Identity => ScoreWeighting::Identity,
            Weighting::InverseInformation => {
                let j = aux_obs_info(&self.spec, &self.y, &self.phi_obs).context("observed information")?;
                ScoreWeighting::inverse_information(&j).context("score weighting")?
            }
        };
        Ok(IndirectScore {
            spec: &self.spec,
            phi_obs: self.phi_obs.clone(),
            weighting,
        })
    }

    /// Distance between final observations, the cheap summary.
    fn lazy(&self) -> impl Fn(&EpidemicPath) -> f64 + Sync + use<> {
        let target = final_value(&self.y);
        move |s: &EpidemicPath| (final_value(s) - target).abs()
    }

    fn observed_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.y.write_csv(&mut buf).context("observed.csv")?;
        Ok(buf)
    }

    fn observed_json(&self) -> Value {
        json!({
            "days": self.y.daily_obs.len(),
            "removals": self.y.removals(),
            "final_value": final_value(&self.y),
            "lna_fit": self.phi_obs,
        })
    }
}

fn final_value(y: &EpidemicPath) -> f64 {
    y.daily_obs.last().copied().unwrap_or(0) as f64
}

fn pilot_tolerance(rows: &[PilotRow], h: Option<f64>, q: f64) -> Result<f64> {
    if let Some(h) = h {
        return Ok(h);
    }
    let rhos: Vec<f64> = rows.iter().map(|r| r.rho).filter(|r| r.is_finite()).collect();
    if rhos.is_empty() {
        return Err(CliError::numeric("no pilot draw produced a finite discrepancy"));
    }
    Ok(quantile(&rhos, q))
}

fn marginal_grids(out: &mut Outcome, draws: &[Vec<f64>], ctx: &Ctx) -> Result<()> {
    for (k, name) in NAMES.iter().enumerate() {
        let x: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        out.artifacts.add(format!("grids/{name}.csv"), density_grid(&x, None, GRID_POINTS, None, ctx.preamble())?);
    }
    Ok(())
}

/// Pilot-tuned MCMC-ABC, lazy when `gate` holds `(h_lazy, alpha)`.
pub fn epidemic_abc(ctx: &Ctx, p: &EpidemicAbc, gate: Option<(f64, f64)>) -> Result<Outcome> {
    let s = Setup::new(ctx, &p.data, &p.prior)?;
    let disc = s.discrepancy(p.weighting)?;
    let lazy = s.lazy();
    let rows = pilot_run(&s.prior, &s.model, &disc, f64::INFINITY, &lazy, p.pilot_draws, ctx.pilot(), ctx.exec)
        .context("pilot run")?;
    let h = pilot_tolerance(&rows, p.h, p.h_quantile)?;
    let near: Vec<Vec<f64>> = rows.iter().filter(|r| r.rho <= h).map(|r| r.theta.clone()).collect();
    if near.len() <= s.prior.dim() + 1 {
        return Err(CliError::numeric(format!(
            "only {} pilot draws within h = {h}; too few to tune the proposal",
            near.len()
        )));
    }
    let proposal = RandomWalk::from_pilot(&near).context("proposal from pilot")?;
    let theta0 = rows
        .iter()
        .filter(|r| r.rho.is_finite())
        .min_by(|a, b| a.rho.total_cmp(&b.rho))
        .map(|r| r.theta.clone())
        .ok_or_else(|| CliError::numeric("no usable pilot draw to start the chain"))?;
    let cfg = McmcConfig {
        iterations: p.iterations,
        burn_in: p.burn_in,
        h,
    };
    let chain = match gate {
        None => abc_mcmc(&s.prior, &s.model, &disc, &cfg, &proposal, &theta0, ctx.main()),
        Some((h_lazy, alpha)) => {
            let gate = LazyConfig { h_lazy, alpha };
            abc_mcmc_lazy(&s.prior, &s.model, &disc, &cfg, &lazy, gate, &proposal, &theta0, ctx.main())
        }
    }
    .context("MCMC-ABC chain")?;

    let mut out = Outcome::default();
    out.artifacts.add("samples.csv", write_trace(Vec::new(), &chain, ctx.preamble()).context("samples.csv")?);
    out.artifacts.add("observed.csv", s.observed_csv()?);
    let states: Vec<Vec<f64>> = chain.samples.iter().map(|w| w.theta.values.clone()).collect();
    marginal_grids(&mut out, &states, ctx)?;
    out.acceptance_rate = Some(chain.diagnostics.acceptance_rate);
    out.skip_fraction = Some(chain.diagnostics.skip_fraction);
    out.streams = vec![("data", ctx.data()), ("pilot", ctx.pilot()), ("chain", ctx.main())];
    let names: Vec<String> = NAMES.map(String::from).to_vec();
    out.results = json!({
        "truth": s.truth,
        "observed": s.observed_json(),
        "h": h,
        "h_from_quantile": p.h.is_none(),
        "pilot": {
            "draws": rows.len(),
            "within_h": near.len(),
        },
        "lazy_gate": gate.map(|(h_lazy, alpha)| json!({ "h_lazy": h_lazy, "alpha": alpha })),
        "posterior": describe_columns(&names, &states, None),
        "chain": chain.diagnostics,
    });
    Ok(out)
}

/// Pilot rejection run for choosing `h` and the lazy gate.
pub fn pilot(ctx: &Ctx, p: &Pilot) -> Result<Outcome> {
    let s = Setup::new(ctx, &p.data, &p.prior)?;
    let disc = s.discrepancy(p.weighting)?;
    let lazy = s.lazy();
    let mut rows =
        pilot_run(&s.prior, &s.model, &disc, f64::INFINITY, &lazy, p.draws, ctx.pilot(), ctx.exec).context("pilot run")?;
    let h = pilot_tolerance(&rows, p.h, p.h_quantile)?;
    for r in &mut rows {
        r.accepted = r.rho <= h;
    }
    let accepted: Vec<f64> = rows.iter().filter(|r| r.accepted).map(|r| r.lazy_value).collect();

    // Per distinct lazy value: how many draws sit there, how many of them
    // pass h, and what a gate at that value would let through.
    let mut values: Vec<f64> = rows.iter().map(|r| r.lazy_value).filter(|v| v.is_finite()).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let total = rows.len() as f64;
    let n_acc = accepted.len().max(1) as f64;
    let mut cols: [Vec<f64>; 5] = Default::default();
    let (mut cum_draws, mut cum_acc) = (0usize, 0usize);
    for v in &values {
        let at = rows.iter().filter(|r| r.lazy_value == *v).count();
        let acc = rows.iter().filter(|r| r.lazy_value == *v && r.accepted).count();
        cum_draws += at;
        cum_acc += acc;
        cols[0].push(*v);
        cols[1].push(at as f64);
        cols[2].push(acc as f64);
        cols[3].push(cum_draws as f64 / total);
        cols[4].push(cum_acc as f64 / n_acc);
    }
    let gate = write_columns(
        Vec::new(),
        &["lazy_value", "draws", "within_h", "gate_pass_fraction", "within_h_covered"],
        &cols,
        ctx.preamble(),
    )
    .context("gate table")?;

    let mut out = Outcome::default();
    out.artifacts.add("samples.csv", write_pilot(Vec::new(), &rows, ctx.preamble()).context("samples.csv")?);
    out.artifacts.add("observed.csv", s.observed_csv()?);
    out.artifacts.add("grids/lazy_gate.csv", gate);
    let near: Vec<Vec<f64>> = rows.iter().filter(|r| r.accepted).map(|r| r.theta.clone()).collect();
    if near.len() >= 2 {
        marginal_grids(&mut out, &near, ctx)?;
    }
    out.acceptance_rate = Some(accepted.len() as f64 / total);
    out.streams = vec![("data", ctx.data()), ("pilot", ctx.pilot())];
    let interval = if accepted.is_empty() {
        Value::Null
    } else {
        json!([
            accepted.iter().copied().fold(f64::INFINITY, f64::min),
            accepted.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ])
    };
    let quantiles = if accepted.is_empty() {
        Value::Null
    } else {
        json!({
            "q50": quantile(&accepted, 0.5),
            "q90": quantile(&accepted, 0.9),
            "q95": quantile(&accepted, 0.95),
            "q99": quantile(&accepted, 0.99),
        })
    };
    let names: Vec<String> = NAMES.map(String::from).to_vec();
    out.results = json!({
        "truth": s.truth,
        "observed": s.observed_json(),
        "h": h,
        "h_from_quantile": p.h.is_none(),
        "draws": rows.len(),
        "within_h": accepted.len(),
        "failures": rows.iter().filter(|r| !r.rho.is_finite()).count(),
        "accepted_lazy_interval": interval,
        "accepted_lazy_quantiles": quantiles,
        "posterior": describe_columns(&names, &near, None),
    });
    Ok(out)
}

/// Metropolis–Hastings with the LNA likelihood of `(ln β, ln γ)` used
/// directly.
pub fn lna_direct(ctx: &Ctx, p: &EpidemicLnaDirect) -> Result<Outcome> {
    let s = Setup::new(ctx, &p.data, &p.prior)?;
    let j = aux_obs_info(&s.spec, &s.y, &s.phi_obs).context("observed information")?;
    let cov = j
        .inverse()
        .and_then(|c| c.scaled(p.proposal_scale * p.proposal_scale / 2.0))
        .context("proposal covariance")?;
    let proposal = RandomWalk::from_covariance(&cov);
    let identity = |t: &[f64]| t.to_vec();
    let cfg = PdbilConfig {
        binding: BindingSource::Known(&identity),
        iterations: p.iterations,
        burn_in: p.burn_in,
        exec: ctx.exec,
    };
    let theta0: Vec<f64> = s
        .phi_obs
        .iter()
        .zip(s.prior.bounds())
        .map(|(v, (lo, hi))| v.clamp(lo, hi))
        .collect();
    let chain = pdbil_mcmc(&s.prior, &s.model, &s.spec, &cfg, &s.y, &proposal, &theta0, &s.phi_obs, ctx.main())
        .context("LNA-direct chain")?;

    let mut out = Outcome::default();
    out.artifacts.add("samples.csv", write_pdbil(&chain, ctx.preamble())?);
    out.artifacts.add("observed.csv", s.observed_csv()?);
    let states: Vec<Vec<f64>> = chain.samples.iter().map(|w| w.theta.values.clone()).collect();
    marginal_grids(&mut out, &states, ctx)?;
    out.acceptance_rate = Some(chain.diagnostics.acceptance_rate);
    out.streams = vec![("data", ctx.data()), ("chain", ctx.main())];
    let names: Vec<String> = NAMES.map(String::from).to_vec();
    out.results = json!({
        "truth": s.truth,
        "observed": s.observed_json(),
        "posterior": describe_columns(&names, &states, None),
        "chain": chain.diagnostics,
    });
    Ok(out)
}
