use lfi_core::abc::{
    abc_mcmc, abc_mcmc_lazy, abc_rejection, keep_nearest, lazy_estimate, pilot_run, IndirectScore, LazyConfig,
    McmcConfig, RandomWalk, ScoreWeighting,
};
use lfi_core::auxiliary::{aux_fit, LnaAux};
use lfi_core::bil::{pdbil_mcmc, BindingSource, PdbilConfig};
use lfi_core::models::{EpidemicPath, SiConfig, SiModel, Simulator};
use lfi_core::stats::{batch_means_se, mean, quantile, std_dev};
use lfi_core::types::component;
use lfi_core::{Execution, NoiseSeed, Prior, UniformBox};
use rand::Rng;

use crate::{lib, require, Check};

/// Uniform prior on `(ln β, ln γ)`.
fn prior() -> UniformBox {
    UniformBox::new(vec![1e-4f64.ln(), 0.01f64.ln()], vec![1e-2f64.ln(), 0.0])
        .and_then(|p| p.with_names(&["log_beta", "log_gamma"]))
        .expect("valid box")
}

fn truth() -> [f64; 2] {
    let c = SiConfig::default();
    [c.beta.ln(), c.gamma.ln()]
}

fn final_value(y: &EpidemicPath) -> f64 {
    y.daily_obs.last().copied().unwrap_or(0) as f64
}

/// Synthetic dataset `r` and its LNA fit.
fn observed(model: &SiModel, spec: &LnaAux, r: u64) -> (EpidemicPath, lfi_core::Result<Vec<f64>>) {
    let y = model.simulate(&truth(), NoiseSeed::new(900 + r, 0));
    let phi = aux_fit(spec, &y, &truth()).map(|f| f.values);
    (y, phi)
}

fn in_interval(x: &[f64], v: f64) -> bool {
    !x.is_empty() && quantile(x, 0.05) <= v && v <= quantile(x, 0.95)
}

pub fn c3_lazy() -> Check {
    // (a) The two-point estimator averages to the indicator.
    let mut rng = NoiseSeed::new(300, 0).rng();
    let (alpha, p_hit, p_gate, draws) = (0.2, 0.3, 0.4, 100_000);
    let mut sum = 0.0;
    for _ in 0..draws {
        let gate = rng.random::<f64>() < p_gate;
        let hit = rng.random::<f64>() < p_hit;
        sum += lazy_estimate(gate, hit, alpha, rng.random());
    }
    let avg = sum / draws as f64;
    let second = p_gate * p_hit + (1.0 - p_gate) * p_hit / alpha;
    let se = ((second - p_hit * p_hit) / draws as f64).sqrt();
    require((avg - p_hit).abs() <= 3.0 * se, format!("estimator mean {avg:.4} vs {p_hit} (se {se:.4})"))?;

    // Epidemic setup shared by (b) and (c).
    let model = SiModel::default();
    let spec = LnaAux::default();
    let prior = prior();
    let (y, phi) = observed(&model, &spec, 0);
    let phi_obs = lib(phi, "observed LNA fit")?;
    let disc = IndirectScore { spec: &spec, phi_obs, weighting: ScoreWeighting::Identity };
    let y_final = final_value(&y);
    let lazy = move |s: &EpidemicPath| (final_value(s) - y_final).abs();

    let pilot = lib(
        pilot_run(&prior, &model, &disc, f64::INFINITY, &lazy, 20_000, NoiseSeed::new(301, 0), Execution::default()),
        "pilot",
    )?;
    let rhos: Vec<f64> = pilot.iter().map(|r| r.rho).collect();
    let h = quantile(&rhos, 0.01);
    let near: Vec<Vec<f64>> = pilot.iter().filter(|r| r.rho <= h).map(|r| r.theta.clone()).collect();
    let proposal = lib(RandomWalk::from_pilot(&near), "proposal")?;
    let theta0 = pilot.iter().min_by(|a, b| a.rho.total_cmp(&b.rho)).map(|r| r.theta.clone()).unwrap_or(truth().to_vec());

    // (c) alpha = 1 never skips, so both samplers consume identical streams.
    let short = McmcConfig::new(3000, h);
    let seed = NoiseSeed::new(302, 0);
    let plain = lib(abc_mcmc(&prior, &model, &disc, &short, &proposal, &theta0, seed), "standard chain")?;
    let unit = LazyConfig { h_lazy: 20.0, alpha: 1.0 };
    let same = lib(abc_mcmc_lazy(&prior, &model, &disc, &short, &lazy, unit, &proposal, &theta0, seed), "lazy chain")?;
    let identical = plain.trace.iter().zip(&same.trace).all(|(a, b)| a.theta == b.theta && a.accepted == b.accepted);
    require(identical && plain.trace.len() == same.trace.len(), "alpha = 1 trajectory differs from the standard chain")?;

    // (b) Long chains on independent seeds.
    let cfg = McmcConfig::new(100_000, h);
    let standard = lib(abc_mcmc(&prior, &model, &disc, &cfg, &proposal, &theta0, NoiseSeed::new(303, 0)), "standard chain")?;
    let gate = LazyConfig { h_lazy: 20.0, alpha: 0.1 };
    let lazy_run = lib(
        abc_mcmc_lazy(&prior, &model, &disc, &cfg, &lazy, gate, &proposal, &theta0, NoiseSeed::new(304, 0)),
        "lazy chain",
    )?;
    let mut parts = Vec::new();
    let mut agree = true;
    for k in 0..2 {
        let (a, b) = (standard.component(k), lazy_run.component(k));
        let (ma, mb) = (mean(&a), mean(&b));
        let se = (batch_means_se(&a).powi(2) + batch_means_se(&b).powi(2)).sqrt();
        agree &= (ma - mb).abs() <= 3.0 * se;
        parts.push(format!("{ma:.3}/{mb:.3} (se {se:.3})"));
    }
    let skip = lazy_run.diagnostics.skip_fraction;
    let detail = format!(
        "estimator {avg:.4} vs {p_hit}; means standard/lazy {}; skipped {:.1}%; acceptance {:.2}%/{:.2}%; h {h:.2}",
        parts.join(", "),
        100.0 * skip,
        100.0 * standard.diagnostics.acceptance_rate,
        100.0 * lazy_run.diagnostics.acceptance_rate,
    );
    require(agree, format!("posterior means disagree: {detail}"))?;
    require(skip >= 0.5, format!("skip fraction below 50%: {detail}"))?;
    Ok(detail)
}

pub fn c7_coverage() -> Check {
    let model = SiModel::default();
    let spec = LnaAux::default();
    let prior = prior();
    let names = prior.names();
    let truth = truth();
    let (datasets, draws, keep) = (50u64, 20_000, 0.01);
    let mut cover_is = [0usize; 2];
    let mut cover_simple = [0usize; 2];
    let mut sd_is = Vec::new();
    let mut samples_is = Vec::new();
    for r in 0..datasets {
        let (y, phi) = observed(&model, &spec, r);
        let seed = NoiseSeed::new(50 + r, 0);
        if let Ok(phi_obs) = phi {
            let disc = IndirectScore { spec: &spec, phi_obs, weighting: ScoreWeighting::Identity };
            let out = lib(abc_rejection(&prior, &model, &disc, f64::INFINITY, draws, seed, Execution::default()), "ABC-IS")?;
            let kept = keep_nearest(&out.draws, keep, &names);
            for c in 0..2 {
                cover_is[c] += in_interval(&component(&kept, c), truth[c]) as usize;
            }
            if r < 5 {
                sd_is.push(std_dev(&component(&kept, 0)));
                samples_is.push(kept.iter().map(|s| s.theta.values.clone()).collect::<Vec<_>>());
            }
        }
        let y_final = final_value(&y);
        let simple = move |s: &EpidemicPath| -> lfi_core::Result<f64> { Ok((final_value(s) - y_final).abs()) };
        let out = lib(abc_rejection(&prior, &model, &simple, 0.0, draws, seed, Execution::default()), "simple ABC")?;
        for c in 0..2 {
            cover_simple[c] += in_interval(&component(&out.accepted, c), truth[c]) as usize;
        }
    }
    require(sd_is.len() == 5, "LNA fit failed on one of the first five datasets")?;

    // LNA likelihood used directly: φ = θ on the log scale.
    let identity = |t: &[f64]| t.to_vec();
    let cfg = PdbilConfig { binding: BindingSource::Known(&identity), iterations: 20_000, burn_in: 0.1, exec: Execution::Sequential };
    let mut narrower = 0;
    let mut sd_lna = Vec::new();
    for r in 0..5u64 {
        let (y, _) = observed(&model, &spec, r);
        let proposal = lib(RandomWalk::from_pilot(&samples_is[r as usize]), "proposal")?;
        let out = lib(
            pdbil_mcmc(&prior, &model, &spec, &cfg, &y, &proposal, &truth, &truth, NoiseSeed::new(700 + r, 0)),
            "LNA-direct chain",
        )?;
        let sd = std_dev(&out.component(0));
        narrower += (sd <= sd_is[r as usize]) as usize;
        sd_lna.push(sd);
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    let needed = (0.8 * datasets as f64).ceil() as usize;
    let detail = format!(
        "90% coverage of (log β, log γ): ABC-IS {:?}/{datasets}, simple {:?}/{datasets}; log β sd LNA-direct [{}] vs ABC-IS [{}], narrower in {narrower}/5",
        cover_is,
        cover_simple,
        fmt(&sd_lna),
        fmt(&sd_is)
    );
    require(cover_is.iter().chain(&cover_simple).all(|c| *c >= needed), format!("coverage below 80%: {detail}"))?;
    require(narrower >= 3, format!("LNA-direct not narrower in a majority: {detail}"))?;
    Ok(detail)
}
