use lfi_core::abc::{abc_rejection, disc_il, disc_ip, disc_is, IndirectLikelihood, IndirectParameter, IndirectScore, RandomWalk, ScoreWeighting};
use lfi_core::auxiliary::{aux_fit, aux_obs_info, BindingForm, GaussianAux};
use lfi_core::bil::{pdbil_mcmc, BindingSource, PdbilConfig};
use lfi_core::ii::{default_emm_weight, ii_emm, ii_sqml, ii_wald, IiProblem};
use lfi_core::models::{summarize_normal, NormalLocationModel, NormalSummary, Simulator};
use lfi_core::reverse_sampler::{adjust_draws, rs_sample, rs_threshold, RsConfig, RsDraw};
use lfi_core::stats::{batch_means_se, ks_critical, ks_statistic, ks_two_sample, mean, median, normal_cdf, std_dev};
use lfi_core::{Execution, FlatPrior, NoiseSeed, UniformBox, WeightMatrix};

use crate::{lib, require, Check};

type Summary = dyn Fn(&Vec<f64>) -> lfi_core::Result<Vec<f64>> + Sync;

fn selector(sel: &'static [NormalSummary]) -> Box<Summary> {
    Box::new(move |y: &Vec<f64>| Ok(summarize_normal(y, sel)?.values))
}

const MEAN: &[NormalSummary] = &[NormalSummary::Mean];
const MEAN_MEDIAN: &[NormalSummary] = &[NormalSummary::Mean, NormalSummary::Median];
const ALL_FIVE: &[NormalSummary] = &[
    NormalSummary::Mean,
    NormalSummary::Median,
    NormalSummary::Min,
    NormalSummary::Max,
    NormalSummary::Midrange,
];

/// Observed toy dataset of length `n` generated at `mu = 1`.
fn observed(n: usize, seed: u64) -> (NormalLocationModel, Vec<f64>) {
    let model = NormalLocationModel { n };
    let y = model.simulate(&[1.0], NoiseSeed::new(seed, 0));
    (model, y)
}

fn rs_run(model: &NormalLocationModel, sel: &'static [NormalSummary], y: &[f64], draws: usize, seed: NoiseSeed) -> Result<(Vec<RsDraw>, Vec<f64>), String> {
    let summary = selector(sel);
    let s_obs = lib(summarize_normal(y, sel), "observed summary")?.values;
    let cfg = RsConfig::new(draws, s_obs.len(), vec![0.0]);
    let out = lib(rs_sample(model, &*summary, &s_obs, &FlatPrior::new(1), &cfg, seed, Execution::default()), "reverse sampler")?;
    Ok((out, s_obs))
}

fn ks_to_posterior(draws: &[RsDraw], ybar: f64, n: usize) -> f64 {
    let x: Vec<f64> = draws.iter().map(|d| d.theta.values[0]).collect();
    let w: Vec<f64> = draws.iter().map(|d| d.weight).collect();
    ks_statistic(&x, Some(&w), |v| normal_cdf(v, ybar, 1.0 / (n as f64).sqrt()))
}

pub fn c1_rs_oracles() -> Check {
    let n = 100;
    let draws = 2000;
    let (model, y) = observed(n, 101);
    let (ybar, m_obs) = (mean(&y), median(&y));

    let (single, _) = rs_run(&model, MEAN, &y, draws, NoiseSeed::new(102, 0))?;
    let (pair, _) = rs_run(&model, MEAN_MEDIAN, &y, draws, NoiseSeed::new(103, 0))?;
    require(single.iter().chain(&pair).all(|d| !d.flagged), "flagged draws on a linear toy")?;

    let mut worst: f64 = 0.0;
    for d in &single {
        let noise = model.simulate(&[0.0], d.xi);
        worst = worst.max((d.theta.values[0] - (ybar - mean(&noise))).abs());
    }
    for d in &pair {
        let noise = model.simulate(&[0.0], d.xi);
        let expect = (ybar - mean(&noise) + m_obs - median(&noise)) / 2.0;
        worst = worst.max((d.theta.values[0] - expect).abs());
    }
    require(worst <= 1e-6, format!("closed-form draw error {worst:.2e} > 1e-6"))?;

    let ks = ks_to_posterior(&single, ybar, n);
    let crit = ks_critical(0.01, draws);
    require(ks < crit, format!("mean-summary KS {ks:.4} >= 1% critical {crit:.4}"))?;
    Ok(format!("closed-form error {worst:.1e}, KS {ks:.4} < {crit:.4}"))
}

pub fn c2_rs_ladder() -> Check {
    let n = 100;
    let draws = 20_000;
    let (model, y) = observed(n, 201);
    let ybar = mean(&y);
    let seed = NoiseSeed::new(202, 0);

    let (single, _) = rs_run(&model, MEAN, &y, draws, seed)?;
    let (two, s2) = rs_run(&model, MEAN_MEDIAN, &y, draws, seed)?;
    let (five, s5) = rs_run(&model, ALL_FIVE, &y, draws, seed)?;

    let ks = |d: &[RsDraw]| ks_to_posterior(d, ybar, n);
    let k_mean = ks(&single);
    let k2_raw = ks(&two);
    let k2_thr = ks(&lib(rs_threshold(&two, 0.5), "threshold")?);
    let k2_adj = ks(&lib(adjust_draws(&two, &s2), "adjust")?);
    let k5_raw = ks(&five);
    let k5_thr = ks(&lib(rs_threshold(&five, 0.05), "threshold")?);
    let k5_adj = ks(&lib(adjust_draws(&five, &s5), "adjust")?);
    let detail = format!(
        "KS mean {k_mean:.4}; two raw {k2_raw:.4} thr {k2_thr:.4} adj {k2_adj:.4}; five raw {k5_raw:.4} thr {k5_thr:.4} adj {k5_adj:.4}"
    );

    require(k2_adj < k2_thr && k2_thr < k2_raw, format!("two-summary ladder broken: {detail}"))?;
    let others = [k_mean, k2_raw, k2_thr, k2_adj, k5_thr, k5_adj];
    require(others.iter().all(|k| k5_raw > *k), format!("five-summary raw is not the worst: {detail}"))?;
    require(
        k2_adj <= 1.5 * k_mean && k5_adj <= 1.5 * k_mean,
        format!("adjusted cases exceed 1.5x the mean-summary KS: {detail}"),
    )?;
    Ok(detail)
}

pub fn c4_classical_ii() -> Check {
    let (model, y) = observed(100, 401);
    let ybar = mean(&y);
    let spec = GaussianAux::mean_only();
    let phi_obs = lib(aux_fit(&spec, &y[..], &[0.0]), "observed fit")?.values;
    let search = lib(UniformBox::new(vec![-5.0], vec![5.0]), "box")?;
    let prob = lib(IiProblem::new(&model, &spec, &y[..], phi_obs.clone(), 1000, search.clone()), "problem")?;
    let xi = NoiseSeed::new(402, 0);

    let wald = lib(ii_wald(&prob, &[0.0], xi), "ii_wald")?.theta.values[0];
    let sqml = lib(ii_sqml(&prob, &[0.0], xi), "ii_sqml")?.theta.values[0];
    let j_obs = lib(aux_obs_info(&spec, &y[..], &phi_obs), "information")?;
    let sigma = lib(default_emm_weight(&j_obs), "EMM weight")?;
    let emm = lib(ii_emm(&prob, &sigma, &[0.0], xi), "ii_emm")?.theta.values[0];
    let gaps = [(wald - ybar).abs(), (sqml - ybar).abs(), (emm - ybar).abs()];
    let detail = format!("|θ̂ - ȳ| wald {:.4} sqml {:.4} emm {:.4}", gaps[0], gaps[1], gaps[2]);
    require(gaps.iter().all(|g| *g < 0.02), detail.clone())?;

    // One replicate on the observed noise reproduces the observed data.
    let theta0 = [1.0];
    let xi_obs = NoiseSeed::new(403, 0);
    let y0 = model.simulate(&theta0, xi_obs.child(0));
    let phi0 = lib(aux_fit(&spec, &y0[..], &[0.0]), "fit")?.values;
    let single = lib(IiProblem::new(&model, &spec, &y0[..], phi0, 1, search), "problem")?;
    let q = lib(single.wald_objective(&theta0, xi_obs), "objective")?;
    require(q <= 1e-12, format!("self-consistency objective {q:.2e}"))?;
    Ok(format!("{detail}; self-consistency objective {q:.1e}"))
}

/// Posterior standard deviation with a batch-means standard error.
fn sd_with_se(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let sd = std_dev(x);
    let sq: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    (sd, batch_means_se(&sq) / (2.0 * sd))
}

pub fn c5_pdbil() -> Check {
    let n_obs = 50;
    let (model, y) = observed(n_obs, 501);
    let ybar = mean(&y);
    let spec = GaussianAux::mean_log_sd();
    let prior = lib(UniformBox::new(vec![-5.0], vec![5.0]), "prior")?;
    let proposal = RandomWalk::diagonal(&[0.25]);
    let seed = NoiseSeed::new(502, 0);
    let mut sds = Vec::new();
    let mut last = Vec::new();
    for n in [1usize, 10, 100, 1000] {
        let cfg = PdbilConfig {
            binding: BindingSource::Simulated { n, form: BindingForm::Pooled },
            iterations: 12_000,
            burn_in: 0.1,
            exec: Execution::default(),
        };
        let out = lib(pdbil_mcmc(&prior, &model, &spec, &cfg, &y[..], &proposal, &[ybar], &[0.0, 0.0], seed), "pdbil")?;
        let mu = out.component(0);
        sds.push(sd_with_se(&mu));
        last = mu;
    }
    let m = mean(&last);
    let se_m = batch_means_se(&last);
    let (sd, se_sd) = sds[3];
    let exact_sd = 1.0 / (n_obs as f64).sqrt();
    let ladder: Vec<String> = sds.iter().map(|(s, e)| format!("{s:.4}±{e:.4}")).collect();
    let detail = format!(
        "n=1000 mean {m:.4} vs {ybar:.4} (se {se_m:.4}), sd {sd:.4} vs {exact_sd:.4}; sd ladder {}",
        ladder.join(" ")
    );
    require((m - ybar).abs() <= 3.0 * se_m, format!("posterior mean off: {detail}"))?;
    require((sd - exact_sd).abs() <= 3.0 * se_sd, format!("posterior sd off: {detail}"))?;
    for w in sds.windows(2) {
        let ((a, ea), (b, eb)) = (w[0], w[1]);
        require(b <= a + 3.0 * (ea * ea + eb * eb).sqrt(), format!("sd increases beyond MC error: {detail}"))?;
    }
    require(sds[0].0 >= sds[3].0, format!("sd at n=1 below sd at n=1000: {detail}"))?;
    Ok(detail)
}

pub fn c6_discrepancies() -> Check {
    let n = 50;
    let (model, y) = observed(n, 601);
    let ybar = mean(&y);
    let nf = n as f64;
    let spec = GaussianAux::mean_only();

    // Zero at a match.
    let j = lib(WeightMatrix::diagonal(&[nf]), "J")?;
    let ip0 = lib(disc_ip(&[ybar], &[ybar], &j), "disc_ip")?;
    let il0 = lib(disc_il(&spec, &y[..], &[ybar], &[ybar]), "disc_il")?;
    let inv_j = lib(ScoreWeighting::inverse_information(&j), "weighting")?;
    let is0 = lib(disc_is(&spec, &y[..], &[ybar], &inv_j), "disc_is")?;
    require(ip0 == 0.0 && il0 == 0.0 && is0.abs() < 1e-9, format!("match values ip {ip0} il {il0} is {is0}"))?;

    // Closed forms for the unit-variance Gaussian auxiliary.
    let mut worst: f64 = 0.0;
    for delta in [-0.7, -0.1, 0.05, 0.3, 1.2] {
        let il = lib(disc_il(&spec, &y[..], &[ybar + delta], &[ybar]), "disc_il")?;
        worst = worst.max((il - nf * delta * delta / 2.0).abs() / (nf * delta * delta / 2.0));
    }
    for k in 0..5 {
        let ys = model.simulate(&[0.5 + 0.2 * k as f64], NoiseSeed::new(602, k));
        let is = lib(disc_is(&spec, &ys[..], &[ybar], &inv_j), "disc_is")?;
        let expect = (mean(&ys) - ybar).abs() * nf.sqrt();
        worst = worst.max((is - expect).abs() / expect);
    }
    let j_fd = lib(aux_obs_info(&spec, &y[..], &[ybar]), "information")?.entries()[(0, 0)];
    require(worst < 1e-8, format!("closed-form relative error {worst:.2e}"))?;
    require((j_fd - nf).abs() < 1e-4 * nf, format!("observed information {j_fd} vs {nf}"))?;

    // IP, IL and IS rejection posteriors on one shared set of prior draws.
    // IP and IS both measure the mean gap in posterior standard deviations,
    // while IL is half its square, so the three differ at a common h.
    let phi_obs = lib(aux_fit(&spec, &y[..], &[0.0]), "observed fit")?.values;
    let prior = lib(UniformBox::new(vec![-3.0], vec![3.0]), "prior")?;
    let (draws, widest) = (3_000_000, 1.0);
    let seed = NoiseSeed::new(603, 0);
    let exec = Execution::default();
    let ip = IndirectParameter { spec: &spec, phi_obs: phi_obs.clone(), j_obs: j.clone() };
    let il = IndirectLikelihood { spec: &spec, y_obs: &y[..], phi_obs: phi_obs.clone() };
    let is = IndirectScore { spec: &spec, phi_obs, weighting: inv_j };
    let kept = |r: lfi_core::abc::RejectionOutput| -> Vec<(f64, f64)> {
        r.accepted.iter().map(|s| (s.theta.values[0], s.discrepancy)).collect()
    };
    let runs = [
        kept(lib(abc_rejection(&prior, &model, &ip, widest, draws, seed, exec), "ABC-IP")?),
        kept(lib(abc_rejection(&prior, &model, &il, widest, draws, seed, exec), "ABC-IL")?),
        kept(lib(abc_rejection(&prior, &model, &is, widest, draws, seed, exec), "ABC-IS")?),
    ];
    let mut spread = Vec::new();
    let mut counts = Vec::new();
    for h in [widest, 0.5, 0.2, 0.1, 0.05] {
        let post: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| r.iter().filter(|(_, rho)| *rho <= h).map(|(t, _)| *t).collect())
            .collect();
        require(post.iter().all(|p| p.len() >= 2), format!("fewer than two acceptances at h = {h}"))?;
        let mut d: f64 = 0.0;
        for a in 0..3 {
            for b in a + 1..3 {
                d = d.max(ks_two_sample(&post[a], None, &post[b], None));
            }
        }
        counts.push(post.iter().map(Vec::len).min().unwrap_or(0));
        spread.push(d);
    }
    let steps = spread.windows(2).filter(|w| w[1] < w[0]).count();
    let listed: Vec<String> = spread.iter().map(|d| format!("{d:.4}")).collect();
    let detail = format!(
        "closed forms within {worst:.1e}; max pairwise KS at h = 1/0.5/0.2/0.1/0.05: {} (min acceptances {:?}); {steps}/4 decreasing",
        listed.join(" "),
        counts
    );
    require(steps >= 3, detail.clone())?;
    Ok(detail)
}
