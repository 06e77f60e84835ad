use lfi_core::spatial::{
    abc_cp, abc_ec, bivariate_cdf, bivariate_density, build_reference_table, composite_information, ec_group_summary,
    extremal_coeff_pair, extremal_coeff_triplet, fit_composite, pair_cdf, pair_density, simulate_maxstable,
    whittle_matern, CompositeFitConfig, CorrelationParams, FrechetPanel, MaxStableModel, SpatialLayout,
    TriangleGrouping,
};
use lfi_core::stats::{ks_critical, ks_statistic};
use lfi_core::{Execution, NoiseSeed, UniformBox, WeightedSample};
use rand::Rng;

use crate::{depth_region_covers, lib, mean_cov2, require, Check};

/// `∫∫ f(z_i, z_j) dz_i dz_j` over the positive quadrant. With `u = 1/z`
/// in polar form `(r cos φ, r sin φ)` the exponent is linear in `r`, so the
/// midpoint rule in `φ` and in `r = x/(1 − x)` sees a smooth integrand.
fn quadrant_integral(f: impl Fn(f64, f64) -> f64, n: usize) -> f64 {
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut total = 0.0;
    for i in 0..n {
        let phi = (i as f64 + 0.5) / n as f64 * quarter;
        let (c, s) = (phi.cos(), phi.sin());
        for j in 0..n {
            let x = (j as f64 + 0.5) / n as f64;
            let r = x / (1.0 - x);
            let jac = 1.0 / (r.powi(3) * c * c * s * s * (1.0 - x) * (1.0 - x));
            total += f(1.0 / (r * c), 1.0 / (r * s)) * jac;
        }
    }
    total * quarter / (n * n) as f64
}

pub fn c8_toolkit() -> Check {
    // Exponential special case of the Matérn family.
    let mut matern: f64 = 0.0;
    for c1 in [1.0, 0.6] {
        for c2 in [0.5, 2.0, 7.0] {
            let p = lib(CorrelationParams::new(c1, c2, 0.5), "params")?;
            for h in [0.0, 0.01, 0.3, 1.0, 2.5, 10.0, 40.0] {
                matern = matern.max((lib(whittle_matern(h, &p), "matern")? - c1 * (-h / c2).exp()).abs());
            }
        }
    }
    require(matern <= 1e-10, format!("Matérn ν=1/2 error {matern:.2e}"))?;

    let p = lib(CorrelationParams::range_smoothness(2.0, 1.0), "params")?;
    let mut marginal: f64 = 0.0;
    for z in [0.2, 1.0, 3.0, 25.0] {
        for h in [0.1, 1.0, 5.0] {
            marginal = marginal.max((lib(bivariate_cdf(z, 1e12, h, &p), "cdf")? - (-1.0 / z).exp()).abs());
        }
    }
    require(marginal <= 1e-6, format!("CDF marginal limit error {marginal:.2e}"))?;

    // Density against the mixed central difference of the CDF.
    let mut fd: f64 = 0.0;
    for (a, b) in [(0.3f64, 0.5f64), (1.0, 1.0), (2.5, 0.8), (6.0, 15.0), (0.7, 4.0)] {
        for rho in [0.0, 0.3, 0.7, 0.95] {
            let e = 1e-4 * a.min(b);
            let f = |x: f64, y: f64| pair_cdf(x, y, rho);
            let num = (lib(f(a + e, b + e), "cdf")? - lib(f(a + e, b - e), "cdf")? - lib(f(a - e, b + e), "cdf")?
                + lib(f(a - e, b - e), "cdf")?)
                / (4.0 * e * e);
            let exact = lib(pair_density(a, b, rho), "density")?;
            fd = fd.max((num - exact).abs() / exact);
        }
    }
    require(fd <= 1e-5, format!("density vs finite-difference relative error {fd:.2e}"))?;

    let mut mass: f64 = 0.0;
    for h in [0.5, 2.0, 6.0] {
        let total = quadrant_integral(|a, b| bivariate_density(a, b, h, &p).unwrap_or(f64::NAN), 400);
        mass = mass.max((total - 1.0).abs());
    }
    require(mass <= 1e-3, format!("density mass off by {mass:.2e}"))?;

    // Extremal coefficients at the dependence and independence limits.
    let t = 20_000;
    let close = lib(SpatialLayout::new(vec![vec![0.0, 0.0], vec![1e-4, 0.0], vec![0.0, 1e-4]]), "layout")?;
    let strong = lib(CorrelationParams::range_smoothness(10.0, 1.0), "params")?;
    let dep_panel = lib(simulate_maxstable(&close, &strong, t, NoiseSeed::new(801, 0)), "simulate")?;
    let dep = lib(extremal_coeff_triplet(&dep_panel, 0, 1, 2), "coefficient")?;
    let mut rng = NoiseSeed::new(802, 0).rng();
    let rows: Vec<Vec<f64>> = (0..t).map(|_| (0..3).map(|_| -1.0 / rng.random::<f64>().ln()).collect()).collect();
    let indep = lib(extremal_coeff_triplet(&lib(FrechetPanel::new(rows), "panel")?, 0, 1, 2), "coefficient")?;
    require((dep - 1.0).abs() <= 0.05, format!("dependence limit {dep:.3}"))?;
    require((indep - 3.0).abs() <= 0.1, format!("independence limit {indep:.3}"))?;
    // Distant sites under this process stop at 1 + sqrt(1/2), not 2.
    let far = lib(SpatialLayout::new(vec![vec![0.0, 0.0], vec![1000.0, 0.0]]), "layout")?;
    let weak = lib(CorrelationParams::range_smoothness(1.0, 1.0), "params")?;
    let far_panel = lib(simulate_maxstable(&far, &weak, t, NoiseSeed::new(803, 0)), "simulate")?;
    let pair = lib(extremal_coeff_pair(&far_panel, 0, 1), "coefficient")?;
    let pair_limit = 1.0 + 0.5f64.sqrt();
    require((pair - pair_limit).abs() <= 0.05, format!("distant pair {pair:.3} vs {pair_limit:.3}"))?;

    // Unit-Fréchet margins, each site tested at 1%/D.
    let grid = lib(SpatialLayout::grid(3, 3, 1.0), "layout")?;
    let panel = lib(simulate_maxstable(&grid, &p, 2000, NoiseSeed::new(804, 0)), "simulate")?;
    let crit = ks_critical(0.01 / grid.sites() as f64, panel.replicates());
    let mut worst_ks: f64 = 0.0;
    for s in 0..grid.sites() {
        worst_ks = worst_ks.max(ks_statistic(&panel.column(s), None, |z| (-1.0 / z).exp()));
    }
    require(worst_ks < crit, format!("marginal KS {worst_ks:.4} >= {crit:.4}"))?;

    Ok(format!(
        "Matérn {matern:.1e}, marginal {marginal:.1e}, density FD {fd:.1e}, mass {mass:.1e}, \
         coefficients {dep:.3}/{indep:.3}/{pair:.3}, marginal KS {worst_ks:.4} < {crit:.4}"
    ))
}

fn thetas(s: &[WeightedSample]) -> Vec<Vec<f64>> {
    s.iter().map(|w| w.theta.values.clone()).collect()
}

fn det(draws: &[Vec<f64>]) -> f64 {
    let (_, c) = mean_cov2(draws);
    c[0] * c[2] - c[1] * c[1]
}

pub fn c9_abc_cp() -> Check {
    let layout = lib(SpatialLayout::uniform_square(10, 10.0, NoiseSeed::new(7, 0)), "layout")?;
    let model = MaxStableModel::new(layout.clone(), 50);
    let prior = lib(UniformBox::new(vec![0.0, 0.0], vec![20.0, 20.0]), "prior")?.with_names(&["c2", "nu"]);
    let prior = lib(prior, "prior names")?;
    let grouping = lib(TriangleGrouping::new(&layout, 15), "grouping")?;
    let fit_cfg = CompositeFitConfig::default();
    let start = [5.0, 2.0];
    let (draws, keep, level) = (3000, 0.02, 0.9);
    let table = lib(
        build_reference_table(&model, &prior, &grouping, draws, &start, &fit_cfg, NoiseSeed::new(11, 0), Execution::default()),
        "reference table",
    )?;
    let failed = table.cp.iter().filter(|c| c.is_none()).count();

    let truth = [3.0, 1.0];
    let (mut covered, mut tighter) = (0, 0);
    let replicates = 10;
    for r in 0..replicates {
        let panel = lib(model.try_simulate(&truth, NoiseSeed::new(500 + r, 0)), "observed panel")?;
        let cp_obs = lib(fit_composite(&panel, &layout, &start, &fit_cfg), "observed fit")?.theta;
        let info = lib(composite_information(&panel, &layout, &cp_obs, fit_cfg.c1), "information")?;
        let ec_obs = lib(ec_group_summary(&panel, &grouping), "observed summary")?.values;
        let cp = thetas(&lib(abc_cp(&table, &cp_obs, &info, keep), "ABC-cp")?);
        let ec = thetas(&lib(abc_ec(&table, &ec_obs, keep), "ABC-ec")?);
        covered += depth_region_covers(&cp, &truth, level) as usize;
        tighter += (det(&cp) < det(&ec)) as usize;
    }
    let detail = format!(
        "{level:.0}% region covers (c2, ν) in {covered}/{replicates}; cp tighter than ec in {tighter}/{replicates}; {failed}/{draws} reference fits failed",
        level = 100.0 * level
    );
    require(covered >= 7, format!("coverage too low: {detail}"))?;
    require(2 * tighter > replicates as usize, format!("ABC-cp not more concentrated: {detail}"))?;
    Ok(detail)
}
