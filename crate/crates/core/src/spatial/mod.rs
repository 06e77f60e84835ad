//! Spatial extremes: Whittle-Matérn correlation, the bivariate max-stable
//! law with unit-Fréchet margins, pairwise composite likelihood, tripletwise
//! extremal coefficients, marginal GEV transforms and a max-stable simulator.

mod abc;
pub mod bessel;
mod extremal;
mod gev;
mod simulate;

use nalgebra::DMatrix;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::auxiliary::{fd_hessian, repair_information};
use crate::error::{check_dim, Error, Result};
use crate::optim::NelderMead;
use crate::rng::NoiseSeed;
use crate::types::WeightMatrix;

pub use abc::{abc_cp, abc_ec, build_reference_table, ReferenceTable};
pub use extremal::{ec_group_summary, extremal_coeff_pair, extremal_coeff_triplet, Triangle, TriangleGrouping};
pub use gev::{frechet_to_gev, gev_to_frechet, GevParams};
pub use simulate::{simulate_maxstable, MaxStableModel};

/// Site coordinates and their pairwise Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialLayout {
    locations: Vec<Vec<f64>>,
    distances: DMatrix<f64>,
}

impl SpatialLayout {
    pub fn new(locations: Vec<Vec<f64>>) -> Result<Self> {
        if locations.len() < 2 {
            return Err(Error::InvalidConfig("a layout needs at least two sites".into()));
        }
        let dim = locations[0].len();
        if dim == 0 {
            return Err(Error::InvalidConfig("site coordinates are empty".into()));
        }
        for l in &locations {
            check_dim(dim, l.len())?;
            if l.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("non-finite site coordinate {l:?}")));
            }
        }
        let d = locations.len();
        let distances = DMatrix::from_fn(d, d, |i, j| {
            locations[i]
                .iter()
                .zip(&locations[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        });
        for i in 0..d {
            for j in 0..i {
                if distances[(i, j)] == 0.0 {
                    return Err(Error::InvalidConfig(format!("sites {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { locations, distances })
    }

    /// `nx × ny` regular grid with the given spacing, row-major.
    pub fn grid(nx: usize, ny: usize, spacing: f64) -> Result<Self> {
        let mut locs = Vec::with_capacity(nx * ny);
        for r in 0..ny {
            for c in 0..nx {
                locs.push(vec![c as f64 * spacing, r as f64 * spacing]);
            }
        }
        Self::new(locs)
    }

    /// `d` sites uniform on `[0, side]²`.
    pub fn uniform_square(d: usize, side: f64, seed: NoiseSeed) -> Result<Self> {
        let mut rng = seed.rng();
        let locs = (0..d)
            .map(|_| vec![rng.random::<f64>() * side, rng.random::<f64>() * side])
            .collect();
        Self::new(locs)
    }

    pub fn sites(&self) -> usize {
        self.locations.len()
    }

    pub fn locations(&self) -> &[Vec<f64>] {
        &self.locations
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[(i, j)]
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.distances
    }

    /// Unordered pairs `(i, j, h)` with `i < j`.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let d = self.sites();
        let mut out = Vec::with_capacity(d * (d - 1) / 2);
        for i in 0..d {
            for j in i + 1..d {
                out.push((i, j, self.distances[(i, j)]));
            }
        }
        out
    }
}

/// Whittle-Matérn parameters: sill `c1`, range `c2`, smoothness `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationParams {
    pub c1: f64,
    pub c2: f64,
    pub nu: f64,
}

impl CorrelationParams {
    pub fn new(c1: f64, c2: f64, nu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c1) {
            return Err(Error::InvalidConfig(format!("sill must lie in [0, 1], got {c1}")));
        }
        if !(c2 > 0.0 && c2.is_finite()) || !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidConfig(format!("range and smoothness must be positive, got ({c2}, {nu})")));
        }
        Ok(Self { c1, c2, nu })
    }

    /// Unit sill.
    pub fn range_smoothness(c2: f64, nu: f64) -> Result<Self> {
        Self::new(1.0, c2, nu)
    }
}

/// Replicates in rows, sites in columns; every entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetPanel {
    z: Vec<Vec<f64>>,
}

impl FrechetPanel {
    pub fn new(z: Vec<Vec<f64>>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::Empty("panel"));
        }
        let d = z[0].len();
        for row in &z {
            check_dim(d, row.len())?;
            if let Some(v) = row.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::OutsideSupport(format!("panel entry {v} is not positive and finite")));
            }
        }
        Ok(Self { z })
    }

    pub fn replicates(&self) -> usize {
        self.z.len()
    }

    pub fn sites(&self) -> usize {
        self.z.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.z
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.z.iter().map(|r| r[i]).collect()
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.z
    }
}

/// `ρ(h) = c1 2^{1−ν}/Γ(ν) (h/c2)^ν K_ν(h/c2)`, with `ρ(0) = c1`.
pub fn whittle_matern(h: f64, p: &CorrelationParams) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::InvalidConfig(format!("distance must be non-negative, got {h}")));
    }
    CorrelationParams::new(p.c1, p.c2, p.nu)?;
    if h == 0.0 || p.c1 == 0.0 {
        return Ok(p.c1);
    }
    let x = h / p.c2;
    let ln = p.c1.ln() + (1.0 - p.nu) * std::f64::consts::LN_2 - ln_gamma(p.nu) + p.nu * x.ln()
        + bessel::ln_bessel_k(p.nu, x);
    Ok(ln.exp().clamp(0.0, p.c1))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!("correlation must lie in [-1, 1], got {rho}")));
    }
    Ok(())
}

fn check_z(zi: f64, zj: f64) -> Result<()> {
    if !(zi > 0.0) || !(zj > 0.0) {
        return Err(Error::OutsideSupport(format!("arguments must be positive, got ({zi}, {zj})")));
    }
    Ok(())
}

/// Bivariate max-stable CDF at correlation `rho`:
/// `exp(−½ (1/z_i + 1/z_j) [1 + {1 − 2(ρ+1) z_i z_j/(z_i+z_j)²}^{1/2}])`.
pub fn pair_cdf(zi: f64, zj: f64, rho: f64) -> Result<f64> {
    check_z(zi, zj)?;
    check_rho(rho)?;
    let radicand = 1.0 - 2.0 * (rho + 1.0) * zi * zj / ((zi + zj) * (zi + zj));
    if radicand < 0.0 {
        return Err(Error::OutsideSupport(format!("negative radicand {radicand} at ({zi}, {zj}, {rho})")));
    }
    Ok((-0.5 * (1.0 / zi + 1.0 / zj) * (1.0 + radicand.sqrt())).exp())
}

/// Log of the bivariate density `∂²G/∂z_i∂z_j`.
///
/// With `u = 1/z_i`, `v = 1/z_j` the exponent is `V = ½(u + v + R)`,
/// `R = sqrt(u² + v² − 2ρuv)`, and the density is
/// `e^{−V} u² v² (V_u V_v − V_uv)` where `V_u = ½(1 + (u − ρv)/R)` and
/// `V_uv = −(1 − ρ²) uv / (2R³)`.
pub fn ln_pair_density(zi: f64, zj: f64, rho: f64) -> Result<f64> {
    check_z(zi, zj)?;
    check_rho(rho)?;
    let (u, v) = (1.0 / zi, 1.0 / zj);
    let r2 = (u - v) * (u - v) + 2.0 * (1.0 - rho) * u * v;
    if !(r2 > 0.0) {
        return Err(Error::OutsideSupport(format!("degenerate pair density at ({zi}, {zj}, {rho})")));
    }
    let r = r2.sqrt();
    let vu = 0.5 * (1.0 + (u - rho * v) / r);
    let vv = 0.5 * (1.0 + (v - rho * u) / r);
    let cross = (1.0 - rho * rho) * u * v / (2.0 * r2 * r);
    let bracket = vu * vv + cross;
    if bracket < -1e-10 {
        return Err(Error::NegativeDensity(bracket));
    }
    if bracket <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-0.5 * (u + v + r) + 2.0 * (u.ln() + v.ln()) + bracket.ln())
}

pub fn pair_density(zi: f64, zj: f64, rho: f64) -> Result<f64> {
    ln_pair_density(zi, zj, rho).map(f64::exp)
}

pub fn bivariate_cdf(zi: f64, zj: f64, h: f64, p: &CorrelationParams) -> Result<f64> {
    pair_cdf(zi, zj, whittle_matern(h, p)?)
}

pub fn bivariate_density(zi: f64, zj: f64, h: f64, p: &CorrelationParams) -> Result<f64> {
    pair_density(zi, zj, whittle_matern(h, p)?)
}

/// Sum over replicates and unordered site pairs of the log bivariate density.
pub fn pairwise_composite_loglik(panel: &FrechetPanel, layout: &SpatialLayout, p: &CorrelationParams) -> Result<f64> {
    check_dim(layout.sites(), panel.sites())?;
    let pairs: Vec<(usize, usize, f64)> = layout
        .pairs()
        .into_iter()
        .map(|(i, j, h)| Ok((i, j, whittle_matern(h, p)?)))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for row in panel.rows() {
        for &(i, j, rho) in &pairs {
            let v = ln_pair_density(row[i], row[j], rho)?;
            if v == f64::NEG_INFINITY {
                return Err(Error::NegativeDensity(0.0));
            }
            total += v;
        }
    }
    Ok(total)
}

/// Box for the composite-likelihood search over `(c2, ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeFitConfig {
    pub c1: f64,
    pub bounds: [(f64, f64); 2],
    pub tol: f64,
}

impl Default for CompositeFitConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            bounds: [(1e-2, 100.0), (1e-2, 50.0)],
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeFit {
    /// `(c2, ν)`.
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
}

fn composite_objective(panel: &FrechetPanel, layout: &SpatialLayout, c1: f64, theta: &[f64]) -> f64 {
    match CorrelationParams::new(c1, theta[0], theta[1]).and_then(|p| pairwise_composite_loglik(panel, layout, &p)) {
        Ok(v) if v.is_finite() => v,
        _ => f64::NEG_INFINITY,
    }
}

/// Maximises the pairwise composite likelihood over `(c2, ν)` by
/// Nelder-Mead on the log scale inside `cfg.bounds`.
pub fn fit_composite(
    panel: &FrechetPanel,
    layout: &SpatialLayout,
    theta_init: &[f64],
    cfg: &CompositeFitConfig,
) -> Result<CompositeFit> {
    check_dim(2, theta_init.len())?;
    let inside = |t: &[f64]| t.iter().zip(&cfg.bounds).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
    if !inside(theta_init) {
        return Err(Error::OutsideSupport(format!("start {theta_init:?} outside {:?}", cfg.bounds)));
    }
    let start: Vec<f64> = theta_init.iter().map(|v| v.ln()).collect();
    let nm = NelderMead::default().with_tol(cfg.tol).with_step(vec![0.25, 0.25]);
    let m = nm.minimize(
        |x| {
            let t = [x[0].exp(), x[1].exp()];
            if !inside(&t) {
                return f64::INFINITY;
            }
            -composite_objective(panel, layout, cfg.c1, &t)
        },
        &start,
    );
    if !m.value.is_finite() {
        return Err(Error::NonFiniteLoglik(theta_init.to_vec()));
    }
    Ok(CompositeFit {
        theta: m.x.iter().map(|v| v.exp()).collect(),
        loglik: -m.value,
        converged: m.converged,
    })
}

/// Negative finite-difference Hessian of the composite log-likelihood at
/// `theta = (c2, ν)`, ridge-repaired to be positive definite. Used as the
/// Mahalanobis weight between composite-likelihood estimates.
pub fn composite_information(panel: &FrechetPanel, layout: &SpatialLayout, theta: &[f64], c1: f64) -> Result<WeightMatrix> {
    check_dim(2, theta.len())?;
    let h = fd_hessian(|t| composite_objective(panel, layout, c1, t), theta)?;
    repair_information(-h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c2: f64, nu: f64) -> CorrelationParams {
        CorrelationParams::range_smoothness(c2, nu).unwrap()
    }

    #[test]
    fn matern_exponential_case() {
        for &h in &[0.5, 1.0, 2.0] {
            let got = whittle_matern(h, &CorrelationParams::new(0.8, 1.7, 0.5).unwrap()).unwrap();
            assert!((got - 0.8 * (-h / 1.7f64).exp()).abs() < 1e-10);
        }
        assert_eq!(whittle_matern(0.0, &p(2.0, 3.0)).unwrap(), 1.0);
        assert!((whittle_matern(1e-9, &p(2.0, 3.0)).unwrap() - 1.0).abs() < 1e-8);
        assert!(whittle_matern(-1.0, &p(2.0, 3.0)).is_err());
        assert!(CorrelationParams::new(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn matern_decreases_in_distance() {
        for &(c2, nu) in &[(0.5, 0.3), (3.0, 1.0), (10.0, 15.0), (19.0, 0.05)] {
            let mut last = 1.0;
            for k in 1..200 {
                let r = whittle_matern(k as f64 * 0.1, &p(c2, nu)).unwrap();
                assert!(r <= last + 1e-12, "c2={c2} nu={nu} k={k}");
                last = r;
            }
        }
    }

    #[test]
    fn cdf_marginal_limit_and_symmetry() {
        for &z in &[0.3, 1.0, 4.0] {
            let g = bivariate_cdf(z, 1e8, 1.0, &p(2.0, 1.0)).unwrap();
            assert!((g - (-1.0 / z).exp()).abs() < 1e-6);
            let g = bivariate_cdf(1e8, z, 1.0, &p(2.0, 1.0)).unwrap();
            assert!((g - (-1.0 / z).exp()).abs() < 1e-6);
        }
        let a = bivariate_cdf(0.7, 2.2, 1.3, &p(2.0, 1.0)).unwrap();
        let b = bivariate_cdf(2.2, 0.7, 1.3, &p(2.0, 1.0)).unwrap();
        assert_eq!(a, b);
        assert!(bivariate_cdf(-1.0, 1.0, 1.0, &p(1.0, 1.0)).is_err());
    }

    #[test]
    fn independence_endpoint_factorises() {
        for &(a, b) in &[(1.0f64, 1.0f64), (0.4, 3.0), (7.0, 0.9)] {
            let prod = (-1.0 / a - 1.0 / b).exp() / (a * a * b * b);
            assert!((pair_density(a, b, -1.0).unwrap() / prod - 1.0).abs() < 1e-12);
            assert!((pair_cdf(a, b, -1.0).unwrap() - (-1.0 / a - 1.0 / b).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn composite_is_additive_over_replicates() {
        let layout = SpatialLayout::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let rows = vec![vec![1.0, 2.0, 0.5], vec![0.3, 0.4, 3.0]];
        let one = FrechetPanel::new(rows.clone()).unwrap();
        let two = FrechetPanel::new([rows.clone(), rows].concat()).unwrap();
        let pp = p(2.0, 1.0);
        let a = pairwise_composite_loglik(&one, &layout, &pp).unwrap();
        let b = pairwise_composite_loglik(&two, &layout, &pp).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-10);
        let pair = SpatialLayout::new(vec![vec![0.0], vec![1.5]]).unwrap();
        let panel = FrechetPanel::new(vec![vec![1.2, 0.8]]).unwrap();
        let single = bivariate_density(1.2, 0.8, 1.5, &pp).unwrap().ln();
        assert!((pairwise_composite_loglik(&panel, &pair, &pp).unwrap() - single).abs() < 1e-12);
    }

    #[test]
    fn layout_validation() {
        assert!(SpatialLayout::new(vec![vec![0.0, 0.0]]).is_err());
        assert!(SpatialLayout::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        assert!(SpatialLayout::new(vec![vec![0.0, 0.0], vec![1.0]]).is_err());
        let g = SpatialLayout::grid(3, 2, 1.0).unwrap();
        assert_eq!(g.sites(), 6);
        assert_eq!(g.pairs().len(), 15);
        assert!((g.distance(0, 4) - 2f64.sqrt()).abs() < 1e-15);
        assert!(FrechetPanel::new(vec![vec![1.0, 0.0]]).is_err());
    }
}
