use std::borrow::Borrow;
use std::marker::PhantomData;

use crate::auxiliary::{aux_fit, aux_score, AuxModel};
use crate::error::{check_dim, Error, Result};
use crate::types::{weighted_norm, WeightMatrix};

/// `sqrt((φ_y − φ_obs)ᵀ J (φ_y − φ_obs))`.
pub fn disc_ip(phi_y: &[f64], phi_obs: &[f64], j_obs: &WeightMatrix) -> Result<f64> {
    check_dim(phi_obs.len(), phi_y.len())?;
    let d: Vec<f64> = phi_y.iter().zip(phi_obs).map(|(a, b)| a - b).collect();
    weighted_norm(&d, j_obs)
}

/// Auxiliary log-likelihood gap `log p_A(y_obs|φ_obs) − log p_A(y_obs|φ_y)`.
pub fn disc_il<A: AuxModel + ?Sized>(
    spec: &A,
    y_obs: &A::Data,
    phi_y: &[f64],
    phi_obs: &[f64],
) -> Result<f64> {
    check_dim(spec.dim(), phi_y.len())?;
    check_dim(spec.dim(), phi_obs.len())?;
    let at_obs = spec.loglik(y_obs, phi_obs);
    let at_y = spec.loglik(y_obs, phi_y);
    if !at_obs.is_finite() {
        return Err(Error::NonFiniteLoglik(phi_obs.to_vec()));
    }
    if !at_y.is_finite() {
        return Err(Error::NonFiniteLoglik(phi_y.to_vec()));
    }
    Ok(at_obs - at_y)
}

/// Weighting of the auxiliary score in [`disc_is`].
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreWeighting {
    Identity,
    /// Holds `J_obs⁻¹`.
    InverseInformation(WeightMatrix),
}

impl ScoreWeighting {
    pub fn inverse_information(j_obs: &WeightMatrix) -> Result<Self> {
        Ok(Self::InverseInformation(j_obs.inverse()?))
    }
}

/// `sqrt(S_A(y, φ_obs)ᵀ J_obs⁻¹ S_A(y, φ_obs))`, or the plain norm of the
/// score under [`ScoreWeighting::Identity`].
pub fn disc_is<A: AuxModel + ?Sized>(
    spec: &A,
    y: &A::Data,
    phi_obs: &[f64],
    weighting: &ScoreWeighting,
) -> Result<f64> {
    let s = aux_score(spec, y, phi_obs)?;
    match weighting {
        ScoreWeighting::Identity => Ok(s.iter().map(|v| v * v).sum::<f64>().sqrt()),
        ScoreWeighting::InverseInformation(m) => weighted_norm(&s, m),
    }
}

/// Distance between a simulated dataset and the observed one.
pub trait Discrepancy<D: ?Sized>: Sync {
    fn discrepancy(&self, y: &D) -> Result<f64>;
}

impl<D: ?Sized, F> Discrepancy<D> for F
where
    F: Fn(&D) -> Result<f64> + Sync,
{
    fn discrepancy(&self, y: &D) -> Result<f64> {
        self(y)
    }
}

/// ABC-IP: fit the auxiliary model to `y` (starting at `φ_obs`) and compare
/// parameters under `J_obs`.
pub struct IndirectParameter<'a, A: AuxModel + ?Sized> {
    pub spec: &'a A,
    pub phi_obs: Vec<f64>,
    pub j_obs: WeightMatrix,
}

impl<A, D> Discrepancy<D> for IndirectParameter<'_, A>
where
    A: AuxModel + ?Sized,
    D: Borrow<A::Data> + ?Sized,
{
    fn discrepancy(&self, y: &D) -> Result<f64> {
        let phi_y = aux_fit(self.spec, y.borrow(), &self.phi_obs)?;
        disc_ip(&phi_y.values, &self.phi_obs, &self.j_obs)
    }
}

/// ABC-IL: fit the auxiliary model to `y` and measure the observed-data
/// likelihood loss.
pub struct IndirectLikelihood<'a, A: AuxModel + ?Sized> {
    pub spec: &'a A,
    pub y_obs: &'a A::Data,
    pub phi_obs: Vec<f64>,
}

impl<A, D> Discrepancy<D> for IndirectLikelihood<'_, A>
where
    A: AuxModel + ?Sized,
    D: Borrow<A::Data> + ?Sized,
{
    fn discrepancy(&self, y: &D) -> Result<f64> {
        let phi_y = aux_fit(self.spec, y.borrow(), &self.phi_obs)?;
        disc_il(self.spec, self.y_obs, &phi_y.values, &self.phi_obs)
    }
}

/// ABC-IS: the auxiliary score of `y` at `φ_obs`; no fitting per draw.
pub struct IndirectScore<'a, A: AuxModel + ?Sized> {
    pub spec: &'a A,
    pub phi_obs: Vec<f64>,
    pub weighting: ScoreWeighting,
}

impl<A, D> Discrepancy<D> for IndirectScore<'_, A>
where
    A: AuxModel + ?Sized,
    D: Borrow<A::Data> + ?Sized,
{
    fn discrepancy(&self, y: &D) -> Result<f64> {
        disc_is(self.spec, y.borrow(), &self.phi_obs, &self.weighting)
    }
}

/// Weighted distance between a user summary of `y` and its observed value.
pub struct SimpleSummary<D: ?Sized, F> {
    pub summary: F,
    pub s_obs: Vec<f64>,
    pub weight: WeightMatrix,
    _data: PhantomData<fn(&D)>,
}

impl<D: ?Sized, F> SimpleSummary<D, F>
where
    F: Fn(&D) -> Result<Vec<f64>> + Sync,
{
    pub fn new(summary: F, s_obs: Vec<f64>) -> Self {
        let weight = WeightMatrix::identity(s_obs.len());
        Self {
            summary,
            s_obs,
            weight,
            _data: PhantomData,
        }
    }

    pub fn with_weight(mut self, weight: WeightMatrix) -> Result<Self> {
        check_dim(self.s_obs.len(), weight.dim())?;
        self.weight = weight;
        Ok(self)
    }
}

impl<D: ?Sized, F> Discrepancy<D> for SimpleSummary<D, F>
where
    F: Fn(&D) -> Result<Vec<f64>> + Sync,
{
    fn discrepancy(&self, y: &D) -> Result<f64> {
        let s = (self.summary)(y)?;
        check_dim(self.s_obs.len(), s.len())?;
        let d: Vec<f64> = s.iter().zip(&self.s_obs).map(|(a, b)| a - b).collect();
        weighted_norm(&d, &self.weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auxiliary::{aux_obs_info, GaussianAux};

    #[test]
    fn ip_examples() {
        let id = WeightMatrix::identity(2);
        assert_eq!(disc_ip(&[1.0, 2.0], &[1.0, 2.0], &id).unwrap(), 0.0);
        assert_eq!(disc_ip(&[4.0, 6.0], &[1.0, 2.0], &id).unwrap(), 5.0);
        assert!(disc_ip(&[1.0], &[1.0, 2.0], &id).is_err());
    }

    #[test]
    fn il_is_quadratic_for_gaussian_mean() {
        let y = [0.2, 1.4, -0.3, 0.9, 2.0];
        let ybar = crate::stats::mean(&y);
        let spec = GaussianAux::mean_only();
        assert_eq!(disc_il(&spec, &y[..], &[ybar], &[ybar]).unwrap(), 0.0);
        let delta = 0.37;
        let v = disc_il(&spec, &y[..], &[ybar + delta], &[ybar]).unwrap();
        assert!((v - 5.0 * delta * delta / 2.0).abs() < 1e-12);
    }

    #[test]
    fn is_matches_analytic_value() {
        let y_obs = [0.2, 1.4, -0.3, 0.9];
        let y = [1.0, 0.1, 0.7, 2.5];
        let spec = GaussianAux::mean_only().with_analytic_score(false);
        let phi_obs = [crate::stats::mean(&y_obs)];
        let j = aux_obs_info(&spec, &y_obs[..], &phi_obs).unwrap();
        let w = ScoreWeighting::inverse_information(&j).unwrap();
        let v = disc_is(&spec, &y[..], &phi_obs, &w).unwrap();
        let exact = (crate::stats::mean(&y) - phi_obs[0]).abs() * 2.0;
        assert!((v - exact).abs() < 1e-5, "{v} vs {exact}");
        assert!(disc_is(&spec, &y_obs[..], &phi_obs, &w).unwrap() < 1e-6);
        let plain = disc_is(&spec, &y[..], &phi_obs, &ScoreWeighting::Identity).unwrap();
        let score = aux_score(&spec, &y[..], &phi_obs).unwrap();
        assert_eq!(plain, score[0].abs());
    }

    #[test]
    fn closures_are_discrepancies() {
        let d = |y: &[f64]| Ok(y.iter().sum::<f64>().abs());
        assert_eq!(Discrepancy::<[f64]>::discrepancy(&d, &[1.0, -3.0]).unwrap(), 2.0);
        let s = SimpleSummary::new(|y: &[f64]| Ok(vec![y[0]]), vec![1.0]);
        assert_eq!(s.discrepancy(&[4.0][..]).unwrap(), 3.0);
    }
}
