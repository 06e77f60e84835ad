//! Classical indirect-inference point estimators: the Wald-type distance
//! between binding estimate and observed auxiliary fit, simulated
//! quasi-maximum likelihood, and the efficient method of moments.
//!
//! All three hold the noise seed fixed across `θ` evaluations, so each
//! objective is a deterministic function of `θ`.

use std::borrow::Borrow;

use nalgebra::DVector;

use crate::auxiliary::{aux_score, binding, AuxModel, BindingForm};
use crate::error::{check_dim, Error, Result};
use crate::models::Simulator;
use crate::optim::{halton_points, NelderMead};
use crate::par::Execution;
use crate::prior::UniformBox;
use crate::rng::NoiseSeed;
use crate::types::{ParameterVector, WeightMatrix};

/// Everything the estimators share.
pub struct IiProblem<'a, M, A: AuxModel + ?Sized> {
    pub model: &'a M,
    pub spec: &'a A,
    pub y_obs: &'a A::Data,
    pub phi_obs: Vec<f64>,
    pub n: usize,
    pub w: WeightMatrix,
    pub theta_box: UniformBox,
    pub form: BindingForm,
    /// Number of Nelder-Mead starts: `theta_init` plus Halton points.
    pub starts: usize,
    pub tol: f64,
    pub exec: Execution,
}

impl<'a, M, A> IiProblem<'a, M, A>
where
    M: Simulator,
    A: AuxModel + ?Sized,
    M::Output: Borrow<A::Data>,
{
    pub fn new(
        model: &'a M,
        spec: &'a A,
        y_obs: &'a A::Data,
        phi_obs: Vec<f64>,
        n: usize,
        theta_box: UniformBox,
    ) -> Result<Self> {
        check_dim(spec.dim(), phi_obs.len())?;
        check_dim(model.dim(), crate::prior::Prior::dim(&theta_box))?;
        if n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        Ok(Self {
            model,
            spec,
            y_obs,
            w: WeightMatrix::identity(phi_obs.len()),
            phi_obs,
            n,
            theta_box,
            form: BindingForm::Pooled,
            starts: 5,
            tol: 1e-8,
            exec: Execution::default(),
        })
    }

    pub fn with_weight(mut self, w: WeightMatrix) -> Result<Self> {
        check_dim(self.phi_obs.len(), w.dim())?;
        self.w = w;
        Ok(self)
    }

    fn binding_at(&self, theta: &[f64], xi: NoiseSeed) -> Result<Vec<f64>> {
        Ok(binding(
            self.form,
            self.model,
            self.spec,
            theta,
            self.n,
            xi,
            &self.phi_obs,
            self.exec,
        )?
        .phi_n
        .values)
    }

    /// `(φ_n(θ) − φ_obs)ᵀ W (φ_n(θ) − φ_obs)`.
    pub fn wald_objective(&self, theta: &[f64], xi: NoiseSeed) -> Result<f64> {
        let phi = self.binding_at(theta, xi)?;
        let d: Vec<f64> = phi.iter().zip(&self.phi_obs).map(|(a, b)| a - b).collect();
        self.w.quadratic_form(&d)
    }

    /// `Q(y_obs; φ_n(θ))`, to be maximised.
    pub fn sqml_objective(&self, theta: &[f64], xi: NoiseSeed) -> Result<f64> {
        let phi = self.binding_at(theta, xi)?;
        Ok(self.spec.loglik(self.y_obs, &phi))
    }

    /// Mean auxiliary score of the replicates at `φ_obs`, as used by EMM.
    pub fn mean_score(&self, theta: &[f64], xi: NoiseSeed) -> Result<Vec<f64>> {
        let scores = self.exec.try_map(self.n, |i| {
            let y = self.model.simulate(theta, xi.child(i as u64));
            aux_score(self.spec, y.borrow(), &self.phi_obs)
        })?;
        let mut mean = vec![0.0; self.phi_obs.len()];
        for s in &scores {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / self.n as f64;
            }
        }
        Ok(mean)
    }

    /// `s̄(θ)ᵀ Σ s̄(θ)` with `s̄` the mean score.
    pub fn emm_objective(&self, sigma: &WeightMatrix, theta: &[f64], xi: NoiseSeed) -> Result<f64> {
        let s = self.mean_score(theta, xi)?;
        sigma.quadratic_form(&s)
    }

    fn start_points(&self, theta_init: &[f64]) -> Vec<Vec<f64>> {
        let p = theta_init.len();
        let mut pts = vec![theta_init.to_vec()];
        for u in halton_points(self.starts.saturating_sub(1), p) {
            pts.push(self.theta_box.from_unit(&u));
        }
        pts
    }

    /// Multi-start Nelder-Mead on `objective` over the search box.
    fn minimize<F>(&self, theta_init: &[f64], objective: F) -> Result<IiEstimate>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        check_dim(self.model.dim(), theta_init.len())?;
        let prior = &self.theta_box;
        if !crate::prior::Prior::contains(prior, theta_init) {
            return Err(Error::OutsideSupport(format!("theta_init {theta_init:?} outside the search box")));
        }
        let starts = self.start_points(theta_init);
        let step: Vec<f64> = prior.widths().iter().map(|w| 0.1 * w).collect();
        let runs = self.exec.map(starts.len(), |k| {
            let mut trace = Vec::new();
            let nm = NelderMead::default().with_tol(self.tol).with_step(step.clone());
            let m = nm.minimize(
                |theta| {
                    let v = if crate::prior::Prior::contains(prior, theta) {
                        objective(theta).unwrap_or(f64::INFINITY)
                    } else {
                        f64::INFINITY
                    };
                    trace.push(TracePoint {
                        start: k,
                        theta: theta.to_vec(),
                        objective: v,
                    });
                    v
                },
                &starts[k],
            );
            (m, trace)
        });
        let mut best: Option<usize> = None;
        for (k, (m, _)) in runs.iter().enumerate() {
            if m.value.is_finite() && best.is_none_or(|b| m.value < runs[b].0.value) {
                best = Some(k);
            }
        }
        let b = best.ok_or_else(|| Error::NonFiniteLoglik(theta_init.to_vec()))?;
        let names = crate::prior::Prior::names(prior);
        let trace = runs.iter().flat_map(|(_, t)| t.iter().cloned()).collect();
        let m = &runs[b].0;
        Ok(IiEstimate {
            theta: ParameterVector::new(m.x.clone(), names)?,
            objective: m.value,
            converged: m.converged,
            trace,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub start: usize,
    pub theta: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IiEstimate {
    pub theta: ParameterVector,
    /// Objective at the estimate, in minimisation form.
    pub objective: f64,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// Wald-type indirect inference estimator.
pub fn ii_wald<M, A>(prob: &IiProblem<'_, M, A>, theta_init: &[f64], xi: NoiseSeed) -> Result<IiEstimate>
where
    M: Simulator,
    A: AuxModel + ?Sized,
    M::Output: Borrow<A::Data>,
{
    prob.minimize(theta_init, |t| prob.wald_objective(t, xi))
}

/// Simulated quasi-maximum likelihood estimator. The reported objective is
/// `-Q(y_obs; φ_n(θ̂))`.
pub fn ii_sqml<M, A>(prob: &IiProblem<'_, M, A>, theta_init: &[f64], xi: NoiseSeed) -> Result<IiEstimate>
where
    M: Simulator,
    A: AuxModel + ?Sized,
    M::Output: Borrow<A::Data>,
{
    prob.minimize(theta_init, |t| Ok(-prob.sqml_objective(t, xi)?))
}

/// Efficient method of moments estimator with weighting `sigma`.
pub fn ii_emm<M, A>(
    prob: &IiProblem<'_, M, A>,
    sigma: &WeightMatrix,
    theta_init: &[f64],
    xi: NoiseSeed,
) -> Result<IiEstimate>
where
    M: Simulator,
    A: AuxModel + ?Sized,
    M::Output: Borrow<A::Data>,
{
    check_dim(prob.phi_obs.len(), sigma.dim())?;
    prob.minimize(theta_init, |t| prob.emm_objective(sigma, t, xi))
}

/// `J(φ_obs)⁻¹`, the default EMM weighting.
pub fn default_emm_weight(j_obs: &WeightMatrix) -> Result<WeightMatrix> {
    j_obs.inverse()
}

/// Euclidean distance between two vectors, handy for reporting.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    (DVector::from_column_slice(a) - DVector::from_column_slice(b)).norm()
}
