use std::borrow::Borrow;

use serde::{Deserialize, Serialize};

use super::{aux_fit, aux_fit_pooled, AuxModel};
use crate::error::{Error, Result};
use crate::models::Simulator;
use crate::par::Execution;
use crate::rng::NoiseSeed;
use crate::types::AuxParameter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingForm {
    /// Maximise the summed estimating function over all replicates.
    #[default]
    Pooled,
    /// Average the per-replicate maximisers.
    MeanOfFits,
}

/// Simulation estimate `φ_n(θ)` of the binding function.
#[derive(Debug, Clone, PartialEq)]
pub struct BindingEstimate {
    pub phi_n: AuxParameter,
    pub n: usize,
    pub form: BindingForm,
}

fn replicates<M: Simulator>(
    model: &M,
    theta: &[f64],
    n: usize,
    xi: NoiseSeed,
    exec: Execution,
) -> Result<Vec<M::Output>> {
    if n == 0 {
        return Err(Error::InvalidConfig("binding needs at least one replicate".into()));
    }
    Ok(exec.map(n, |i| model.simulate(theta, xi.child(i as u64))))
}

/// `φ_n(θ) = argmax_φ Σ_i Q(y_i; φ)` over `n` replicates simulated on the
/// child streams `xi.child(0..n)`.
pub fn binding_pooled<M, A>(
    model: &M,
    spec: &A,
    theta: &[f64],
    n: usize,
    xi: NoiseSeed,
    phi_init: &[f64],
    exec: Execution,
) -> Result<BindingEstimate>
where
    M: Simulator,
    A: AuxModel + ?Sized,
    M::Output: Borrow<A::Data>,
{
    let ys = replicates(model, theta, n, xi, exec)?;
    let phi_n = aux_fit_pooled(spec, &ys, phi_init)?;
    Ok(BindingEstimate {
        phi_n,
        n,
        form: BindingForm::Pooled,
    })
}

/// `φ_n(θ) = (1/n) Σ_i argmax_φ Q(y_i; φ)`.
pub fn binding_mean<M, A>(
    model: &M,
    spec: &A,
    theta: &[f64],
    n: usize,
    xi: NoiseSeed,
    phi_init: &[f64],
    exec: Execution,
) -> Result<BindingEstimate>
where
    M: Simulator,
    A: AuxModel + ?Sized,
    M::Output: Borrow<A::Data>,
{
    let ys = replicates(model, theta, n, xi, exec)?;
    let fits = exec.try_map(n, |i| aux_fit(spec, ys[i].borrow(), phi_init))?;
    let p = spec.dim();
    let mut values = vec![0.0; p];
    let mut loglik = 0.0;
    for f in &fits {
        for (v, x) in values.iter_mut().zip(&f.values) {
            *v += x / n as f64;
        }
        loglik += f.loglik_at_fit;
    }
    Ok(BindingEstimate {
        phi_n: AuxParameter {
            values,
            loglik_at_fit: loglik,
            converged: fits.iter().all(|f| f.converged),
        },
        n,
        form: BindingForm::MeanOfFits,
    })
}

/// Dispatch on [`BindingForm`].
#[allow(clippy::too_many_arguments)]
pub fn binding<M, A>(
    form: BindingForm,
    model: &M,
    spec: &A,
    theta: &[f64],
    n: usize,
    xi: NoiseSeed,
    phi_init: &[f64],
    exec: Execution,
) -> Result<BindingEstimate>
where
    M: Simulator,
    A: AuxModel + ?Sized,
    M::Output: Borrow<A::Data>,
{
    match form {
        BindingForm::Pooled => binding_pooled(model, spec, theta, n, xi, phi_init, exec),
        BindingForm::MeanOfFits => binding_mean(model, spec, theta, n, xi, phi_init, exec),
    }
}
