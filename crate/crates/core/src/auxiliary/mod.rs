//! Auxiliary models: fitting, score and observed information, plus
//! simulation-based estimates of the binding function.

mod binding;
mod gaussian;
mod lna;

pub use binding::{binding, binding_mean, binding_pooled, BindingEstimate, BindingForm};
pub use gaussian::{GaussianAux, GaussianScale};
pub use lna::{lna_loglik, lna_predictions, LnaAux, LnaPrediction};

use log::debug;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::types::{AuxParameter, WeightMatrix};

/// A parametric auxiliary model with estimating function `Q(y; φ)`.
pub trait AuxModel: Sync {
    type Data: ?Sized + Sync;

    fn dim(&self) -> usize;

    /// Estimating function, normally the auxiliary log-likelihood.
    fn loglik(&self, y: &Self::Data, phi: &[f64]) -> f64;

    /// Exact gradient of [`AuxModel::loglik`] in `φ`, when known.
    fn analytic_score(&self, _y: &Self::Data, _phi: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Search box for fitting; `None` means unbounded.
    fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        None
    }

    /// Initial simplex edges for fitting from `phi`.
    fn initial_step(&self, _phi: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

fn in_box(phi: &[f64], bounds: &Option<Vec<(f64, f64)>>) -> bool {
    match bounds {
        Some(b) => phi.iter().zip(b).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi),
        None => true,
    }
}

/// Maximise `objective` over the auxiliary parameter box with Nelder-Mead.
pub(crate) fn maximize_aux<A, F>(spec: &A, objective: F, phi_init: &[f64]) -> Result<AuxParameter>
where
    A: AuxModel + ?Sized,
    F: Fn(&[f64]) -> f64,
{
    crate::error::check_dim(spec.dim(), phi_init.len())?;
    let bounds = spec.bounds();
    if !in_box(phi_init, &bounds) {
        return Err(Error::OutsideSupport(format!(
            "initial auxiliary parameter {phi_init:?} outside the fitting box"
        )));
    }
    let start = objective(phi_init);
    if !start.is_finite() {
        return Err(Error::NonFiniteLoglik(phi_init.to_vec()));
    }
    let mut nm = NelderMead::default();
    if let Some(step) = spec.initial_step(phi_init) {
        nm = nm.with_step(step);
    }
    let m = nm.minimize(
        |phi| {
            if in_box(phi, &bounds) {
                -objective(phi)
            } else {
                f64::INFINITY
            }
        },
        phi_init,
    );
    if !m.converged {
        debug!("auxiliary fit hit the iteration cap at {:?}", m.x);
    }
    Ok(AuxParameter {
        values: m.x,
        loglik_at_fit: -m.value,
        converged: m.converged,
    })
}

/// `φ̂ = argmax_φ Q(y; φ)` starting from `phi_init`.
pub fn aux_fit<A: AuxModel + ?Sized>(spec: &A, y: &A::Data, phi_init: &[f64]) -> Result<AuxParameter> {
    maximize_aux(spec, |phi| spec.loglik(y, phi), phi_init)
}

/// Fit to the pooled estimating function `Σ_i Q(y_i; φ)`.
pub fn aux_fit_pooled<A, Y>(spec: &A, ys: &[Y], phi_init: &[f64]) -> Result<AuxParameter>
where
    A: AuxModel + ?Sized,
    Y: std::borrow::Borrow<A::Data>,
{
    if ys.is_empty() {
        return Err(Error::Empty("replicate set"));
    }
    maximize_aux(
        spec,
        |phi| ys.iter().map(|y| spec.loglik(y.borrow(), phi)).sum(),
        phi_init,
    )
}

fn fd_step(v: f64, base: f64) -> f64 {
    base.max(base * v.abs())
}

/// Gradient of `Q(y; ·)` at `phi`: analytic when the model provides it,
/// otherwise central differences with step `max(1e-5, 1e-5 |φ_j|)`.
pub fn aux_score<A: AuxModel + ?Sized>(spec: &A, y: &A::Data, phi: &[f64]) -> Result<Vec<f64>> {
    crate::error::check_dim(spec.dim(), phi.len())?;
    if let Some(s) = spec.analytic_score(y, phi) {
        return Ok(s);
    }
    let mut grad = Vec::with_capacity(phi.len());
    let mut x = phi.to_vec();
    for j in 0..phi.len() {
        let h = fd_step(phi[j], 1e-5);
        x[j] = phi[j] + h;
        let up = spec.loglik(y, &x);
        x[j] = phi[j] - h;
        let down = spec.loglik(y, &x);
        x[j] = phi[j];
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::NonFiniteLoglik(phi.to_vec()));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Central second-difference Hessian of `f` at `x` with step
/// `max(1e-4, 1e-4 |x_j|)`.
pub(crate) fn fd_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Result<DMatrix<f64>> {
    let p = x.len();
    let h: Vec<f64> = x.iter().map(|v| fd_step(*v, 1e-4)).collect();
    let mut pt = x.to_vec();
    let eval = |pt: &[f64]| {
        let v = f(pt);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteLoglik(pt.to_vec()))
        }
    };
    let f0 = eval(x)?;
    let mut hess = DMatrix::zeros(p, p);
    for j in 0..p {
        pt[j] = x[j] + h[j];
        let up = eval(&pt)?;
        pt[j] = x[j] - h[j];
        let down = eval(&pt)?;
        pt[j] = x[j];
        hess[(j, j)] = (up - 2.0 * f0 + down) / (h[j] * h[j]);
        for k in 0..j {
            let mut corner = |sj: f64, sk: f64| {
                pt[j] = x[j] + sj * h[j];
                pt[k] = x[k] + sk * h[k];
                let v = eval(&pt);
                pt[j] = x[j];
                pt[k] = x[k];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                / (4.0 * h[j] * h[k]);
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    Ok(hess)
}

/// Symmetrise and, if needed, ridge-repair a matrix until Cholesky succeeds.
/// The ridge starts at `1e-8 · max diag` and grows tenfold up to
/// `1e-2 · max diag`.
pub fn repair_information(j: DMatrix<f64>) -> Result<WeightMatrix> {
    let sym = (&j + j.transpose()) * 0.5;
    if let Ok(w) = WeightMatrix::new(sym.clone()) {
        return Ok(w);
    }
    let max_diag = sym.diagonal().max();
    if !(max_diag > 0.0) {
        return Err(Error::IndefiniteInformation);
    }
    let n = sym.nrows();
    let mut eps = 1e-8 * max_diag;
    while eps <= 1e-2 * max_diag * (1.0 + 1e-12) {
        let candidate = &sym + DMatrix::identity(n, n) * eps;
        if let Ok(w) = WeightMatrix::new(candidate) {
            debug!("information matrix repaired with ridge {eps:e}");
            return Ok(w);
        }
        eps *= 10.0;
    }
    Err(Error::IndefiniteInformation)
}

/// Observed information `J(φ) = -∇²Q(y; φ)`, symmetrised and ridge-repaired.
pub fn aux_obs_info<A: AuxModel + ?Sized>(spec: &A, y: &A::Data, phi: &[f64]) -> Result<WeightMatrix> {
    crate::error::check_dim(spec.dim(), phi.len())?;
    let hess = fd_hessian(|p| spec.loglik(y, p), phi)?;
    repair_information(-hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_repair_of_semidefinite_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let w = repair_information(m).unwrap();
        assert!(w.entries()[(0, 0)] > 1.0);
    }

    #[test]
    fn strongly_indefinite_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(repair_information(m), Err(Error::IndefiniteInformation)));
    }

    #[test]
    fn hessian_of_quadratic() {
        let h = fd_hessian(|x| x[0] * x[0] + 3.0 * x[0] * x[1] - 2.0 * x[1] * x[1], &[0.3, -1.2]).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 3.0).abs() < 1e-6);
        assert!((h[(1, 1)] + 4.0).abs() < 1e-6);
    }
}
