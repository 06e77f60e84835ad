//! Linear noise approximation of the SI epidemic, used as an auxiliary model.
//!
//! The state is split into a deterministic mean `η` solving the reaction-rate
//! equations and a Gaussian fluctuation with mean `m` and covariance `V`.
//! Daily observations of `S + I` are assimilated with a Kalman update on the
//! fluctuation, while `η` is never reset.

use std::f64::consts::PI;

use super::AuxModel;
use crate::models::EpidemicPath;

/// LNA auxiliary model with `φ = (ln beta_A, ln gamma_A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnaAux {
    /// Observation variance added to the predictive variance.
    pub nugget: f64,
    /// RK4 step in days (at most 0.1).
    pub ode_step: f64,
}

impl Default for LnaAux {
    fn default() -> Self {
        Self {
            nugget: 0.25,
            ode_step: 0.1,
        }
    }
}

/// One-day-ahead predictive distribution of `S + I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnaPrediction {
    pub day: usize,
    pub mean: f64,
    pub var: f64,
}

// η_S, η_I, m_S, m_I, V_SS, V_SI, V_II
type State = [f64; 7];

fn drift(x: &State, beta: f64, gamma: f64) -> State {
    let (s, i) = (x[0], x[1]);
    let inf = beta * s * i;
    let rem = gamma * i;
    let f = [[-beta * i, -beta * s], [beta * i, beta * s - gamma]];
    let v = [[x[4], x[5]], [x[5], x[6]]];
    let mut fv = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            fv[r][c] = f[r][0] * v[0][c] + f[r][1] * v[1][c];
        }
    }
    [
        -inf,
        inf - rem,
        f[0][0] * x[2] + f[0][1] * x[3],
        f[1][0] * x[2] + f[1][1] * x[3],
        2.0 * fv[0][0] + inf,
        fv[0][1] + fv[1][0] - inf,
        2.0 * fv[1][1] + inf + rem,
    ]
}

fn rk4_step(x: &State, h: f64, beta: f64, gamma: f64) -> State {
    let add = |a: &State, k: &State, t: f64| -> State {
        let mut out = *a;
        for (o, kk) in out.iter_mut().zip(k) {
            *o += t * kk;
        }
        out
    };
    let k1 = drift(x, beta, gamma);
    let k2 = drift(&add(x, &k1, 0.5 * h), beta, gamma);
    let k3 = drift(&add(x, &k2, 0.5 * h), beta, gamma);
    let k4 = drift(&add(x, &k3, h), beta, gamma);
    let mut out = *x;
    for j in 0..7 {
        out[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    out
}

/// Runs the filter, calling `visit` with each prediction and the observed
/// value. Returns `false` if the mean left the population envelope.
fn filter<F: FnMut(LnaPrediction, f64)>(
    aux: &LnaAux,
    path: &EpidemicPath,
    beta: f64,
    gamma: f64,
    mut visit: F,
) -> bool {
    let pop = path.population() as f64;
    let steps = (1.0 / aux.ode_step).ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let mut x: State = [path.s0 as f64, path.i0 as f64, 0.0, 0.0, 0.0, 0.0, 0.0];
    for (day, obs) in path.daily_obs.iter().enumerate().skip(1) {
        for _ in 0..steps {
            x = rk4_step(&x, h, beta, gamma);
        }
        let inside = x[..2].iter().all(|v| *v >= 0.0 && *v <= pop + 5.0);
        if !inside || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let mean = x[0] + x[1] + x[2] + x[3];
        let hv = [x[4] + x[5], x[5] + x[6]];
        let var = hv[0] + hv[1] + aux.nugget;
        let o = *obs as f64;
        visit(LnaPrediction { day, mean, var }, o);
        let resid = o - mean;
        x[2] += hv[0] / var * resid;
        x[3] += hv[1] / var * resid;
        x[4] -= hv[0] * hv[0] / var;
        x[5] -= hv[0] * hv[1] / var;
        x[6] -= hv[1] * hv[1] / var;
    }
    true
}

/// Gaussian filtering log-likelihood of the daily series under the LNA with
/// rates `beta`, `gamma` (natural scale). The day-0 value is fixed by the
/// initial state and contributes nothing.
pub fn lna_loglik(aux: &LnaAux, path: &EpidemicPath, beta: f64, gamma: f64) -> f64 {
    let mut ll = 0.0;
    let ok = filter(aux, path, beta, gamma, |p, o| {
        ll += -0.5 * ((2.0 * PI * p.var).ln() + (o - p.mean).powi(2) / p.var);
    });
    if ok && ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

/// Predictive means and variances for every recorded day after day 0.
pub fn lna_predictions(aux: &LnaAux, path: &EpidemicPath, beta: f64, gamma: f64) -> Vec<LnaPrediction> {
    let mut out = Vec::new();
    filter(aux, path, beta, gamma, |p, _| out.push(p));
    out
}

impl AuxModel for LnaAux {
    type Data = EpidemicPath;

    fn dim(&self) -> usize {
        2
    }

    fn loglik(&self, y: &EpidemicPath, phi: &[f64]) -> f64 {
        lna_loglik(self, y, phi[0].exp(), phi[1].exp())
    }

    fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(1e-6f64.ln(), 0.0), (1e-4f64.ln(), 10f64.ln())])
    }

    fn initial_step(&self, _phi: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.25, 0.25])
    }
}
