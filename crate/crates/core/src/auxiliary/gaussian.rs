use std::f64::consts::PI;

use super::AuxModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianScale {
    /// `φ = (mean)`, standard deviation fixed.
    Known(f64),
    /// `φ = (mean, ln sd)`.
    Estimated,
}

/// I.i.d. Gaussian auxiliary model for a real-valued dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianAux {
    pub scale: GaussianScale,
    pub use_analytic_score: bool,
}

impl GaussianAux {
    /// Unit-variance, mean-only model.
    pub fn mean_only() -> Self {
        Self {
            scale: GaussianScale::Known(1.0),
            use_analytic_score: true,
        }
    }

    pub fn mean_log_sd() -> Self {
        Self {
            scale: GaussianScale::Estimated,
            use_analytic_score: true,
        }
    }

    pub fn with_analytic_score(mut self, on: bool) -> Self {
        self.use_analytic_score = on;
        self
    }

    fn sd(&self, phi: &[f64]) -> f64 {
        match self.scale {
            GaussianScale::Known(s) => s,
            GaussianScale::Estimated => phi[1].exp(),
        }
    }
}

impl AuxModel for GaussianAux {
    type Data = [f64];

    fn dim(&self) -> usize {
        match self.scale {
            GaussianScale::Known(_) => 1,
            GaussianScale::Estimated => 2,
        }
    }

    fn loglik(&self, y: &[f64], phi: &[f64]) -> f64 {
        let sd = self.sd(phi);
        let n = y.len() as f64;
        let ss: f64 = y.iter().map(|v| (v - phi[0]).powi(2)).sum();
        -0.5 * ss / (sd * sd) - n * sd.ln() - 0.5 * n * (2.0 * PI).ln()
    }

    fn analytic_score(&self, y: &[f64], phi: &[f64]) -> Option<Vec<f64>> {
        if !self.use_analytic_score {
            return None;
        }
        let sd = self.sd(phi);
        let var = sd * sd;
        let resid: f64 = y.iter().map(|v| v - phi[0]).sum();
        match self.scale {
            GaussianScale::Known(_) => Some(vec![resid / var]),
            GaussianScale::Estimated => {
                let ss: f64 = y.iter().map(|v| (v - phi[0]).powi(2)).sum();
                Some(vec![resid / var, ss / var - y.len() as f64])
            }
        }
    }
}
