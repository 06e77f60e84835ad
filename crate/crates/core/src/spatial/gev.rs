use crate::error::{Error, Result};

/// Generalised extreme value margin: location, scale, shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() || !xi.is_finite() {
            return Err(Error::InvalidConfig(format!("invalid GEV parameters ({mu}, {sigma}, {xi})")));
        }
        Ok(Self { mu, sigma, xi })
    }
}

/// `Z = (1 + ξ(Y − μ)/σ)^{1/ξ}`, or `exp((Y − μ)/σ)` at `ξ = 0`.
pub fn gev_to_frechet(y: &[f64], g: &GevParams) -> Result<Vec<f64>> {
    GevParams::new(g.mu, g.sigma, g.xi)?;
    y.iter()
        .map(|&v| {
            let t = (v - g.mu) / g.sigma;
            if g.xi == 0.0 {
                return Ok(t.exp());
            }
            let base = g.xi * t;
            if !(1.0 + base > 0.0) {
                return Err(Error::OutsideSupport(format!("{v} outside the GEV support")));
            }
            Ok((base.ln_1p() / g.xi).exp())
        })
        .collect()
}

/// `Y = σ/ξ (Z^ξ − 1) + μ`, or `μ + σ ln Z` at `ξ = 0`.
pub fn frechet_to_gev(z: &[f64], g: &GevParams) -> Result<Vec<f64>> {
    GevParams::new(g.mu, g.sigma, g.xi)?;
    z.iter()
        .map(|&v| {
            if !(v > 0.0) {
                return Err(Error::OutsideSupport(format!("Fréchet value {v} is not positive")));
            }
            let l = v.ln();
            Ok(if g.xi == 0.0 {
                g.mu + g.sigma * l
            } else {
                g.mu + g.sigma * (g.xi * l).exp_m1() / g.xi
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_case_and_gumbel_limit() {
        let g = GevParams::new(0.0, 1.0, 1.0).unwrap();
        assert_eq!(gev_to_frechet(&[0.0, 1.5], &g).unwrap(), vec![1.0, 2.5]);
        let y = [-1.0, 0.3, 2.0];
        let near = gev_to_frechet(&y, &GevParams::new(0.5, 2.0, 1e-12).unwrap()).unwrap();
        let exact = gev_to_frechet(&y, &GevParams::new(0.5, 2.0, 0.0).unwrap()).unwrap();
        for (a, b) in near.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(gev_to_frechet(&[-5.0], &GevParams::new(0.0, 1.0, 0.5).unwrap()).is_err());
        assert!(GevParams::new(0.0, 0.0, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(z in 0.01f64..100.0, mu in -5.0f64..5.0, sigma in 0.1f64..5.0, xi in -0.5f64..0.5) {
            let g = GevParams::new(mu, sigma, xi).unwrap();
            let y = frechet_to_gev(&[z], &g).unwrap();
            let back = gev_to_frechet(&y, &g).unwrap()[0];
            prop_assert!((back - z).abs() <= 1e-10 * z.max(1.0));
        }
    }
}
