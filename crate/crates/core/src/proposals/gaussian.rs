use rand::Rng;
use rand_distr::StandardNormal;

use crate::estimators::LogWeight;
use crate::{Error, Result};

/// Target `Normal(0, 1)`, proposal `Normal(mu, sigma)`; `sigma` is a standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPair {
    mu: f64,
    sigma: f64,
}

impl GaussianPair {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("invalid proposal Normal({mu}, {sigma})")));
        }
        Ok(GaussianPair { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `ln phi(x) - ln phi_{mu,sigma}(x)`
    #[inline]
    pub fn log_weight_value(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * x * x + 0.5 * z * z + self.sigma.ln()
    }

    pub fn log_weight(&self, x: f64) -> LogWeight<f64> {
        LogWeight::normalized(self.log_weight_value(x)).unwrap_or_else(|_| LogWeight::zero(true))
    }

    #[inline]
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mu + self.sigma * z
    }

    pub fn sample_and_weight<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, LogWeight<f64>) {
        let x = self.sample_point(rng);
        (x, self.log_weight(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn identical_pair_has_unit_weights() {
        let g = GaussianPair::new(0.0, 1.0).unwrap();
        let mut rng = stream(1, 0);
        for _ in 0..100 {
            let (_, w) = g.sample_and_weight(&mut rng);
            assert_eq!(w.log_w(), 0.0);
        }
    }

    #[test]
    fn density_ratio_at_zero() {
        let g = GaussianPair::new(0.0, 0.2).unwrap();
        assert!((g.log_weight(0.0).log_w() - 0.2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn weights_have_mean_one() {
        let g = GaussianPair::new(0.5, 1.5).unwrap();
        let mut rng = stream(3, 0);
        let n = 200_000;
        let ws: Vec<f64> = (0..n).map(|_| g.sample_and_weight(&mut rng).1.weight()).collect();
        let mean = ws.iter().sum::<f64>() / n as f64;
        let sd = (ws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 1.0).abs() < 5.0 * sd / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(GaussianPair::new(0.0, 0.0).is_err());
        assert!(GaussianPair::new(0.0, -1.0).is_err());
        assert!(GaussianPair::new(f64::NAN, 1.0).is_err());
    }
}
