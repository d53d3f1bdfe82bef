//! Logistic model with row, column and covariate effects, and the mixture of
//! covariate-tilted column samplers used to test its covariate coefficient.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ColumnSampler, ColumnWorkspace, MixtureProposal};
use crate::estimators::LogWeight;
use crate::special::log_sum_exp;
use crate::table::{BinaryMatrix, Covariates, MarginFiber};
use crate::{Error, Result};

/// Intercept of the reference parameter set.
pub const RASCH_KAPPA: f64 = -1.628;

/// Column effects of the reference parameter set (last entry pinned to zero).
pub const RASCH_BETA: [f64; 10] = [0.210, -0.066, 0.576, -0.197, 0.231, 0.184, -0.034, -0.279, -0.396, 0.000];

/// Row effects of the reference parameter set (last entry pinned to zero).
pub const RASCH_ALPHA: [f64; 200] = [
    -0.183, -0.735, -0.144, -0.756, -0.749, -0.226, -0.538, -0.213, -0.118, -0.284,
    -0.127, -0.632, -0.132, 0.104, 0.000, -0.781, -0.500, -0.498, -0.182, -0.269,
    -0.077, -0.499, -0.661, -0.780, -0.095, -0.661, -0.478, -0.315, -0.638, -0.225,
    -0.382, -0.715, -0.085, -0.766, -0.573, -0.629, -0.336, -0.775, -0.461, -0.762,
    -0.754, -0.082, -0.575, -0.263, 0.098, -0.434, -0.172, -0.109, -0.434, -0.211,
    -0.757, 0.067, -0.679, -0.601, -0.069, -0.379, -0.098, -0.471, -0.594, -0.830,
    -0.193, -0.437, -0.415, -0.257, -0.807, -0.551, -0.094, -0.170, -0.741, -0.737,
    -0.774, -0.859, -0.444, -0.211, -0.144, -0.336, -0.758, -0.235, -0.740, -0.732,
    -0.768, -0.725, -0.698, -0.671, -0.549, -0.550, -0.649, -0.616, 0.026, -0.164,
    -0.311, -0.682, -0.655, -0.789, 0.047, -0.160, -0.309, -0.553, -0.701, -0.244,
    0.121, -0.696, -0.609, -0.470, -0.793, -0.183, -0.464, 0.116, -0.465, -0.246,
    -0.712, -0.485, -0.706, -0.109, 0.004, -0.516, -0.181, -0.573, -0.336, -0.034,
    -0.269, -0.531, -0.568, -0.414, -0.444, -0.507, -0.308, -0.124, -0.442, -0.437,
    -0.742, -0.842, -0.577, -0.549, -0.213, 0.090, 0.069, -0.409, -0.626, -0.103,
    -0.107, -0.126, -0.123, -0.761, -0.185, -0.403, -0.655, -0.768, -0.043, -0.692,
    -0.703, -0.201, 0.028, -0.350, -0.164, -0.713, 0.087, -0.326, -0.187, -0.830,
    -0.058, -0.118, -0.747, -0.342, -0.541, -0.320, -0.468, -0.452, -0.686, -0.611,
    -0.846, 0.057, -0.213, 0.066, -0.703, 0.054, -0.072, -0.289, -0.427, -0.609,
    -0.115, -0.638, -0.803, -0.099, -0.196, -0.152, -0.225, -0.448, -0.476, -0.051,
    -0.549, -0.052, -0.078, -0.014, -0.361, -0.231, 0.084, -0.423, -0.807, 0.000,
];

/// `logit p_ij = kappa + alpha_i + beta_j + theta v_ij`, entries independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaschModel {
    pub kappa: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub theta: f64,
}

impl RaschModel {
    pub fn new(kappa: f64, alpha: Vec<f64>, beta: Vec<f64>, theta: f64) -> Result<Self> {
        let all = std::iter::once(kappa).chain(alpha.iter().copied()).chain(beta.iter().copied());
        if all.chain(std::iter::once(theta)).any(|x| !x.is_finite()) {
            return Err(Error::domain("model coefficients must be finite"));
        }
        if alpha.last() != Some(&0.0) || beta.last() != Some(&0.0) {
            return Err(Error::domain("last row and column effects must be zero"));
        }
        Ok(RaschModel { kappa, alpha, beta, theta })
    }

    /// The reference parameters cut down to `rows x cols`: the leading effects are
    /// kept and the last of each is set to zero.
    pub fn reference(rows: usize, cols: usize, theta: f64) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > RASCH_ALPHA.len() || cols > RASCH_BETA.len() {
            return Err(Error::domain(format!("reference model has at most 200 x 10 entries, asked {rows} x {cols}")));
        }
        let mut alpha = RASCH_ALPHA[..rows].to_vec();
        let mut beta = RASCH_BETA[..cols].to_vec();
        alpha[rows - 1] = 0.0;
        beta[cols - 1] = 0.0;
        Self::new(RASCH_KAPPA, alpha, beta, theta)
    }

    pub fn rows(&self) -> usize {
        self.alpha.len()
    }

    pub fn cols(&self) -> usize {
        self.beta.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, v: &Covariates, rng: &mut R) -> Result<BinaryMatrix> {
        if v.rows() != self.rows() || v.cols() != self.cols() {
            return Err(Error::shape("covariates do not match the model dimensions"));
        }
        let mut x = BinaryMatrix::zeros(self.rows(), self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let eta = self.kappa + self.alpha[i] + self.beta[j] + self.theta * v.get(i, j);
                let p = 1.0 / (1.0 + (-eta).exp());
                let u: f64 = rng.random();
                x.set(i, j, u < p);
            }
        }
        Ok(x)
    }
}

/// Equal-weight mixture of covariate-tilted column samplers, one per tilt in `thetas`.
pub fn rasch_mixture<'a>(
    fiber: &'a MarginFiber,
    v: &'a Covariates,
    thetas: &[f64],
) -> Result<MixtureProposal<ColumnSampler<'a>>> {
    let comps = thetas.iter().map(|&t| ColumnSampler::tilted(fiber, v, t)).collect::<Result<Vec<_>>>()?;
    MixtureProposal::uniform(comps)
}

impl MixtureProposal<ColumnSampler<'_>> {
    /// `ln sum_l Q_l(x)` (mixture density without the `1/L` factor), reusing `ws`.
    pub fn log_component_sum(&self, x: &BinaryMatrix, ws: &mut ColumnWorkspace) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.len());
        for c in self.components() {
            terms.push(c.log_prob_in(x, ws)?);
        }
        Ok(log_sum_exp(terms))
    }
}

/// `w(theta, x) = exp(theta t(x)) / sum_l Q_l(x)`, known only up to a constant.
pub fn rasch_log_weight(
    theta: f64,
    x: &BinaryMatrix,
    mix: &MixtureProposal<ColumnSampler<'_>>,
    v: &Covariates,
) -> Result<LogWeight<f64>> {
    let t = v.dot(x)?;
    let lq = mix.log_component_sum(x, &mut ColumnWorkspace::new())?;
    rasch_log_weight_from(theta, t, lq)
}

/// The same weight from a stored statistic and `ln sum_l Q_l(x)`.
pub fn rasch_log_weight_from(theta: f64, stat: f64, log_component_sum: f64) -> Result<LogWeight<f64>> {
    if log_component_sum == f64::INFINITY {
        return Ok(LogWeight::zero(false));
    }
    LogWeight::unnormalized(theta * stat - log_component_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{p_tilde_star, ObservedPoint, WeightedDraw};
    use crate::proposals::Proposal;
    use crate::rng::stream;

    fn setup() -> (MarginFiber, Covariates) {
        let x = BinaryMatrix::from_rows(&[vec![1, 0, 1, 1], vec![0, 1, 1, 0], vec![1, 1, 0, 0], vec![0, 0, 1, 1]]).unwrap();
        let v = Covariates::new(4, 4, (0..16).map(|k| ((k * 5) % 9) as f64 / 4.0 - 1.0).collect()).unwrap();
        (MarginFiber::of_matrix(&x), v)
    }

    #[test]
    fn reference_model_pins_last_effects() {
        let m = RaschModel::reference(30, 8, 2.0).unwrap();
        assert_eq!(m.alpha.len(), 30);
        assert_eq!(m.alpha[29], 0.0);
        assert_eq!(m.beta[7], 0.0);
        assert_eq!(m.alpha[0], -0.183);
        assert_eq!(RASCH_ALPHA[199], 0.0);
        assert!(RaschModel::reference(201, 8, 0.0).is_err());
    }

    #[test]
    fn weight_shift_is_linear_in_theta() {
        let (fiber, v) = setup();
        let mix = rasch_mixture(&fiber, &v, &[-1.0, 0.0, 1.0]).unwrap();
        let mut rng = stream(1, 0);
        let x = mix.sample(&mut rng).unwrap().point().cloned().unwrap();
        let t = v.dot(&x).unwrap();
        let w0 = rasch_log_weight(0.0, &x, &mix, &v).unwrap();
        let w1 = rasch_log_weight(0.75, &x, &mix, &v).unwrap();
        assert!(!w0.is_normalized());
        assert!((w1.log_w() - w0.log_w() - 0.75 * t).abs() < 1e-12);
        let lq = mix.log_prob(&x).unwrap();
        assert!((w0.log_w() + lq + 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn corrected_pvalue_ignores_weight_constant() {
        let (fiber, v) = setup();
        let mix = rasch_mixture(&fiber, &v, &[-2.0, 0.0, 2.0]).unwrap();
        let mut rng = stream(2, 0);
        let obs_x = mix.sample(&mut rng).unwrap().point().cloned().unwrap();
        let build = |offset: f64, rng: &mut crate::rng::StreamRng| {
            let w = rasch_log_weight(1.3, &obs_x, &mix, &v).unwrap();
            let obs = ObservedPoint::new(v.dot(&obs_x).unwrap(), LogWeight::unnormalized(w.log_w() + offset).unwrap()).unwrap();
            let draws: Vec<_> = (0..40)
                .filter_map(|_| mix.sample(rng).unwrap().point().cloned())
                .map(|y| {
                    let w = rasch_log_weight(1.3, &y, &mix, &v).unwrap();
                    WeightedDraw::new(v.dot(&y).unwrap(), LogWeight::unnormalized(w.log_w() + offset).unwrap()).unwrap()
                })
                .collect();
            p_tilde_star(&obs, &draws).unwrap()
        };
        let a = build(0.0, &mut stream(3, 0));
        let b = build(123.456, &mut stream(3, 0));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn model_sample_matches_probabilities() {
        let m = RaschModel::new(0.0, vec![0.5, 0.0], vec![0.0], 1.0).unwrap();
        let v = Covariates::new(2, 1, vec![1.0, -1.0]).unwrap();
        let mut rng = stream(4, 0);
        let n = 20_000;
        let mut ones = [0usize; 2];
        for _ in 0..n {
            let x = m.sample(&v, &mut rng).unwrap();
            ones[0] += usize::from(x.get(0, 0));
            ones[1] += usize::from(x.get(1, 0));
        }
        for (i, eta) in [(0, 1.5f64), (1, -1.0)] {
            let p = 1.0 / (1.0 + (-eta).exp());
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((ones[i] as f64 / n as f64 - p).abs() < 4.0 * se);
        }
    }
}
