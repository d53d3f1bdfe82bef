//! The four importance-sampling p-value estimators.
//!
//! With `X` the observation and `Y_1..Y_n` proposal draws:
//!
//! ```text
//! p_hat       = sum_i w(Y_i) 1{t(Y_i) >= t(X)} / n
//! p_tilde     = sum_i w(Y_i) 1{t(Y_i) >= t(X)} / sum_j w(Y_j)
//! p_hat_star  = (w(X) + sum_i w(Y_i) 1{t(Y_i) >= t(X)}) / (n + 1)
//! p_tilde_star= (w(X) + sum_i w(Y_i) 1{t(Y_i) >= t(X)}) / (w(X) + sum_j w(Y_j))
//! ```
//!
//! with `0/0 = 0`. The starred versions are valid p-values for every `n`.

use serde::{Deserialize, Serialize};

use super::sum::{scaled_mean, shifted_sums, Compensated};
use super::{ObservedPoint, WeightedDraw};
use crate::special::normal_quantile;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    PHat,
    PTilde,
    PHatStar,
    PTildeStar,
    WaldUpper,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::PHat => "p_hat",
            EstimatorKind::PTilde => "p_tilde",
            EstimatorKind::PHatStar => "p_hat_star",
            EstimatorKind::PTildeStar => "p_tilde_star",
            EstimatorKind::WaldUpper => "q_hat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "p_hat" | "phat" => EstimatorKind::PHat,
            "p_tilde" | "ptilde" => EstimatorKind::PTilde,
            "p_hat_star" | "phat_star" | "phat*" => EstimatorKind::PHatStar,
            "p_tilde_star" | "ptilde_star" | "ptilde*" => EstimatorKind::PTildeStar,
            "q_hat" | "qhat" | "wald" => EstimatorKind::WaldUpper,
            _ => return None,
        })
    }

    /// Whether the estimator needs exact (normalized) weights.
    pub fn needs_normalized(self) -> bool {
        matches!(self, EstimatorKind::PHat | EstimatorKind::PHatStar | EstimatorKind::WaldUpper)
    }
}

/// An estimate together with its kind, Monte Carlo size and optional standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValueReport<T> {
    pub estimate: T,
    pub kind: EstimatorKind,
    pub n: usize,
    pub std_error: Option<T>,
}

impl<T: Scalar> PValueReport<T> {
    /// `min(estimate, 1)`; `p_hat` and `p_hat_star` may exceed one.
    pub fn clamped(&self) -> T {
        self.estimate.min(T::one())
    }
}

fn require_normalized<T: Scalar>(draws: &[WeightedDraw<T>]) -> Result<()> {
    if draws.iter().all(|d| d.weight().is_normalized()) {
        Ok(())
    } else {
        Err(Error::NonNormalizedWeights)
    }
}

fn draw_items<T: Scalar>(
    draws: &[WeightedDraw<T>],
) -> impl Iterator<Item = (T, T)> + Clone + '_ {
    draws.iter().map(|d| (d.stat(), d.log_w()))
}

/// Unbiased estimator; refuses unnormalized weights. Returns 0 for `n = 0`.
pub fn p_hat<T: Scalar>(obs_stat: T, draws: &[WeightedDraw<T>]) -> Result<T> {
    require_normalized(draws)?;
    let s = shifted_sums(obs_stat, draw_items(draws));
    Ok(scaled_mean(s.shift, s.exceed, draws.len()))
}

/// Self-normalized estimator; insensitive to a common constant in the weights.
pub fn p_tilde<T: Scalar>(obs_stat: T, draws: &[WeightedDraw<T>]) -> T {
    let s = shifted_sums(obs_stat, draw_items(draws));
    if s.total > T::zero() {
        (s.exceed / s.total).min(T::one())
    } else {
        T::zero()
    }
}

/// Corrected unbiased estimator `(w(X) + sum w 1{t >= t(X)}) / (n + 1)`.
pub fn p_hat_star<T: Scalar>(obs: &ObservedPoint<T>, draws: &[WeightedDraw<T>]) -> Result<T> {
    if !obs.weight().is_normalized() {
        return Err(Error::NonNormalizedWeights);
    }
    require_normalized(draws)?;
    let items = std::iter::once((obs.stat(), obs.log_w())).chain(draw_items(draws));
    let s = shifted_sums(obs.stat(), items);
    Ok(scaled_mean(s.shift, s.exceed, draws.len() + 1))
}

/// Corrected self-normalized estimator; always in `[0, 1]` and `>= p_tilde`.
pub fn p_tilde_star<T: Scalar>(obs: &ObservedPoint<T>, draws: &[WeightedDraw<T>]) -> Result<T> {
    let flag = obs.weight().is_normalized();
    if draws.iter().any(|d| d.weight().is_normalized() != flag) {
        return Err(Error::MixedWeightScales);
    }
    let items = std::iter::once((obs.stat(), obs.log_w())).chain(draw_items(draws));
    let s = shifted_sums(obs.stat(), items);
    Ok(if s.total > T::zero() { (s.exceed / s.total).min(T::one()) } else { T::zero() })
}

/// Standard error of `p_hat`: sample standard deviation of the terms
/// `w(Y_i) 1{t(Y_i) >= t(X)}` divided by `sqrt(n)`. `None` for `n < 2`.
pub fn p_hat_std_error<T: Scalar>(obs_stat: T, draws: &[WeightedDraw<T>]) -> Result<Option<T>> {
    require_normalized(draws)?;
    let n = draws.len();
    if n < 2 {
        return Ok(None);
    }
    let terms: Vec<T> = draws
        .iter()
        .map(|d| if d.stat() >= obs_stat { d.weight().weight() } else { T::zero() })
        .collect();
    let nf = T::of_usize(n);
    let mean = terms.iter().copied().collect::<Compensated<T>>().value() / nf;
    let ss = terms
        .iter()
        .map(|&a| (a - mean) * (a - mean))
        .collect::<Compensated<T>>()
        .value();
    Ok(Some((ss / (nf - T::one())).sqrt() / nf.sqrt()))
}

/// Delta-method standard error of the ratio estimator `p_tilde`:
/// `sqrt(sum w_i^2 (1{t_i >= t(X)} - p_tilde)^2) / sum w_i`.
pub fn p_tilde_std_error<T: Scalar>(obs_stat: T, draws: &[WeightedDraw<T>]) -> Option<T> {
    if draws.len() < 2 {
        return None;
    }
    let shift = draws.iter().fold(T::neg_infinity(), |m, d| m.max(d.log_w()));
    if shift == T::neg_infinity() {
        return None;
    }
    let p = p_tilde(obs_stat, draws);
    let mut num = Compensated::new();
    let mut den = Compensated::new();
    for d in draws {
        let w = (d.log_w() - shift).exp();
        let ind = if d.stat() >= obs_stat { T::one() } else { T::zero() };
        num.add(w * w * (ind - p) * (ind - p));
        den.add(w);
    }
    Some(num.value().sqrt() / den.value())
}

/// Build a report for any estimator kind. `WaldUpper` uses `level` for its quantile.
pub fn estimate<T: Scalar>(
    kind: EstimatorKind,
    obs: &ObservedPoint<T>,
    draws: &[WeightedDraw<T>],
    level: f64,
) -> Result<PValueReport<T>> {
    let n = draws.len();
    let (estimate, std_error) = match kind {
        EstimatorKind::PHat => {
            (p_hat(obs.stat(), draws)?, p_hat_std_error(obs.stat(), draws)?)
        }
        EstimatorKind::PTilde => {
            (p_tilde(obs.stat(), draws), p_tilde_std_error(obs.stat(), draws))
        }
        EstimatorKind::PHatStar => (p_hat_star(obs, draws)?, None),
        EstimatorKind::PTildeStar => (p_tilde_star(obs, draws)?, None),
        EstimatorKind::WaldUpper => {
            let p = p_hat(obs.stat(), draws)?;
            let se = p_hat_std_error(obs.stat(), draws)?.unwrap_or_else(T::zero);
            (wald_upper_limit(p, se, level)?, Some(se))
        }
    };
    Ok(PValueReport { estimate, kind, n, std_error })
}

/// `min(1, 2 min(p_plus, p_minus))`.
pub fn two_sided_combine<T: Scalar>(p_plus: T, p_minus: T) -> Result<T> {
    let unit = |p: T| p >= T::zero() && p <= T::one();
    if !unit(p_plus) || !unit(p_minus) {
        return Err(Error::domain("two-sided combination needs p-values in [0, 1]"));
    }
    let two = T::one() + T::one();
    Ok((two * p_plus.min(p_minus)).min(T::one()))
}

/// Wald upper confidence limit `p_hat + z_level * se`.
pub fn wald_upper_limit<T: Scalar>(p_hat_value: T, se: T, level: f64) -> Result<T> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("level {level} not in (0, 1)")));
    }
    if se.is_nan() || se < T::zero() {
        return Err(Error::domain("standard error must be nonnegative"));
    }
    if se == T::zero() {
        return Ok(p_hat_value);
    }
    Ok(p_hat_value + T::of(normal_quantile(level)) * se)
}
