use super::sum::Compensated;
use super::WeightedDraw;
use crate::{Error, Result, Scalar};

/// Squared coefficient of variation of the weights: sample variance / mean^2.
///
/// Computed on max-shifted weights, so it is invariant to a common constant.
pub fn weight_cv_squared<T: Scalar>(draws: &[WeightedDraw<T>]) -> Result<T> {
    let n = draws.len();
    if n < 2 {
        return Err(Error::domain("weight diagnostics need at least two draws"));
    }
    let shift = draws.iter().fold(T::neg_infinity(), |m, d| m.max(d.log_w()));
    if shift == T::neg_infinity() {
        return Err(Error::DegenerateWeights);
    }
    let w: Vec<T> = draws.iter().map(|d| (d.log_w() - shift).exp()).collect();
    let nf = T::of_usize(n);
    let mean = w.iter().copied().collect::<Compensated<T>>().value() / nf;
    let var = w
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .collect::<Compensated<T>>()
        .value()
        / (nf - T::one());
    Ok(var / (mean * mean))
}

/// Effective sample size heuristic `n / (1 + cv^2)`.
pub fn ess_diagnostic<T: Scalar>(draws: &[WeightedDraw<T>]) -> Result<T> {
    let cv2 = weight_cv_squared(draws)?;
    Ok(T::of_usize(draws.len()) / (T::one() + cv2))
}

/// The same heuristic from summary numbers.
pub fn ess_from_cv_squared(n: f64, cv_squared: f64) -> f64 {
    n / (1.0 + cv_squared)
}
