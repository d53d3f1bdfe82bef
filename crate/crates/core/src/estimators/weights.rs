use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Natural log of an importance weight `w = dP/dQ`.
///
/// `normalized` is true when `w` is an exact version of `dP/dQ` and false when it is
/// known only up to a positive constant shared by every point of the same run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogWeight<T> {
    log_w: T,
    normalized: bool,
}

impl<T: Scalar> LogWeight<T> {
    pub fn new(log_w: T, normalized: bool) -> Result<Self> {
        if log_w.is_nan() {
            return Err(Error::InvalidValue("log weight is NaN".into()));
        }
        if log_w == T::infinity() {
            return Err(Error::InvalidValue("log weight is +inf".into()));
        }
        Ok(LogWeight { log_w, normalized })
    }

    pub fn normalized(log_w: T) -> Result<Self> {
        Self::new(log_w, true)
    }

    pub fn unnormalized(log_w: T) -> Result<Self> {
        Self::new(log_w, false)
    }

    /// `w = 1`, as in direct sampling.
    pub fn unit() -> Self {
        LogWeight { log_w: T::zero(), normalized: true }
    }

    /// `w = 0`, e.g. a dead-end draw of a sequential sampler.
    pub fn zero(normalized: bool) -> Self {
        LogWeight { log_w: T::neg_infinity(), normalized }
    }

    pub fn log_w(&self) -> T {
        self.log_w
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn weight(&self) -> T {
        self.log_w.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.log_w == T::neg_infinity()
    }

    /// Same weight with `delta` added in log space (an unknown-constant change).
    pub fn shifted(&self, delta: T) -> Result<Self> {
        Self::new(self.log_w + delta, self.normalized)
    }
}

fn check_stat<T: Scalar>(stat: T) -> Result<T> {
    if stat.is_nan() {
        Err(Error::InvalidValue("test statistic is NaN".into()))
    } else {
        Ok(stat)
    }
}

/// One proposal draw: its test statistic and log importance weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedDraw<T> {
    stat: T,
    weight: LogWeight<T>,
}

impl<T: Scalar> WeightedDraw<T> {
    pub fn new(stat: T, weight: LogWeight<T>) -> Result<Self> {
        Ok(WeightedDraw { stat: check_stat(stat)?, weight })
    }

    /// A direct-sampling draw (`w = 1`).
    pub fn direct(stat: T) -> Result<Self> {
        Self::new(stat, LogWeight::unit())
    }

    pub fn stat(&self) -> T {
        self.stat
    }

    pub fn weight(&self) -> LogWeight<T> {
        self.weight
    }

    pub fn log_w(&self) -> T {
        self.weight.log_w
    }
}

/// The real observation: `t(X)` and `w(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedPoint<T> {
    stat: T,
    weight: LogWeight<T>,
}

impl<T: Scalar> ObservedPoint<T> {
    pub fn new(stat: T, weight: LogWeight<T>) -> Result<Self> {
        Ok(ObservedPoint { stat: check_stat(stat)?, weight })
    }

    pub fn stat(&self) -> T {
        self.stat
    }

    pub fn weight(&self) -> LogWeight<T> {
        self.weight
    }

    pub fn log_w(&self) -> T {
        self.weight.log_w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_positive_infinity() {
        assert!(LogWeight::<f64>::normalized(f64::NAN).is_err());
        assert!(LogWeight::<f64>::normalized(f64::INFINITY).is_err());
        assert!(LogWeight::<f64>::normalized(f64::NEG_INFINITY).is_ok());
        assert!(WeightedDraw::<f64>::direct(f64::NAN).is_err());
        assert!(WeightedDraw::<f64>::direct(f64::INFINITY).is_ok());
        assert!(ObservedPoint::new(f32::NAN, LogWeight::unit()).is_err());
    }

    #[test]
    fn zero_weight_is_exactly_zero() {
        let w = LogWeight::<f64>::zero(true);
        assert_eq!(w.weight(), 0.0);
        assert!(w.is_zero());
    }
}
