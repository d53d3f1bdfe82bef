use super::sum::Compensated;
use super::{LogWeight, ObservedPoint};
use crate::Scalar;

/// Running p-value sums for one observation, fed one draw at a time.
///
/// Weights are kept relative to the running maximum log-weight, so extreme
/// unnormalized weights (e.g. `-log q` of a sequential sampler) never overflow.
#[derive(Debug, Clone)]
pub struct RunningTail<T> {
    obs_stat: T,
    obs_log_w: T,
    shift: T,
    exceed: Compensated<T>,
    total: Compensated<T>,
    n: usize,
}

impl<T: Scalar> RunningTail<T> {
    pub fn new(obs: &ObservedPoint<T>) -> Self {
        RunningTail {
            obs_stat: obs.stat(),
            obs_log_w: obs.log_w(),
            shift: T::neg_infinity(),
            exceed: Compensated::new(),
            total: Compensated::new(),
            n: 0,
        }
    }

    pub fn push(&mut self, stat: T, weight: LogWeight<T>) {
        self.n += 1;
        let lw = weight.log_w();
        if lw == T::neg_infinity() {
            return;
        }
        if lw > self.shift {
            if self.shift != T::neg_infinity() {
                let f = (self.shift - lw).exp();
                self.exceed.scale(f);
                self.total.scale(f);
            }
            self.shift = lw;
        }
        let w = (lw - self.shift).exp();
        self.total.add(w);
        if stat >= self.obs_stat {
            self.exceed.add(w);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_tilde(&self) -> T {
        let total = self.total.value();
        if total > T::zero() {
            (self.exceed.value() / total).min(T::one())
        } else {
            T::zero()
        }
    }

    pub fn p_tilde_star(&self) -> T {
        if self.obs_log_w == T::neg_infinity() {
            return self.p_tilde();
        }
        let shift = self.shift.max(self.obs_log_w);
        let rescale = |v: T| {
            if self.shift == T::neg_infinity() {
                T::zero()
            } else {
                v * (self.shift - shift).exp()
            }
        };
        let wx = (self.obs_log_w - shift).exp();
        let num = rescale(self.exceed.value()) + wx;
        let den = rescale(self.total.value()) + wx;
        (num / den).min(T::one())
    }

    /// Unbiased `p_hat`; meaningful only for normalized weights.
    pub fn p_hat(&self) -> T {
        if self.n == 0 || self.shift == T::neg_infinity() {
            return T::zero();
        }
        super::sum::scaled_mean(self.shift, self.exceed.value(), self.n)
    }

    pub fn p_hat_star(&self) -> T {
        let shift = self.shift.max(self.obs_log_w);
        if shift == T::neg_infinity() {
            return T::zero();
        }
        let mut num = (self.obs_log_w - shift).exp();
        if self.shift != T::neg_infinity() {
            num = num + self.exceed.value() * (self.shift - shift).exp();
        }
        super::sum::scaled_mean(shift, num, self.n + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{p_hat, p_hat_star, p_tilde, p_tilde_star, WeightedDraw};

    #[test]
    fn streaming_matches_batch() {
        let lws = [-3.0, 2.0, 0.5, f64::NEG_INFINITY, 7.0, -1.0, 7.5];
        let stats = [1.0, 4.0, 2.0, 9.0, 0.0, 3.0, 2.5];
        let obs = ObservedPoint::new(2.0, LogWeight::normalized(1.25).unwrap()).unwrap();
        let draws: Vec<_> = stats
            .iter()
            .zip(lws)
            .map(|(&s, lw)| WeightedDraw::new(s, LogWeight::normalized(lw).unwrap()).unwrap())
            .collect();
        let mut tail = RunningTail::new(&obs);
        for (k, d) in draws.iter().enumerate() {
            tail.push(d.stat(), d.weight());
            let part = &draws[..=k];
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300);
            assert!(close(tail.p_tilde(), p_tilde(2.0, part)));
            assert!(close(tail.p_tilde_star(), p_tilde_star(&obs, part).unwrap()));
            assert!(close(tail.p_hat(), p_hat(2.0, part).unwrap()));
            assert!(close(tail.p_hat_star(), p_hat_star(&obs, part).unwrap()));
        }
    }
}
