use crate::Scalar;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Compensated<T> {
    pub fn new() -> Self {
        Compensated { sum: T::zero(), comp: T::zero() }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn scale(&mut self, factor: T) {
        self.sum = self.sum * factor;
        self.comp = self.comp * factor;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Scalar> FromIterator<T> for Compensated<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Compensated::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Weight sums in max-shifted log space: the true sums are `exp(shift) * value`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ShiftedSums<T> {
    pub shift: T,
    pub exceed: T,
    pub total: T,
}

/// Sum `w_i 1{t_i >= threshold}` and `w_i` over `(stat, log_w)` pairs.
pub(crate) fn shifted_sums<T, I>(threshold: T, items: I) -> ShiftedSums<T>
where
    T: Scalar,
    I: Iterator<Item = (T, T)> + Clone,
{
    let shift = items.clone().fold(T::neg_infinity(), |m, (_, lw)| m.max(lw));
    if shift == T::neg_infinity() {
        return ShiftedSums { shift: T::zero(), exceed: T::zero(), total: T::zero() };
    }
    let mut exceed = Compensated::new();
    let mut total = Compensated::new();
    for (stat, lw) in items {
        let w = (lw - shift).exp();
        total.add(w);
        if stat >= threshold {
            exceed.add(w);
        }
    }
    ShiftedSums { shift, exceed: exceed.value(), total: total.value() }
}

/// `exp(shift) * value / count` without intermediate overflow.
pub(crate) fn scaled_mean<T: Scalar>(shift: T, value: T, count: usize) -> T {
    if value <= T::zero() || count == 0 {
        return T::zero();
    }
    (shift + value.ln() - T::of_usize(count).ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        let acc: Compensated<f64> = xs.iter().copied().collect();
        assert_eq!(acc.value(), 2.0);
        assert_eq!(xs.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn shifted_sums_survive_huge_log_weights() {
        let items = [(1.0, 1000.0), (0.0, 1000.5)];
        let s = shifted_sums(0.5, items.iter().copied());
        let r = (-0.5f64).exp();
        assert!((s.exceed / s.total - r / (1.0 + r)).abs() < 1e-15);
        assert_eq!(s.shift, 1000.5);
    }
}
