//! Paired spike trains on a millisecond grid, conditioned on their window counts,
//! and the lag-tilted proposal for the second train.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Draw, Proposal};
use crate::estimators::{LogWeight, StatisticKind};
use crate::special::{log_sum_exp, LnFactorials};
use crate::{Error, Result};

/// Event-time configurations of two neurons with fixed counts per length-`delta`
/// window. Times are integers in `[0, b)`; window `a` is `[a*delta, (a+1)*delta)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinnedPairFiber {
    delta: usize,
    b: usize,
    counts_i: Vec<usize>,
    counts_j: Vec<usize>,
}

impl BinnedPairFiber {
    pub fn new(delta: usize, b: usize, counts_i: Vec<usize>, counts_j: Vec<usize>) -> Result<Self> {
        if delta == 0 || b == 0 || b % delta != 0 {
            return Err(Error::domain(format!("recording length {b} is not a positive multiple of {delta}")));
        }
        let windows = b / delta;
        if counts_i.len() != windows || counts_j.len() != windows {
            return Err(Error::shape(format!(
                "expected {windows} window counts, got {} and {}",
                counts_i.len(),
                counts_j.len()
            )));
        }
        if let Some(c) = counts_i.iter().chain(&counts_j).find(|&&c| c > delta) {
            return Err(Error::domain(format!("window count {c} exceeds window length {delta}")));
        }
        Ok(BinnedPairFiber { delta, b, counts_i, counts_j })
    }

    /// The fiber through an observed pair of strictly increasing time sequences.
    pub fn from_times(delta: usize, b: usize, ti: &[i64], tj: &[i64]) -> Result<Self> {
        if delta == 0 || b == 0 || b % delta != 0 {
            return Err(Error::domain(format!("recording length {b} is not a positive multiple of {delta}")));
        }
        let windows = b / delta;
        let count = |t: &[i64]| -> Result<Vec<usize>> {
            let mut c = vec![0; windows];
            for (k, &x) in t.iter().enumerate() {
                if x < 0 || x as usize >= b {
                    return Err(Error::domain(format!("event time {x} outside [0, {b})")));
                }
                if k > 0 && t[k - 1] >= x {
                    return Err(Error::domain("event times must be strictly increasing"));
                }
                c[x as usize / delta] += 1;
            }
            Ok(c)
        };
        Self::new(delta, b, count(ti)?, count(tj)?)
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn windows(&self) -> usize {
        self.counts_i.len()
    }

    pub fn counts_i(&self) -> &[usize] {
        &self.counts_i
    }

    pub fn counts_j(&self) -> &[usize] {
        &self.counts_j
    }

    fn ln_size(&self, counts: &[usize], lnf: &LnFactorials) -> f64 {
        counts.iter().map(|&c| lnf.ln_choose(self.delta as i64, c as i64)).sum()
    }

    /// `ln |Omega_i|`
    pub fn ln_size_i(&self) -> f64 {
        self.ln_size(&self.counts_i, &LnFactorials::new(self.delta))
    }

    /// `ln |Omega_j|`
    pub fn ln_size_j(&self) -> f64 {
        self.ln_size(&self.counts_j, &LnFactorials::new(self.delta))
    }

    fn matches(&self, t: &[i64], counts: &[usize]) -> bool {
        let mut c = vec![0; counts.len()];
        for (k, &x) in t.iter().enumerate() {
            if x < 0 || x as usize >= self.b || (k > 0 && t[k - 1] >= x) {
                return false;
            }
            c[x as usize / self.delta] += 1;
        }
        c == counts
    }

    pub fn contains_i(&self, u: &[i64]) -> bool {
        self.matches(u, &self.counts_i)
    }

    pub fn contains_j(&self, s: &[i64]) -> bool {
        self.matches(s, &self.counts_j)
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, counts: &[usize], rng: &mut R) -> Vec<i64> {
        let mut t = Vec::with_capacity(counts.iter().sum());
        let mut slots = Vec::with_capacity(self.delta);
        for (a, &c) in counts.iter().enumerate() {
            slots.clear();
            slots.extend(index::sample(rng, self.delta, c).into_iter());
            slots.sort_unstable();
            t.extend(slots.iter().map(|&k| (a * self.delta + k) as i64));
        }
        t
    }

    /// Uniform draw from `Omega_i`.
    pub fn sample_i<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        self.sample_uniform(&self.counts_i, rng)
    }

    /// Uniform draw from `Omega_j`.
    pub fn sample_j<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        self.sample_uniform(&self.counts_j, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiltSign {
    Plus,
    Minus,
}

impl TiltSign {
    pub fn statistic(self) -> StatisticKind {
        match self {
            TiltSign::Plus => StatisticKind::LagCountPlus,
            TiltSign::Minus => StatisticKind::LagCountMinus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedPointProcessConfig {
    lags: Vec<i64>,
    thetas: Vec<f64>,
    sign: TiltSign,
}

impl TiltedPointProcessConfig {
    pub fn new(lags: Vec<i64>, thetas: Vec<f64>, sign: TiltSign) -> Result<Self> {
        if lags.is_empty() || lags.len() != thetas.len() {
            return Err(Error::shape(format!("{} lags but {} tilts", lags.len(), thetas.len())));
        }
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("tilts must be finite"));
        }
        Ok(TiltedPointProcessConfig { lags, thetas, sign })
    }

    /// Lags 0..=4 with tilts (0, .5, .5, .5, .5).
    pub fn plus() -> Self {
        TiltedPointProcessConfig { lags: (0..=4).collect(), thetas: vec![0.0, 0.5, 0.5, 0.5, 0.5], sign: TiltSign::Plus }
    }

    /// Lags 0..=4 with tilts (0, -.5, -.5, -.5, -.5).
    pub fn minus() -> Self {
        TiltedPointProcessConfig {
            lags: (0..=4).collect(),
            thetas: vec![0.0, -0.5, -0.5, -0.5, -0.5],
            sign: TiltSign::Minus,
        }
    }

    pub fn for_sign(sign: TiltSign) -> Self {
        match sign {
            TiltSign::Plus => Self::plus(),
            TiltSign::Minus => Self::minus(),
        }
    }

    pub fn lags(&self) -> &[i64] {
        &self.lags
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn sign(&self) -> TiltSign {
        self.sign
    }
}

/// `Q(u, s) = |Omega_i|^{-1} * mean_d rho(s, u, d, theta_d)`, where `rho` tilts `s`
/// towards (or away from) the shifted times `u + d`, window by window.
#[derive(Debug, Clone)]
pub struct TiltedPointProcess<'a> {
    fiber: &'a BinnedPairFiber,
    cfg: TiltedPointProcessConfig,
    /// per component: `ln Z(R, c)` at `R * (delta+1) + c`
    log_z: Vec<Vec<f64>>,
    /// per component: cumulative law of the match count, `(R, c, r)` flattened
    cdf: Vec<Vec<f64>>,
    ln_size_i: f64,
    ln_size_j: f64,
}

impl<'a> TiltedPointProcess<'a> {
    pub fn new(fiber: &'a BinnedPairFiber, cfg: TiltedPointProcessConfig) -> Self {
        let delta = fiber.delta;
        let lnf = LnFactorials::new(delta);
        let side = delta + 1;
        let mut log_z = Vec::with_capacity(cfg.thetas.len());
        let mut cdf = Vec::with_capacity(cfg.thetas.len());
        for &theta in &cfg.thetas {
            let mut z = vec![f64::NEG_INFINITY; side * side];
            let mut table = vec![1.0; side * side * side];
            for big_r in 0..=delta {
                for c in 0..=delta {
                    let terms: Vec<f64> = (0..=c)
                        .map(|r| match_log_mass(&lnf, delta, big_r, c, r, theta))
                        .collect();
                    let lz = log_sum_exp(terms.iter().copied());
                    z[big_r * side + c] = lz;
                    let base = (big_r * side + c) * side;
                    let mut acc = 0.0;
                    for (r, t) in terms.iter().enumerate() {
                        acc += (t - lz).exp();
                        table[base + r] = acc;
                    }
                }
            }
            log_z.push(z);
            cdf.push(table);
        }
        TiltedPointProcess {
            fiber,
            ln_size_i: fiber.ln_size(&fiber.counts_i, &lnf),
            ln_size_j: fiber.ln_size(&fiber.counts_j, &lnf),
            cfg,
            log_z,
            cdf,
        }
    }

    pub fn fiber(&self) -> &BinnedPairFiber {
        self.fiber
    }

    pub fn config(&self) -> &TiltedPointProcessConfig {
        &self.cfg
    }

    pub fn sample_u<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        self.fiber.sample_i(rng)
    }

    /// Draw `s` from `rho(., u, d_l, theta_l)` for component `l`.
    pub fn sample_s_component<R: Rng + ?Sized>(&self, u: &[i64], l: usize, rng: &mut R) -> Vec<i64> {
        let delta = self.fiber.delta;
        let side = delta + 1;
        let d = self.cfg.lags[l];
        let mut s = Vec::with_capacity(self.fiber.counts_j.iter().sum());
        let mut is_match = vec![false; delta];
        let mut hits = Vec::with_capacity(delta);
        let mut misses = Vec::with_capacity(delta);
        let mut chosen = Vec::with_capacity(delta);
        let mut next = 0;
        for (a, &c) in self.fiber.counts_j.iter().enumerate() {
            let lo = (a * delta) as i64;
            let hi = lo + delta as i64;
            is_match.fill(false);
            while next < u.len() && u[next] + d < lo {
                next += 1;
            }
            let mut k = next;
            while k < u.len() && u[k] + d < hi {
                is_match[(u[k] + d - lo) as usize] = true;
                k += 1;
            }
            if c == 0 {
                continue;
            }
            hits.clear();
            misses.clear();
            for (slot, &m) in is_match.iter().enumerate() {
                if m { hits.push(slot) } else { misses.push(slot) }
            }
            let big_r = hits.len();
            let base = (big_r * side + c) * side;
            let v: f64 = rng.random();
            let table = &self.cdf[l][base..base + c + 1];
            let r = table.iter().position(|&p| v < p).unwrap_or_else(|| {
                // rounding left the top below v: take the largest feasible count
                (0..=c).rev().find(|&r| r <= big_r && c - r <= delta - big_r).unwrap_or(0)
            });
            chosen.clear();
            chosen.extend(index::sample(rng, big_r, r).into_iter().map(|x| hits[x]));
            chosen.extend(index::sample(rng, delta - big_r, c - r).into_iter().map(|x| misses[x]));
            chosen.sort_unstable();
            s.extend(chosen.iter().map(|&slot| lo + slot as i64));
        }
        s
    }

    /// Draw `s` from the lag mixture given `u`.
    pub fn sample_s<R: Rng + ?Sized>(&self, u: &[i64], rng: &mut R) -> Vec<i64> {
        let l = rng.random_range(0..self.cfg.lags.len());
        self.sample_s_component(u, l, rng)
    }

    /// `ln rho(s, u, d_l, theta_l)`; both sequences assumed inside their fibers.
    pub fn log_rho(&self, s: &[i64], u: &[i64], l: usize) -> f64 {
        let delta = self.fiber.delta as i64;
        let side = self.fiber.delta + 1;
        let d = self.cfg.lags[l];
        let theta = self.cfg.thetas[l];
        let z = &self.log_z[l];
        let mut log_norm = 0.0;
        let mut k = 0;
        for (a, &c) in self.fiber.counts_j.iter().enumerate() {
            let lo = a as i64 * delta;
            while k < u.len() && u[k] + d < lo {
                k += 1;
            }
            let mut big_r = 0;
            while k < u.len() && u[k] + d < lo + delta {
                big_r += 1;
                k += 1;
            }
            log_norm += z[big_r * side + c];
        }
        let matches = crate::estimators::lag_counts(u, s, [d])[0] as f64;
        theta * matches - log_norm
    }

    /// `ln mean_l rho(s, u, d_l, theta_l)`.
    pub fn log_prob_s(&self, s: &[i64], u: &[i64]) -> Result<f64> {
        if !self.fiber.contains_i(u) {
            return Err(Error::NotInFiber("u does not match the window counts of neuron i".into()));
        }
        if !self.fiber.contains_j(s) {
            return Err(Error::NotInFiber("s does not match the window counts of neuron j".into()));
        }
        let len = self.cfg.lags.len();
        let lse = log_sum_exp((0..len).map(|l| self.log_rho(s, u, l)));
        Ok(lse - (len as f64).ln())
    }

    /// Normalized `w(u, s) = 1 / (|Omega_j| * mean_l rho)`.
    pub fn log_weight(&self, u: &[i64], s: &[i64]) -> Result<LogWeight<f64>> {
        LogWeight::normalized(-self.ln_size_j - self.log_prob_s(s, u)?)
    }

    pub fn ln_size_i(&self) -> f64 {
        self.ln_size_i
    }

    pub fn ln_size_j(&self) -> f64 {
        self.ln_size_j
    }

    /// Uniform target probability of any pair in the fiber.
    pub fn target_log_prob(&self) -> f64 {
        -self.ln_size_i - self.ln_size_j
    }
}

fn match_log_mass(lnf: &LnFactorials, delta: usize, big_r: usize, c: usize, r: usize, theta: f64) -> f64 {
    let (delta, big_r, c, r) = (delta as i64, big_r as i64, c as i64, r as i64);
    lnf.ln_choose(big_r, r) + lnf.ln_choose(delta - big_r, c - r) + theta * r as f64
}

impl Proposal for TiltedPointProcess<'_> {
    /// `(u, s)`: times of neuron i, then of neuron j.
    type Point = (Vec<i64>, Vec<i64>);

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Self::Point>> {
        let u = self.sample_u(rng);
        let s = self.sample_s(&u, rng);
        let log_q = -self.ln_size_i + self.log_prob_s(&s, &u)?;
        Ok(Draw::Point { point: (u, s), log_q })
    }

    fn log_prob(&self, point: &Self::Point) -> Result<f64> {
        Ok(-self.ln_size_i + self.log_prob_s(&point.1, &point.0)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn all_in_window_sets(delta: usize, counts: &[usize]) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for (a, &c) in counts.iter().enumerate() {
            let mut next = Vec::new();
            for prefix in &out {
                for mask in 0u32..(1 << delta) {
                    if mask.count_ones() as usize == c {
                        let mut t = prefix.clone();
                        t.extend((0..delta).filter(|&k| mask >> k & 1 == 1).map(|k| (a * delta + k) as i64));
                        next.push(t);
                    }
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn untilted_is_uniform() {
        let f = BinnedPairFiber::new(4, 12, vec![2, 1, 3], vec![1, 2, 2]).unwrap();
        let cfg = TiltedPointProcessConfig::new(vec![0, 1, 2], vec![0.0; 3], TiltSign::Plus).unwrap();
        let q = TiltedPointProcess::new(&f, cfg);
        let mut rng = stream(1, 0);
        let lnf = LnFactorials::new(4);
        let expect = -(lnf.ln_choose(4, 1) + 2.0 * lnf.ln_choose(4, 2));
        for _ in 0..50 {
            let u = q.sample_u(&mut rng);
            let s = q.sample_s(&u, &mut rng);
            assert!((q.log_prob_s(&s, &u).unwrap() - expect).abs() < 1e-12);
            assert!(q.log_weight(&u, &s).unwrap().log_w().abs() < 1e-12);
        }
    }

    #[test]
    fn single_window_match_probability() {
        let f = BinnedPairFiber::new(2, 2, vec![1], vec![1]).unwrap();
        for theta in [-0.5, 0.0, 0.7] {
            let cfg = TiltedPointProcessConfig::new(vec![0], vec![theta], TiltSign::Plus).unwrap();
            let q = TiltedPointProcess::new(&f, cfg);
            let p = q.log_rho(&[1], &[1], 0).exp();
            let e = theta.exp();
            assert!((p - e / (e + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn rho_normalizes_on_enumerable_fiber() {
        let f = BinnedPairFiber::new(3, 6, vec![1, 2], vec![2, 1]).unwrap();
        let omega_i = all_in_window_sets(3, f.counts_i());
        let omega_j = all_in_window_sets(3, f.counts_j());
        for theta in [-0.5, 0.0, 0.5] {
            let cfg = TiltedPointProcessConfig::new(vec![0, 1, 2, 3, 4], vec![theta; 5], TiltSign::Plus).unwrap();
            let q = TiltedPointProcess::new(&f, cfg);
            for u in &omega_i {
                for l in 0..5 {
                    let total: f64 = omega_j.iter().map(|s| q.log_rho(s, u, l).exp()).sum();
                    assert!((total - 1.0).abs() < 1e-10, "theta {theta} lag {l}: {total}");
                }
            }
        }
    }

    #[test]
    fn sampled_s_lies_in_fiber() {
        let f = BinnedPairFiber::new(5, 40, vec![1, 0, 3, 5, 2, 1, 0, 4], vec![2, 1, 0, 4, 5, 3, 1, 1]).unwrap();
        let q = TiltedPointProcess::new(&f, TiltedPointProcessConfig::plus());
        let mut rng = stream(2, 0);
        for _ in 0..200 {
            match q.sample(&mut rng).unwrap() {
                Draw::Point { point: (u, s), log_q } => {
                    assert!(f.contains_i(&u) && f.contains_j(&s));
                    assert!((log_q - q.log_prob(&(u, s)).unwrap()).abs() < 1e-12);
                }
                Draw::DeadEnd => unreachable!(),
            }
        }
    }

    #[test]
    fn counts_validated() {
        assert!(BinnedPairFiber::new(2, 4, vec![3, 0], vec![0, 0]).is_err());
        assert!(BinnedPairFiber::new(3, 4, vec![0], vec![0]).is_err());
        let f = BinnedPairFiber::from_times(10, 30, &[1, 5, 25], &[12]).unwrap();
        assert_eq!(f.counts_i(), &[2, 0, 1]);
        assert_eq!(f.counts_j(), &[0, 1, 0]);
        assert!(BinnedPairFiber::from_times(10, 30, &[5, 1], &[]).is_err());
    }
}
