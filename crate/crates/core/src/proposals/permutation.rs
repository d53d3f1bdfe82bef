//! Label permutations with fixed values: the permutation-test fiber and its
//! exponentially tilted proposal.

use rand::seq::index;
use rand::Rng;

use super::{Draw, Proposal};
use crate::special::{log_sum_exp, LnFactorials};
use crate::{Error, Result};

/// `m` fixed values of which `r` carry label one. Labelings are `Vec<bool>` aligned
/// with the values in their original order.
#[derive(Debug, Clone)]
pub struct PermutationFiber {
    values: Vec<f64>,
    r: usize,
    /// indices that sort the values non-increasingly (ties by original index)
    order: Vec<usize>,
    /// position of each original index in `order`
    rank: Vec<usize>,
    lnf: LnFactorials,
}

impl PermutationFiber {
    pub fn new(values: Vec<f64>, r: usize) -> Result<Self> {
        let m = values.len();
        if m == 0 {
            return Err(Error::domain("permutation fiber needs at least one value"));
        }
        if r > m {
            return Err(Error::domain(format!("r = {r} exceeds m = {m}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("permutation values must be finite".into()));
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let mut rank = vec![0; m];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos;
        }
        Ok(PermutationFiber { values, r, order, rank, lnf: LnFactorials::new(m) })
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Original indices sorted by non-increasing value.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `ln C(m, r)`: the number of distinct labelings.
    pub fn ln_size(&self) -> f64 {
        self.lnf.ln_choose(self.m() as i64, self.r as i64)
    }

    /// Log-probability of any labeling under the uniform (null) law.
    pub fn target_log_prob(&self) -> f64 {
        -self.ln_size()
    }

    pub fn check_labeling(&self, labels: &[bool]) -> Result<()> {
        if labels.len() != self.m() {
            return Err(Error::shape(format!("{} labels for {} values", labels.len(), self.m())));
        }
        let ones = labels.iter().filter(|&&l| l).count();
        if ones != self.r {
            return Err(Error::domain(format!("labeling has {ones} ones, expected {}", self.r)));
        }
        Ok(())
    }

    /// Number of one-labels sitting on the `r` largest values.
    pub fn overlap(&self, labels: &[bool]) -> usize {
        labels.iter().zip(&self.rank).filter(|(&l, &pos)| l && pos < self.r).count()
    }

    /// Uniform random labeling (direct sampling from the null).
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let mut labels = vec![false; self.m()];
        for i in index::sample(rng, self.m(), self.r) {
            labels[i] = true;
        }
        labels
    }

    /// Median difference evaluated by a scan of the sorted values.
    pub fn median_diff(&self, labels: &[bool]) -> f64 {
        let n1 = self.r;
        let n0 = self.m() - self.r;
        let (mut c1, mut c0) = (0, 0);
        let (mut s1, mut s0) = (0.0, 0.0);
        for &i in &self.order {
            let v = self.values[i];
            if labels[i] {
                if c1 == (n1 - 1) / 2 || c1 == n1 / 2 {
                    s1 += v;
                }
                c1 += 1;
            } else {
                if c0 == (n0 - 1) / 2 || c0 == n0 / 2 {
                    s0 += v;
                }
                c0 += 1;
            }
        }
        let med = |s: f64, n: usize| if n % 2 == 1 { s } else { 0.5 * s };
        med(s1, n1) - med(s0, n0)
    }
}

/// `Prob(labeling) ∝ exp(theta * k)`, where `k` counts one-labels on the `r` largest
/// values. `theta = 0` is the uniform law; `theta > 0` pairs label one with large values.
#[derive(Debug, Clone)]
pub struct TiltedPermutation<'a> {
    fiber: &'a PermutationFiber,
    theta: f64,
    /// `ln [C(r,k) C(m-r, r-k) e^{theta k}]` for `k = 0..=r`
    log_mass: Vec<f64>,
    log_norm: f64,
    cdf: Vec<f64>,
}

impl<'a> TiltedPermutation<'a> {
    pub fn new(fiber: &'a PermutationFiber, theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::domain("tilt must be finite"));
        }
        let (m, r) = (fiber.m() as i64, fiber.r as i64);
        let log_mass: Vec<f64> = (0..=r)
            .map(|k| fiber.lnf.ln_choose(r, k) + fiber.lnf.ln_choose(m - r, r - k) + theta * k as f64)
            .collect();
        let log_norm = log_sum_exp(log_mass.iter().copied());
        let mut acc = 0.0;
        let cdf = log_mass
            .iter()
            .map(|&l| {
                acc += (l - log_norm).exp();
                acc
            })
            .collect();
        Ok(TiltedPermutation { fiber, theta, log_mass, log_norm, cdf })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn fiber(&self) -> &PermutationFiber {
        self.fiber
    }

    /// Distribution of the overlap count `k`.
    pub fn overlap_log_probs(&self) -> Vec<f64> {
        self.log_mass.iter().map(|l| l - self.log_norm).collect()
    }

    pub fn sample_labeling<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<bool>, f64) {
        let (m, r) = (self.fiber.m(), self.fiber.r);
        let u: f64 = rng.random();
        let k = self.cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
            // rounding left the last cdf value below u; take the last supported k
            self.log_mass.iter().rposition(|l| l.is_finite()).unwrap_or(0)
        });
        let mut labels = vec![false; m];
        let order = &self.fiber.order;
        for pos in index::sample(rng, r, k) {
            labels[order[pos]] = true;
        }
        for pos in index::sample(rng, m - r, r - k) {
            labels[order[r + pos]] = true;
        }
        (labels, self.theta * k as f64 - self.log_norm)
    }

    pub fn log_prob_of(&self, labels: &[bool]) -> Result<f64> {
        self.fiber.check_labeling(labels)?;
        Ok(self.theta * self.fiber.overlap(labels) as f64 - self.log_norm)
    }
}

impl Proposal for TiltedPermutation<'_> {
    type Point = Vec<bool>;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Vec<bool>>> {
        let (point, log_q) = self.sample_labeling(rng);
        Ok(Draw::Point { point, log_q })
    }

    fn log_prob(&self, point: &Vec<bool>) -> Result<f64> {
        self.log_prob_of(point)
    }
}
