//! Ground truth for testing the estimators: enumeration, the weighted-rank
//! inequality behind every validity proof, analytic Gaussian tails and a
//! Monte Carlo validity tester over the joint law of data and sample.

use std::collections::HashMap;
use std::ops::Add;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::estimators::{evaluate_statistic, StatData, StatisticKind};
use crate::proposals::PermutationFiber;
use crate::rng::{replicate, StreamRng};
use crate::special::{chi_square_sf, normal_sf};
use crate::table::{BinaryMatrix, Covariates, MarginFiber};
use crate::{Error, Result};

/// Largest `m` for exhaustive permutation p-values.
pub const MAX_PERMUTATION_M: usize = 10;
/// Default bound on enumerated fiber sizes.
pub const MAX_FIBER_SIZE: u128 = 1_000_000;

/// `lhs = sum_k w_k 1{ sum_i w_i 1{t_i >= t_k} <= alpha }`; the inequality says
/// `lhs <= alpha`. Exact for exact weight types.
pub fn lemma1_check<W>(t: &[f64], w: &[W], alpha: W) -> Result<(W, bool)>
where
    W: Zero + Add<Output = W> + PartialOrd + Clone,
{
    if t.len() != w.len() {
        return Err(Error::shape(format!("{} statistics, {} weights", t.len(), w.len())));
    }
    if t.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidValue("NaN statistic".into()));
    }
    if w.iter().any(|x| *x < W::zero()) || alpha < W::zero() {
        return Err(Error::domain("weights and alpha must be nonnegative"));
    }
    let mut lhs = W::zero();
    for (k, tk) in t.iter().enumerate() {
        let mut inner = W::zero();
        for (ti, wi) in t.iter().zip(w) {
            if ti >= tk {
                inner = inner + wi.clone();
            }
        }
        if inner <= alpha {
            lhs = lhs + w[k].clone();
        }
    }
    let holds = lhs <= alpha;
    Ok((lhs, holds))
}

/// Exact permutation p-value `P(t(L) >= t(observed))` under uniform labelings.
pub fn exact_permutation_pvalue(fiber: &PermutationFiber, labels: &[bool], kind: &StatisticKind) -> Result<f64> {
    let stat = |l: &[bool]| evaluate_statistic(kind, StatData::Labeled { values: fiber.values(), labels: l });
    exact_permutation_pvalue_with(fiber, labels, stat)
}

/// Same, for any statistic of the labeling.
pub fn exact_permutation_pvalue_with<F>(fiber: &PermutationFiber, labels: &[bool], stat: F) -> Result<f64>
where
    F: Fn(&[bool]) -> Result<f64>,
{
    let m = fiber.m();
    if m > MAX_PERMUTATION_M {
        return Err(Error::TooLarge(format!("m = {m} exceeds the enumeration bound {MAX_PERMUTATION_M}")));
    }
    fiber.check_labeling(labels)?;
    let t_obs = stat(labels)?;
    let (mut hits, mut total) = (0u64, 0u64);
    let mut l = vec![false; m];
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != fiber.r() {
            continue;
        }
        for (i, li) in l.iter_mut().enumerate() {
            *li = mask >> i & 1 == 1;
        }
        total += 1;
        if stat(&l)? >= t_obs {
            hits += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

/// All labelings of a fiber (in a fixed order); `m <= MAX_PERMUTATION_M`.
pub fn enumerate_labelings(fiber: &PermutationFiber) -> Result<Vec<Vec<bool>>> {
    let m = fiber.m();
    if m > MAX_PERMUTATION_M {
        return Err(Error::TooLarge(format!("m = {m} exceeds the enumeration bound {MAX_PERMUTATION_M}")));
    }
    Ok((0u32..(1 << m))
        .filter(|mask| mask.count_ones() as usize == fiber.r())
        .map(|mask| (0..m).map(|i| mask >> i & 1 == 1).collect())
        .collect())
}

/// Number of binary matrices in the fiber, by a column-by-column DP over the
/// multiset of residual row sums.
pub fn count_margin_fiber(fiber: &MarginFiber) -> u128 {
    fn rec(residual: &mut Vec<usize>, cols: &[usize], memo: &mut HashMap<(usize, Vec<usize>), u128>) -> u128 {
        let Some((&c, rest)) = cols.split_first() else {
            return u128::from(residual.iter().all(|&r| r == 0));
        };
        let mut key = residual.clone();
        key.sort_unstable();
        if let Some(&v) = memo.get(&(cols.len(), key.clone())) {
            return v;
        }
        let total = choose_rows(residual, c, 0, rest, memo);
        memo.insert((cols.len(), key), total);
        total
    }
    // Put `c` ones in rows `start..` of the current column, then recurse.
    fn choose_rows(
        residual: &mut Vec<usize>,
        c: usize,
        start: usize,
        rest: &[usize],
        memo: &mut HashMap<(usize, Vec<usize>), u128>,
    ) -> u128 {
        if c == 0 {
            return rec(residual, rest, memo);
        }
        let mut total = 0;
        for i in start..residual.len() {
            if residual[i] > 0 {
                residual[i] -= 1;
                total += choose_rows(residual, c - 1, i + 1, rest, memo);
                residual[i] += 1;
            }
        }
        total
    }
    let mut residual = fiber.row_sums().to_vec();
    rec(&mut residual, fiber.col_sums(), &mut HashMap::new())
}

/// Every matrix of the fiber exactly once. Refuses fibers larger than `limit`.
pub fn enumerate_margin_fiber(fiber: &MarginFiber, limit: u128) -> Result<Vec<BinaryMatrix>> {
    let size = count_margin_fiber(fiber);
    if size > limit {
        return Err(Error::TooLarge(format!("fiber has {size} matrices, limit {limit}")));
    }
    fn fill(
        fiber: &MarginFiber,
        j: usize,
        start: usize,
        left: usize,
        residual: &mut Vec<usize>,
        x: &mut BinaryMatrix,
        out: &mut Vec<BinaryMatrix>,
    ) {
        if left == 0 {
            if j + 1 == fiber.cols() {
                if residual.iter().all(|&r| r == 0) {
                    out.push(x.clone());
                }
            } else {
                let c = fiber.col_sums()[j + 1];
                fill(fiber, j + 1, 0, c, residual, x, out);
            }
            return;
        }
        for i in start..residual.len() {
            if residual[i] > 0 {
                residual[i] -= 1;
                x.set(i, j, true);
                fill(fiber, j, i + 1, left - 1, residual, x, out);
                x.set(i, j, false);
                residual[i] += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(size as usize);
    if fiber.cols() == 0 {
        if fiber.row_sums().iter().all(|&r| r == 0) {
            out.push(BinaryMatrix::zeros(fiber.rows(), 0));
        }
        return Ok(out);
    }
    let mut residual = fiber.row_sums().to_vec();
    let mut x = BinaryMatrix::zeros(fiber.rows(), fiber.cols());
    fill(fiber, 0, 0, fiber.col_sums()[0], &mut residual, &mut x, &mut out);
    Ok(out)
}

/// Exact `P_theta(t(Y) >= t(x))` with `P_theta(y) ∝ exp(theta * sum v_ij y_ij)` on the fiber
/// through `x`; `theta = 0` is the uniform law.
pub fn exact_tilted_table_pvalue(x: &BinaryMatrix, v: &Covariates, theta: f64, limit: u128) -> Result<f64> {
    let fiber = MarginFiber::of_matrix(x);
    let tables = enumerate_margin_fiber(&fiber, limit)?;
    let t_obs = v.dot(x)?;
    let stats: Vec<f64> = tables.iter().map(|y| v.dot(y)).collect::<Result<_>>()?;
    let shift = stats.iter().map(|t| theta * t).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for t in stats {
        let w = (theta * t - shift).exp();
        den += w;
        if t >= t_obs {
            num += w;
        }
    }
    Ok(num / den)
}

/// Every increasing time sequence in `0..delta * counts.len()` with `counts[a]` events in
/// window `a`. Refuses more than `limit` sequences.
pub fn enumerate_window_times(delta: usize, counts: &[usize], limit: u128) -> Result<Vec<Vec<i64>>> {
    let lnf = crate::special::LnFactorials::new(delta);
    let ln_size: f64 = counts.iter().map(|&c| lnf.ln_choose(delta as i64, c as i64)).sum();
    if counts.iter().any(|&c| c > delta) {
        return Err(Error::domain("window count exceeds the window length"));
    }
    if ln_size > (limit as f64).ln() + 1e-9 {
        return Err(Error::TooLarge(format!("about e^{ln_size:.1} sequences, limit {limit}")));
    }
    let mut out = vec![Vec::new()];
    for (a, &c) in counts.iter().enumerate() {
        let mut next = Vec::new();
        for prefix in &out {
            for mask in 0u64..(1 << delta) {
                if mask.count_ones() as usize == c {
                    let mut t = prefix.clone();
                    t.extend((0..delta).filter(|&k| mask >> k & 1 == 1).map(|k| (a * delta + k) as i64));
                    next.push(t);
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// `1 - Phi(x)`.
pub fn gaussian_true_pvalue(x: f64) -> f64 {
    normal_sf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Violation,
}

/// Estimated `P(p <= alpha)` per level with binomial standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub alphas: Vec<f64>,
    pub cdf_hat: Vec<f64>,
    /// `sqrt(alpha (1 - alpha) / replications)`: the spread of `cdf_hat` at the boundary
    /// `P(p <= alpha) = alpha`.
    pub se: Vec<f64>,
    pub replications: u64,
    pub k: f64,
    pub verdicts: Vec<Verdict>,
}

impl ValidityReport {
    pub fn from_pvalues(pvalues: &[f64], alphas: &[f64], k: f64) -> Result<Self> {
        if pvalues.is_empty() {
            return Err(Error::domain("no replications"));
        }
        if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::domain("levels must lie in [0, 1]"));
        }
        let r = pvalues.len() as f64;
        let mut cdf_hat = Vec::with_capacity(alphas.len());
        let mut se = Vec::with_capacity(alphas.len());
        let mut verdicts = Vec::with_capacity(alphas.len());
        for &a in alphas {
            let c = pvalues.iter().filter(|&&p| p <= a).count() as f64 / r;
            let s = (a * (1.0 - a) / r).sqrt();
            verdicts.push(if c > a + k * s { Verdict::Violation } else { Verdict::Valid });
            cdf_hat.push(c);
            se.push(s);
        }
        Ok(ValidityReport { alphas: alphas.to_vec(), cdf_hat, se, replications: pvalues.len() as u64, k, verdicts })
    }

    pub fn all_valid(&self) -> bool {
        self.verdicts.iter().all(|v| *v == Verdict::Valid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "cdf_hat", "se", "verdict"])?;
        for i in 0..self.alphas.len() {
            let verdict = match self.verdicts[i] {
                Verdict::Valid => "valid",
                Verdict::Violation => "violation",
            };
            w.write_record([
                self.alphas[i].to_string(),
                self.cdf_hat[i].to_string(),
                self.se[i].to_string(),
                verdict.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// One replication: draw `X ~ P`, draw the Monte Carlo sample, return the p-value.
pub trait ValidityScenario: Sync {
    fn pvalue(&self, rng: &mut StreamRng) -> Result<f64>;
}

impl<F> ValidityScenario for F
where
    F: Fn(&mut StreamRng) -> Result<f64> + Sync,
{
    fn pvalue(&self, rng: &mut StreamRng) -> Result<f64> {
        self(rng)
    }
}

/// Replicate a scenario on independent streams and tally `1{p <= alpha}`.
pub fn validity_monte_carlo<S: ValidityScenario>(
    scenario: &S,
    replications: u64,
    alphas: &[f64],
    seed: u64,
    k: f64,
) -> Result<ValidityReport> {
    let pvalues = replicate(seed, replications, |_, rng| scenario.pvalue(rng)).into_iter().collect::<Result<Vec<_>>>()?;
    ValidityReport::from_pvalues(&pvalues, alphas, k)
}

/// Pearson goodness of fit; cells with expected count below 5 are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<ChiSquareFit> {
    if counts.len() != probs.len() {
        return Err(Error::shape("counts and probabilities differ in length"));
    }
    let n: u64 = counts.iter().sum();
    let total_p: f64 = probs.iter().sum();
    if n == 0 || !(total_p > 0.0) {
        return Err(Error::domain("need positive counts and probabilities"));
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = n as f64 * p / total_p;
        if e < 5.0 {
            pool_obs += c as f64;
            pool_exp += e;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        cells += 1;
    } else if pool_obs > 0.0 {
        return Ok(ChiSquareFit { statistic: f64::INFINITY, df: cells.max(1), p_value: 0.0 });
    }
    if cells < 2 {
        return Ok(ChiSquareFit { statistic: stat, df: 0, p_value: 1.0 });
    }
    let df = cells - 1;
    Ok(ChiSquareFit { statistic: stat, df, p_value: chi_square_sf(stat, df as f64) })
}
