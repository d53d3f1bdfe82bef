//! Many two-sample permutation tests with heavy-tailed values and Bonferroni control.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::csv_string;
use crate::estimators::{
    p_hat, p_hat_std_error, wald_upper_limit, LogWeight, ObservedPoint, WeightedDraw,
};
use crate::estimators::p_hat_star;
use crate::proposals::{PermutationFiber, TiltedPermutation};
use crate::rng::{stream, StreamRng};
use crate::{Error, Result};

/// `p_bar`, `p_bar_star` (direct sampling), then `p_hat`, `p_hat_star`, `q_hat` (tilted proposal).
pub const MULTITEST_ESTIMATORS: [&str; 5] = ["p_bar", "p_bar_star", "p_hat", "p_hat_star", "q_hat"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultitestConfig {
    pub n_tests: usize,
    pub false_nulls: usize,
    pub m: usize,
    pub r: usize,
    pub shift: f64,
    pub theta: f64,
    pub n_grid: Vec<usize>,
    pub alpha: f64,
    pub repetitions: u64,
}

impl Default for MultitestConfig {
    fn default() -> Self {
        MultitestConfig {
            n_tests: 1000,
            false_nulls: 10,
            m: 100,
            r: 40,
            shift: 2.0,
            theta: 3.0,
            n_grid: vec![10, 200],
            alpha: 0.05,
            repetitions: 20,
        }
    }
}

impl MultitestConfig {
    fn validate(&self) -> Result<()> {
        if self.false_nulls > self.n_tests || self.n_tests == 0 {
            return Err(Error::domain("need 0 < n_tests and false_nulls <= n_tests"));
        }
        if self.r > self.m || self.m == 0 {
            return Err(Error::domain("need r <= m and m > 0"));
        }
        if self.n_grid.is_empty() || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("need a nonempty n grid and alpha in (0, 1)"));
        }
        Ok(())
    }
}

/// Rejection counts for one repetition, estimator and Monte Carlo size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultitestRow {
    pub repetition: u64,
    pub n: usize,
    pub estimator: String,
    pub correct: usize,
    pub incorrect: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultitestTable {
    pub config: MultitestConfig,
    pub rows: Vec<MultitestRow>,
}

impl MultitestTable {
    pub fn rows_for<'a>(&'a self, estimator: &'a str, n: usize) -> impl Iterator<Item = &'a MultitestRow> + 'a {
        self.rows.iter().filter(move |r| r.estimator == estimator && r.n == n)
    }

    /// Mean correct and incorrect rejections over repetitions.
    pub fn mean_counts(&self, estimator: &str, n: usize) -> (f64, f64) {
        let rows: Vec<_> = self.rows_for(estimator, n).collect();
        let k = rows.len().max(1) as f64;
        (
            rows.iter().map(|r| r.correct as f64).sum::<f64>() / k,
            rows.iter().map(|r| r.incorrect as f64).sum::<f64>() / k,
        )
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let rows = self.rows.iter().map(|r| {
            vec![r.repetition.to_string(), r.n.to_string(), r.estimator.clone(), r.correct.to_string(), r.incorrect.to_string()]
        });
        csv_string(&["repetition", "n", "estimator", "correct", "incorrect"], rows)
    }

    /// Mean counts per estimator and `n`.
    pub fn summary_csv_string(&self) -> Result<String> {
        let mut rows = Vec::new();
        for &n in &self.config.n_grid {
            for e in MULTITEST_ESTIMATORS {
                let (c, i) = self.mean_counts(e, n);
                rows.push(vec![n.to_string(), e.to_string(), c.to_string(), i.to_string()]);
            }
        }
        csv_string(&["n", "estimator", "mean_correct", "mean_incorrect"], rows)
    }
}

fn cauchy<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (PI * (rng.random::<f64>() - 0.5)).tan()
}

/// Rejection decision per estimator and `n` (outer index follows `cfg.n_grid`).
fn one_dataset(cfg: &MultitestConfig, alternative: bool, rng: &mut StreamRng) -> Result<Vec<[bool; 5]>> {
    let labels: Vec<bool> = (0..cfg.m).map(|i| i < cfg.r).collect();
    let values: Vec<f64> = labels
        .iter()
        .map(|&l| cauchy(rng) + if alternative && l { cfg.shift } else { 0.0 })
        .collect();
    let fiber = PermutationFiber::new(values, cfg.r)?;
    let tilted = TiltedPermutation::new(&fiber, cfg.theta)?;
    let t_obs = fiber.median_diff(&labels);
    let n_max = *cfg.n_grid.iter().max().expect("validated nonempty");

    let direct: Vec<WeightedDraw<f64>> = (0..n_max)
        .map(|_| WeightedDraw::direct(fiber.median_diff(&fiber.sample_uniform(rng))))
        .collect::<Result<_>>()?;
    let target = fiber.target_log_prob();
    let tilted_draws: Vec<WeightedDraw<f64>> = (0..n_max)
        .map(|_| {
            let (l, log_q) = tilted.sample_labeling(rng);
            WeightedDraw::new(fiber.median_diff(&l), LogWeight::normalized(target - log_q)?)
        })
        .collect::<Result<_>>()?;
    let obs_direct = ObservedPoint::new(t_obs, LogWeight::unit())?;
    let obs_tilted = ObservedPoint::new(t_obs, LogWeight::normalized(target - tilted.log_prob_of(&labels)?)?)?;

    let cut = cfg.alpha / cfg.n_tests as f64;
    let wald_cut = cut / 2.0;
    cfg.n_grid
        .iter()
        .map(|&n| {
            let (d, q) = (&direct[..n], &tilted_draws[..n]);
            let ph = p_hat(t_obs, q)?;
            let se = p_hat_std_error(t_obs, q)?.unwrap_or(0.0);
            let q_hat = wald_upper_limit(ph, se, 1.0 - wald_cut)?;
            Ok([
                p_hat(t_obs, d)? <= cut,
                p_hat_star(&obs_direct, d)? <= cut,
                ph <= cut,
                p_hat_star(&obs_tilted, q)? <= cut,
                q_hat <= wald_cut,
            ])
        })
        .collect()
}

/// Datasets `0..false_nulls` are alternatives; dataset `k` of repetition `rep` uses
/// stream `rep * n_tests + k`.
pub fn run_multitest_sim(cfg: &MultitestConfig, seed: u64) -> Result<MultitestTable> {
    use rayon::prelude::*;
    cfg.validate()?;
    let per_rep = cfg.n_tests as u64;
    let total = cfg.repetitions * per_rep;
    let decisions = (0..total)
        .into_par_iter()
        .map(|idx| {
            let k = (idx % per_rep) as usize;
            one_dataset(cfg, k < cfg.false_nulls, &mut stream(seed, idx))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for rep in 0..cfg.repetitions {
        let chunk = &decisions[(rep * per_rep) as usize..((rep + 1) * per_rep) as usize];
        for (g, &n) in cfg.n_grid.iter().enumerate() {
            for (e, name) in MULTITEST_ESTIMATORS.iter().enumerate() {
                let (mut correct, mut incorrect) = (0, 0);
                for (k, d) in chunk.iter().enumerate() {
                    if d[g][e] {
                        if k < cfg.false_nulls {
                            correct += 1;
                        } else {
                            incorrect += 1;
                        }
                    }
                }
                rows.push(MultitestRow { repetition: rep, n, estimator: name.to_string(), correct, incorrect });
            }
        }
    }
    Ok(MultitestTable { config: cfg.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_corrected_cannot_reject_with_few_draws() {
        let cfg = MultitestConfig { n_tests: 100, false_nulls: 5, n_grid: vec![10], repetitions: 2, ..Default::default() };
        let t = run_multitest_sim(&cfg, 3).unwrap();
        // p_bar_star >= 1 / 11 > 0.05 / 100
        for r in t.rows_for("p_bar_star", 10) {
            assert_eq!((r.correct, r.incorrect), (0, 0));
        }
        assert_eq!(t.rows.len(), 2 * 5);
        assert!(t.summary_csv_string().unwrap().starts_with("n,estimator,mean_correct,mean_incorrect\n"));
    }

    #[test]
    fn cauchy_quartiles() {
        let mut rng = stream(5, 0);
        let n = 40_000;
        let below = (0..n).filter(|_| cauchy(&mut rng) <= 1.0).count() as f64 / n as f64;
        assert!((below - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }
}
