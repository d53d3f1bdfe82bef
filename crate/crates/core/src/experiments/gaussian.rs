//! Target `N(0, 1)`, proposal `N(mu, sigma)`, statistic `t(x) = x`, truth `1 - Phi(X)`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::csv_string;
use super::plot::{LinePlot, Series};
use crate::estimators::{p_hat, p_hat_star, p_tilde, p_tilde_star, EstimatorKind, ObservedPoint, WeightedDraw};
use crate::oracle::{gaussian_true_pvalue, ValidityReport};
use crate::proposals::GaussianPair;
use crate::rng::{derive_seed, replicate, StreamRng};
use crate::{Error, Result};

/// Column order of every Gaussian output.
pub const GAUSSIAN_ESTIMATORS: [EstimatorKind; 4] =
    [EstimatorKind::PHat, EstimatorKind::PHatStar, EstimatorKind::PTilde, EstimatorKind::PTildeStar];

/// Levels reported by the cdf experiment; includes the five checked levels.
pub const GAUSSIAN_ALPHAS: [f64; 16] =
    [0.001, 0.005, 0.01, 0.025, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianConfig {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

impl GaussianConfig {
    pub fn new(mu: f64, sigma: f64, n: usize) -> Self {
        GaussianConfig { mu, sigma, n }
    }

    /// `{0, 3, -3} x {0.2, 1, 5}` at the given `n` values.
    pub fn grid(ns: &[usize]) -> Vec<Self> {
        let mut out = Vec::new();
        for &mu in &[0.0, 3.0, -3.0] {
            for &sigma in &[0.2, 1.0, 5.0] {
                for &n in ns {
                    out.push(GaussianConfig { mu, sigma, n });
                }
            }
        }
        out
    }
}

/// `(truth, [p_hat, p_hat_star, p_tilde, p_tilde_star])` for one data set, each capped at 1.
fn one_replication(pair: &GaussianPair, n: usize, rng: &mut StreamRng) -> Result<(f64, [f64; 4])> {
    let x: f64 = StandardNormal.sample(rng);
    let obs = ObservedPoint::new(x, pair.log_weight(x))?;
    let draws = (0..n)
        .map(|_| {
            let (y, w) = pair.sample_and_weight(rng);
            WeightedDraw::new(y, w)
        })
        .collect::<Result<Vec<_>>>()?;
    let est = [
        p_hat(x, &draws)?.min(1.0),
        p_hat_star(&obs, &draws)?.min(1.0),
        p_tilde(x, &draws),
        p_tilde_star(&obs, &draws)?.min(1.0),
    ];
    Ok((gaussian_true_pvalue(x), est))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMseRow {
    pub config: GaussianConfig,
    /// Indexed like [`GAUSSIAN_ESTIMATORS`].
    pub mse: [f64; 4],
    pub se: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMseTable {
    pub replications: u64,
    pub rows: Vec<GaussianMseRow>,
}

impl GaussianMseTable {
    pub fn row(&self, mu: f64, sigma: f64, n: usize) -> Option<&GaussianMseRow> {
        self.rows.iter().find(|r| r.config == GaussianConfig { mu, sigma, n })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let rows = self.rows.iter().flat_map(|r| {
            GAUSSIAN_ESTIMATORS.iter().enumerate().map(move |(k, e)| {
                vec![
                    r.config.mu.to_string(),
                    r.config.sigma.to_string(),
                    r.config.n.to_string(),
                    e.name().to_string(),
                    r.mse[k].to_string(),
                    r.se[k].to_string(),
                ]
            })
        });
        csv_string(&["mu", "sigma", "n", "estimator", "mse", "se"], rows)
    }
}

/// Mean squared error of each estimator against the true p-value.
pub fn run_gaussian_mse(configs: &[GaussianConfig], replications: u64, seed: u64) -> Result<GaussianMseTable> {
    if replications < 2 {
        return Err(Error::domain("need at least two replications"));
    }
    let mut rows = Vec::with_capacity(configs.len());
    for (c, cfg) in configs.iter().enumerate() {
        let pair = GaussianPair::new(cfg.mu, cfg.sigma)?;
        let errs = replicate(derive_seed(seed, c as u64), replications, |_, rng| {
            one_replication(&pair, cfg.n, rng).map(|(p, est)| est.map(|e| (e - p) * (e - p)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let r = replications as f64;
        let mut mse = [0.0; 4];
        let mut se = [0.0; 4];
        for k in 0..4 {
            let mean = errs.iter().map(|e| e[k]).sum::<f64>() / r;
            let var = errs.iter().map(|e| (e[k] - mean).powi(2)).sum::<f64>() / (r - 1.0);
            mse[k] = mean;
            se[k] = (var / r).sqrt();
        }
        rows.push(GaussianMseRow { config: *cfg, mse, se });
    }
    Ok(GaussianMseTable { replications, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCdfEntry {
    pub config: GaussianConfig,
    pub estimator: EstimatorKind,
    pub report: ValidityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCdfTable {
    pub replications: u64,
    pub entries: Vec<GaussianCdfEntry>,
}

impl GaussianCdfTable {
    pub fn entry(&self, cfg: GaussianConfig, estimator: EstimatorKind) -> Option<&GaussianCdfEntry> {
        self.entries.iter().find(|e| e.config == cfg && e.estimator == estimator)
    }

    /// `P(p <= alpha)` for one configuration, estimator and level on the grid.
    pub fn cdf_at(&self, cfg: GaussianConfig, estimator: EstimatorKind, alpha: f64) -> Option<(f64, f64)> {
        let e = self.entry(cfg, estimator)?;
        let k = e.report.alphas.iter().position(|&a| a == alpha)?;
        Some((e.report.cdf_hat[k], e.report.se[k]))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let rows = self.entries.iter().flat_map(|e| {
            (0..e.report.alphas.len()).map(move |k| {
                vec![
                    e.config.mu.to_string(),
                    e.config.sigma.to_string(),
                    e.config.n.to_string(),
                    e.estimator.name().to_string(),
                    e.report.alphas[k].to_string(),
                    e.report.cdf_hat[k].to_string(),
                    e.report.se[k].to_string(),
                    format!("{:?}", e.report.verdicts[k]).to_lowercase(),
                ]
            })
        });
        csv_string(&["mu", "sigma", "n", "estimator", "alpha", "cdf_hat", "se", "verdict"], rows)
    }

    /// One cdf plot per configuration.
    pub fn plots(&self) -> Vec<(GaussianConfig, LinePlot)> {
        let mut out: Vec<(GaussianConfig, LinePlot)> = Vec::new();
        for e in &self.entries {
            let idx = match out.iter().position(|(c, _)| *c == e.config) {
                Some(i) => i,
                None => {
                    let c = e.config;
                    let mut p = LinePlot::new(&format!("mu={} sigma={} n={}", c.mu, c.sigma, c.n), "alpha", "P(p <= alpha)");
                    p.diagonal = true;
                    out.push((c, p));
                    out.len() - 1
                }
            };
            let points = e.report.alphas.iter().copied().zip(e.report.cdf_hat.iter().copied()).collect();
            out[idx].1.series.push(Series { name: e.estimator.name().into(), points });
        }
        out
    }
}

/// Estimated cdfs of the four estimators under the null, with validity verdicts at `k` SEs.
pub fn run_gaussian_cdf(
    configs: &[GaussianConfig],
    alphas: &[f64],
    replications: u64,
    seed: u64,
    k: f64,
) -> Result<GaussianCdfTable> {
    let mut entries = Vec::with_capacity(4 * configs.len());
    for (c, cfg) in configs.iter().enumerate() {
        let pair = GaussianPair::new(cfg.mu, cfg.sigma)?;
        let ps = replicate(derive_seed(seed, c as u64), replications, |_, rng| {
            one_replication(&pair, cfg.n, rng).map(|(_, est)| est)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (j, &estimator) in GAUSSIAN_ESTIMATORS.iter().enumerate() {
            let col: Vec<f64> = ps.iter().map(|p| p[j]).collect();
            entries.push(GaussianCdfEntry { config: *cfg, estimator, report: ValidityReport::from_pvalues(&col, alphas, k)? });
        }
    }
    Ok(GaussianCdfTable { replications, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_proposal_is_direct_sampling() {
        // With Q = P all weights are one: p_hat_star is the rank-based permutation p-value.
        let t = run_gaussian_cdf(&[GaussianConfig::new(0.0, 1.0, 9)], &[0.1, 0.5], 20_000, 1, 3.0).unwrap();
        let (c, se) = t.cdf_at(GaussianConfig::new(0.0, 1.0, 9), EstimatorKind::PHatStar, 0.1).unwrap();
        assert!((c - 0.1).abs() < 4.0 * se, "{c}");
        assert!(t.entries.iter().all(|e| e.report.all_valid()));
    }

    #[test]
    fn mse_shrinks_with_n() {
        let t = run_gaussian_mse(&[GaussianConfig::new(0.0, 1.0, 10), GaussianConfig::new(0.0, 1.0, 1000)], 4000, 2)
            .unwrap();
        let small = t.row(0.0, 1.0, 10).unwrap();
        let big = t.row(0.0, 1.0, 1000).unwrap();
        for k in 0..4 {
            let ratio = small.mse[k] / big.mse[k];
            assert!(ratio > 50.0 && ratio < 200.0, "{k}: {ratio}");
        }
        let csv = t.to_csv_string().unwrap();
        assert_eq!(csv.lines().count(), 1 + 8);
    }
}
