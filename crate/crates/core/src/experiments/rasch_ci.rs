//! Coverage of confidence sets for the covariate effect in a logistic model with row
//! and column effects, from one mixture sample per data set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::csv_string;
use crate::inference::{invert_confidence_set, two_sided_rasch_pvalue, RaschPValueKind, RaschSample};
use crate::proposals::{rasch_mixture, RaschModel};
use crate::rng::{derive_seed, replicate, stream};
use crate::table::{Covariates, MarginFiber};
use crate::{Error, Result};

const COVARIATE_SALT: u64 = 0xC0_7A_12;

#[derive(Debug, Clone, PartialEq)]
pub struct RaschSimConfig {
    pub model: RaschModel,
    pub covariates: Covariates,
    pub theta_true: f64,
    pub mixture_thetas: Vec<f64>,
    pub grid: Vec<f64>,
    /// Each replication draws `max(n_grid)` tables once and uses prefixes.
    pub n_grid: Vec<usize>,
    pub replications: u64,
    pub alpha: f64,
}

impl RaschSimConfig {
    /// Reference effects truncated to `rows x cols`, i.i.d. `Uniform(-1, 1)` covariates
    /// drawn from `seed`, and 601 tilts `-6, -5.98, ..., 6` serving as both mixture and grid.
    pub fn synthetic(rows: usize, cols: usize, theta_true: f64, seed: u64) -> Result<Self> {
        let model = RaschModel::reference(rows, cols, theta_true)?;
        let mut rng = stream(derive_seed(seed, COVARIATE_SALT), 0);
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grid: Vec<f64> = (0..=600).map(|k| (-600 + 2 * k) as f64 / 100.0).collect();
        Ok(RaschSimConfig {
            model,
            covariates: Covariates::new(rows, cols, data)?,
            theta_true,
            mixture_thetas: grid.clone(),
            grid,
            n_grid: vec![50],
            replications: 200,
            alpha: 0.05,
        })
    }

    pub fn rows(&self) -> usize {
        self.model.rows()
    }

    pub fn cols(&self) -> usize {
        self.model.cols()
    }

    fn validate(&self) -> Result<()> {
        if self.covariates.rows() != self.rows() || self.covariates.cols() != self.cols() {
            return Err(Error::shape("covariates do not match the model dimensions"));
        }
        if self.mixture_thetas.is_empty() || self.grid.is_empty() || self.n_grid.is_empty() {
            return Err(Error::domain("mixture tilts, grid and n grid must be nonempty"));
        }
        if self.n_grid.contains(&0) || !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("need positive n and alpha in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaschCiRow {
    pub replication: u64,
    pub n: usize,
    pub kind: RaschPValueKind,
    pub pvalue_at_truth: f64,
    pub covered: bool,
    pub length: f64,
    pub contiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaschCiResult {
    pub theta_true: f64,
    pub alpha: f64,
    pub rows: Vec<RaschCiRow>,
}

impl RaschCiResult {
    fn select(&self, n: usize, kind: RaschPValueKind) -> impl Iterator<Item = &RaschCiRow> {
        self.rows.iter().filter(move |r| r.n == n && r.kind == kind)
    }

    /// `(coverage, binomial SE at the nominal level, replications)`.
    pub fn coverage(&self, n: usize, kind: RaschPValueKind) -> (f64, f64, usize) {
        let rows: Vec<_> = self.select(n, kind).collect();
        let r = rows.len();
        let cov = rows.iter().filter(|x| x.covered).count() as f64 / r.max(1) as f64;
        let q = 1.0 - self.alpha;
        (cov, (q * (1.0 - q) / r.max(1) as f64).sqrt(), r)
    }

    pub fn median_length(&self, n: usize, kind: RaschPValueKind) -> f64 {
        let mut l: Vec<f64> = self.select(n, kind).map(|r| r.length).collect();
        if l.is_empty() {
            return f64::NAN;
        }
        l.sort_by(f64::total_cmp);
        let h = l.len() / 2;
        if l.len() % 2 == 1 {
            l[h]
        } else {
            0.5 * (l[h - 1] + l[h])
        }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let rows = self.rows.iter().map(|r| {
            vec![
                r.replication.to_string(),
                r.n.to_string(),
                kind_name(r.kind).to_string(),
                r.pvalue_at_truth.to_string(),
                u8::from(r.covered).to_string(),
                r.length.to_string(),
                u8::from(r.contiguous).to_string(),
            ]
        });
        csv_string(&["replication", "n", "kind", "pvalue_at_truth", "covered", "length", "contiguous"], rows)
    }

    pub fn summary_csv_string(&self, n_grid: &[usize]) -> Result<String> {
        let mut rows = Vec::new();
        for &n in n_grid {
            for kind in [RaschPValueKind::Uncorrected, RaschPValueKind::Corrected] {
                let (c, se, r) = self.coverage(n, kind);
                rows.push(vec![
                    n.to_string(),
                    kind_name(kind).to_string(),
                    r.to_string(),
                    c.to_string(),
                    se.to_string(),
                    self.median_length(n, kind).to_string(),
                ]);
            }
        }
        csv_string(&["n", "kind", "replications", "coverage", "se", "median_length"], rows)
    }
}

fn kind_name(kind: RaschPValueKind) -> &'static str {
    match kind {
        RaschPValueKind::Corrected => "corrected",
        RaschPValueKind::Uncorrected => "uncorrected",
    }
}

/// Simulate data at `theta_true`, sample once from the tilt mixture, invert both tests.
pub fn run_rasch_ci(cfg: &RaschSimConfig, seed: u64) -> Result<RaschCiResult> {
    cfg.validate()?;
    let n_max = *cfg.n_grid.iter().max().expect("validated nonempty");
    let per_rep = replicate(seed, cfg.replications, |rep, rng| -> Result<Vec<RaschCiRow>> {
        let x = cfg.model.sample(&cfg.covariates, rng)?;
        let fiber = MarginFiber::of_matrix(&x);
        let mix = rasch_mixture(&fiber, &cfg.covariates, &cfg.mixture_thetas)?;
        let full = RaschSample::draw(&mix, &x, &cfg.covariates, n_max, rng)?;
        let mut rows = Vec::new();
        for &n in &cfg.n_grid {
            let sample = RaschSample {
                stats: full.stats[..n].to_vec(),
                log_q: full.log_q[..n].to_vec(),
                ..full.clone()
            };
            for kind in [RaschPValueKind::Uncorrected, RaschPValueKind::Corrected] {
                let set = invert_confidence_set(&cfg.grid, |t| two_sided_rasch_pvalue(t, &sample, kind), cfg.alpha)?;
                let p = two_sided_rasch_pvalue(cfg.theta_true, &sample, kind)?;
                rows.push(RaschCiRow {
                    replication: rep,
                    n,
                    kind,
                    pvalue_at_truth: p,
                    covered: p > cfg.alpha,
                    length: set.length(),
                    contiguous: set.contiguous,
                });
            }
        }
        Ok(rows)
    });
    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }
    Ok(RaschCiResult { theta_true: cfg.theta_true, alpha: cfg.alpha, rows })
}
