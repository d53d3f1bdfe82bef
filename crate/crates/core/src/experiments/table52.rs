//! The 52 x 102 table: conditional-Poisson importance trajectory versus the exact
//! symmetry sampler.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csv_string;
use super::plot::{LinePlot, Series};
use crate::estimators::{column_index_sum, LogWeight, ObservedPoint, RunningTail};
use crate::proposals::{
    structured_fiber, structured_first_row_stat, structured_observed, ColumnSampler, ColumnWorkspace,
    STRUCTURED_OBSERVED_ONES,
};
use crate::rng::{derive_seed, stream};
use crate::table::BinaryMatrix;
use crate::{Error, Result};

const BLOCK: u64 = 10_000;
const DIRECT_SALT: u64 = 0xD1_2E_C7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table52Config {
    pub n_max: u64,
    /// Which embedded observations to track.
    pub observed: Vec<usize>,
    pub direct_draws: u64,
}

impl Default for Table52Config {
    fn default() -> Self {
        Table52Config { n_max: 1_000_000, observed: vec![0, 1], direct_draws: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub observed: usize,
    pub n: u64,
    pub p_tilde: f64,
    pub p_tilde_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table52Result {
    pub observed_stats: Vec<usize>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub dead_ends: u64,
    pub direct_p: f64,
    pub direct_se: f64,
    pub direct_draws: u64,
}

impl Table52Result {
    pub fn trajectory_csv_string(&self) -> Result<String> {
        let rows = self.trajectory.iter().map(|t| {
            vec![t.observed.to_string(), t.n.to_string(), t.p_tilde.to_string(), t.p_tilde_star.to_string()]
        });
        csv_string(&["observed", "n", "p_tilde", "p_tilde_star"], rows)
    }

    pub fn direct_csv_string(&self) -> Result<String> {
        csv_string(
            &["draws", "p", "se", "dead_ends"],
            [[self.direct_draws.to_string(), self.direct_p.to_string(), self.direct_se.to_string(), self.dead_ends.to_string()]],
        )
    }

    pub fn plot(&self) -> LinePlot {
        let mut p = LinePlot::new("52 x 102 table", "n", "p-value estimate");
        p.log_x = true;
        let mut obs: Vec<usize> = self.trajectory.iter().map(|t| t.observed).collect();
        obs.dedup();
        for o in obs {
            let pts = |f: fn(&TrajectoryPoint) -> f64| {
                self.trajectory.iter().filter(|t| t.observed == o).map(|t| (t.n as f64, f(t))).collect()
            };
            p.series.push(Series { name: format!("p_tilde (X{o})"), points: pts(|t| t.p_tilde) });
            p.series.push(Series { name: format!("p_tilde_star (X{o})"), points: pts(|t| t.p_tilde_star) });
        }
        if let Some(last) = self.trajectory.iter().map(|t| t.n).max() {
            p.series.push(Series { name: "direct".into(), points: vec![(1.0, self.direct_p), (last as f64, self.direct_p)] });
        }
        p
    }
}

/// `1, 2, 5, 10, 20, 50, ...` up to `n_max`, always ending at `n_max`.
pub fn log_schedule(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for f in [1, 2, 5] {
            let v = f * decade;
            if v >= n_max {
                break 'outer;
            }
            out.push(v);
        }
        decade *= 10;
    }
    out.push(n_max);
    out
}

/// `(statistic, -log q)` for draws `[b * BLOCK, ...)`; dead ends carry `-inf`.
fn cp_block(sampler: &ColumnSampler<'_>, seed: u64, b: u64, len: u64) -> Vec<(f64, f64)> {
    let mut rng = stream(seed, b);
    let fiber = sampler.fiber();
    let mut y = BinaryMatrix::zeros(fiber.rows(), fiber.cols());
    let mut ws = ColumnWorkspace::new();
    (0..len)
        .map(|_| match sampler.sample_into(&mut rng, &mut y, &mut ws) {
            Some(log_q) => (column_index_sum(y.row(0)) as f64, -log_q),
            None => (0.0, f64::NEG_INFINITY),
        })
        .collect()
}

pub fn run_structured_table(cfg: &Table52Config, seed: u64) -> Result<Table52Result> {
    if cfg.n_max == 0 || cfg.direct_draws == 0 {
        return Err(Error::domain("need positive draw counts"));
    }
    if cfg.observed.iter().any(|&o| o >= STRUCTURED_OBSERVED_ONES.len()) {
        return Err(Error::domain("unknown embedded observation"));
    }
    let fiber = structured_fiber();
    let sampler = ColumnSampler::new(&fiber);
    let mut ws = ColumnWorkspace::new();
    let mut tails = Vec::new();
    let mut observed_stats = Vec::new();
    for &o in &cfg.observed {
        let x = structured_observed(o)?;
        let t = column_index_sum(x.row(0));
        let lw = -sampler.log_prob_in(&x, &mut ws)?;
        tails.push(RunningTail::new(&ObservedPoint::new(t as f64, LogWeight::unnormalized(lw)?)?));
        observed_stats.push(t);
    }

    let blocks = cfg.n_max.div_ceil(BLOCK);
    let draws: Vec<Vec<(f64, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| cp_block(&sampler, seed, b, BLOCK.min(cfg.n_max - b * BLOCK)))
        .collect();
    let schedule = log_schedule(cfg.n_max);
    let mut next = 0;
    let mut n = 0u64;
    let mut dead_ends = 0;
    let mut trajectory = Vec::new();
    for &(stat, lw) in draws.iter().flatten() {
        n += 1;
        let w = if lw == f64::NEG_INFINITY {
            dead_ends += 1;
            LogWeight::zero(false)
        } else {
            LogWeight::unnormalized(lw)?
        };
        for tail in &mut tails {
            tail.push(stat, w);
        }
        if schedule.get(next) == Some(&n) {
            next += 1;
            for (tail, &o) in tails.iter().zip(&cfg.observed) {
                trajectory.push(TrajectoryPoint { observed: o, n, p_tilde: tail.p_tilde(), p_tilde_star: tail.p_tilde_star() });
            }
        }
    }

    let t_obs = observed_stats.first().copied().unwrap_or(2813);
    let direct_seed = derive_seed(seed, DIRECT_SALT);
    let dblocks = cfg.direct_draws.div_ceil(BLOCK);
    let hits: u64 = (0..dblocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(direct_seed, b);
            let len = BLOCK.min(cfg.direct_draws - b * BLOCK);
            (0..len).filter(|_| structured_first_row_stat(&mut rng) >= t_obs).count() as u64
        })
        .sum();
    let p = hits as f64 / cfg.direct_draws as f64;
    Ok(Table52Result {
        observed_stats,
        trajectory,
        dead_ends,
        direct_p: p,
        direct_se: (p * (1.0 - p) / cfg.direct_draws as f64).sqrt(),
        direct_draws: cfg.direct_draws,
    })
}
