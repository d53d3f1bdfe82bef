//! Co-occurrence test on the finch incidence matrix via the conditional-Poisson sampler.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csv_string;
use crate::estimators::{
    co_occurrence_s2, ess_diagnostic, estimate, EstimatorKind, LogWeight, ObservedPoint, PValueReport, WeightedDraw,
};
use crate::proposals::{finch_matrix, ColumnSampler, ColumnWorkspace};
use crate::rng::stream;
use crate::table::{BinaryMatrix, MarginFiber};
use crate::{Error, Result};

const BLOCK: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinchConfig {
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinchResult {
    pub t_obs: f64,
    pub p_tilde: PValueReport<f64>,
    pub p_tilde_star: PValueReport<f64>,
    pub ess: f64,
    pub dead_ends: u64,
}

impl FinchResult {
    pub fn to_csv_string(&self) -> Result<String> {
        let se = self.p_tilde.std_error.map_or(String::new(), |s| s.to_string());
        csv_string(
            &["n", "t_obs", "p_tilde", "p_tilde_se", "p_tilde_star", "ess", "dead_ends"],
            [[
                self.p_tilde.n.to_string(),
                self.t_obs.to_string(),
                self.p_tilde.estimate.to_string(),
                se,
                self.p_tilde_star.estimate.to_string(),
                self.ess.to_string(),
                self.dead_ends.to_string(),
            ]],
        )
    }
}

pub fn run_finch(cfg: FinchConfig, seed: u64) -> Result<FinchResult> {
    if cfg.n == 0 {
        return Err(Error::domain("need at least one draw"));
    }
    let x = finch_matrix();
    let fiber = MarginFiber::of_matrix(&x);
    let sampler = ColumnSampler::new(&fiber);
    let t_obs = co_occurrence_s2(&x)?;
    let obs_lw = -sampler.log_prob_in(&x, &mut ColumnWorkspace::new())?;
    let obs = ObservedPoint::new(t_obs, LogWeight::unnormalized(obs_lw)?)?;

    let blocks = cfg.n.div_ceil(BLOCK);
    let draws: Vec<Vec<WeightedDraw<f64>>> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<Vec<WeightedDraw<f64>>> {
            let mut rng = stream(seed, b);
            let mut y = BinaryMatrix::zeros(fiber.rows(), fiber.cols());
            let mut ws = ColumnWorkspace::new();
            (0..BLOCK.min(cfg.n - b * BLOCK))
                .map(|_| match sampler.sample_into(&mut rng, &mut y, &mut ws) {
                    Some(lq) => WeightedDraw::new(co_occurrence_s2(&y)?, LogWeight::unnormalized(-lq)?),
                    None => WeightedDraw::new(0.0, LogWeight::zero(false)),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let draws: Vec<WeightedDraw<f64>> = draws.into_iter().flatten().collect();
    let dead_ends = draws.iter().filter(|d| d.weight().is_zero()).count() as u64;
    Ok(FinchResult {
        t_obs,
        p_tilde: estimate(EstimatorKind::PTilde, &obs, &draws, 0.95)?,
        p_tilde_star: estimate(EstimatorKind::PTildeStar, &obs, &draws, 0.95)?,
        ess: ess_diagnostic(&draws)?,
        dead_ends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_run() {
        let r = run_finch(FinchConfig { n: 3000 }, 1).unwrap();
        assert_eq!(r.t_obs, 8286.0 / 156.0);
        assert!(r.p_tilde_star.estimate >= r.p_tilde.estimate);
        assert!(r.ess > 1.0 && r.ess <= 3000.0);
        assert_eq!(r.to_csv_string().unwrap().lines().count(), 2);
    }
}
