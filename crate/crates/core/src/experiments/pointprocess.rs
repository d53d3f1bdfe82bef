//! Validity of the lag-tilted point-process proposal on synthetic null spike pairs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimators::{
    evaluate_statistic, p_hat, p_hat_star, ObservedPoint, StatData, WeightedDraw,
};
use crate::oracle::ValidityReport;
use crate::proposals::{BinnedPairFiber, Draw, Proposal, TiltSign, TiltedPointProcess, TiltedPointProcessConfig};
use crate::rng::{replicate, StreamRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpValidityConfig {
    pub delta: usize,
    pub b: usize,
    /// Per-slot firing probability of each neuron.
    pub rate: f64,
    pub n: usize,
    pub replications: u64,
    pub alphas: Vec<f64>,
    pub k: f64,
}

impl Default for PpValidityConfig {
    fn default() -> Self {
        PpValidityConfig {
            delta: 10,
            b: 200,
            rate: 0.05,
            n: 100,
            replications: 100_000,
            alphas: vec![1e-4, 5e-4, 1e-3, 0.01, 0.05],
            k: 3.0,
        }
    }
}

/// Reports for `p_hat_star` (the valid estimator) and `p_hat`, per statistic sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpValidityResult {
    pub plus_star: ValidityReport,
    pub minus_star: ValidityReport,
    pub plus_hat: ValidityReport,
    pub minus_hat: ValidityReport,
}

impl PpValidityResult {
    pub fn corrected_valid(&self) -> bool {
        self.plus_star.all_valid() && self.minus_star.all_valid()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut rows = Vec::new();
        for (stat, est, r) in [
            ("t_plus", "p_hat_star", &self.plus_star),
            ("t_minus", "p_hat_star", &self.minus_star),
            ("t_plus", "p_hat", &self.plus_hat),
            ("t_minus", "p_hat", &self.minus_hat),
        ] {
            for k in 0..r.alphas.len() {
                rows.push(vec![
                    stat.to_string(),
                    est.to_string(),
                    r.alphas[k].to_string(),
                    r.cdf_hat[k].to_string(),
                    r.se[k].to_string(),
                    format!("{:?}", r.verdicts[k]).to_lowercase(),
                ]);
            }
        }
        super::csv_string(&["statistic", "estimator", "alpha", "cdf_hat", "se", "verdict"], rows)
    }
}

fn bernoulli_train<R: Rng + ?Sized>(b: usize, rate: f64, rng: &mut R) -> Vec<i64> {
    (0..b as i64).filter(|_| rng.random::<f64>() < rate).collect()
}

/// `[p_hat_star, p_hat]` for one sign.
fn one_sign(fiber: &BinnedPairFiber, ti: &[i64], tj: &[i64], sign: TiltSign, n: usize, rng: &mut StreamRng) -> Result<[f64; 2]> {
    let prop = TiltedPointProcess::new(fiber, TiltedPointProcessConfig::for_sign(sign));
    let kind = sign.statistic();
    let stat = |u: &[i64], s: &[i64]| evaluate_statistic(&kind, StatData::SpikePair { ti: u, tj: s });
    let target = prop.target_log_prob();
    let obs = ObservedPoint::new(stat(ti, tj)?, prop.log_weight(ti, tj)?)?;
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        match prop.sample(rng)? {
            Draw::Point { point: (u, s), log_q } => {
                let w = crate::estimators::LogWeight::normalized(target - log_q)?;
                draws.push(WeightedDraw::new(stat(&u, &s)?, w)?);
            }
            Draw::DeadEnd => unreachable!("point-process proposal has no dead ends"),
        }
    }
    Ok([p_hat_star(&obs, &draws)?, p_hat(obs.stat(), &draws)?])
}

pub fn run_pointprocess_validity(cfg: &PpValidityConfig, seed: u64) -> Result<PpValidityResult> {
    if cfg.delta == 0 || cfg.b % cfg.delta != 0 || !(0.0..=1.0).contains(&cfg.rate) {
        return Err(Error::domain("need delta dividing b and a rate in [0, 1]"));
    }
    let ps = replicate(seed, cfg.replications, |_, rng| -> Result<[f64; 4]> {
        let ti = bernoulli_train(cfg.b, cfg.rate, rng);
        let tj = bernoulli_train(cfg.b, cfg.rate, rng);
        let fiber = BinnedPairFiber::from_times(cfg.delta, cfg.b, &ti, &tj)?;
        let [ps, ph] = one_sign(&fiber, &ti, &tj, TiltSign::Plus, cfg.n, rng)?;
        let [ms, mh] = one_sign(&fiber, &ti, &tj, TiltSign::Minus, cfg.n, rng)?;
        Ok([ps, ms, ph, mh])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let col = |k: usize| -> Result<ValidityReport> {
        let v: Vec<f64> = ps.iter().map(|p| p[k]).collect();
        ValidityReport::from_pvalues(&v, &cfg.alphas, cfg.k)
    };
    Ok(PpValidityResult { plus_star: col(0)?, minus_star: col(1)?, plus_hat: col(2)?, minus_hat: col(3)? })
}
