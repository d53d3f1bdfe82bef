//! Bonferroni control and confidence sets by inverting tests over a parameter grid.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimators::{p_tilde, p_tilde_star, two_sided_combine, LogWeight, ObservedPoint, WeightedDraw};
use crate::proposals::{rasch_log_weight_from, ColumnSampler, ColumnWorkspace, MixtureProposal};
use crate::table::{BinaryMatrix, Covariates};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTestOutcome {
    pub pvalues: Vec<f64>,
    pub alpha: f64,
    pub n_tests: usize,
    pub rejected: Vec<usize>,
}

impl MultiTestOutcome {
    pub fn threshold(&self) -> f64 {
        self.alpha / self.n_tests as f64
    }
}

/// Rejects hypothesis `i` iff `p_i <= alpha / n_tests`.
pub fn bonferroni(pvalues: &[f64], alpha: f64, n_tests: usize) -> Result<MultiTestOutcome> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha {alpha} not in (0, 1)")));
    }
    if n_tests == 0 || n_tests < pvalues.len() {
        return Err(Error::domain(format!("{n_tests} tests cannot cover {} p-values", pvalues.len())));
    }
    if pvalues.iter().any(|p| p.is_nan()) {
        return Err(Error::InvalidValue("NaN p-value".into()));
    }
    let cut = alpha / n_tests as f64;
    let rejected = pvalues.iter().enumerate().filter(|(_, &p)| p <= cut).map(|(i, _)| i).collect();
    Ok(MultiTestOutcome { pvalues: pvalues.to_vec(), alpha, n_tests, rejected })
}

/// Grid values whose p-value exceeds `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub grid: Vec<f64>,
    pub pvalues: Vec<f64>,
    pub alpha: f64,
    pub retained: Vec<bool>,
    pub hull: Option<(f64, f64)>,
    /// `false` when the retained grid points have gaps.
    pub contiguous: bool,
}

impl ConfidenceSet {
    pub fn new(grid: Vec<f64>, pvalues: Vec<f64>, alpha: f64) -> Result<Self> {
        if grid.len() != pvalues.len() {
            return Err(Error::shape(format!("{} grid points, {} p-values", grid.len(), pvalues.len())));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("grid must be strictly increasing"));
        }
        let retained: Vec<bool> = pvalues.iter().map(|&p| p > alpha).collect();
        let first = retained.iter().position(|&r| r);
        let last = retained.iter().rposition(|&r| r);
        let (hull, contiguous) = match (first, last) {
            (Some(a), Some(b)) => (Some((grid[a], grid[b])), retained[a..=b].iter().all(|&r| r)),
            _ => (None, true),
        };
        Ok(ConfidenceSet { grid, pvalues, alpha, retained, hull, contiguous })
    }

    pub fn is_empty(&self) -> bool {
        self.hull.is_none()
    }

    /// Hull length; 0 for an empty set.
    pub fn length(&self) -> f64 {
        self.hull.map_or(0.0, |(a, b)| b - a)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per grid point: `theta,pvalue,retained`.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["theta", "pvalue", "retained"])?;
        for ((t, p), r) in self.grid.iter().zip(&self.pvalues).zip(&self.retained) {
            w.write_record([t.to_string(), p.to_string(), u8::from(*r).to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Evaluate `pvalue_at` on every grid point (in parallel) and keep those above `alpha`.
pub fn invert_confidence_set<F>(grid: &[f64], pvalue_at: F, alpha: f64) -> Result<ConfidenceSet>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    let pvalues = grid.par_iter().map(|&t| pvalue_at(t)).collect::<Result<Vec<_>>>()?;
    ConfidenceSet::new(grid.to_vec(), pvalues, alpha)
}

/// Evenly spaced grid `lo, lo + step, ..., hi` (endpoint included up to rounding).
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain("grid needs finite lo <= hi and positive step"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| lo + k as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaschPValueKind {
    Corrected,
    Uncorrected,
}

/// One observed table plus `n` mixture draws, reduced to what any tilt needs:
/// the covariate statistic and `ln sum_l Q_l` of every table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaschSample {
    pub obs_stat: f64,
    pub obs_log_q: f64,
    pub stats: Vec<f64>,
    /// `+inf` marks a dead-end draw (weight zero).
    pub log_q: Vec<f64>,
}

impl RaschSample {
    pub fn draw<R: Rng + ?Sized>(
        mix: &MixtureProposal<ColumnSampler<'_>>,
        observed: &BinaryMatrix,
        v: &Covariates,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut ws = ColumnWorkspace::new();
        let obs_stat = v.dot(observed)?;
        let obs_log_q = mix.log_component_sum(observed, &mut ws)?;
        let fiber = mix.components()[0].fiber();
        let mut y = BinaryMatrix::zeros(fiber.rows(), fiber.cols());
        let mut stats = Vec::with_capacity(n);
        let mut log_q = Vec::with_capacity(n);
        for _ in 0..n {
            let l = mix.choose_component(rng);
            match mix.components()[l].sample_into(rng, &mut y, &mut ws) {
                Some(_) => {
                    stats.push(v.dot(&y)?);
                    log_q.push(mix.log_component_sum(&y, &mut ws)?);
                }
                None => {
                    stats.push(0.0);
                    log_q.push(f64::INFINITY);
                }
            }
        }
        Ok(RaschSample { obs_stat, obs_log_q, stats, log_q })
    }

    pub fn n(&self) -> usize {
        self.stats.len()
    }

    /// Observation and draws for tilt `theta`, with statistic `sign * t`.
    pub fn weighted(&self, theta: f64, sign: f64) -> Result<(ObservedPoint<f64>, Vec<WeightedDraw<f64>>)> {
        let obs = ObservedPoint::new(sign * self.obs_stat, rasch_log_weight_from(theta, self.obs_stat, self.obs_log_q)?)?;
        let draws = self
            .stats
            .iter()
            .zip(&self.log_q)
            .map(|(&t, &lq)| {
                let w = if lq == f64::INFINITY { LogWeight::zero(false) } else { rasch_log_weight_from(theta, t, lq)? };
                WeightedDraw::new(sign * t, w)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((obs, draws))
    }
}

/// `min(1, 2 min(p+, p-))` from the stored sample at tilt `theta`.
pub fn two_sided_rasch_pvalue(theta: f64, sample: &RaschSample, kind: RaschPValueKind) -> Result<f64> {
    let one_side = |sign: f64| -> Result<f64> {
        let (obs, draws) = sample.weighted(theta, sign)?;
        match kind {
            RaschPValueKind::Corrected => p_tilde_star(&obs, &draws),
            RaschPValueKind::Uncorrected => Ok(p_tilde(obs.stat(), &draws)),
        }
    };
    two_sided_combine(one_side(1.0)?, one_side(-1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposals::{rasch_log_weight, rasch_mixture, Proposal};
    use crate::rng::stream;
    use crate::table::MarginFiber;

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni(&[0.004, 0.2], 0.05, 10).unwrap().rejected, vec![0]);
        assert!(bonferroni(&[1.0, 1.0, 1.0], 0.05, 3).unwrap().rejected.is_empty());
        assert_eq!(bonferroni(&[0.005], 0.05, 10).unwrap().rejected, vec![0]);
        assert!(bonferroni(&[0.1, 0.2], 0.05, 1).is_err());
        assert!(bonferroni(&[0.1], 1.0, 1).is_err());
    }

    #[test]
    fn confidence_set_examples() {
        let grid = [-1.0, 0.0, 1.0];
        let full = invert_confidence_set(&grid, |_| Ok(1.0), 0.05).unwrap();
        assert!(full.retained.iter().all(|&r| r));
        assert_eq!(full.hull, Some((-1.0, 1.0)));
        let empty = invert_confidence_set(&grid, |_| Ok(0.0), 0.05).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.length(), 0.0);
        let peak = invert_confidence_set(&grid, |t| Ok(if t == 0.0 { 0.5 } else { 0.01 }), 0.05).unwrap();
        assert_eq!(peak.retained, vec![false, true, false]);
        assert_eq!(peak.hull, Some((0.0, 0.0)));
        assert!(peak.contiguous);
    }

    #[test]
    fn gaps_are_flagged() {
        let set = ConfidenceSet::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.5, 0.01, 0.5, 0.01], 0.05).unwrap();
        assert_eq!(set.hull, Some((0.0, 2.0)));
        assert!(!set.contiguous);
        let csv = set.to_csv_string().unwrap();
        assert!(csv.starts_with("theta,pvalue,retained\n0,0.5,1\n"));
        let back: ConfidenceSet = serde_json::from_str(&set.to_json().unwrap()).unwrap();
        assert_eq!(back, set);
        assert!(ConfidenceSet::new(vec![1.0, 0.0], vec![0.5, 0.5], 0.05).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = linear_grid(-6.0, 6.0, 0.02).unwrap();
        assert_eq!(g.len(), 601);
        assert!((g[600] - 6.0).abs() < 1e-12);
    }

    fn small_sample(seed: u64) -> (RaschSample, MarginFiber, Covariates, BinaryMatrix) {
        let x = BinaryMatrix::from_rows(&[
            vec![1, 0, 1, 1, 0],
            vec![0, 1, 1, 0, 0],
            vec![1, 1, 0, 0, 1],
            vec![0, 0, 1, 1, 1],
        ])
        .unwrap();
        let v = Covariates::new(4, 5, (0..20).map(|k| ((k * 7) % 13) as f64 / 6.0 - 1.0).collect()).unwrap();
        let fiber = MarginFiber::of_matrix(&x);
        let sample = {
            let mix = rasch_mixture(&fiber, &v, &[-2.0, 0.0, 2.0]).unwrap();
            RaschSample::draw(&mix, &x, &v, 60, &mut stream(seed, 0)).unwrap()
        };
        (sample, fiber, v, x)
    }

    #[test]
    fn corrected_dominates_uncorrected() {
        for seed in 0..5 {
            let (sample, ..) = small_sample(seed);
            for theta in [-3.0, -1.0, 0.0, 0.5, 2.0] {
                let c = two_sided_rasch_pvalue(theta, &sample, RaschPValueKind::Corrected).unwrap();
                let u = two_sided_rasch_pvalue(theta, &sample, RaschPValueKind::Uncorrected).unwrap();
                assert!(c >= u, "theta {theta}: {c} < {u}");
            }
        }
    }

    #[test]
    fn stored_sample_matches_recomputation() {
        let (sample, fiber, v, x) = small_sample(11);
        let mix = rasch_mixture(&fiber, &v, &[-2.0, 0.0, 2.0]).unwrap();
        let mut rng = stream(11, 0);
        let mut draws_plus = Vec::new();
        let mut draws_minus = Vec::new();
        let theta = 0.8;
        for _ in 0..60 {
            match mix.sample(&mut rng).unwrap().point() {
                Some(y) => {
                    let w = rasch_log_weight(theta, y, &mix, &v).unwrap();
                    let t = v.dot(y).unwrap();
                    draws_plus.push(WeightedDraw::new(t, w).unwrap());
                    draws_minus.push(WeightedDraw::new(-t, w).unwrap());
                }
                None => {
                    draws_plus.push(WeightedDraw::new(0.0, LogWeight::zero(false)).unwrap());
                    draws_minus.push(WeightedDraw::new(0.0, LogWeight::zero(false)).unwrap());
                }
            }
        }
        let w = rasch_log_weight(theta, &x, &mix, &v).unwrap();
        let t = v.dot(&x).unwrap();
        let plus = p_tilde_star(&ObservedPoint::new(t, w).unwrap(), &draws_plus).unwrap();
        let minus = p_tilde_star(&ObservedPoint::new(-t, w).unwrap(), &draws_minus).unwrap();
        let direct = two_sided_combine(plus, minus).unwrap();
        let stored = two_sided_rasch_pvalue(theta, &sample, RaschPValueKind::Corrected).unwrap();
        assert!((direct - stored).abs() < 1e-12, "{direct} vs {stored}");
    }
}
