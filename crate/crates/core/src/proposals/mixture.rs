use rand::Rng;

use super::{Draw, Proposal};
use crate::special::log_sum_exp;
use crate::{Error, Result};

/// `Q = sum_l lambda_l Q_l`; `log_q` of a draw is the full mixture density, not the
/// density of the component that produced it.
#[derive(Debug, Clone)]
pub struct MixtureProposal<P> {
    components: Vec<P>,
    log_lambda: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<P: Proposal> MixtureProposal<P> {
    pub fn new(weighted: Vec<(f64, P)>) -> Result<Self> {
        if weighted.is_empty() {
            return Err(Error::domain("mixture needs at least one component"));
        }
        if weighted.iter().any(|(l, _)| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::domain("mixture weights must be positive and finite"));
        }
        let total: f64 = weighted.iter().map(|(l, _)| l).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("mixture weights sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(weighted.len());
        let mut log_lambda = Vec::with_capacity(weighted.len());
        let mut components = Vec::with_capacity(weighted.len());
        for (l, p) in weighted {
            acc += l / total;
            cumulative.push(acc);
            log_lambda.push((l / total).ln());
            components.push(p);
        }
        Ok(MixtureProposal { components, log_lambda, cumulative })
    }

    pub fn uniform(components: Vec<P>) -> Result<Self> {
        let l = 1.0 / components.len().max(1) as f64;
        Self::new(components.into_iter().map(|p| (l, p)).collect())
    }

    pub fn components(&self) -> &[P] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `ln lambda_l + ln Q_l(point)` per component.
    pub fn component_log_probs(&self, point: &P::Point) -> Result<Vec<f64>> {
        self.components
            .iter()
            .zip(&self.log_lambda)
            .map(|(c, ll)| Ok(ll + c.log_prob(point)?))
            .collect()
    }

    pub fn choose_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.components.len() - 1)
    }
}

impl<P: Proposal> Proposal for MixtureProposal<P> {
    type Point = P::Point;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<P::Point>> {
        let l = self.choose_component(rng);
        match self.components[l].sample(rng)? {
            Draw::Point { point, .. } => {
                let log_q = self.log_prob(&point)?;
                Ok(Draw::Point { point, log_q })
            }
            Draw::DeadEnd => Ok(Draw::DeadEnd),
        }
    }

    fn log_prob(&self, point: &P::Point) -> Result<f64> {
        Ok(log_sum_exp(self.component_log_probs(point)?))
    }
}
