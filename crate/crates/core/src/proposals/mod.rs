//! Target/proposal pairs.
//!
//! Every proposal here can both draw a point and evaluate its exact log-probability
//! at an arbitrary support point. The second ability is what makes `w(X)` of the
//! real observation available to the corrected estimators.

mod cp;
mod finch;
mod gaussian;
mod mixture;
mod permutation;
mod pointprocess;
mod rasch;
mod structured;

use rand::Rng;

pub use cp::{conditional_poisson_subset_log_prob, ColumnSampler, ColumnWorkspace};
pub use finch::{finch_matrix, FINCH_COL_SUMS, FINCH_ROW_SUMS};
pub use gaussian::GaussianPair;
pub use mixture::MixtureProposal;
pub use permutation::{PermutationFiber, TiltedPermutation};
pub use pointprocess::{BinnedPairFiber, TiltSign, TiltedPointProcess, TiltedPointProcessConfig};
pub use rasch::{
    rasch_log_weight, rasch_log_weight_from, rasch_mixture, RaschModel, RASCH_ALPHA, RASCH_BETA, RASCH_KAPPA,
};
pub use structured::{
    structured_fiber, structured_from_first_row, structured_observed, structured_table_direct_sample,
    structured_first_row_stat, STRUCTURED_COLS, STRUCTURED_OBSERVED_ONES, STRUCTURED_ROWS,
};

use crate::Result;

/// Outcome of one proposal draw.
#[derive(Debug, Clone, PartialEq)]
pub enum Draw<P> {
    Point { point: P, log_q: f64 },
    /// A sequential sampler ran out of completions; the draw carries weight zero.
    DeadEnd,
}

impl<P> Draw<P> {
    pub fn point(&self) -> Option<&P> {
        match self {
            Draw::Point { point, .. } => Some(point),
            Draw::DeadEnd => None,
        }
    }

    pub fn log_q(&self) -> Option<f64> {
        match self {
            Draw::Point { log_q, .. } => Some(*log_q),
            Draw::DeadEnd => None,
        }
    }

    pub fn is_dead_end(&self) -> bool {
        matches!(self, Draw::DeadEnd)
    }
}

/// A discrete proposal distribution with exact log-probabilities.
pub trait Proposal {
    type Point;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Self::Point>>;

    /// Exact `ln Q(point)`; `-inf` if the point cannot be produced.
    fn log_prob(&self, point: &Self::Point) -> Result<f64>;
}
