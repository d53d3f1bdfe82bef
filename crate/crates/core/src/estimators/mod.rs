//! P-value estimators, corrections, combination rules and weight diagnostics.
//!
//! All weights are carried in log space. Sums of weights are formed after shifting
//! by the largest log-weight and accumulated with compensated summation.

mod diagnostics;
mod pvalue;
mod statistic;
mod streaming;
pub(crate) mod sum;
mod weights;

pub use diagnostics::{ess_diagnostic, ess_from_cv_squared, weight_cv_squared};
pub use pvalue::{
    estimate, p_hat, p_hat_star, p_hat_std_error, p_tilde, p_tilde_star, p_tilde_std_error,
    two_sided_combine, wald_upper_limit, EstimatorKind, PValueReport,
};
pub use statistic::{
    co_occurrence_s2, column_index_sum, evaluate_statistic, lag_counts, median, median_diff,
    PooledTransform, StatData, StatisticKind,
};
pub use streaming::RunningTail;
pub use sum::Compensated;
pub use weights::{LogWeight, ObservedPoint, WeightedDraw};
