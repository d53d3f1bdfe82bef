//! Importance-sampling p-values that stay valid at every Monte Carlo sample size.
//!
//! The crate is organised in layers:
//!
//! * [`estimators`]: the four p-value estimators (`p_hat`, `p_tilde` and their
//!   corrected counterparts), two-sided combination, Wald limits, weight diagnostics
//!   and test statistics.
//! * [`proposals`]: target/proposal pairs that can both sample and evaluate their
//!   exact log-probability anywhere, including at the observed data.
//! * [`inference`]: Bonferroni control and confidence sets by test inversion.
//! * [`oracle`]: enumeration oracles and the joint-distribution validity tester.
//! * [`experiments`]: desk-scale reproductions with manifests and CSV/SVG output.
//!
//! The estimator layer is generic over the floating-point type; the aliases at the
//! crate root fix it to `f64` (or `f32`) for everyday use.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod inference;
pub mod oracle;
pub mod proposals;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod table;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type LogWeight64 = estimators::LogWeight<f64>;
pub type WeightedDraw64 = estimators::WeightedDraw<f64>;
pub type ObservedPoint64 = estimators::ObservedPoint<f64>;
pub type PValueReport64 = estimators::PValueReport<f64>;

pub type LogWeight32 = estimators::LogWeight<f32>;
pub type WeightedDraw32 = estimators::WeightedDraw<f32>;
pub type ObservedPoint32 = estimators::ObservedPoint<f32>;
pub type PValueReport32 = estimators::PValueReport<f32>;
