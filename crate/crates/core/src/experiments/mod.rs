//! Desk-scale reproductions of the simulation studies.
//!
//! Each runner is a pure function of its configuration and master seed; the
//! [`RunDir`] helper persists results next to a JSON manifest.

mod config;
mod finch;
mod gaussian;
mod manifest;
mod multitest;
mod plot;
mod pointprocess;
mod rasch_ci;
mod table52;

pub use config::KeyValues;
pub use finch::{run_finch, FinchConfig, FinchResult};
pub use gaussian::{
    run_gaussian_cdf, run_gaussian_mse, GaussianCdfEntry, GaussianCdfTable, GaussianConfig, GaussianMseRow,
    GaussianMseTable, GAUSSIAN_ALPHAS, GAUSSIAN_ESTIMATORS,
};
pub use manifest::{RunDir, RunManifest, RunStatus};
pub use multitest::{run_multitest_sim, MultitestConfig, MultitestRow, MultitestTable, MULTITEST_ESTIMATORS};
pub use plot::{LinePlot, Series};
pub use pointprocess::{run_pointprocess_validity, PpValidityConfig, PpValidityResult};
pub use rasch_ci::{run_rasch_ci, RaschCiResult, RaschCiRow, RaschSimConfig};
pub use table52::{log_schedule, run_structured_table, Table52Config, Table52Result, TrajectoryPoint};

pub(crate) fn csv_string<I, R>(header: &[&str], rows: I) -> crate::Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
