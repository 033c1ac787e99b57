//! Test-set metrics, the two-period composite surrogate and report tables.

mod composite;
mod metrics;
mod report;

pub use composite::CompositeModel;
pub use metrics::{
    co2_pore_volume, linearity_deviation, ErrorAccumulator, pore_volume_of, recombination_error, rmse_overall, rmse_per_row,
    rmse_vs_time, well_series_error, Prediction,
};
pub use report::{series_text, ScenarioReport, ScenarioRow, TimingReport, SCENARIO_REPORT_HEADER};
