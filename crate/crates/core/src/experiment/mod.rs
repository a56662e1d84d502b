//! Experiment runner behind the command-line interface.

mod config;
mod survey;
mod sweep;

pub use config::{parse_band, DatasetSource, ExperimentConfig, Overrides};
pub use survey::{
    evaluate_event, report_json, run_survey, write_stream, EvalReport, EventMetrics, EventOutcome,
    EventReport,
};
pub use sweep::{
    is_monotone_within, linspace, sweep_slope, sweep_vin, write_curve, SweepPoint,
    MIN_TICKS_PER_POINT,
};
