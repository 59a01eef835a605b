//! Scoring simulated hydrographs against observations: RMSE / Pearson r /
//! NSE, flow-band breakdowns, lag correlation, cross-trial medians and the
//! CSV/JSON report writers.

pub mod metrics;
pub mod report;

pub use metrics::{band_rmse, lag_correlation, median, nse, pearson_r, rmse, BandRmse};
pub use report::{
    assemble_report, data_fingerprint, evaluate_checkpoint, median_over_trials, median_predictions,
    write_predictions, EvalData, MedianMetrics, MetricsReport, MetricsRow, Period,
    PeriodEvaluation, PeriodMetrics, TrialEvaluation,
};
