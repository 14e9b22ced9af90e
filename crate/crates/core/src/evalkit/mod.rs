//! Metrics, ROC curves, oracle tuning and the replication harness.

pub mod experiment;
pub mod metrics;
pub mod rate;
pub mod roc;

pub use experiment::{
    estimate, harness_psd_options, mean_sd, prepare_matrix, replicate_experiment, solve_path, CellKey,
    CellReport, EstimatorName, ExperimentConfig, ExperimentReport, Grids, MethodName, PsdHandling,
    ReplicationSummary,
};
pub use metrics::{sin_angle, support_metrics, SupportMetrics};
pub use rate::{min_sample_size, rate_check, RateRow, RateTable};
pub use roc::{oracle_delta, roc_curve, RocCurve, RocPoint, SparserWhen};
