//! Evaluation against a fully labeled pool: estimation error, ranking
//! quality, labels needed to identify, comparison success, and paired
//! aggregation over runs.
//!
//! Every function is pure in (trajectories, truth).

mod aggregate;
mod evaluate;
mod measures;
mod truth;
mod wilcoxon;

pub use aggregate::{
    aggregate_runs, median, summarize_methods, Aggregate, EvaluationReport, MethodRuns,
    MetricSummary, Significance, ALPHA,
};
pub use evaluate::{confusion_reference, evaluate_runs, mrr_by_step};
pub use measures::{
    comparison_success, ece_percentage_error, labels_to_identify, mrr, rmse_confusion,
    rmse_confusion_scaled, rmse_groupwise, Identification, LAMBDA_TOLERANCE,
};
pub use truth::{marginal_ece, GroundTruth, MARGINAL_BINS, TRUTH_SEED};
pub use wilcoxon::{average_ranks, wilcoxon_signed_rank, Wilcoxon, EXACT_MAX_PAIRS};
