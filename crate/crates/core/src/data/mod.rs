//! Pool representation, prediction-file ingestion, group partitions and
//! cost matrices.

mod cost;
mod partition;
mod pool;

pub use cost::{load_cost_matrix, CostMatrix};
pub use partition::{assign_groups, estimate_group_weights, GroupIndex, PartitionSpec};
pub use pool::{ingest_predictions, InputFormat, Pool, PredictionRecord};
