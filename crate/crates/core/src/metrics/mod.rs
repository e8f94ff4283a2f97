//! Quantities derived from posteriors: calibration error, expected cost,
//! rankings and practical-equivalence comparisons.
//!
//! Everything Monte-Carlo here takes an explicit RNG and is deterministic
//! given `(seed, n_samples)`.

mod cost;
pub(crate) mod ece;
mod rank;
mod rope;

pub use cost::{expected_cost, expected_cost_posterior};
pub use ece::{
    bin_confidences, ece_exact, ece_posterior, groupwise_ece_posterior, reliability_diagram,
    EcePosterior, ReliabilityBin, ReliabilityDiagram,
};
pub use rank::{rank_distribution, rank_distribution_by, GroupRank, RankDistribution};
pub use rope::{rope_compare, Region, RopeResult};

/// Monte-Carlo sample count used wherever a caller does not choose one.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Credible level for reported intervals.
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Half-width of the practical-equivalence region.
pub const DEFAULT_EPSILON: f64 = 0.05;
