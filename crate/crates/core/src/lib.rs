//! Bayesian, label-efficient assessment of classifier performance.
//!
//! A pool of model predictions is partitioned into groups; each group's
//! accuracy, confusion column or calibration is a posterior that is refined
//! one label at a time, with a bandit policy choosing which group to label
//! next.

pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod evalharness;
pub mod metrics;
pub mod posterior;
pub mod priors;
pub mod report;
pub mod rng;
pub mod special;
pub mod strategies;
pub mod synth;
pub mod task;

pub use config::{Budget, SessionConfig};
pub use data::{CostMatrix, GroupIndex, PartitionSpec, Pool, PredictionRecord};
pub use engine::{Assessment, Session, Trajectory};
pub use error::{Error, Result};
pub use evalharness::GroundTruth;
pub use posterior::{BetaPosterior, DirichletPosterior, PosteriorSummary};
pub use priors::PriorConfig;
pub use report::{build_report, AssessmentReport};
pub use strategies::{StrategyConfig, StrategyKind};
pub use synth::{synth_pool, SynthSpec};
pub use task::{Direction, OutcomeKind, Task};
