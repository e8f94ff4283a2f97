//! Session/experiment configuration file.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::PartitionSpec;
use crate::error::{Error, Result};
use crate::metrics::{DEFAULT_EPSILON, DEFAULT_SAMPLES};
use crate::priors::PriorConfig;
use crate::strategies::StrategyConfig;
use crate::task::{OutcomeKind, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpenBudget {
    UntilStopped,
}

/// Label budget: a positive count, or `"until-stopped"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Budget {
    Labels(usize),
    Open(OpenBudget),
}

impl Budget {
    pub fn limit(self) -> Option<usize> {
        match self {
            Budget::Labels(n) => Some(n),
            Budget::Open(_) => None,
        }
    }
}

fn one() -> usize {
    1
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub task: Task,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub runs: usize,
    /// Derived from the task when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_kind: Option<OutcomeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_matrix: Option<PathBuf>,
    /// The two groups compared by the `compare` task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_groups: Option<[usize; 2]>,
    #[serde(default = "default_epsilon")]
    pub rope_epsilon: f64,
    /// Size of the extreme set to identify.
    #[serde(default = "one")]
    pub top_m: usize,
    /// Monte-Carlo samples for ROPE, ECE, cost and ranking summaries.
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Reserved. Instances are always drawn without replacement; `true` is
    /// rejected.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub with_replacement: bool,
}

impl SessionConfig {
    pub fn new(task: Task, budget: usize) -> Self {
        SessionConfig {
            task,
            partition: PartitionSpec::default(),
            prior: PriorConfig::default(),
            strategy: StrategyConfig::default(),
            budget: Budget::Labels(budget),
            seed: 0,
            runs: 1,
            outcome_kind: None,
            cost_matrix: None,
            compare_groups: None,
            rope_epsilon: DEFAULT_EPSILON,
            top_m: 1,
            n_samples: DEFAULT_SAMPLES,
            with_replacement: false,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: SessionConfig = serde_json::from_reader(File::open(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn outcome(&self) -> OutcomeKind {
        self.outcome_kind.unwrap_or(self.task.outcome_kind())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.budget == Budget::Labels(0) {
            return bad("budget must be at least 1");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.top_m == 0 {
            return bad("top_m must be at least 1");
        }
        if self.n_samples == 0 {
            return bad("n_samples must be at least 1");
        }
        if self.with_replacement {
            return bad("with_replacement is reserved and not supported");
        }
        if !(self.rope_epsilon > 0.0) {
            return bad("rope_epsilon must be positive");
        }
        if self.outcome() != self.task.outcome_kind() {
            return bad(if self.task.needs_true_class() {
                "confusion and cost tasks need outcome_kind = true-class"
            } else {
                "this task needs outcome_kind = correctness"
            });
        }
        self.partition.validate()?;
        self.prior.validate()?;
        self.strategy.validate(self.task)?;
        match self.task {
            Task::EstimateConfusion | Task::IdentifyCost
                if self.partition != PartitionSpec::PredictedClass =>
            {
                bad("confusion and cost tasks need a predicted-class partition")
            }
            Task::IdentifyEce if !matches!(self.partition, PartitionSpec::ClassAndBin { .. }) => {
                bad("identify-ece needs a class-and-bin partition")
            }
            Task::Compare => match self.compare_groups {
                Some([a, b]) if a != b => Ok(()),
                Some(_) => bad("compare_groups must name two different groups"),
                None => bad("compare needs compare_groups"),
            },
            _ => Ok(()),
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
