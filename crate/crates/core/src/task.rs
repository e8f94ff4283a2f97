use serde::{Deserialize, Serialize};

/// Assessment task driving rewards, outcome kinds and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    EstimateAccuracy,
    EstimateConfusion,
    IdentifyAccuracy,
    IdentifyEce,
    IdentifyCost,
    Compare,
}

impl Task {
    /// Tasks whose arms carry Dirichlet beliefs and observe the true class.
    pub fn needs_true_class(self) -> bool {
        matches!(self, Task::EstimateConfusion | Task::IdentifyCost)
    }

    pub fn is_estimation(self) -> bool {
        matches!(self, Task::EstimateAccuracy | Task::EstimateConfusion)
    }

    pub fn is_identification(self) -> bool {
        matches!(self, Task::IdentifyAccuracy | Task::IdentifyEce | Task::IdentifyCost)
    }

    pub fn outcome_kind(self) -> OutcomeKind {
        if self.needs_true_class() {
            OutcomeKind::TrueClass
        } else {
            OutcomeKind::Correctness
        }
    }
}

/// Whether the extreme group is the one with the smallest or largest metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Min,
    Max,
}

impl Direction {
    /// Maps a metric onto a "larger is more extreme" score.
    pub fn orient(self, value: f64) -> f64 {
        match self {
            Direction::Min => -value,
            Direction::Max => value,
        }
    }

    /// Group indices ordered from most to least extreme; ties keep index order.
    pub fn order(self, values: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| {
            self.orient(values[b])
                .total_cmp(&self.orient(values[a]))
                .then(a.cmp(&b))
        });
        idx
    }
}

/// What the oracle reveals per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeKind {
    /// `z = 1{y = y_hat}`
    Correctness,
    /// `z = y`
    TrueClass,
}
