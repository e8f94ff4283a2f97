//! Arm-selection policies: Thompson sampling and its top-two and
//! multiple-play variants, greedy variance reduction, expected-model-change
//! comparison, and the random / epsilon-greedy / Bayes-UCB baselines.
//!
//! All policies are pure functions of `(beliefs, config, rng)`. Arms that are
//! exhausted are passed as ineligible and never returned.

mod beliefs;
mod select;

pub use beliefs::{
    arm_metric, current_rope, expected_lambda, expected_reward, ArmBelief, ArmDraw,
    CalibrationArm, RewardContext,
};
pub use select::{
    baseline_select, comparison_select, mpts_select, select, ts_select, ttts_select,
    variance_greedy_select, BaselineKind, TTTS_MAX_RESAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{Direction, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Random,
    #[default]
    Thompson,
    TopTwoThompson,
    MultiplePlayThompson,
    EpsilonGreedy,
    BayesUcb,
    VarianceGreedy,
    ComparisonGreedy,
}

fn default_m() -> usize {
    1
}
fn default_beta_resample() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_ucb_quantile() -> f64 {
    0.975
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    #[serde(default)]
    pub kind: StrategyKind,
    /// Arms pulled per round (multiple-play only).
    #[serde(default = "default_m")]
    pub m: usize,
    /// Probability of re-sampling for a challenger (top-two only).
    #[serde(default = "default_beta_resample")]
    pub beta_resample: f64,
    /// Exploration probability (epsilon-greedy only).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Upper quantile used by Bayes-UCB; mirrored for min-direction tasks.
    #[serde(default = "default_ucb_quantile")]
    pub ucb_quantile: f64,
    /// Defaults to `min` for accuracy identification and `max` for
    /// calibration and cost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self::of_kind(StrategyKind::Thompson)
    }
}

impl StrategyConfig {
    pub fn of_kind(kind: StrategyKind) -> Self {
        StrategyConfig {
            kind,
            m: default_m(),
            beta_resample: default_beta_resample(),
            epsilon: default_epsilon(),
            ucb_quantile: default_ucb_quantile(),
            direction: None,
        }
    }

    pub fn direction_for(&self, task: Task) -> Direction {
        self.direction.unwrap_or(match task {
            Task::IdentifyEce | Task::IdentifyCost => Direction::Max,
            _ => Direction::Min,
        })
    }

    pub fn validate(&self, task: Task) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m == 0 {
            return bad("strategy.m must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.beta_resample) {
            return bad(format!("strategy.beta_resample {} not in [0, 1]", self.beta_resample));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("strategy.epsilon {} not in [0, 1]", self.epsilon));
        }
        if !(self.ucb_quantile > 0.0 && self.ucb_quantile < 1.0) {
            return bad(format!("strategy.ucb_quantile {} not in (0, 1)", self.ucb_quantile));
        }
        match (self.kind, task) {
            (StrategyKind::VarianceGreedy, t) if !t.is_estimation() => {
                bad("variance-greedy needs an estimation task".into())
            }
            (StrategyKind::ComparisonGreedy, t) if t != Task::Compare => {
                bad("comparison-greedy needs the compare task".into())
            }
            (StrategyKind::BayesUcb, Task::Compare) => {
                bad("bayes-ucb is not defined for the compare task".into())
            }
            _ => Ok(()),
        }
    }
}
