use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::CostMatrix;
use crate::metrics::{rope_compare, RopeResult};
use crate::posterior::{BetaPosterior, DirichletPosterior};
use crate::rng::rng_from_seed;
use crate::task::{Direction, Task};

/// Belief held for one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArmBelief {
    /// Beta belief over the arm's accuracy.
    Accuracy(BetaPosterior),
    /// Per-bin accuracy beliefs of one class, for classwise calibration.
    Calibration(CalibrationArm),
    /// Dirichlet belief over the true class given this predicted class.
    Confusion(DirichletPosterior),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationArm {
    pub bins: Vec<BetaPosterior>,
    /// Within-arm bin weights `p_gb`.
    pub weights: Vec<f64>,
    /// Bin confidences `s_gb`.
    pub confidences: Vec<f64>,
}

impl CalibrationArm {
    pub fn ece_at(&self, accuracies: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(accuracies)
            .zip(&self.confidences)
            .map(|((p, t), s)| p * (t - s).abs())
            .sum()
    }
}

/// A point in an arm's parameter space: a posterior draw or the posterior mean.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmDraw {
    Rate(f64),
    Rates(Vec<f64>),
    Column(Vec<f64>),
}

impl ArmBelief {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmDraw {
        match self {
            ArmBelief::Accuracy(p) => ArmDraw::Rate(p.sample(rng)),
            ArmBelief::Calibration(c) => {
                // Zero-weight bins cannot change the reward; skip their draws.
                ArmDraw::Rates(
                    c.bins
                        .iter()
                        .zip(&c.weights)
                        .map(|(p, w)| if *w > 0.0 { p.sample(rng) } else { p.mean() })
                        .collect(),
                )
            }
            ArmBelief::Confusion(d) => ArmDraw::Column(d.sample(rng)),
        }
    }

    pub fn mean(&self) -> ArmDraw {
        match self {
            ArmBelief::Accuracy(p) => ArmDraw::Rate(p.mean()),
            ArmBelief::Calibration(c) => ArmDraw::Rates(c.bins.iter().map(|p| p.mean()).collect()),
            ArmBelief::Confusion(d) => ArmDraw::Column(d.mean()),
        }
    }

    /// Number of labels absorbed so far.
    pub fn labels(&self) -> u64 {
        match self {
            ArmBelief::Accuracy(p) => p.trials,
            ArmBelief::Calibration(c) => c.bins.iter().map(|p| p.trials).sum(),
            ArmBelief::Confusion(d) => d.total_count(),
        }
    }

    pub fn as_beta(&self) -> Option<&BetaPosterior> {
        match self {
            ArmBelief::Accuracy(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_dirichlet(&self) -> Option<&DirichletPosterior> {
        match self {
            ArmBelief::Confusion(d) => Some(d),
            _ => None,
        }
    }
}

/// Everything a reward needs beyond the arm beliefs.
#[derive(Debug, Clone, Copy)]
pub struct RewardContext<'a> {
    pub task: Task,
    pub direction: Direction,
    /// Arm weights `p_g`.
    pub weights: &'a [f64],
    pub costs: Option<&'a CostMatrix>,
    pub epsilon: f64,
    pub rope_samples: usize,
}

/// The point metric of an arm at `draw` (accuracy, ECE or expected cost).
/// `None` for estimation and comparison tasks, which have no arm metric.
pub fn arm_metric(ctx: &RewardContext<'_>, arm: usize, draw: &ArmDraw, belief: &ArmBelief) -> Option<f64> {
    match (ctx.task, draw, belief) {
        (Task::IdentifyAccuracy, ArmDraw::Rate(t), _) => Some(*t),
        (Task::IdentifyEce, ArmDraw::Rates(ts), ArmBelief::Calibration(c)) => Some(c.ece_at(ts)),
        (Task::IdentifyCost, ArmDraw::Column(theta), _) => {
            let costs = ctx.costs.expect("cost task without a cost matrix");
            Some(
                theta
                    .iter()
                    .enumerate()
                    .map(|(j, t)| costs.get(j, arm) * t)
                    .sum(),
            )
        }
        _ => None,
    }
}

/// Expected reward of pulling `arm` given a parameter point for every arm.
///
/// `substream` seeds the Monte-Carlo evaluation of the comparison reward so
/// every hypothetical branch sees the same random numbers.
pub fn expected_reward(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    arm: usize,
    draw: &ArmDraw,
    substream: u64,
) -> f64 {
    let belief = &beliefs[arm];
    match (ctx.task, belief, draw) {
        (Task::EstimateAccuracy, ArmBelief::Accuracy(p), ArmDraw::Rate(t)) => {
            ctx.weights[arm] * (p.variance() - p.expected_variance_after(*t))
        }
        (Task::EstimateConfusion, ArmBelief::Confusion(d), ArmDraw::Column(theta)) => {
            ctx.weights[arm] * (d.total_variance() - d.expected_variance_after(theta))
        }
        (Task::Compare, ArmBelief::Accuracy(_), ArmDraw::Rate(t)) => {
            expected_lambda(ctx, beliefs, arm, *t, substream)
        }
        _ => {
            let m = arm_metric(ctx, arm, draw, belief)
                .unwrap_or_else(|| panic!("arm belief does not fit task {:?}", ctx.task));
            ctx.direction.orient(m)
        }
    }
}

/// `E[lambda | L + (arm, z)]` with `P(z = 1) = p_success`.
///
/// The updated arm is always passed first to the comparison so both branches
/// consume the substream identically; lambda is invariant to the swap.
pub fn expected_lambda(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    arm: usize,
    p_success: f64,
    substream: u64,
) -> f64 {
    let other = 1 - arm;
    let (this, that) = match (&beliefs[arm], &beliefs[other]) {
        (ArmBelief::Accuracy(a), ArmBelief::Accuracy(b)) => (*a, *b),
        _ => panic!("comparison needs two Beta arms"),
    };
    let lambda = |updated: BetaPosterior| -> f64 {
        let mut rng = rng_from_seed(substream);
        rope_compare(&updated, &that, ctx.epsilon, ctx.rope_samples, &mut rng).lambda
    };
    p_success * lambda(this.update(true)) + (1.0 - p_success) * lambda(this.update(false))
}

/// ROPE result of arm 0 against arm 1.
pub fn current_rope<R: Rng + ?Sized>(ctx: &RewardContext<'_>, beliefs: &[ArmBelief], rng: &mut R) -> RopeResult {
    let a = beliefs[0].as_beta().expect("comparison arms are Beta");
    let b = beliefs[1].as_beta().expect("comparison arms are Beta");
    rope_compare(a, b, ctx.epsilon, ctx.rope_samples, rng)
}
