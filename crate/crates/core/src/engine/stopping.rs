use rand::Rng;

use crate::error::{Error, Result};
use crate::evalharness::{comparison_success, mrr};
use crate::metrics::Region;
use crate::strategies::{arm_metric, current_rope, ArmBelief, RewardContext};
use crate::task::Task;

/// Identification stops once MRR exceeds this.
pub const MRR_THRESHOLD: f64 = 0.99;

/// Benchmark-only knowledge of the answer.
#[derive(Debug, Clone, PartialEq)]
pub enum StopTruth {
    /// True extreme arms, most extreme first.
    Identify { top: Vec<usize> },
    Compare { eta: Region, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopDecision {
    pub stop: bool,
    pub reason: Option<String>,
}

impl StopDecision {
    fn go_on() -> Self {
        StopDecision {
            stop: false,
            reason: None,
        }
    }
}

/// Arm metric at the posterior mean, `None` for tasks without one.
pub fn point_metrics(ctx: &RewardContext<'_>, beliefs: &[ArmBelief]) -> Option<Vec<f64>> {
    beliefs
        .iter()
        .enumerate()
        .map(|(a, b)| arm_metric(ctx, a, &b.mean(), b))
        .collect()
}

/// Active arms ordered from most to least extreme by posterior-mean metric.
pub fn predicted_order(ctx: &RewardContext<'_>, beliefs: &[ArmBelief], active: &[bool]) -> Vec<usize> {
    let metrics = point_metrics(ctx, beliefs).unwrap_or_else(|| vec![0.0; beliefs.len()]);
    ctx.direction
        .order(&metrics)
        .into_iter()
        .filter(|&a| active[a])
        .collect()
}

/// Benchmark stopping rule. Estimation never stops early; identification
/// and comparison need `truth`.
pub fn check_stopping<R: Rng + ?Sized>(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    active: &[bool],
    truth: Option<&StopTruth>,
    rng: &mut R,
) -> Result<StopDecision> {
    if ctx.task.is_estimation() {
        return Ok(StopDecision::go_on());
    }
    match (ctx.task, truth) {
        (_, None) => Err(Error::MissingTruth),
        (Task::Compare, Some(StopTruth::Compare { eta, lambda })) => {
            let rope = current_rope(ctx, beliefs, rng);
            Ok(if comparison_success(&rope, *eta, *lambda) {
                StopDecision {
                    stop: true,
                    reason: Some(format!(
                        "region {:?} with probability {:.4} matches the truth",
                        rope.eta, rope.lambda
                    )),
                }
            } else {
                StopDecision::go_on()
            })
        }
        (t, Some(StopTruth::Identify { top })) if t.is_identification() => {
            let order = predicted_order(ctx, beliefs, active);
            let score = mrr(&order, top)?;
            Ok(if score > MRR_THRESHOLD {
                StopDecision {
                    stop: true,
                    reason: Some(format!("MRR {score:.4} exceeds {MRR_THRESHOLD}")),
                }
            } else {
                StopDecision::go_on()
            })
        }
        _ => Err(Error::InvalidParameter(format!(
            "ground truth does not fit task {:?}",
            ctx.task
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::BetaPosterior;
    use crate::rng::rng_from_seed;
    use crate::task::Direction;

    fn ctx(task: Task, weights: &[f64]) -> RewardContext<'_> {
        RewardContext {
            task,
            direction: Direction::Min,
            weights,
            costs: None,
            epsilon: 0.05,
            rope_samples: 10_000,
        }
    }

    fn beta(a: f64, b: f64) -> ArmBelief {
        ArmBelief::Accuracy(BetaPosterior::new(a, b).unwrap())
    }

    #[test]
    fn identification_stops_on_exact_top() {
        let w = [0.5, 0.5];
        let c = ctx(Task::IdentifyAccuracy, &w);
        let beliefs = [beta(9.0, 1.0), beta(2.0, 8.0)];
        let mut rng = rng_from_seed(0);
        let truth = StopTruth::Identify { top: vec![1] };
        let d = check_stopping(&c, &beliefs, &[true, true], Some(&truth), &mut rng).unwrap();
        assert!(d.stop);
        let wrong = StopTruth::Identify { top: vec![0] };
        let d = check_stopping(&c, &beliefs, &[true, true], Some(&wrong), &mut rng).unwrap();
        assert!(!d.stop);
        assert!(matches!(
            check_stopping(&c, &beliefs, &[true, true], None, &mut rng),
            Err(Error::MissingTruth)
        ));
    }

    #[test]
    fn estimation_never_stops() {
        let w = [0.5, 0.5];
        let c = ctx(Task::EstimateAccuracy, &w);
        let beliefs = [beta(9.0, 1.0), beta(2.0, 8.0)];
        let truth = StopTruth::Identify { top: vec![1] };
        let d = check_stopping(&c, &beliefs, &[true, true], Some(&truth), &mut rng_from_seed(0))
            .unwrap();
        assert!(!d.stop);
    }

    #[test]
    fn comparison_needs_lambda_within_five_percent() {
        let w = [0.5, 0.5];
        let c = ctx(Task::Compare, &w);
        let beliefs = [beta(280.0, 203.0), beta(351.0, 162.0)];
        let rope = current_rope(&c, &beliefs, &mut rng_from_seed(3));
        assert_eq!(rope.eta, Region::Below);
        let close = StopTruth::Compare {
            eta: Region::Below,
            lambda: rope.lambda,
        };
        let d = check_stopping(&c, &beliefs, &[true, true], Some(&close), &mut rng_from_seed(3))
            .unwrap();
        assert!(d.stop);
        // lambda 0.85 against a true 0.8 is 6.25% off.
        assert!(!comparison_success(
            &crate::metrics::RopeResult::from_mu([0.85, 0.15, 0.0], 0.05, 100),
            Region::Below,
            0.8
        ));
    }
}
