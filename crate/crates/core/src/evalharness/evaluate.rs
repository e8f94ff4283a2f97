use super::aggregate::MethodRuns;
use super::measures::{comparison_success, labels_to_identify, mrr, rmse_confusion, rmse_groupwise};
use super::truth::{GroundTruth, TRUTH_SEED};
use crate::data::PartitionSpec;
use crate::engine::{predicted_order, Assessment, Trajectory, MRR_THRESHOLD};
use crate::error::{Error, Result};
use crate::metrics::{bin_confidences, ece_exact, ece_posterior};
use crate::priors::{dirichlet_priors, PriorConfig};
use crate::rng::rng_from_seed;
use crate::strategies::{current_rope, ArmBelief};
use crate::task::Task;

/// MRR of the true top set after every step of `trajectory`.
pub fn mrr_by_step(assessment: &Assessment, truth: &GroundTruth, trajectory: &Trajectory) -> Result<Vec<f64>> {
    if truth.top.is_empty() {
        return Err(Error::MissingTruth);
    }
    let ctx = assessment.context();
    let active = assessment.active();
    let mut out = Vec::with_capacity(trajectory.steps.len());
    let mut failure = None;
    trajectory.replay_with(assessment, |_, beliefs| {
        match mrr(&predicted_order(&ctx, beliefs, &active), &truth.top) {
            Ok(v) => out.push(v),
            Err(e) => failure = failure.take().or(Some(e)),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn accuracy_means(beliefs: &[ArmBelief]) -> Vec<f64> {
    beliefs
        .iter()
        .map(|b| b.as_beta().map_or(f64::NAN, |p| p.mean()))
        .collect()
}

fn confusion_means(beliefs: &[ArmBelief]) -> Vec<Vec<f64>> {
    beliefs
        .iter()
        .map(|b| b.as_dirichlet().map_or_else(Vec::new, |d| d.mean()))
        .collect()
}

/// RMSE of the zero-label informative-prior confusion estimate.
pub fn confusion_reference(assessment: &Assessment, truth: &GroundTruth) -> Result<f64> {
    let conf = truth.confusion.as_ref().ok_or(Error::MissingTruth)?;
    let prior_cfg = PriorConfig {
        strength: assessment.config().prior.strength,
        ..PriorConfig::informative()
    };
    let prior = dirichlet_priors(assessment.pool(), assessment.index(), &prior_cfg)?;
    let means: Vec<Vec<f64>> = prior.iter().map(|d| d.mean()).collect();
    rmse_confusion(&means, conf, assessment.arm_weights())
}

/// Per-run metrics of one method. Percent-scaled where the metric is a
/// rate: `rmse` (x100), `labels_pct`, `ece_error`.
pub fn evaluate_runs(
    assessment: &Assessment,
    truth: &GroundTruth,
    trajectories: &[Trajectory],
) -> Result<MethodRuns> {
    let mut out = MethodRuns::new();
    let mut push = |name: &str, v: Option<f64>| out.entry(name.to_string()).or_default().push(v);
    let weights = assessment.arm_weights();
    let cfg = assessment.config();
    let reference = match cfg.task {
        Task::EstimateConfusion => Some(confusion_reference(assessment, truth)?),
        _ => None,
    };
    let pool_size = assessment.pool().len();

    for t in trajectories {
        let beliefs = t.replay(assessment)?;
        push("labels", Some(t.steps.len() as f64));
        match cfg.task {
            Task::EstimateAccuracy => {
                let est = accuracy_means(&beliefs);
                let tru: Vec<f64> = truth.accuracy.iter().map(|a| a.unwrap_or(0.0)).collect();
                let masked: Vec<f64> = est
                    .iter()
                    .zip(&truth.accuracy)
                    .map(|(e, a)| if a.is_some() { *e } else { 0.0 })
                    .collect();
                push("rmse", Some(100.0 * rmse_groupwise(&masked, &tru, weights)?));
                if let PartitionSpec::ScoreBin { .. } = cfg.partition {
                    let conf = bin_confidences(assessment.index().mean_confidences());
                    let ece_true = ece_exact(weights, &tru, &conf)?;
                    let posts: Vec<_> = beliefs.iter().filter_map(|b| b.as_beta().copied()).collect();
                    let mut rng = rng_from_seed(TRUTH_SEED);
                    let est = ece_posterior(&posts, weights, &conf, cfg.n_samples, &mut rng)?;
                    push(
                        "ece_error",
                        (ece_true > 0.0).then(|| 100.0 * (est.summary.mean - ece_true).abs() / ece_true),
                    );
                }
            }
            Task::EstimateConfusion => {
                let conf = truth.confusion.as_ref().ok_or(Error::MissingTruth)?;
                let raw = rmse_confusion(&confusion_means(&beliefs), conf, weights)?;
                push("rmse", Some(100.0 * raw));
                push("scaled_rmse", reference.filter(|r| *r > 0.0).map(|r| raw / r));
            }
            Task::Compare => {
                let (eta, lambda) = truth.rope.ok_or(Error::MissingTruth)?;
                let mut rng = rng_from_seed(TRUTH_SEED);
                let rope = current_rope(&assessment.context(), &beliefs, &mut rng);
                push("success", Some(f64::from(u8::from(comparison_success(&rope, eta, lambda)))));
            }
            _ => {
                let stream = mrr_by_step(assessment, truth, t)?;
                let first = labels_to_identify(&stream, MRR_THRESHOLD, pool_size, false);
                let sustained = labels_to_identify(&stream, MRR_THRESHOLD, pool_size, true);
                push("labels_pct", first.percent);
                push("labels_pct_sustained", sustained.percent);
                let order = predicted_order(&assessment.context(), &beliefs, &assessment.active());
                push("final_mrr", Some(mrr(&order, &truth.top)?));
            }
        }
    }
    Ok(out)
}
