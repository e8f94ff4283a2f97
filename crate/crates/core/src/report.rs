//! Posterior summaries of a session state, as written by `report` and served
//! by the session service.

use serde::Serialize;

use crate::data::PartitionSpec;
use crate::engine::{Assessment, TerminalReason};
use crate::error::Result;
use crate::metrics::{
    ece_posterior, expected_cost_posterior, rank_distribution_by, reliability_diagram,
    RankDistribution, ReliabilityDiagram, RopeResult, DEFAULT_LEVEL,
};
use crate::posterior::PosteriorSummary;
use crate::rng::rng_from_seed;
use crate::strategies::{arm_metric, current_rope, ArmBelief};
use crate::task::{Direction, Task};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: usize,
    pub group: usize,
    pub name: String,
    pub weight: f64,
    pub n_labels: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<PosteriorSummary>,
    /// Per true class, for confusion arms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<PosteriorSummary>>,
    /// Classwise ECE or expected cost, for those identification tasks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<PosteriorSummary>,
    pub posterior: ArmBelief,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    /// Arms ranked, in the order of `distribution.groups`.
    pub arms: Vec<usize>,
    #[serde(flatten)]
    pub distribution: RankDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentReport {
    pub config_digest: String,
    pub task: Task,
    pub direction: Direction,
    /// Seed of the Monte-Carlo summaries below.
    pub seed: u64,
    pub n_samples: usize,
    pub level: f64,
    pub labels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal: Option<TerminalReason>,
    pub arms: Vec<ArmSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Ranking>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rope: Option<RopeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reliability: Option<ReliabilityDiagram>,
}

/// Summarizes `beliefs`. Deterministic in its inputs: Monte-Carlo parts use
/// one stream seeded from the config seed.
pub fn build_report(
    assessment: &Assessment,
    beliefs: &[ArmBelief],
    labels: usize,
    terminal: Option<TerminalReason>,
) -> Result<AssessmentReport> {
    let cfg = assessment.config();
    let level = DEFAULT_LEVEL;
    let n = cfg.n_samples;
    let mut rng = rng_from_seed(cfg.seed);
    let ctx = assessment.context();
    let active = assessment.active();

    let mut arms = Vec::with_capacity(beliefs.len());
    for (a, (arm, belief)) in assessment.arms().iter().zip(beliefs).enumerate() {
        let metric = match (cfg.task, belief) {
            (Task::IdentifyEce, ArmBelief::Calibration(c)) if active[a] => {
                Some(ece_posterior(&c.bins, &c.weights, &c.confidences, n, &mut rng)?.summary_at(level))
            }
            (Task::IdentifyCost, ArmBelief::Confusion(d)) => {
                let costs = assessment.costs().expect("cost task has costs");
                let draws = expected_cost_posterior(d, costs, a, n, &mut rng)?;
                Some(PosteriorSummary::from_samples(&draws, level))
            }
            _ => None,
        };
        arms.push(ArmSummary {
            arm: a,
            group: arm.group,
            name: arm.name.clone(),
            weight: arm.weight,
            n_labels: belief.labels(),
            accuracy: belief.as_beta().map(|p| p.summarize(level)),
            confusion: belief.as_dirichlet().map(|d| d.summarize(level)),
            metric,
            posterior: belief.clone(),
        });
    }

    let ranked: Vec<usize> = (0..beliefs.len()).filter(|&a| active[a]).collect();
    let ranking = match cfg.task {
        Task::EstimateConfusion | Task::Compare => None,
        _ if ranked.len() < 2 => None,
        Task::EstimateAccuracy | Task::IdentifyAccuracy => {
            let dist = rank_distribution_by(ranked.len(), n, &mut rng, assessment.direction(), |i, rng| {
                beliefs[ranked[i]].as_beta().expect("accuracy arm").sample(rng)
            })?;
            Some(dist)
        }
        _ => {
            let dist = rank_distribution_by(ranked.len(), n, &mut rng, assessment.direction(), |i, rng| {
                let a = ranked[i];
                let draw = beliefs[a].sample(rng);
                arm_metric(&ctx, a, &draw, &beliefs[a]).expect("identification metric")
            })?;
            Some(dist)
        }
    }
    .map(|distribution| Ranking {
        arms: ranked.clone(),
        distribution,
    });

    let rope = (cfg.task == Task::Compare).then(|| current_rope(&ctx, beliefs, &mut rng));

    let reliability = match (cfg.task, &cfg.partition) {
        (Task::EstimateAccuracy | Task::IdentifyAccuracy, PartitionSpec::ScoreBin { .. }) => {
            let posts: Vec<_> = beliefs.iter().filter_map(|b| b.as_beta().copied()).collect();
            Some(reliability_diagram(
                &posts,
                assessment.arm_weights(),
                assessment.index().mean_confidences(),
                level,
                n,
                &mut rng,
            )?)
        }
        _ => None,
    };

    Ok(AssessmentReport {
        config_digest: cfg.digest(),
        task: cfg.task,
        direction: assessment.direction(),
        seed: cfg.seed,
        n_samples: n,
        level,
        labels,
        budget: cfg.budget.limit(),
        terminal,
        arms,
        ranking,
        rope,
        reliability,
    })
}
