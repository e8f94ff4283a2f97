use serde::Serialize;

use crate::data::{assign_groups, PartitionSpec, Pool};
use crate::engine::{Assessment, StopTruth};
use crate::error::{Error, Result};
use crate::metrics::{ece_exact, rope_compare, Region};
use crate::posterior::BetaPosterior;
use crate::rng::rng_from_seed;
use crate::strategies::ArmBelief;
use crate::task::{Direction, Task};

/// Seed of the Monte-Carlo stream behind the true comparison result.
pub const TRUTH_SEED: u64 = 0;

/// Bins used for the marginal ECE of the pool.
pub const MARGINAL_BINS: usize = 10;

/// Reference values from the fully labeled pool, per arm of an assessment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub task: Task,
    pub direction: Direction,
    /// Fraction of correct predictions; `None` for empty arms.
    pub accuracy: Vec<Option<f64>>,
    /// `theta_jk` over true classes `j`, for class-level arms of
    /// true-class tasks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<Vec<f64>>>,
    /// The identification metric per arm; `None` for empty arms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Option<f64>>>,
    /// Marginal ECE over equal-width score bins.
    pub ece: f64,
    /// True top-m arms, most extreme first (identification tasks).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub top: Vec<usize>,
    /// `(eta*, lambda*)` for the compare task.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rope: Option<(Region, f64)>,
}

impl GroundTruth {
    /// `labeled` must be the pool the assessment was built from, with labels.
    pub fn compute(labeled: &Pool, assessment: &Assessment) -> Result<Self> {
        let pool = assessment.pool();
        if labeled.len() != pool.len()
            || labeled
                .records()
                .iter()
                .zip(pool.records())
                .any(|(a, b)| a.id != b.id)
        {
            return Err(Error::InvalidParameter(
                "labeled pool does not match the assessment pool".into(),
            ));
        }
        let labels = labeled
            .records()
            .iter()
            .map(|r| r.label.ok_or_else(|| Error::MissingLabel(r.id.clone())))
            .collect::<Result<Vec<_>>>()?;
        let correct = |r: usize| labels[r] == pool.record(r).predicted_class();
        let task = assessment.task();
        let arms = assessment.arms();

        let accuracy: Vec<Option<f64>> = arms
            .iter()
            .map(|a| {
                (!a.members.is_empty()).then(|| {
                    a.members.iter().filter(|&&r| correct(r)).count() as f64 / a.members.len() as f64
                })
            })
            .collect();

        let confusion = task.needs_true_class().then(|| {
            let k = pool.num_classes();
            arms.iter()
                .map(|a| {
                    let mut col = vec![0.0; k];
                    for &r in &a.members {
                        col[labels[r]] += 1.0;
                    }
                    let n = a.members.len().max(1) as f64;
                    col.iter().map(|c| c / n).collect()
                })
                .collect::<Vec<Vec<f64>>>()
        });

        let metric: Option<Vec<Option<f64>>> = match task {
            Task::IdentifyAccuracy => Some(accuracy.clone()),
            Task::IdentifyCost => {
                let costs = assessment.costs().expect("cost task has costs");
                let conf = confusion.as_ref().expect("cost task is class level");
                Some(
                    arms.iter()
                        .enumerate()
                        .map(|(k, a)| {
                            (!a.members.is_empty()).then(|| {
                                conf[k].iter().enumerate().map(|(j, t)| costs.get(j, k) * t).sum()
                            })
                        })
                        .collect(),
                )
            }
            Task::IdentifyEce => Some(
                arms.iter()
                    .zip(assessment.priors())
                    .map(|(arm, belief)| {
                        let ArmBelief::Calibration(cal) = belief else {
                            unreachable!("calibration arms")
                        };
                        (!arm.members.is_empty()).then(|| {
                            let mut hits = vec![0usize; cal.bins.len()];
                            let mut sizes = vec![0usize; cal.bins.len()];
                            for &r in &arm.members {
                                let (_, slot) = assessment.placement(r).expect("placed");
                                sizes[slot] += 1;
                                hits[slot] += usize::from(correct(r));
                            }
                            let acc: Vec<f64> = hits
                                .iter()
                                .zip(&sizes)
                                .map(|(h, n)| if *n == 0 { 0.0 } else { *h as f64 / *n as f64 })
                                .collect();
                            cal.ece_at(&acc)
                        })
                    })
                    .collect(),
            ),
            _ => None,
        };

        let direction = assessment.direction();
        let top = match &metric {
            Some(values) => {
                let scored: Vec<usize> = (0..values.len()).filter(|&a| values[a].is_some()).collect();
                let plain: Vec<f64> = scored.iter().map(|&a| values[a].expect("filtered")).collect();
                direction
                    .order(&plain)
                    .into_iter()
                    .take(assessment.config().top_m)
                    .map(|i| scored[i])
                    .collect()
            }
            None => Vec::new(),
        };

        let rope = (task == Task::Compare).then(|| {
            let post = |a: usize| {
                let arm = &arms[a];
                BetaPosterior::uniform().update_all(arm.members.iter().map(|&r| correct(r)))
            };
            let mut rng = rng_from_seed(TRUTH_SEED);
            let cfg = assessment.config();
            let r = rope_compare(&post(0), &post(1), cfg.rope_epsilon, cfg.n_samples, &mut rng);
            (r.eta, r.lambda)
        });

        Ok(GroundTruth {
            task,
            direction,
            accuracy,
            confusion,
            metric,
            ece: marginal_ece(labeled)?,
            top,
            rope,
        })
    }

    /// What the benchmark stopping rule needs, if the task has one.
    pub fn stop_truth(&self) -> Option<StopTruth> {
        match self.task {
            Task::Compare => self.rope.map(|(eta, lambda)| StopTruth::Compare { eta, lambda }),
            t if t.is_identification() => Some(StopTruth::Identify {
                top: self.top.clone(),
            }),
            _ => None,
        }
    }
}

/// `sum_b p_b |acc_b - s_b|` over [`MARGINAL_BINS`] score bins of a labeled pool.
pub fn marginal_ece(labeled: &Pool) -> Result<f64> {
    let index = assign_groups(
        labeled,
        &PartitionSpec::ScoreBin {
            num_bins: MARGINAL_BINS,
        },
    )?;
    let mut acc = Vec::new();
    let mut conf = Vec::new();
    for g in 0..index.num_groups() {
        let members = index.members(g);
        let hits = members
            .iter()
            .map(|&r| {
                labeled
                    .record(r)
                    .is_correct()
                    .ok_or_else(|| Error::MissingLabel(labeled.record(r).id.clone()))
            })
            .collect::<Result<Vec<bool>>>()?;
        acc.push(if members.is_empty() {
            0.0
        } else {
            hits.iter().filter(|h| **h).count() as f64 / members.len() as f64
        });
        conf.push(index.mean_confidence(g).unwrap_or(0.0));
    }
    ece_exact(index.weights(), &acc, &conf)
}
