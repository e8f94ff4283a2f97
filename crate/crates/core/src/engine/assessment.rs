use crate::config::SessionConfig;
use crate::data::{assign_groups, load_cost_matrix, CostMatrix, GroupIndex, Pool};
use crate::error::{Error, Result};
use crate::metrics::ece::class_bin_weights;
use crate::priors::{beta_priors, dirichlet_priors};
use crate::strategies::{ArmBelief, CalibrationArm, RewardContext};
use crate::task::{Direction, Task};

/// One bandit arm: the records it draws from and its weight `p_g`.
#[derive(Debug, Clone)]
pub struct Arm {
    pub name: String,
    /// Partition group id, or the class for class-level arms.
    pub group: usize,
    pub weight: f64,
    pub members: Vec<usize>,
}

/// Everything a session needs that does not change while labeling: the
/// unlabeled pool, its partition, the arm layout and the priors.
///
/// Built once and shared between runs.
#[derive(Debug, Clone)]
pub struct Assessment {
    config: SessionConfig,
    pool: Pool,
    index: GroupIndex,
    arms: Vec<Arm>,
    /// `(arm, slot)` per record; the slot is the score bin for calibration arms.
    placement: Vec<Option<(usize, usize)>>,
    priors: Vec<ArmBelief>,
    costs: Option<CostMatrix>,
    direction: Direction,
    weights: Vec<f64>,
}

impl Assessment {
    /// Labels in `pool` are dropped; they reach a session only through an oracle.
    pub fn new(pool: &Pool, config: SessionConfig, costs: Option<CostMatrix>) -> Result<Self> {
        config.validate()?;
        let (pool, _) = pool.split_labels();
        let index = assign_groups(&pool, &config.partition)?;
        let task = config.task;
        let k = pool.num_classes();

        let costs = match (task, costs) {
            (Task::IdentifyCost, None) => {
                return Err(Error::InvalidConfig("identify-cost needs a cost matrix".into()))
            }
            (Task::IdentifyCost, Some(c)) if c.num_classes() != k => {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: c.num_classes(),
                })
            }
            (_, c) => c,
        };

        let mut placement = vec![None; pool.len()];
        let (arms, priors) = match task {
            Task::EstimateConfusion | Task::IdentifyCost => {
                let priors = dirichlet_priors(&pool, &index, &config.prior)?;
                let arms = group_arms(&index, 0..index.num_groups());
                (arms, priors.into_iter().map(ArmBelief::Confusion).collect())
            }
            Task::IdentifyEce => {
                let bins = index.spec().num_bins().expect("class-and-bin partition");
                let bin_priors = beta_priors(&index, &config.prior)?;
                let mut arms = Vec::with_capacity(k);
                let mut priors = Vec::with_capacity(k);
                for class in 0..k {
                    let groups: Vec<usize> = (0..bins)
                        .map(|b| index.class_bin_group(class, b).expect("bin in range"))
                        .collect();
                    let (weights, confidences) = class_bin_weights(&index, &groups)
                        .unwrap_or_else(|| (vec![0.0; bins], vec![0.0; bins]));
                    priors.push(ArmBelief::Calibration(CalibrationArm {
                        bins: groups.iter().map(|&g| bin_priors[g]).collect(),
                        weights,
                        confidences,
                    }));
                    let mut members = Vec::new();
                    for (slot, &g) in groups.iter().enumerate() {
                        for &r in index.members(g) {
                            placement[r] = Some((class, slot));
                            members.push(r);
                        }
                    }
                    members.sort_unstable();
                    arms.push(Arm {
                        name: format!("class {class}"),
                        group: class,
                        weight: groups.iter().map(|&g| index.weights()[g]).sum(),
                        members,
                    });
                }
                (arms, priors)
            }
            Task::Compare => {
                let [a, b] = config.compare_groups.expect("validated");
                let g = index.num_groups();
                if a >= g || b >= g {
                    return Err(Error::InvalidConfig(format!(
                        "compare_groups [{a}, {b}] out of range for {g} groups"
                    )));
                }
                let priors = beta_priors(&index, &config.prior)?;
                let arms = group_arms(&index, [a, b]);
                (arms, vec![ArmBelief::Accuracy(priors[a]), ArmBelief::Accuracy(priors[b])])
            }
            Task::EstimateAccuracy | Task::IdentifyAccuracy => {
                let priors = beta_priors(&index, &config.prior)?;
                let arms = group_arms(&index, 0..index.num_groups());
                (arms, priors.into_iter().map(ArmBelief::Accuracy).collect())
            }
        };
        if task != Task::IdentifyEce {
            for (a, arm) in arms.iter().enumerate() {
                for &r in &arm.members {
                    placement[r] = Some((a, 0));
                }
            }
        }

        let n_arms = arms.len();
        if config.strategy.m > n_arms {
            return Err(Error::InvalidConfig(format!(
                "strategy.m = {} exceeds the {n_arms} available groups",
                config.strategy.m
            )));
        }
        if task.is_identification() && config.top_m > n_arms {
            return Err(Error::InvalidConfig(format!(
                "top_m = {} exceeds the {n_arms} available groups",
                config.top_m
            )));
        }
        let direction = config.strategy.direction_for(task);
        let weights = arms.iter().map(|a| a.weight).collect();
        Ok(Assessment {
            config,
            pool,
            index,
            arms,
            placement,
            priors,
            costs,
            direction,
            weights,
        })
    }

    /// Like [`Assessment::new`], loading the cost matrix named in the config.
    pub fn from_config(pool: &Pool, config: SessionConfig) -> Result<Self> {
        let costs = config.cost_matrix.as_ref().map(load_cost_matrix).transpose()?;
        Self::new(pool, config, costs)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// The pool with labels removed.
    pub fn pool(&self) -> &Pool {
        &self.pool
    }

    pub fn index(&self) -> &GroupIndex {
        &self.index
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn priors(&self) -> &[ArmBelief] {
        &self.priors
    }

    pub fn costs(&self) -> Option<&CostMatrix> {
        self.costs.as_ref()
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn task(&self) -> Task {
        self.config.task
    }

    /// `(arm, slot)` of a record, or `None` if it belongs to no arm.
    pub fn placement(&self, record: usize) -> Option<(usize, usize)> {
        self.placement[record]
    }

    /// Arms that own at least one record.
    pub fn active(&self) -> Vec<bool> {
        self.arms.iter().map(|a| !a.members.is_empty()).collect()
    }

    pub fn arm_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn context(&self) -> RewardContext<'_> {
        RewardContext {
            task: self.config.task,
            direction: self.direction,
            weights: &self.weights,
            costs: self.costs.as_ref(),
            epsilon: self.config.rope_epsilon,
            rope_samples: self.config.n_samples,
        }
    }
}

fn group_arms(index: &GroupIndex, groups: impl IntoIterator<Item = usize>) -> Vec<Arm> {
    groups
        .into_iter()
        .map(|g| Arm {
            name: index.name(g).to_string(),
            group: g,
            weight: index.weights()[g],
            members: index.members(g).to_vec(),
        })
        .collect()
}
