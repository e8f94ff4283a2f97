use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::DEFAULT_SAMPLES;
use crate::posterior::{empirical_quantile, BetaPosterior};
use crate::task::{Direction, Task};

use super::beliefs::{expected_lambda, expected_reward, ArmBelief, ArmDraw, RewardContext};
use super::{StrategyConfig, StrategyKind};

/// Re-sampling attempts before top-two Thompson sampling settles for the
/// runner-up of its last draw.
pub const TTTS_MAX_RESAMPLES: usize = 10_000;

fn eligible_arms(eligible: &[bool]) -> Result<Vec<usize>> {
    let arms: Vec<usize> = (0..eligible.len()).filter(|&g| eligible[g]).collect();
    if arms.is_empty() {
        Err(Error::NoEligibleGroups)
    } else {
        Ok(arms)
    }
}

/// Rewards of every eligible arm under one joint posterior draw.
fn sampled_rewards<R: Rng + ?Sized>(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    arms: &[usize],
    rng: &mut R,
) -> Vec<f64> {
    let draws: Vec<ArmDraw> = arms.iter().map(|&g| beliefs[g].sample(rng)).collect();
    let substream = if ctx.task == Task::Compare { rng.next_u64() } else { 0 };
    arms.iter()
        .zip(&draws)
        .map(|(&g, d)| expected_reward(ctx, beliefs, g, d, substream))
        .collect()
}

fn mean_rewards<R: Rng + ?Sized>(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    arms: &[usize],
    rng: &mut R,
) -> Vec<f64> {
    let substream = if ctx.task == Task::Compare { rng.next_u64() } else { 0 };
    arms.iter()
        .map(|&g| expected_reward(ctx, beliefs, g, &beliefs[g].mean(), substream))
        .collect()
}

/// Position of the largest reward; ties go to the earliest position.
fn argmax(rewards: &[f64]) -> usize {
    let mut best = 0;
    for (i, r) in rewards.iter().enumerate().skip(1) {
        if *r > rewards[best] {
            best = i;
        }
    }
    best
}

/// Positions sorted by decreasing reward, ties by position.
fn ranked(rewards: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rewards.len()).collect();
    idx.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]).then(a.cmp(&b)));
    idx
}

/// Thompson sampling: one joint posterior draw, then the arm with the
/// largest expected reward under it.
pub fn ts_select<R: Rng + ?Sized>(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    eligible: &[bool],
    rng: &mut R,
) -> Result<usize> {
    let arms = eligible_arms(eligible)?;
    let rewards = sampled_rewards(ctx, beliefs, &arms, rng);
    Ok(arms[argmax(&rewards)])
}

/// Top-two Thompson sampling.
///
/// With probability `1 - beta_resample` returns the Thompson winner `I`;
/// otherwise redraws until another arm wins. The coin is only tossed for
/// `0 < beta_resample < 1`, so `beta_resample = 0` consumes the random
/// stream exactly as [`ts_select`] does.
pub fn ttts_select<R: Rng + ?Sized>(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    eligible: &[bool],
    beta_resample: f64,
    rng: &mut R,
) -> Result<usize> {
    let arms = eligible_arms(eligible)?;
    let rewards = sampled_rewards(ctx, beliefs, &arms, rng);
    let first = argmax(&rewards);
    let resample = if beta_resample <= 0.0 {
        false
    } else if beta_resample >= 1.0 {
        true
    } else {
        rng.random::<f64>() < beta_resample
    };
    if !resample || arms.len() < 2 {
        return Ok(arms[first]);
    }
    let mut last = rewards;
    for _ in 0..TTTS_MAX_RESAMPLES {
        last = sampled_rewards(ctx, beliefs, &arms, rng);
        let challenger = argmax(&last);
        if challenger != first {
            return Ok(arms[challenger]);
        }
    }
    Ok(arms[ranked(&last)[1]])
}

/// Multiple-play Thompson sampling: the top `m` arms of one joint draw,
/// best first.
pub fn mpts_select<R: Rng + ?Sized>(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    eligible: &[bool],
    m: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let arms = eligible_arms(eligible)?;
    if m == 0 || m > arms.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot pull {m} arms with {} eligible",
            arms.len()
        )));
    }
    let rewards = sampled_rewards(ctx, beliefs, &arms, rng);
    Ok(ranked(&rewards).into_iter().take(m).map(|i| arms[i]).collect())
}

/// Greedy expected variance reduction, with outcomes drawn from the
/// posterior predictive.
pub fn variance_greedy_select(
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    eligible: &[bool],
) -> Result<usize> {
    if !ctx.task.is_estimation() {
        return Err(Error::InvalidConfig(
            "variance-greedy needs an estimation task".into(),
        ));
    }
    let arms = eligible_arms(eligible)?;
    let rewards: Vec<f64> = arms
        .iter()
        .map(|&g| expected_reward(ctx, beliefs, g, &beliefs[g].mean(), 0))
        .collect();
    Ok(arms[argmax(&rewards)])
}

/// Maximal expected model change for a two-group comparison: returns 0 for
/// `a` or 1 for `b`, whichever maximizes the expected lambda after one more
/// label. Ties go to `a`.
pub fn comparison_select<R: Rng + ?Sized>(
    a: &BetaPosterior,
    b: &BetaPosterior,
    epsilon: f64,
    n_samples: usize,
    rng: &mut R,
) -> usize {
    let beliefs = [ArmBelief::Accuracy(*a), ArmBelief::Accuracy(*b)];
    let weights = [0.5, 0.5];
    let ctx = RewardContext {
        task: Task::Compare,
        direction: Direction::Max,
        weights: &weights,
        costs: None,
        epsilon,
        rope_samples: n_samples,
    };
    let substream = rng.next_u64();
    let ea = expected_lambda(&ctx, &beliefs, 0, a.mean(), substream);
    let eb = expected_lambda(&ctx, &beliefs, 1, b.mean(), substream);
    usize::from(eb > ea)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Random,
    EpsilonGreedy,
    BayesUcb,
}

/// Non-Thompson baselines. The epsilon-greedy coin is only tossed for
/// `0 < epsilon < 1`, so `epsilon = 1` consumes the stream exactly as
/// `Random` does.
pub fn baseline_select<R: Rng + ?Sized>(
    kind: BaselineKind,
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    eligible: &[bool],
    cfg: &StrategyConfig,
    rng: &mut R,
) -> Result<usize> {
    let arms = eligible_arms(eligible)?;
    let uniform = |rng: &mut R| arms[rng.random_range(0..arms.len())];
    match kind {
        BaselineKind::Random => Ok(uniform(rng)),
        BaselineKind::EpsilonGreedy => {
            let explore = if cfg.epsilon <= 0.0 {
                false
            } else if cfg.epsilon >= 1.0 {
                true
            } else {
                rng.random::<f64>() < cfg.epsilon
            };
            if explore {
                Ok(uniform(rng))
            } else {
                let rewards = mean_rewards(ctx, beliefs, &arms, rng);
                Ok(arms[argmax(&rewards)])
            }
        }
        BaselineKind::BayesUcb => {
            let bounds: Vec<f64> = arms
                .iter()
                .map(|&g| {
                    // Accuracy identification: the reward is monotone in a
                    // single Beta rate, so its quantile is exact.
                    if let (Task::IdentifyAccuracy, ArmBelief::Accuracy(p)) = (ctx.task, &beliefs[g]) {
                        let q = match ctx.direction {
                            Direction::Max => cfg.ucb_quantile,
                            Direction::Min => 1.0 - cfg.ucb_quantile,
                        };
                        return ctx.direction.orient(p.quantile(q));
                    }
                    let mut draws: Vec<f64> = (0..DEFAULT_SAMPLES)
                        .map(|_| {
                            let d = beliefs[g].sample(rng);
                            expected_reward(ctx, beliefs, g, &d, 0)
                        })
                        .collect();
                    draws.sort_by(f64::total_cmp);
                    empirical_quantile(&draws, cfg.ucb_quantile)
                })
                .collect();
            Ok(arms[argmax(&bounds)])
        }
    }
}

/// Dispatches on the configured strategy; returns the arms to pull this round.
pub fn select<R: Rng + ?Sized>(
    cfg: &StrategyConfig,
    ctx: &RewardContext<'_>,
    beliefs: &[ArmBelief],
    eligible: &[bool],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let one = |g: Result<usize>| g.map(|g| vec![g]);
    match cfg.kind {
        StrategyKind::Thompson => one(ts_select(ctx, beliefs, eligible, rng)),
        StrategyKind::TopTwoThompson => {
            one(ttts_select(ctx, beliefs, eligible, cfg.beta_resample, rng))
        }
        StrategyKind::MultiplePlayThompson => {
            let available = eligible.iter().filter(|e| **e).count();
            mpts_select(ctx, beliefs, eligible, cfg.m.min(available.max(1)), rng)
        }
        StrategyKind::VarianceGreedy => one(variance_greedy_select(ctx, beliefs, eligible)),
        StrategyKind::ComparisonGreedy => {
            if eligible.len() != 2 {
                return Err(Error::InvalidConfig(
                    "comparison-greedy needs exactly two arms".into(),
                ));
            }
            match eligible {
                [true, true] => {
                    let (a, b) = match (&beliefs[0], &beliefs[1]) {
                        (ArmBelief::Accuracy(a), ArmBelief::Accuracy(b)) => (a, b),
                        _ => return Err(Error::InvalidConfig("comparison arms must be Beta".into())),
                    };
                    Ok(vec![comparison_select(a, b, ctx.epsilon, ctx.rope_samples, rng)])
                }
                [true, false] => Ok(vec![0]),
                [false, true] => Ok(vec![1]),
                _ => Err(Error::NoEligibleGroups),
            }
        }
        StrategyKind::Random => one(baseline_select(
            BaselineKind::Random,
            ctx,
            beliefs,
            eligible,
            cfg,
            rng,
        )),
        StrategyKind::EpsilonGreedy => one(baseline_select(
            BaselineKind::EpsilonGreedy,
            ctx,
            beliefs,
            eligible,
            cfg,
            rng,
        )),
        StrategyKind::BayesUcb => one(baseline_select(
            BaselineKind::BayesUcb,
            ctx,
            beliefs,
            eligible,
            cfg,
            rng,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CostMatrix;
    use crate::posterior::DirichletPosterior;
    use crate::rng::rng_from_seed;

    fn point(theta: f64) -> ArmBelief {
        ArmBelief::Accuracy(BetaPosterior::new(1e9 * theta + 1e-6, 1e9 * (1.0 - theta) + 1e-6).unwrap())
    }

    fn ctx<'a>(task: Task, direction: Direction, weights: &'a [f64]) -> RewardContext<'a> {
        RewardContext {
            task,
            direction,
            weights,
            costs: None,
            epsilon: 0.05,
            rope_samples: 2000,
        }
    }

    #[test]
    fn ts_picks_least_accurate_point_mass() {
        let beliefs = [point(0.9), point(0.2)];
        let w = [0.5, 0.5];
        let c = ctx(Task::IdentifyAccuracy, Direction::Min, &w);
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            assert_eq!(ts_select(&c, &beliefs, &[true, true], &mut rng).unwrap(), 1);
        }
        assert_eq!(ts_select(&c, &beliefs, &[true, false], &mut rng).unwrap(), 0);
        assert!(matches!(
            ts_select(&c, &beliefs, &[false, false], &mut rng),
            Err(Error::NoEligibleGroups)
        ));
    }

    #[test]
    fn ts_exchangeable_arms_are_uniform() {
        let g = 4;
        let beliefs = vec![ArmBelief::Accuracy(BetaPosterior::uniform()); g];
        let w = vec![0.25; g];
        let c = ctx(Task::IdentifyAccuracy, Direction::Min, &w);
        let mut rng = rng_from_seed(2);
        let mut counts = vec![0usize; g];
        let n = 100_000;
        for _ in 0..n {
            counts[ts_select(&c, &beliefs, &[true; 4], &mut rng).unwrap()] += 1;
        }
        for cnt in counts {
            assert!((cnt as f64 / n as f64 - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn ts_cost_task_picks_costliest_column() {
        let costs = CostMatrix::new(vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![10.0, 10.0, 0.0],
        ])
        .unwrap();
        let cols = [[0.8, 0.15, 0.05], [0.1, 0.85, 0.05], [0.3, 0.3, 0.4]];
        // exact expected costs: 0.15 + 0.5 = 0.65, 0.1 + 0.5 = 0.6, 0.6
        let beliefs: Vec<ArmBelief> = cols
            .iter()
            .map(|c| ArmBelief::Confusion(DirichletPosterior::new(c.map(|x| x * 1e9).to_vec()).unwrap()))
            .collect();
        let w = [1.0 / 3.0; 3];
        let mut c = ctx(Task::IdentifyCost, Direction::Max, &w);
        c.costs = Some(&costs);
        let mut rng = rng_from_seed(4);
        assert_eq!(ts_select(&c, &beliefs, &[true; 3], &mut rng).unwrap(), 0);
    }

    #[test]
    fn ttts_reductions_and_resampling() {
        let beliefs: Vec<ArmBelief> = [(2.0, 3.0), (4.0, 1.0), (1.0, 1.0)]
            .iter()
            .map(|&(a, b)| ArmBelief::Accuracy(BetaPosterior::new(a, b).unwrap()))
            .collect();
        let w = [1.0 / 3.0; 3];
        let c = ctx(Task::IdentifyAccuracy, Direction::Min, &w);
        let (mut r1, mut r2) = (rng_from_seed(5), rng_from_seed(5));
        for _ in 0..200 {
            assert_eq!(
                ts_select(&c, &beliefs, &[true; 3], &mut r1).unwrap(),
                ttts_select(&c, &beliefs, &[true; 3], 0.0, &mut r2).unwrap()
            );
        }

        // beta = 1 never returns the winner of the initial draw
        let two = vec![ArmBelief::Accuracy(BetaPosterior::uniform()); 2];
        let w2 = [0.5, 0.5];
        let c2 = ctx(Task::IdentifyAccuracy, Direction::Min, &w2);
        for seed in 0..200 {
            let mut probe = rng_from_seed(seed);
            let first = ts_select(&c2, &two, &[true, true], &mut probe).unwrap();
            let mut rng = rng_from_seed(seed);
            assert_ne!(ttts_select(&c2, &two, &[true, true], 1.0, &mut rng).unwrap(), first);
        }
    }

    #[test]
    fn ttts_point_masses_split_by_coin() {
        let beliefs = [point(0.3), point(0.6), point(0.9)];
        let w = [1.0 / 3.0; 3];
        let c = ctx(Task::IdentifyAccuracy, Direction::Min, &w);
        let mut rng = rng_from_seed(6);
        // Every re-sampling call runs into the cap here, so keep n modest.
        let n = 1_000;
        let winners = (0..n)
            .filter(|_| ttts_select(&c, &beliefs, &[true; 3], 0.5, &mut rng).unwrap() == 0)
            .count();
        assert!((winners as f64 / n as f64 - 0.5).abs() < 0.05);
    }

    #[test]
    fn mpts_examples() {
        let beliefs = [point(0.1), point(0.5), point(0.9), point(0.3)];
        let w = [0.25; 4];
        let c = ctx(Task::IdentifyAccuracy, Direction::Min, &w);
        let mut rng = rng_from_seed(7);
        assert_eq!(mpts_select(&c, &beliefs, &[true; 4], 2, &mut rng).unwrap(), vec![0, 3]);
        let mut all = mpts_select(&c, &beliefs, &[true; 4], 4, &mut rng).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert!(mpts_select(&c, &beliefs, &[true, true, false, false], 3, &mut rng).is_err());

        let soft: Vec<ArmBelief> = (1..5)
            .map(|i| ArmBelief::Accuracy(BetaPosterior::new(i as f64, 2.0).unwrap()))
            .collect();
        let (mut r1, mut r2) = (rng_from_seed(8), rng_from_seed(8));
        for _ in 0..100 {
            assert_eq!(
                vec![ts_select(&c, &soft, &[true; 4], &mut r1).unwrap()],
                mpts_select(&c, &soft, &[true; 4], 1, &mut r2).unwrap()
            );
        }
    }

    #[test]
    fn variance_greedy_examples() {
        let same = vec![ArmBelief::Accuracy(BetaPosterior::new(3.0, 2.0).unwrap()); 2];
        let w = [0.9, 0.1];
        let c = ctx(Task::EstimateAccuracy, Direction::Min, &w);
        assert_eq!(variance_greedy_select(&c, &same, &[true, true]).unwrap(), 0);

        let spread = [
            ArmBelief::Accuracy(BetaPosterior::new(200.0, 200.0).unwrap()),
            ArmBelief::Accuracy(BetaPosterior::new(2.0, 2.0).unwrap()),
        ];
        let w = [0.5, 0.5];
        let c = ctx(Task::EstimateAccuracy, Direction::Min, &w);
        assert_eq!(variance_greedy_select(&c, &spread, &[true, true]).unwrap(), 1);

        let c = ctx(Task::IdentifyAccuracy, Direction::Min, &w);
        assert!(variance_greedy_select(&c, &spread, &[true, true]).is_err());
    }

    #[test]
    fn comparison_examples() {
        let mut rng = rng_from_seed(9);
        let a = BetaPosterior::new(5e8, 5e8).unwrap();
        let b = BetaPosterior::uniform();
        assert_eq!(comparison_select(&a, &b, 0.05, 10_000, &mut rng), 1);
        let s = BetaPosterior::new(3.0, 4.0).unwrap();
        assert_eq!(comparison_select(&s, &s, 0.05, 10_000, &mut rng), 0);
    }

    #[test]
    fn baselines() {
        let beliefs = [point(0.6), point(0.2), point(0.8), point(0.4)];
        let w = [0.25; 4];
        let c = ctx(Task::IdentifyAccuracy, Direction::Min, &w);
        let mut cfg = StrategyConfig::of_kind(StrategyKind::EpsilonGreedy);
        let mut rng = rng_from_seed(10);

        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[baseline_select(BaselineKind::Random, &c, &beliefs, &[true; 4], &cfg, &mut rng).unwrap()] += 1;
        }
        assert!(counts.iter().all(|&k| (k as f64 / n as f64 - 0.25).abs() < 0.02));

        cfg.epsilon = 0.0;
        assert_eq!(
            baseline_select(BaselineKind::EpsilonGreedy, &c, &beliefs, &[true; 4], &cfg, &mut rng).unwrap(),
            1
        );
        assert_eq!(
            baseline_select(BaselineKind::BayesUcb, &c, &beliefs, &[true; 4], &cfg, &mut rng).unwrap(),
            1
        );
        let cmax = ctx(Task::IdentifyAccuracy, Direction::Max, &w);
        assert_eq!(
            baseline_select(BaselineKind::BayesUcb, &cmax, &beliefs, &[true; 4], &cfg, &mut rng).unwrap(),
            2
        );

        cfg.epsilon = 1.0;
        let (mut r1, mut r2) = (rng_from_seed(11), rng_from_seed(11));
        for _ in 0..500 {
            assert_eq!(
                baseline_select(BaselineKind::EpsilonGreedy, &c, &beliefs, &[true; 4], &cfg, &mut r1).unwrap(),
                baseline_select(BaselineKind::Random, &c, &beliefs, &[true; 4], &cfg, &mut r2).unwrap()
            );
        }
    }

    #[test]
    fn bayes_ucb_favors_uncertain_arms() {
        let beta = |a, b| ArmBelief::Accuracy(BetaPosterior::new(a, b).unwrap());
        // Narrow mean 0.45 against wide mean 0.6: the wide arm's lower
        // 2.5% quantile (about 0.19) is the smaller one.
        let beliefs = [beta(45.0, 55.0), beta(3.0, 2.0)];
        let w = [0.5; 2];
        let cfg = StrategyConfig::of_kind(StrategyKind::BayesUcb);
        let mut rng = rng_from_seed(3);
        let c = ctx(Task::IdentifyAccuracy, Direction::Min, &w);
        assert_eq!(baseline_select(BaselineKind::BayesUcb, &c, &beliefs, &[true; 2], &cfg, &mut rng).unwrap(), 1);
        let q = BetaPosterior::new(3.0, 2.0).unwrap().quantile(0.025);
        assert!((q - 0.194).abs() < 0.01, "{q}");
    }

    #[test]
    fn config_validation() {
        let cfg = StrategyConfig::of_kind(StrategyKind::VarianceGreedy);
        assert!(cfg.validate(Task::IdentifyAccuracy).is_err());
        assert!(cfg.validate(Task::EstimateAccuracy).is_ok());
        let mut cfg = StrategyConfig::default();
        cfg.epsilon = 1.5;
        assert!(cfg.validate(Task::IdentifyAccuracy).is_err());
        let parsed: StrategyConfig =
            serde_json::from_str(r#"{"kind": "top-two-thompson", "beta_resample": 0.3}"#).unwrap();
        assert_eq!(parsed.kind, StrategyKind::TopTwoThompson);
        assert_eq!(parsed.m, 1);
        assert_eq!(parsed.direction_for(Task::IdentifyEce), Direction::Max);
    }
}
