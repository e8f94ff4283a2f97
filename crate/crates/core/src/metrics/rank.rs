use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::posterior::{empirical_quantile, BetaPosterior};
use crate::task::Direction;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRank {
    /// Mean rank; rank 1 is the most extreme group.
    pub mean_rank: f64,
    pub rank_low: f64,
    pub rank_high: f64,
    /// Probability of being the most extreme group.
    pub p_extreme: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankDistribution {
    pub direction: Direction,
    pub n_samples: usize,
    pub groups: Vec<GroupRank>,
}

/// Monte-Carlo distribution of each group's rank under joint posterior draws.
/// Equal draws rank by group index.
pub fn rank_distribution<R: Rng + ?Sized>(
    posts: &[BetaPosterior],
    n_samples: usize,
    rng: &mut R,
    direction: Direction,
) -> Result<RankDistribution> {
    rank_distribution_by(posts.len(), n_samples, rng, direction, |g, rng| posts[g].sample(rng))
}

/// As [`rank_distribution`], with `draw(g, rng)` producing group `g`'s metric
/// for one joint draw. Groups are drawn in index order.
pub fn rank_distribution_by<R: Rng + ?Sized>(
    g: usize,
    n_samples: usize,
    rng: &mut R,
    direction: Direction,
    mut draw: impl FnMut(usize, &mut R) -> f64,
) -> Result<RankDistribution> {
    if g < 2 {
        return Err(Error::InvalidParameter("ranking needs at least two groups".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let mut ranks = vec![Vec::with_capacity(n_samples); g];
    let mut draws = vec![0.0; g];
    for _ in 0..n_samples {
        for (k, d) in draws.iter_mut().enumerate() {
            *d = draw(k, rng);
        }
        for (pos, group) in direction.order(&draws).into_iter().enumerate() {
            ranks[group].push((pos + 1) as f64);
        }
    }
    let n = n_samples as f64;
    let groups = ranks
        .into_iter()
        .map(|mut r| {
            let mean_rank = r.iter().sum::<f64>() / n;
            let p_extreme = r.iter().filter(|&&x| x == 1.0).count() as f64 / n;
            r.sort_by(f64::total_cmp);
            GroupRank {
                mean_rank,
                rank_low: empirical_quantile(&r, 0.025),
                rank_high: empirical_quantile(&r, 0.975),
                p_extreme,
            }
        })
        .collect();
    Ok(RankDistribution {
        direction,
        n_samples,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn point_masses_rank_deterministically() {
        let posts: Vec<_> = [0.9, 0.5, 0.7]
            .iter()
            .map(|t| BetaPosterior::new(1e9 * t, 1e9 * (1.0 - t)).unwrap())
            .collect();
        let mut rng = rng_from_seed(3);
        let r = rank_distribution(&posts, 500, &mut rng, Direction::Min).unwrap();
        assert_eq!(r.groups[1].p_extreme, 1.0);
        assert_eq!(r.groups[1].mean_rank, 1.0);
        assert_eq!(r.groups[2].mean_rank, 2.0);
        assert_eq!(r.groups[0].mean_rank, 3.0);
    }

    #[test]
    fn exchangeable_pair_is_a_coin_flip() {
        let posts = [BetaPosterior::uniform(); 2];
        let mut rng = rng_from_seed(17);
        let r = rank_distribution(&posts, 20_000, &mut rng, Direction::Min).unwrap();
        assert!((r.groups[0].p_extreme - 0.5).abs() < 0.02);
        let total: f64 = r.groups.iter().map(|g| g.p_extreme).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn needs_two_groups() {
        let mut rng = rng_from_seed(0);
        assert!(rank_distribution(&[BetaPosterior::uniform()], 10, &mut rng, Direction::Max).is_err());
    }
}
