use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::posterior::BetaPosterior;

/// Region of the accuracy difference `delta = theta_a - theta_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// `delta < -epsilon`
    Below,
    /// `-epsilon <= delta <= epsilon`
    Equivalent,
    /// `delta > epsilon`
    Above,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Below, Region::Equivalent, Region::Above];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RopeResult {
    /// Probability mass of each [`Region`], in order.
    pub mu: [f64; 3],
    pub eta: Region,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_samples: usize,
}

impl RopeResult {
    pub fn from_mu(mu: [f64; 3], epsilon: f64, n_samples: usize) -> Self {
        let mut eta = 0;
        for i in 1..3 {
            if mu[i] > mu[eta] {
                eta = i;
            }
        }
        RopeResult {
            mu,
            eta: Region::ALL[eta],
            lambda: mu[eta],
            epsilon,
            n_samples,
        }
    }
}

/// Monte-Carlo estimate of the region probabilities of `theta_a - theta_b`.
pub fn rope_compare<R: Rng + ?Sized>(
    a: &BetaPosterior,
    b: &BetaPosterior,
    epsilon: f64,
    n_samples: usize,
    rng: &mut R,
) -> RopeResult {
    assert!(n_samples > 0, "rope_compare needs at least one sample");
    let mut counts = [0usize; 3];
    for _ in 0..n_samples {
        let delta = a.sample(rng) - b.sample(rng);
        let region = if delta < -epsilon {
            0
        } else if delta > epsilon {
            2
        } else {
            1
        };
        counts[region] += 1;
    }
    let n = n_samples as f64;
    RopeResult::from_mu(counts.map(|c| c as f64 / n), epsilon, n_samples)
}
