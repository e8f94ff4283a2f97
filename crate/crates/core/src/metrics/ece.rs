use rand::Rng;
use serde::Serialize;

use crate::data::{GroupIndex, PartitionSpec};
use crate::error::{Error, Result};
use crate::posterior::{BetaPosterior, PosteriorSummary};

use super::DEFAULT_LEVEL;

/// `sum_b p_b |theta_b - s_b|`.
pub fn ece_exact(weights: &[f64], accuracies: &[f64], confidences: &[f64]) -> Result<f64> {
    check_len(weights.len(), accuracies.len())?;
    check_len(weights.len(), confidences.len())?;
    Ok(weights
        .iter()
        .zip(accuracies)
        .zip(confidences)
        .map(|((p, t), s)| p * (t - s).abs())
        .sum())
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Monte-Carlo draws of ECE plus their summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcePosterior {
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub summary: PosteriorSummary,
    pub n_samples: usize,
}

impl EcePosterior {
    fn from_samples(samples: Vec<f64>) -> Self {
        let summary = PosteriorSummary::from_samples(&samples, DEFAULT_LEVEL);
        EcePosterior {
            n_samples: samples.len(),
            samples,
            summary,
        }
    }

    pub fn summary_at(&self, level: f64) -> PosteriorSummary {
        PosteriorSummary::from_samples(&self.samples, level)
    }
}

/// Bin confidences with empty bins replaced by their midpoint. Empty bins
/// carry zero weight, so the substitute never reaches an ECE value.
pub fn bin_confidences(confidences: &[Option<f64>]) -> Vec<f64> {
    let n = confidences.len() as f64;
    confidences
        .iter()
        .enumerate()
        .map(|(b, s)| s.unwrap_or((b as f64 + 0.5) / n))
        .collect()
}

/// Each draw samples every weighted bin's accuracy and evaluates
/// [`ece_exact`]. Bins with zero weight are not sampled.
pub fn ece_posterior<R: Rng + ?Sized>(
    bin_posts: &[BetaPosterior],
    weights: &[f64],
    confidences: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<EcePosterior> {
    check_len(weights.len(), bin_posts.len())?;
    check_len(weights.len(), confidences.len())?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let active: Vec<usize> = (0..weights.len()).filter(|&b| weights[b] > 0.0).collect();
    let samples = (0..n_samples)
        .map(|_| {
            active
                .iter()
                .map(|&b| weights[b] * (bin_posts[b].sample(rng) - confidences[b]).abs())
                .sum::<f64>()
        })
        .collect();
    Ok(EcePosterior::from_samples(samples))
}

/// Classwise ECE of predicted class `class` from class-and-bin posteriors.
///
/// Bin weights are renormalized within the class and each bin's confidence
/// is the mean confidence of its own members.
pub fn groupwise_ece_posterior<R: Rng + ?Sized>(
    index: &GroupIndex,
    posts: &[BetaPosterior],
    class: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<EcePosterior> {
    let PartitionSpec::ClassAndBin { num_bins } = *index.spec() else {
        return Err(Error::InvalidConfig(
            "classwise ECE needs a class-and-bin partition".into(),
        ));
    };
    check_len(index.num_groups(), posts.len())?;
    let groups: Vec<usize> = (0..num_bins)
        .map(|b| {
            index
                .class_bin_group(class, b)
                .ok_or_else(|| Error::InvalidParameter(format!("class {class} out of range")))
        })
        .collect::<Result<_>>()?;
    let (weights, confidences) = class_bin_weights(index, &groups)
        .ok_or_else(|| Error::InvalidParameter(format!("class {class} has no members")))?;
    let bin_posts: Vec<BetaPosterior> = groups.iter().map(|&g| posts[g]).collect();
    ece_posterior(&bin_posts, &weights, &confidences, n_samples, rng)
}

/// Within-class bin weights and confidences; `None` if the class is empty.
pub(crate) fn class_bin_weights(index: &GroupIndex, groups: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let sizes: Vec<usize> = groups.iter().map(|&g| index.members(g).len()).collect();
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return None;
    }
    let weights = sizes.iter().map(|&n| n as f64 / total as f64).collect();
    let confidences =
        bin_confidences(&groups.iter().map(|&g| index.mean_confidence(g)).collect::<Vec<_>>());
    Some((weights, confidences))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityBin {
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub weight: f64,
    /// Mean confidence `s_b`; absent for empty bins.
    pub confidence: Option<f64>,
    pub accuracy: PosteriorSummary,
    pub labels: u64,
}

/// Plot-ready reliability diagram with the posterior of marginal ECE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityDiagram {
    pub level: f64,
    pub bins: Vec<ReliabilityBin>,
    pub ece: EcePosterior,
}

pub fn reliability_diagram<R: Rng + ?Sized>(
    bin_posts: &[BetaPosterior],
    weights: &[f64],
    confidences: &[Option<f64>],
    level: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<ReliabilityDiagram> {
    check_len(weights.len(), bin_posts.len())?;
    check_len(weights.len(), confidences.len())?;
    let num_bins = weights.len();
    let bins = (0..num_bins)
        .map(|b| ReliabilityBin {
            bin: b,
            lower: b as f64 / num_bins as f64,
            upper: (b + 1) as f64 / num_bins as f64,
            weight: weights[b],
            confidence: confidences[b],
            accuracy: bin_posts[b].summarize(level),
            labels: bin_posts[b].trials,
        })
        .collect();
    let mut ece = ece_posterior(
        bin_posts,
        weights,
        &bin_confidences(confidences),
        n_samples,
        rng,
    )?;
    ece.summary = ece.summary_at(level);
    Ok(ReliabilityDiagram { level, bins, ece })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn point_mass(theta: f64) -> BetaPosterior {
        BetaPosterior::new(1e9 * theta, 1e9 * (1.0 - theta)).unwrap()
    }

    #[test]
    fn exact_examples() {
        assert!((ece_exact(&[1.0], &[0.8], &[0.9]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(ece_exact(&[0.3, 0.7], &[0.4, 0.9], &[0.4, 0.9]).unwrap(), 0.0);
        let v = ece_exact(&[0.5, 0.5], &[0.6, 0.9], &[0.8, 0.8]).unwrap();
        assert!((v - 0.15).abs() < 1e-12);
        assert!(ece_exact(&[1.0], &[0.5, 0.5], &[0.5]).is_err());
    }

    #[test]
    fn point_mass_matches_exact() {
        let thetas = [0.3, 0.55, 0.8, 0.97];
        let weights = [0.1, 0.2, 0.3, 0.4];
        let conf = [0.35, 0.65, 0.75, 0.95];
        let posts: Vec<_> = thetas.iter().map(|&t| point_mass(t)).collect();
        let mut rng = rng_from_seed(5);
        let post = ece_posterior(&posts, &weights, &conf, 2000, &mut rng).unwrap();
        let exact = ece_exact(&weights, &thetas, &conf).unwrap();
        assert!((post.summary.mean - exact).abs() < 1e-3);
    }

    #[test]
    fn uniform_single_bin_expectation() {
        // E|U - 0.5| = 1/4 for U ~ Uniform(0, 1).
        let mut rng = rng_from_seed(11);
        let post =
            ece_posterior(&[BetaPosterior::uniform()], &[1.0], &[0.5], 100_000, &mut rng).unwrap();
        assert!((post.summary.mean - 0.25).abs() < 0.01);
        assert!(post.samples.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn repeatable_given_seed() {
        let posts = [BetaPosterior::new(3.0, 2.0).unwrap(), BetaPosterior::uniform()];
        let run = || {
            let mut rng = rng_from_seed(99);
            ece_posterior(&posts, &[0.4, 0.6], &[0.7, 0.2], 500, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn reliability_empty_bins_keep_prior() {
        let prior = BetaPosterior::new(0.9, 1.1).unwrap();
        let posts = vec![prior; 4];
        let weights = [0.5, 0.0, 0.0, 0.5];
        let conf = [Some(0.2), None, None, Some(0.9)];
        let mut rng = rng_from_seed(1);
        let d = reliability_diagram(&posts, &weights, &conf, 0.95, 200, &mut rng).unwrap();
        assert_eq!(d.bins[1].weight, 0.0);
        assert_eq!(d.bins[1].accuracy, prior.summarize(0.95));
        assert_eq!(d.bins[1].confidence, None);
    }

    #[test]
    fn calibrated_point_masses_on_diagonal() {
        let conf = [0.15, 0.45, 0.85];
        let posts: Vec<_> = conf.iter().map(|&s| point_mass(s)).collect();
        let mut rng = rng_from_seed(2);
        let d = reliability_diagram(
            &posts,
            &[0.2, 0.3, 0.5],
            &conf.map(Some),
            0.95,
            500,
            &mut rng,
        )
        .unwrap();
        for (bin, s) in d.bins.iter().zip(conf) {
            assert!((bin.accuracy.mean - s).abs() < 1e-6);
        }
        assert!(d.ece.summary.mean < 1e-3);
    }
}
