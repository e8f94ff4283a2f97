//! Conjugate beliefs: Beta for Bernoulli rates, Dirichlet for confusion
//! columns.
//!
//! Posteriors are value types. Updates return a new value and never mutate
//! the receiver, so snapshots are free to keep.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{beta_quantile, ln_beta};

/// Posterior mean plus a central credible interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PosteriorSummary {
    /// Mean and equal-tailed empirical interval of Monte-Carlo draws.
    pub fn from_samples(samples: &[f64], level: f64) -> Self {
        assert!(!samples.is_empty(), "summary of zero samples");
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let tail = (1.0 - level) / 2.0;
        Self::ordered(
            mean,
            empirical_quantile(&sorted, tail),
            empirical_quantile(&sorted, 1.0 - tail),
        )
    }

    fn ordered(mean: f64, lo: f64, hi: f64) -> Self {
        PosteriorSummary {
            mean,
            ci_low: lo.min(mean),
            ci_high: hi.max(mean),
        }
    }
}

/// Linear-interpolation quantile of already sorted data.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Beta belief over a Bernoulli rate, stored as prior pseudo-counts plus
/// observed counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
    pub successes: u64,
    pub trials: u64,
}

impl BetaPosterior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Beta parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(BetaPosterior {
            alpha,
            beta,
            successes: 0,
            trials: 0,
        })
    }

    pub fn uniform() -> Self {
        Self::new(1.0, 1.0).unwrap()
    }

    #[must_use]
    pub fn update(self, outcome: bool) -> Self {
        BetaPosterior {
            successes: self.successes + u64::from(outcome),
            trials: self.trials + 1,
            ..self
        }
    }

    #[must_use]
    pub fn update_all(self, outcomes: impl IntoIterator<Item = bool>) -> Self {
        outcomes.into_iter().fold(self, Self::update)
    }

    /// `(alpha + r, beta + N - r)`.
    pub fn effective(&self) -> (f64, f64) {
        (
            self.alpha + self.successes as f64,
            self.beta + (self.trials - self.successes) as f64,
        )
    }

    pub fn mean(&self) -> f64 {
        let (a, b) = self.effective();
        a / (a + b)
    }

    pub fn variance(&self) -> f64 {
        let (a, b) = self.effective();
        beta_variance(a, b)
    }

    /// Posterior variance averaged over the next outcome, with success
    /// probability `p_success`.
    pub fn expected_variance_after(&self, p_success: f64) -> f64 {
        let (a, b) = self.effective();
        p_success * beta_variance(a + 1.0, b) + (1.0 - p_success) * beta_variance(a, b + 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b) = self.effective();
        Beta::new(a, b)
            .expect("effective Beta parameters are positive")
            .sample(rng)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let (a, b) = self.effective();
        beta_quantile(a, b, p)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let (a, b) = self.effective();
        // 0 * ln(0) is taken as 0 so a = 1 or b = 1 has finite endpoints.
        let term = |k: f64, v: f64| if k == 0.0 { 0.0 } else { k * v.ln() };
        term(a - 1.0, x) + term(b - 1.0, 1.0 - x) - ln_beta(a, b)
    }

    pub fn summarize(&self, level: f64) -> PosteriorSummary {
        let tail = (1.0 - level) / 2.0;
        PosteriorSummary::ordered(self.mean(), self.quantile(tail), self.quantile(1.0 - tail))
    }
}

fn beta_variance(a: f64, b: f64) -> f64 {
    let s = a + b;
    a * b / (s * s * (s + 1.0))
}

/// Dirichlet belief over one confusion column `theta[., k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletPosterior {
    pub alpha: Vec<f64>,
    pub counts: Vec<u64>,
}

impl DirichletPosterior {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter(
                "Dirichlet parameters must be positive".into(),
            ));
        }
        let counts = vec![0; alpha.len()];
        Ok(DirichletPosterior { alpha, counts })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn update(&self, class: usize) -> Result<Self> {
        if class >= self.dim() {
            return Err(Error::InvalidParameter(format!(
                "class {class} out of range for dimension {}",
                self.dim()
            )));
        }
        let mut next = self.clone();
        next.counts[class] += 1;
        Ok(next)
    }

    pub fn effective(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.counts)
            .map(|(a, c)| a + *c as f64)
            .collect()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let eff = self.effective();
        let total: f64 = eff.iter().sum();
        eff.into_iter().map(|a| a / total).collect()
    }

    /// Sum of the marginal variances of every component.
    pub fn total_variance(&self) -> f64 {
        dirichlet_total_variance(&self.effective())
    }

    /// Expected total variance after one more observation drawn from `probs`.
    pub fn expected_variance_after(&self, probs: &[f64]) -> f64 {
        let mut eff = self.effective();
        let mut acc = 0.0;
        for (j, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                eff[j] += 1.0;
                acc += p * dirichlet_total_variance(&eff);
                eff[j] -= 1.0;
            }
        }
        acc
    }

    /// K independent unit-scale Gammas, normalized. Small shapes are drawn
    /// in log space (`G(a) = G(a + 1) U^{1/a}`) so the draw never collapses
    /// to all zeros.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let logs: Vec<f64> = self
            .effective()
            .into_iter()
            .map(|a| {
                if a < 1.0 {
                    let g = Gamma::new(a + 1.0, 1.0).expect("positive shape").sample(rng);
                    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                    g.ln() + u.ln() / a
                } else {
                    Gamma::new(a, 1.0).expect("positive shape").sample(rng).ln()
                }
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Marginal Beta summary of each component.
    pub fn summarize(&self, level: f64) -> Vec<PosteriorSummary> {
        let eff = self.effective();
        let total: f64 = eff.iter().sum();
        eff.iter()
            .map(|&a| {
                let tail = (1.0 - level) / 2.0;
                PosteriorSummary::ordered(
                    a / total,
                    beta_quantile(a, total - a, tail),
                    beta_quantile(a, total - a, 1.0 - tail),
                )
            })
            .collect()
    }
}

fn dirichlet_total_variance(eff: &[f64]) -> f64 {
    let total: f64 = eff.iter().sum();
    eff.iter()
        .map(|a| a * (total - a) / (total * total * (total + 1.0)))
        .sum()
}
