//! Synthetic labeled pools with a chosen per-class accuracy and calibration.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Pool, PredictionRecord};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Margin keeping the predicted class a strict argmax.
const ARGMAX_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(alias = "K")]
    pub num_classes: usize,
    pub n: usize,
    /// True accuracy of each predicted class.
    pub accuracy_profile: Vec<f64>,
    /// Confidence is `accuracy + offset`, clamped.
    #[serde(default)]
    pub calibration_offset: f64,
    #[serde(default)]
    pub seed: u64,
    /// Relative frequency of each predicted class; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<Vec<f64>>,
}

impl SynthSpec {
    pub fn new(accuracy_profile: Vec<f64>, n: usize, seed: u64) -> Self {
        SynthSpec {
            num_classes: accuracy_profile.len(),
            n,
            accuracy_profile,
            calibration_offset: 0.0,
            seed,
            class_weights: None,
        }
    }

    /// `k` accuracies evenly spaced from `low` to `high`.
    pub fn linear_profile(k: usize, low: f64, high: f64) -> Vec<f64> {
        (0..k)
            .map(|i| low + (high - low) * i as f64 / (k.max(2) - 1) as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let k = self.num_classes;
        if k < 2 {
            return bad("synthetic pools need at least 2 classes".into());
        }
        if self.accuracy_profile.len() != k {
            return bad(format!(
                "accuracy_profile has {} entries for {k} classes",
                self.accuracy_profile.len()
            ));
        }
        if let Some(a) = self.accuracy_profile.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return bad(format!("accuracy {a} not in [0, 1]"));
        }
        if self.n < k {
            return bad(format!("n = {} is smaller than K = {k}", self.n));
        }
        if !self.calibration_offset.is_finite() {
            return bad("calibration_offset must be finite".into());
        }
        if let Some(w) = &self.class_weights {
            if w.len() != k || w.iter().any(|x| !(*x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
                return bad("class_weights must be K non-negative values with a positive sum".into());
            }
        }
        Ok(())
    }

    /// Confidence assigned to predictions of class `k`.
    pub fn confidence(&self, k: usize) -> f64 {
        let floor = 1.0 / self.num_classes as f64 + ARGMAX_MARGIN;
        (self.accuracy_profile[k] + self.calibration_offset).clamp(floor, 1.0)
    }
}

/// Draws a fully labeled pool. The predicted class of each record is drawn
/// from the class weights, the prediction is correct with the class's
/// accuracy, and a wrong prediction's label is uniform over the other classes.
/// The predicted class gets the confidence; the rest is split evenly.
pub fn synth_pool(spec: &SynthSpec) -> Result<Pool> {
    spec.validate()?;
    let k = spec.num_classes;
    let mut rng = rng_from_seed(spec.seed);
    let picker = WeightedIndex::new(spec.class_weights.clone().unwrap_or_else(|| vec![1.0; k]))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let width = (spec.n - 1).to_string().len();
    let records = (0..spec.n)
        .map(|i| {
            let predicted = picker.sample(&mut rng);
            let correct = rng.random_bool(spec.accuracy_profile[predicted]);
            let label = if correct {
                predicted
            } else {
                let other = rng.random_range(0..k - 1);
                if other >= predicted {
                    other + 1
                } else {
                    other
                }
            };
            let c = spec.confidence(predicted);
            let rest = (1.0 - c) / (k - 1) as f64;
            let mut scores = vec![rest; k];
            scores[predicted] = c;
            PredictionRecord {
                id: format!("x{i:0width$}"),
                scores,
                label: Some(label),
                attributes: Default::default(),
            }
        })
        .collect();
    Pool::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_profile_is_always_correct() {
        let pool = synth_pool(&SynthSpec::new(vec![1.0; 4], 500, 1)).unwrap();
        assert!(pool.records().iter().all(|r| r.is_correct() == Some(true)));
    }

    #[test]
    fn predicted_class_is_the_boosted_score() {
        let mut spec = SynthSpec::new(vec![0.2, 0.4, 0.9], 300, 2);
        spec.calibration_offset = -0.5;
        let pool = synth_pool(&spec).unwrap();
        for r in pool.records() {
            assert!((r.confidence() - spec.confidence(r.predicted_class())).abs() < 1e-12);
            assert!(r.confidence() > 1.0 / 3.0);
        }
    }

    #[test]
    fn same_seed_same_pool() {
        let spec = SynthSpec::new(SynthSpec::linear_profile(5, 0.5, 0.9), 200, 9);
        assert_eq!(synth_pool(&spec).unwrap().records(), synth_pool(&spec).unwrap().records());
    }

    #[test]
    fn invalid_specs() {
        assert!(synth_pool(&SynthSpec::new(vec![0.5], 10, 0)).is_err());
        assert!(synth_pool(&SynthSpec::new(vec![0.5, 1.5], 10, 0)).is_err());
        assert!(synth_pool(&SynthSpec::new(vec![0.5, 0.5, 0.5], 2, 0)).is_err());
    }

    #[test]
    fn linear_profile_endpoints() {
        let p = SynthSpec::linear_profile(20, 0.5, 0.99);
        assert_eq!(p[0], 0.5);
        assert!((p[19] - 0.99).abs() < 1e-12);
    }
}
