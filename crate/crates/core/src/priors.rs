//! Uninformative and score-based (self-assessment) priors.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::{GroupIndex, PartitionSpec, Pool};
use crate::error::{Error, Result};
use crate::posterior::{BetaPosterior, DirichletPosterior};

pub const DEFAULT_BETA_STRENGTH: f64 = 2.0;
pub const DEFAULT_DIRICHLET_STRENGTH: f64 = 1.0;

/// Group confidences are clamped to `[CONFIDENCE_CLAMP, 1 - CONFIDENCE_CLAMP]`
/// before forming informative Beta parameters.
pub const CONFIDENCE_CLAMP: f64 = 1e-3;

/// Lower bound on an informative Dirichlet entry, relative to `N_0 / K`.
const DIRICHLET_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    #[default]
    Uniform,
    Informative,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PriorConfig {
    #[serde(default)]
    pub kind: PriorKind,
    /// Total pseudo-count `N_0`; defaults to 2 for Beta and 1 for Dirichlet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
}

impl PriorConfig {
    pub fn uniform() -> Self {
        PriorConfig::default()
    }

    pub fn informative() -> Self {
        PriorConfig {
            kind: PriorKind::Informative,
            strength: None,
        }
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = Some(strength);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.strength {
            Some(s) if !(s > 0.0 && s.is_finite()) => Err(Error::InvalidConfig(format!(
                "prior strength must be positive, got {s}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn beta_strength(&self) -> f64 {
        self.strength.unwrap_or(DEFAULT_BETA_STRENGTH)
    }

    pub fn dirichlet_strength(&self) -> f64 {
        self.strength.unwrap_or(DEFAULT_DIRICHLET_STRENGTH)
    }
}

/// One Beta prior per group.
///
/// Uniform: `Beta(N_0/2, N_0/2)`. Informative: `Beta(N_0 s_g, N_0 (1 - s_g))`
/// with `s_g` the group's mean confidence; empty groups fall back to uniform.
pub fn beta_priors(index: &GroupIndex, cfg: &PriorConfig) -> Result<Vec<BetaPosterior>> {
    cfg.validate()?;
    let n0 = cfg.beta_strength();
    (0..index.num_groups())
        .map(|g| match (cfg.kind, index.mean_confidence(g)) {
            (PriorKind::Uniform, _) => BetaPosterior::new(n0 / 2.0, n0 / 2.0),
            (PriorKind::Informative, Some(s)) => informative_beta(s, n0),
            (PriorKind::Informative, None) => {
                warn!("group {} is empty; using a uniform prior", index.name(g));
                BetaPosterior::new(n0 / 2.0, n0 / 2.0)
            }
        })
        .collect()
}

pub fn informative_beta(confidence: f64, strength: f64) -> Result<BetaPosterior> {
    let s = confidence.clamp(CONFIDENCE_CLAMP, 1.0 - CONFIDENCE_CLAMP);
    BetaPosterior::new(strength * s, strength * (1.0 - s))
}

/// One Dirichlet prior per predicted class `k`, over the true class `j`.
///
/// Uniform: `alpha_jk = N_0 / K`. Informative: `alpha_jk` proportional to the
/// summed score `p(y = j | x)` over members of class `k`, scaled so the
/// column sums to `N_0`.
pub fn dirichlet_priors(
    pool: &Pool,
    index: &GroupIndex,
    cfg: &PriorConfig,
) -> Result<Vec<DirichletPosterior>> {
    cfg.validate()?;
    if index.spec() != &PartitionSpec::PredictedClass {
        return Err(Error::InvalidConfig(
            "Dirichlet priors need a predicted-class partition".into(),
        ));
    }
    let k = pool.num_classes();
    let n0 = cfg.dirichlet_strength();
    let uniform = vec![n0 / k as f64; k];
    (0..k)
        .map(|class| {
            let members = index.members(class);
            let alpha = match cfg.kind {
                PriorKind::Uniform => uniform.clone(),
                PriorKind::Informative if members.is_empty() => {
                    warn!("class {class} has no members; using a uniform prior");
                    uniform.clone()
                }
                PriorKind::Informative => {
                    let mut sums = vec![0.0; k];
                    for &i in members {
                        for (acc, s) in sums.iter_mut().zip(&pool.record(i).scores) {
                            *acc += s;
                        }
                    }
                    scale_to_strength(&sums, n0)
                }
            };
            DirichletPosterior::new(alpha)
        })
        .collect()
}

fn scale_to_strength(raw: &[f64], n0: f64) -> Vec<f64> {
    let floor = DIRICHLET_FLOOR * n0 / raw.len() as f64;
    let total: f64 = raw.iter().sum();
    let floored: Vec<f64> = raw.iter().map(|x| (x / total * n0).max(floor)).collect();
    let total: f64 = floored.iter().sum();
    floored.into_iter().map(|x| x * n0 / total).collect()
}
