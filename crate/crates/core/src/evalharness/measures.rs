use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{Region, RopeResult};

/// Relative tolerance on lambda for a successful comparison.
pub const LAMBDA_TOLERANCE: f64 = 0.05;

fn same_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        })
    }
}

/// `(sum_g p_g (theta_g - est_g)^2)^(1/2)`.
pub fn rmse_groupwise(estimates: &[f64], truth: &[f64], weights: &[f64]) -> Result<f64> {
    same_len(truth.len(), estimates.len())?;
    same_len(truth.len(), weights.len())?;
    Ok(estimates
        .iter()
        .zip(truth)
        .zip(weights)
        .map(|((e, t), p)| p * (e - t).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// `(sum_k p_k sum_j (theta_jk - est_jk)^2)^(1/2)` with one column per
/// predicted class `k`.
pub fn rmse_confusion(estimates: &[Vec<f64>], truth: &[Vec<f64>], weights: &[f64]) -> Result<f64> {
    same_len(truth.len(), estimates.len())?;
    same_len(truth.len(), weights.len())?;
    let mut total = 0.0;
    for ((e, t), p) in estimates.iter().zip(truth).zip(weights) {
        same_len(t.len(), e.len())?;
        total += p * e.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok(total.sqrt())
}

/// Confusion RMSE divided by `reference`, the RMSE of the zero-label
/// informative-prior estimate.
pub fn rmse_confusion_scaled(
    estimates: &[Vec<f64>],
    truth: &[Vec<f64>],
    weights: &[f64],
    reference: f64,
) -> Result<f64> {
    if !(reference > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reference RMSE must be positive, got {reference}"
        )));
    }
    Ok(rmse_confusion(estimates, truth, weights)? / reference)
}

/// Mean reciprocal rank of the true top-m groups in `predicted`, most
/// extreme first. When reading one member's rank the other true members are
/// deleted from the list.
pub fn mrr(predicted: &[usize], true_top: &[usize]) -> Result<f64> {
    let m = true_top.len();
    if m == 0 {
        return Err(Error::InvalidParameter("true top set is empty".into()));
    }
    if m > predicted.len() {
        return Err(Error::InvalidParameter(format!(
            "top-{m} set exceeds the {} ranked groups",
            predicted.len()
        )));
    }
    let mut total = 0.0;
    for &member in true_top {
        let rank = predicted
            .iter()
            .filter(|g| **g == member || !true_top.contains(g))
            .position(|g| *g == member)
            .ok_or_else(|| Error::InvalidParameter(format!("group {member} is not ranked")))?;
        total += 1.0 / (rank + 1) as f64;
    }
    Ok(total / m as f64)
}

/// Labels needed before identification, or `None` ("not reached").
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Identification {
    pub step: Option<usize>,
    /// `step` as a percentage of the pool size.
    pub percent: Option<f64>,
}

/// First step whose MRR exceeds `threshold`; with `sustained`, the first
/// step after which MRR stays above it through the end of the stream.
/// `mrr_by_step[i]` is the MRR after step `i + 1`.
pub fn labels_to_identify(
    mrr_by_step: &[f64],
    threshold: f64,
    pool_size: usize,
    sustained: bool,
) -> Identification {
    let step = if sustained {
        let tail = mrr_by_step.iter().rev().take_while(|v| **v > threshold).count();
        (tail > 0).then(|| mrr_by_step.len() - tail + 1)
    } else {
        mrr_by_step.iter().position(|v| *v > threshold).map(|i| i + 1)
    };
    Identification {
        step,
        percent: step.map(|s| 100.0 * s as f64 / pool_size as f64),
    }
}

/// `100/R sum_r |ECE* - est_r| / ECE*`.
pub fn ece_percentage_error(estimates: &[f64], truth: f64) -> Result<f64> {
    if !(truth > 0.0) {
        return Err(Error::InvalidParameter(
            "ground-truth ECE must be positive".into(),
        ));
    }
    if estimates.is_empty() {
        return Err(Error::InvalidParameter("no ECE estimates".into()));
    }
    Ok(100.0 * estimates.iter().map(|e| (truth - e).abs() / truth).sum::<f64>()
        / estimates.len() as f64)
}

/// Right region, and lambda within 5% (relative) of the true lambda.
pub fn comparison_success(result: &RopeResult, eta: Region, lambda: f64) -> bool {
    result.eta == eta && (result.lambda - lambda).abs() / lambda < LAMBDA_TOLERANCE
}
