use rand::Rng;

use crate::data::CostMatrix;
use crate::error::{Error, Result};
use crate::posterior::DirichletPosterior;

/// Expected cost of predicting `class`: `sum_j c[j][class] * theta[j]`,
/// where `theta` is the distribution of the true class given the prediction.
pub fn expected_cost(theta: &[f64], costs: &CostMatrix, class: usize) -> Result<f64> {
    if theta.len() != costs.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: costs.num_classes(),
            found: theta.len(),
        });
    }
    if class >= costs.num_classes() {
        return Err(Error::InvalidParameter(format!("class {class} out of range")));
    }
    Ok(theta
        .iter()
        .enumerate()
        .map(|(j, t)| costs.get(j, class) * t)
        .sum())
}

/// Monte-Carlo draws of the classwise expected cost.
pub fn expected_cost_posterior<R: Rng + ?Sized>(
    post: &DirichletPosterior,
    costs: &CostMatrix,
    class: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if post.dim() != costs.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: costs.num_classes(),
            found: post.dim(),
        });
    }
    (0..n_samples)
        .map(|_| expected_cost(&post.sample(rng), costs, class))
        .collect()
}
