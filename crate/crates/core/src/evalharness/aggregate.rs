use std::collections::BTreeMap;

use serde::Serialize;

use super::wilcoxon::{wilcoxon_signed_rank, Wilcoxon};
use crate::error::{Error, Result};

/// Significance level for paired comparisons.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Standard error of the mean.
    pub se: f64,
    pub n_runs: usize,
}

pub fn aggregate_runs(values: &[f64]) -> Result<Aggregate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "aggregation needs at least 2 runs, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(Aggregate {
        mean,
        se: (var / nf).sqrt(),
        n_runs: n,
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Significance {
    #[serde(flatten)]
    pub test: Wilcoxon,
    pub significant: bool,
}

/// Summary of one metric over runs. `None` run values ("not reached") are
/// censored: counted in `not_reached` and left out of the statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub se: Option<f64>,
    pub median: Option<f64>,
    pub n_runs: usize,
    pub not_reached: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub significant_vs: BTreeMap<String, Significance>,
    pub runs: Vec<Option<f64>>,
}

impl MetricSummary {
    pub fn new(runs: &[Option<f64>]) -> Self {
        let reached: Vec<f64> = runs.iter().flatten().copied().collect();
        let agg = aggregate_runs(&reached).ok();
        MetricSummary {
            mean: agg.map(|a| a.mean).or_else(|| reached.first().copied()),
            se: agg.map(|a| a.se),
            median: median(&reached),
            n_runs: runs.len(),
            not_reached: runs.len() - reached.len(),
            significant_vs: BTreeMap::new(),
            runs: runs.to_vec(),
        }
    }
}

/// Per-run values of each metric for one method.
pub type MethodRuns = BTreeMap<String, Vec<Option<f64>>>;

/// `method -> metric -> summary`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub methods: BTreeMap<String, BTreeMap<String, MetricSummary>>,
}

/// Summarizes every method and, when `baseline` is given, tests each other
/// method against it run by run. Runs where either side is censored are
/// dropped from the paired test.
pub fn summarize_methods(
    methods: &BTreeMap<String, MethodRuns>,
    baseline: Option<&str>,
) -> Result<EvaluationReport> {
    let base = match baseline {
        Some(name) => Some(methods.get(name).ok_or_else(|| {
            Error::InvalidParameter(format!("unknown baseline method `{name}`"))
        })?),
        None => None,
    };
    let mut out = BTreeMap::new();
    for (name, metrics) in methods {
        let mut summaries = BTreeMap::new();
        for (metric, runs) in metrics {
            let mut s = MetricSummary::new(runs);
            if let (Some(base), Some(b)) = (base, baseline) {
                if b != name {
                    if let Some(base_runs) = base.get(metric) {
                        if base_runs.len() != runs.len() {
                            return Err(Error::DimensionMismatch {
                                expected: base_runs.len(),
                                found: runs.len(),
                            });
                        }
                        let (x, y): (Vec<f64>, Vec<f64>) = runs
                            .iter()
                            .zip(base_runs)
                            .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                            .unzip();
                        let test = wilcoxon_signed_rank(&x, &y)?;
                        s.significant_vs.insert(
                            b.to_string(),
                            Significance {
                                significant: test.significant(ALPHA),
                                test,
                            },
                        );
                    }
                }
            }
            summaries.insert(metric.clone(), s);
        }
        out.insert(name.clone(), summaries);
    }
    Ok(EvaluationReport { methods: out })
}
