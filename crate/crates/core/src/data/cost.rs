use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `cost[j][k]`: cost of predicting `k` when the truth is `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CostMatrix {
    rows: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::CostMatrix("matrix is empty".into()));
        }
        for (j, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::CostMatrix(format!(
                    "row {} has {} columns, expected {k}",
                    j + 1,
                    row.len()
                )));
            }
            if let Some(c) = row.iter().find(|c| !c.is_finite() || **c < 0.0) {
                return Err(Error::CostMatrix(format!("row {} has entry {c}", j + 1)));
            }
        }
        Ok(CostMatrix { rows })
    }

    /// 0 on the diagonal, 1 elsewhere; expected cost is the error rate.
    pub fn zero_one(k: usize) -> Self {
        Self::with_expensive_truths(k, &[], 1.0)
    }

    /// Mistakes whose true class is in `expensive` cost `factor`, all other
    /// mistakes cost 1.
    pub fn with_expensive_truths(k: usize, expensive: &[usize], factor: f64) -> Self {
        let rows = (0..k)
            .map(|j| {
                let c = if expensive.contains(&j) { factor } else { 1.0 };
                (0..k).map(|pred| if pred == j { 0.0 } else { c }).collect()
            })
            .collect();
        CostMatrix { rows }
    }

    pub fn num_classes(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> f64 {
        self.rows[truth][predicted]
    }

    /// Column `k`: costs of predicting `k` for every true class.
    pub fn column(&self, predicted: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[predicted]).collect()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Headerless CSV, one matrix row per line.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        message: format!("bad cost `{f}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for CostMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<CostMatrix> for Vec<Vec<f64>> {
    fn from(m: CostMatrix) -> Self {
        m.rows
    }
}

pub fn load_cost_matrix(path: impl AsRef<Path>) -> Result<CostMatrix> {
    CostMatrix::from_csv(File::open(path)?)
}
