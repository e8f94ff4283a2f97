use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores must sum to one within this tolerance; they are renormalized after.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Model output for one pool instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

impl PredictionRecord {
    /// Argmax of the scores; ties go to the lowest class index.
    pub fn predicted_class(&self) -> usize {
        let mut best = 0;
        for (k, &s) in self.scores.iter().enumerate().skip(1) {
            if s > self.scores[best] {
                best = k;
            }
        }
        best
    }

    pub fn confidence(&self) -> f64 {
        self.scores[self.predicted_class()]
    }

    pub fn is_correct(&self) -> Option<bool> {
        self.label.map(|y| y == self.predicted_class())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Guess from the file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

/// Validated, immutable collection of prediction records.
#[derive(Debug, Clone)]
pub struct Pool {
    records: Vec<PredictionRecord>,
    num_classes: usize,
    by_id: HashMap<String, usize>,
}

impl Pool {
    /// Validates records (1-based line numbers in errors follow input order).
    pub fn new(records: Vec<PredictionRecord>) -> Result<Self> {
        Self::with_lines(records.into_iter().enumerate().map(|(i, r)| (i + 1, r)))
    }

    fn with_lines(rows: impl IntoIterator<Item = (usize, PredictionRecord)>) -> Result<Self> {
        let mut records = Vec::new();
        let mut by_id = HashMap::new();
        let mut num_classes = 0;
        for (line, mut rec) in rows {
            if records.is_empty() {
                num_classes = rec.scores.len();
                if num_classes == 0 {
                    return Err(Error::Parse {
                        line,
                        message: "empty score vector".into(),
                    });
                }
            }
            validate_record(line, &mut rec, num_classes)?;
            if by_id.insert(rec.id.clone(), records.len()).is_some() {
                return Err(Error::DuplicateId { line, id: rec.id });
            }
            records.push(rec);
        }
        if records.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(Pool {
            records,
            num_classes,
            by_id,
        })
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn record(&self, index: usize) -> &PredictionRecord {
        &self.records[index]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.records.iter().all(|r| r.label.is_some())
    }

    /// Splits hidden labels off the pool, returning the unlabeled pool and
    /// the labels in record order.
    pub fn split_labels(&self) -> (Pool, Vec<Option<usize>>) {
        let labels = self.records.iter().map(|r| r.label).collect();
        let mut stripped = self.clone();
        for r in &mut stripped.records {
            r.label = None;
        }
        (stripped, labels)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn from_jsonl<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PredictionRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?;
            rows.push((line_no, rec));
        }
        Self::with_lines(rows)
    }

    /// CSV with header `id,score_0,...,score_{K-1}[,label]`.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.get(0).map(str::trim) != Some("id") {
            return Err(Error::Parse {
                line: 1,
                message: "first column must be `id`".into(),
            });
        }
        let mut k = 0;
        for (col, name) in headers.iter().enumerate().skip(1) {
            if name.trim() == format!("score_{}", col - 1) {
                k += 1;
            } else {
                break;
            }
        }
        let label_col = match headers.len() - 1 - k {
            0 => None,
            1 if headers.get(k + 1).map(str::trim) == Some("label") => Some(k + 1),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header id,score_0,...,score_{K-1}[,label]".into(),
                })
            }
        };
        let mut rows = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            let parse_err = |message: String| Error::Parse { line, message };
            let id = row.get(0).unwrap_or_default().trim().to_string();
            let scores = (1..=k)
                .map(|c| {
                    let field = row.get(c).unwrap_or_default().trim();
                    field
                        .parse::<f64>()
                        .map_err(|_| parse_err(format!("bad score `{field}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let label = match label_col.and_then(|c| row.get(c)).map(str::trim) {
                None | Some("") => None,
                Some(field) => Some(
                    field
                        .parse::<usize>()
                        .map_err(|_| parse_err(format!("bad label `{field}`")))?,
                ),
            };
            rows.push((
                line,
                PredictionRecord {
                    id,
                    scores,
                    label,
                    attributes: BTreeMap::new(),
                },
            ));
        }
        Self::with_lines(rows)
    }
}

fn validate_record(line: usize, rec: &mut PredictionRecord, k: usize) -> Result<()> {
    if rec.scores.len() != k {
        return Err(Error::InconsistentClasses {
            line,
            expected: k,
            found: rec.scores.len(),
        });
    }
    if let Some(s) = rec.scores.iter().find(|s| !s.is_finite() || **s < 0.0 || **s > 1.0) {
        return Err(Error::Parse {
            line,
            message: format!("record `{}` has score {s} outside [0, 1]", rec.id),
        });
    }
    let sum: f64 = rec.scores.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized {
            line,
            id: rec.id.clone(),
            sum,
        });
    }
    // Sums already off by rounding only are left alone, so a written pool
    // reads back bit for bit.
    if (sum - 1.0).abs() > k as f64 * f64::EPSILON {
        for s in &mut rec.scores {
            *s /= sum;
        }
    }
    if let Some(label) = rec.label {
        if label >= k {
            return Err(Error::LabelRange {
                line,
                id: rec.id.clone(),
                label,
                num_classes: k,
            });
        }
    }
    Ok(())
}

pub fn ingest_predictions(path: impl AsRef<Path>, format: InputFormat) -> Result<Pool> {
    let file = File::open(path.as_ref())?;
    match format {
        InputFormat::Jsonl => Pool::from_jsonl(file),
        InputFormat::Csv => Pool::from_csv(file),
    }
}
