use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::data::Pool;
use crate::error::{Error, Result};

/// Source of true labels, asked one record at a time.
pub trait Oracle {
    /// True class of record `index` (whose id is `id`).
    fn query(&mut self, index: usize, id: &str) -> Result<usize>;
}

/// Answers from the hidden labels of a fully labeled pool. Each record can
/// be queried once.
#[derive(Clone)]
pub struct ReplayOracle {
    labels: Arc<Vec<usize>>,
    ids: Arc<HashMap<String, usize>>,
    queried: Vec<bool>,
    remaining: usize,
}

impl ReplayOracle {
    /// A fresh oracle over the same labels, with nothing queried yet.
    pub fn rearm(&self) -> Self {
        ReplayOracle {
            labels: Arc::clone(&self.labels),
            ids: Arc::clone(&self.ids),
            queried: vec![false; self.labels.len()],
            remaining: self.labels.len(),
        }
    }

    pub fn query_id(&mut self, id: &str) -> Result<usize> {
        let index = *self
            .ids
            .get(id)
            .ok_or_else(|| Error::UnknownRecord(id.to_string()))?;
        self.query(index, id)
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }
}

impl Oracle for ReplayOracle {
    fn query(&mut self, index: usize, id: &str) -> Result<usize> {
        if self.remaining == 0 {
            return Err(Error::OracleExhausted);
        }
        if self.ids.get(id) != Some(&index) {
            return Err(Error::UnknownRecord(id.to_string()));
        }
        if std::mem::replace(&mut self.queried[index], true) {
            return Err(Error::AlreadyQueried(id.to_string()));
        }
        self.remaining -= 1;
        Ok(self.labels[index])
    }
}

impl fmt::Debug for ReplayOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReplayOracle")
            .field("records", &self.labels.len())
            .field("remaining", &self.remaining)
            .finish_non_exhaustive()
    }
}

/// Requires every record to carry a label.
pub fn make_replay_oracle(pool: &Pool) -> Result<ReplayOracle> {
    let labels = pool
        .records()
        .iter()
        .map(|r| r.label.ok_or_else(|| Error::MissingLabel(r.id.clone())))
        .collect::<Result<Vec<_>>>()?;
    let ids = pool
        .records()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.clone(), i))
        .collect();
    let n = labels.len();
    Ok(ReplayOracle {
        labels: Arc::new(labels),
        ids: Arc::new(ids),
        queried: vec![false; n],
        remaining: n,
    })
}
