use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Pool;
use crate::error::{Error, Result};

fn default_bins() -> usize {
    10
}

/// How a pool is cut into disjoint groups (bandit arms).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PartitionSpec {
    PredictedClass,
    ScoreBin {
        #[serde(default = "default_bins")]
        num_bins: usize,
    },
    ClassAndBin {
        #[serde(default = "default_bins")]
        num_bins: usize,
    },
    Attribute {
        attribute_name: String,
    },
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec::PredictedClass
    }
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PartitionSpec::ScoreBin { num_bins } | PartitionSpec::ClassAndBin { num_bins }
                if *num_bins == 0 =>
            {
                Err(Error::InvalidConfig("num_bins must be at least 1".into()))
            }
            PartitionSpec::Attribute { attribute_name } if attribute_name.is_empty() => {
                Err(Error::InvalidConfig("attribute_name must be non-empty".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn num_bins(&self) -> Option<usize> {
        match self {
            PartitionSpec::ScoreBin { num_bins } | PartitionSpec::ClassAndBin { num_bins } => {
                Some(*num_bins)
            }
            _ => None,
        }
    }
}

/// Equal-width bin of a confidence value; bin `b` covers `[b/B, (b+1)/B)` and
/// the last bin is closed at 1.
pub fn score_bin(confidence: f64, num_bins: usize) -> usize {
    ((confidence * num_bins as f64).floor() as usize).min(num_bins - 1)
}

/// Disjoint, exhaustive assignment of pool records to groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupIndex {
    spec: PartitionSpec,
    group_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    weights: Vec<f64>,
    mean_confidence: Vec<Option<f64>>,
    names: Vec<String>,
}

impl GroupIndex {
    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    pub fn num_groups(&self) -> usize {
        self.members.len()
    }

    /// Group of the record at `index` in pool order.
    pub fn group_of(&self, index: usize) -> usize {
        self.group_of[index]
    }

    pub fn group_of_id(&self, pool: &Pool, id: &str) -> Option<usize> {
        pool.index_of(id).map(|i| self.group_of[i])
    }

    /// Record indices of group `g`, in pool order.
    pub fn members(&self, g: usize) -> &[usize] {
        &self.members[g]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mean confidence `s_g`; `None` for empty groups.
    pub fn mean_confidence(&self, g: usize) -> Option<f64> {
        self.mean_confidence[g]
    }

    pub fn mean_confidences(&self) -> &[Option<f64>] {
        &self.mean_confidence
    }

    pub fn name(&self, g: usize) -> &str {
        &self.names[g]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// For class-and-bin partitions: the group of (class, bin).
    pub fn class_bin_group(&self, class: usize, bin: usize) -> Option<usize> {
        match self.spec {
            PartitionSpec::ClassAndBin { num_bins } if bin < num_bins => {
                let g = class * num_bins + bin;
                (g < self.members.len()).then_some(g)
            }
            _ => None,
        }
    }
}

pub fn assign_groups(pool: &Pool, spec: &PartitionSpec) -> Result<GroupIndex> {
    spec.validate()?;
    let k = pool.num_classes();
    let (num_groups, group_of, names): (usize, Vec<usize>, Vec<String>) = match spec {
        PartitionSpec::PredictedClass => (
            k,
            pool.records().iter().map(|r| r.predicted_class()).collect(),
            (0..k).map(|c| format!("class {c}")).collect(),
        ),
        PartitionSpec::ScoreBin { num_bins } => (
            *num_bins,
            pool.records()
                .iter()
                .map(|r| score_bin(r.confidence(), *num_bins))
                .collect(),
            (0..*num_bins)
                .map(|b| bin_name(b, *num_bins))
                .collect(),
        ),
        PartitionSpec::ClassAndBin { num_bins } => (
            k * num_bins,
            pool.records()
                .iter()
                .map(|r| r.predicted_class() * num_bins + score_bin(r.confidence(), *num_bins))
                .collect(),
            (0..k)
                .flat_map(|c| (0..*num_bins).map(move |b| (c, b)))
                .map(|(c, b)| format!("class {c} {}", bin_name(b, *num_bins)))
                .collect(),
        ),
        PartitionSpec::Attribute { attribute_name } => {
            let mut values = BTreeMap::new();
            for r in pool.records() {
                let v = r.attributes.get(attribute_name).ok_or_else(|| {
                    Error::MissingAttribute {
                        id: r.id.clone(),
                        attribute: attribute_name.clone(),
                    }
                })?;
                values.entry(v.clone()).or_insert(0usize);
            }
            for (i, slot) in values.values_mut().enumerate() {
                *slot = i;
            }
            let group_of = pool
                .records()
                .iter()
                .map(|r| values[&r.attributes[attribute_name]])
                .collect();
            let names = values
                .keys()
                .map(|v| format!("{attribute_name}={v}"))
                .collect();
            (values.len(), group_of, names)
        }
    };

    let mut members = vec![Vec::new(); num_groups];
    for (i, &g) in group_of.iter().enumerate() {
        members[g].push(i);
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let weights = group_weights(&sizes)?;
    let mean_confidence = members
        .iter()
        .map(|m| {
            (!m.is_empty()).then(|| {
                m.iter().map(|&i| pool.record(i).confidence()).sum::<f64>() / m.len() as f64
            })
        })
        .collect();
    Ok(GroupIndex {
        spec: spec.clone(),
        group_of,
        members,
        weights,
        mean_confidence,
        names,
    })
}

fn bin_name(b: usize, num_bins: usize) -> String {
    let close = if b + 1 == num_bins { ']' } else { ')' };
    format!(
        "[{:.3}, {:.3}{close}",
        b as f64 / num_bins as f64,
        (b + 1) as f64 / num_bins as f64
    )
}

/// Empirical group frequencies `p_g`.
pub fn group_weights(sizes: &[usize]) -> Result<Vec<f64>> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(Error::EmptyPool);
    }
    Ok(sizes.iter().map(|&n| n as f64 / total as f64).collect())
}

pub fn estimate_group_weights(index: &GroupIndex) -> Result<Vec<f64>> {
    let sizes: Vec<usize> = (0..index.num_groups()).map(|g| index.members(g).len()).collect();
    group_weights(&sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PredictionRecord;

    fn pool_from(scores: &[Vec<f64>]) -> Pool {
        Pool::new(
            scores
                .iter()
                .enumerate()
                .map(|(i, s)| PredictionRecord {
                    id: format!("r{i}"),
                    scores: s.clone(),
                    label: None,
                    attributes: BTreeMap::new(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn predicted_class_groups() {
        let pool = pool_from(&[
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.1, 0.8],
            vec![0.3, 0.4, 0.3],
            vec![0.5, 0.25, 0.25],
        ]);
        let idx = assign_groups(&pool, &PartitionSpec::PredictedClass).unwrap();
        assert_eq!(idx.num_groups(), 3);
        assert_eq!(idx.members(0), &[0, 3]);
        assert_eq!(idx.members(1), &[2]);
        assert_eq!(idx.members(2), &[1]);
        assert_eq!(idx.weights(), &[0.5, 0.25, 0.25]);
        assert!((idx.mean_confidence(0).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn last_bin_is_closed() {
        assert_eq!(score_bin(1.0, 10), 9);
        assert_eq!(score_bin(0.0, 10), 0);
        assert_eq!(score_bin(0.1, 10), 1);
        assert_eq!(score_bin(0.0999, 10), 0);
    }

    #[test]
    fn hand_counted_low_confidence_bins() {
        // Confidences {0.05, 0.55, 0.55, 0.95} need K >= 20 for 0.05 to be a max;
        // use K = 20 with a uniform 0.05 row.
        let flat = vec![0.05; 20];
        let mut mid = vec![0.45 / 19.0; 20];
        mid[3] = 0.55;
        let mut high = vec![0.05 / 19.0; 20];
        high[7] = 0.95;
        let pool = pool_from(&[flat, mid.clone(), mid, high]);
        let idx = assign_groups(&pool, &PartitionSpec::ScoreBin { num_bins: 10 }).unwrap();
        let expected = [0.25, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.25];
        for (w, e) in idx.weights().iter().zip(expected) {
            assert!((w - e).abs() < 1e-12);
        }
    }

    #[test]
    fn class_and_bin_keeps_empty_groups() {
        let pool = pool_from(&[vec![0.9, 0.1], vec![0.35, 0.65]]);
        let idx = assign_groups(&pool, &PartitionSpec::ClassAndBin { num_bins: 4 }).unwrap();
        assert_eq!(idx.num_groups(), 8);
        assert_eq!(idx.group_of(0), 3);
        assert_eq!(idx.group_of(1), 4 + 2);
        assert_eq!(idx.weights().iter().filter(|w| **w == 0.0).count(), 6);
        assert_eq!(idx.class_bin_group(1, 2), Some(6));
    }

    #[test]
    fn attribute_groups_and_missing_attribute() {
        let mut recs: Vec<PredictionRecord> = (0..3)
            .map(|i| PredictionRecord {
                id: format!("r{i}"),
                scores: vec![0.5, 0.5],
                label: None,
                attributes: BTreeMap::new(),
            })
            .collect();
        recs[0].attributes.insert("gender".into(), "M".into());
        recs[1].attributes.insert("gender".into(), "F".into());
        let spec = PartitionSpec::Attribute {
            attribute_name: "gender".into(),
        };
        let pool = Pool::new(recs.clone()).unwrap();
        assert!(matches!(
            assign_groups(&pool, &spec),
            Err(Error::MissingAttribute { .. })
        ));
        recs[2].attributes.insert("gender".into(), "F".into());
        let pool = Pool::new(recs).unwrap();
        let idx = assign_groups(&pool, &spec).unwrap();
        assert_eq!(idx.names(), &["gender=F", "gender=M"]);
        assert_eq!(idx.members(0), &[1, 2]);
    }

    #[test]
    fn weights_from_sizes() {
        assert_eq!(group_weights(&[6, 4]).unwrap(), vec![0.6, 0.4]);
        assert_eq!(group_weights(&[3, 0, 1]).unwrap()[1], 0.0);
        assert!(matches!(group_weights(&[0, 0]), Err(Error::EmptyPool)));
    }

    #[test]
    fn spec_serde_shape() {
        let s: PartitionSpec = serde_json::from_str(r#"{"kind": "score-bin"}"#).unwrap();
        assert_eq!(s, PartitionSpec::ScoreBin { num_bins: 10 });
        let s: PartitionSpec =
            serde_json::from_str(r#"{"kind": "attribute", "attribute_name": "g"}"#).unwrap();
        assert!(matches!(s, PartitionSpec::Attribute { .. }));
        assert!(PartitionSpec::ScoreBin { num_bins: 0 }.validate().is_err());
    }
}
