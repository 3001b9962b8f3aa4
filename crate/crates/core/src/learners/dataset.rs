use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurizer::{FeatureKind, FeatureRecord, FeatureSchema, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Labels {
    /// Class ids indexing `Dataset::classes`.
    Class(Vec<usize>),
    Real(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Class(v) => v.len(),
            Labels::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Encoded records with their labels and the schema they were encoded against.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub records: Vec<FeatureRecord>,
    pub labels: Labels,
    pub schema: FeatureSchema,
    /// Class names (empty for regression).
    pub classes: Vec<String>,
    pub encoding: OneHotEncoding,
    fingerprint: u64,
}

impl Dataset {
    pub fn new(
        records: Vec<FeatureRecord>,
        labels: Labels,
        schema: FeatureSchema,
        classes: Vec<String>,
    ) -> Result<Self> {
        if records.len() != labels.len() {
            return Err(Error::Invalid(format!(
                "{} records but {} labels",
                records.len(),
                labels.len()
            )));
        }
        let fingerprint = schema.fingerprint();
        if let Some(r) = records.iter().find(|r| r.fingerprint != fingerprint) {
            return Err(Error::FingerprintMismatch {
                expected: fingerprint,
                found: r.fingerprint,
            });
        }
        if let Labels::Class(ids) = &labels {
            if let Some(bad) = ids.iter().find(|&&c| c >= classes.len()) {
                return Err(Error::Invalid(format!(
                    "class id {bad} outside {} classes",
                    classes.len()
                )));
            }
        }
        let encoding = OneHotEncoding::new(&schema);
        Ok(Dataset {
            records,
            labels,
            schema,
            classes,
            encoding,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn class_labels(&self) -> Result<&[usize]> {
        match &self.labels {
            Labels::Class(v) => Ok(v),
            Labels::Real(_) => Err(Error::Invalid("expected class labels".into())),
        }
    }

    pub fn real_labels(&self) -> Result<&[f64]> {
        match &self.labels {
            Labels::Real(v) => Ok(v),
            Labels::Class(_) => Err(Error::Invalid("expected real-valued labels".into())),
        }
    }

    /// Rows at `idx`, sharing schema and classes.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let labels = match &self.labels {
            Labels::Class(v) => Labels::Class(idx.iter().map(|&i| v[i]).collect()),
            Labels::Real(v) => Labels::Real(idx.iter().map(|&i| v[i]).collect()),
        };
        Dataset {
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            labels,
            schema: self.schema.clone(),
            classes: self.classes.clone(),
            encoding: self.encoding.clone(),
            fingerprint: self.fingerprint,
        }
    }
}

/// One-hot layout: each categorical entry expands to `|vocab| + 1` columns
/// (the last is UNK); numeric entries take one column each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotEncoding {
    pub offsets: Vec<usize>,
    pub widths: Vec<usize>,
    pub kinds: Vec<FeatureKind>,
    pub width: usize,
}

impl OneHotEncoding {
    pub fn new(schema: &FeatureSchema) -> Self {
        let mut offsets = Vec::with_capacity(schema.len());
        let mut widths = Vec::with_capacity(schema.len());
        let mut width = 0;
        for e in &schema.entries {
            offsets.push(width);
            let w = match e.kind {
                FeatureKind::Categorical => e.vocabulary.len() + 1,
                FeatureKind::Numeric => 1,
            };
            widths.push(w);
            width += w;
        }
        OneHotEncoding {
            offsets,
            widths,
            kinds: schema.entries.iter().map(|e| e.kind).collect(),
            width,
        }
    }

    /// Non-zero `(column, value)` pairs. Unseen category ids fall into the UNK slot.
    pub fn encode_sparse(&self, record: &FeatureRecord) -> Vec<(usize, f64)> {
        record
            .values
            .iter()
            .enumerate()
            .filter_map(|(j, v)| match *v {
                Value::Cat(c) => {
                    let slot = (c as usize).min(self.widths[j] - 1);
                    Some((self.offsets[j] + slot, 1.0))
                }
                Value::Num(x) if x != 0.0 => Some((self.offsets[j], x)),
                Value::Num(_) => None,
            })
            .collect()
    }

    /// Numeric column positions in the encoded vector.
    pub fn numeric_columns(&self) -> Vec<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == FeatureKind::Numeric)
            .map(|(j, _)| self.offsets[j])
            .collect()
    }
}

/// Dense one-hot encoding of a record.
pub fn encode(record: &FeatureRecord, encoding: &OneHotEncoding) -> Vec<f64> {
    let mut out = vec![0.0; encoding.width];
    for (i, x) in encoding.encode_sparse(record) {
        out[i] = x;
    }
    out
}

/// Per-column affine scaling of numeric inputs (`(x - mean) / scale`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<(usize, f64)>], columns: Vec<usize>) -> Self {
        let n = rows.len().max(1) as f64;
        let mut sum = vec![0.0; columns.len()];
        let mut sq = vec![0.0; columns.len()];
        let pos = |c: usize| columns.binary_search(&c).ok();
        for row in rows {
            for &(c, x) in row {
                if let Some(p) = pos(c) {
                    sum[p] += x;
                    sq[p] += x * x;
                }
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let scale = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / n - m * m).max(0.0);
                if var > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer {
            columns,
            mean,
            scale,
        }
    }

    /// Scales numeric entries; zero numeric entries are materialized so that
    /// their shifted value is applied.
    pub fn apply(&self, row: &[(usize, f64)]) -> Vec<(usize, f64)> {
        if self.columns.is_empty() {
            return row.to_vec();
        }
        let mut out: Vec<(usize, f64)> = row
            .iter()
            .filter(|(c, _)| self.columns.binary_search(c).is_err())
            .copied()
            .collect();
        for (p, &c) in self.columns.iter().enumerate() {
            let x = row.iter().find(|(rc, _)| *rc == c).map_or(0.0, |r| r.1);
            out.push((c, (x - self.mean[p]) / self.scale[p]));
        }
        out.sort_by_key(|(c, _)| *c);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurizer::{RawFrame, RawValue};

    fn schema_and_frame() -> (FeatureSchema, RawFrame) {
        let mut f = RawFrame::new(
            vec!["c".into(), "n".into()],
            vec![FeatureKind::Categorical, FeatureKind::Numeric],
        );
        f.rows.push(vec![RawValue::Cat("a".into()), RawValue::Num(2.5)]);
        f.rows.push(vec![RawValue::Cat("b".into()), RawValue::Num(0.0)]);
        (FeatureSchema::fit(&f, 1).unwrap(), f)
    }

    #[test]
    fn one_hot_blocks() {
        let (schema, frame) = schema_and_frame();
        let enc = OneHotEncoding::new(&schema);
        let recs = schema.encode_frame(&frame).unwrap();
        assert_eq!(encode(&recs[0], &enc), vec![1.0, 0.0, 0.0, 2.5]);
        let unseen = FeatureRecord {
            values: vec![schema.encode_value(0, &RawValue::Cat("c".into())).unwrap(), Value::Num(1.0)],
            fingerprint: schema.fingerprint(),
        };
        assert_eq!(&encode(&unseen, &enc)[..3], &[0.0, 0.0, 1.0]);
        // width = sum(|vocab| + 1) + numeric count
        assert_eq!(enc.width, (2 + 1) + 1);
    }

    #[test]
    fn dataset_checks() {
        let (schema, frame) = schema_and_frame();
        let recs = schema.encode_frame(&frame).unwrap();
        assert!(Dataset::new(recs.clone(), Labels::Class(vec![0]), schema.clone(), vec!["x".into()]).is_err());
        assert!(Dataset::new(recs.clone(), Labels::Class(vec![0, 2]), schema.clone(), vec!["x".into(), "y".into()]).is_err());
        let mut bad = recs.clone();
        bad[0].fingerprint ^= 1;
        assert!(matches!(
            Dataset::new(bad, Labels::Class(vec![0, 1]), schema.clone(), vec!["x".into(), "y".into()]),
            Err(Error::FingerprintMismatch { .. })
        ));
        let ds = Dataset::new(recs, Labels::Class(vec![0, 1]), schema, vec!["x".into(), "y".into()]).unwrap();
        assert_eq!(ds.subset(&[1]).class_labels().unwrap(), &[1]);
    }

    #[test]
    fn standardizer_centers_numeric() {
        let rows = vec![vec![(0, 1.0), (3, 2.0)], vec![(1, 1.0)]];
        let s = Standardizer::fit(&rows, vec![3]);
        let a = s.apply(&rows[0]);
        let b = s.apply(&rows[1]);
        assert_eq!(a, vec![(0, 1.0), (3, 1.0)]);
        assert_eq!(b, vec![(1, 1.0), (3, -1.0)]);
    }
}
