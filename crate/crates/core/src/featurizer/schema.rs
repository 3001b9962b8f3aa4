//! Feature schemas and encoded feature records.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Categorical,
    Numeric,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Categorical => "categorical",
            FeatureKind::Numeric => "numeric",
        })
    }
}

/// An unencoded feature value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RawValue {
    Cat(String),
    Num(f64),
}

impl RawValue {
    pub fn kind(&self) -> FeatureKind {
        match self {
            RawValue::Cat(_) => FeatureKind::Categorical,
            RawValue::Num(_) => FeatureKind::Numeric,
        }
    }
}

/// Named columns of raw values, one row per token.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawFrame {
    pub names: Vec<String>,
    pub kinds: Vec<FeatureKind>,
    pub rows: Vec<Vec<RawValue>>,
}

impl RawFrame {
    pub fn new(names: Vec<String>, kinds: Vec<FeatureKind>) -> Self {
        RawFrame {
            names,
            kinds,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends the columns of `other` (same row count) to this frame.
    pub fn hstack(&mut self, other: RawFrame) -> Result<()> {
        if self.names.is_empty() && self.rows.is_empty() {
            *self = other;
            return Ok(());
        }
        if other.rows.len() != self.rows.len() {
            return Err(Error::Invalid(format!(
                "cannot join frames with {} and {} rows",
                self.rows.len(),
                other.rows.len()
            )));
        }
        self.names.extend(other.names);
        self.kinds.extend(other.kinds);
        for (row, extra) in self.rows.iter_mut().zip(other.rows) {
            row.extend(extra);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub kind: FeatureKind,
    /// category -> id; the reserved UNK id is `vocabulary.len()`
    pub vocabulary: BTreeMap<String, u32>,
}

impl FeatureEntry {
    pub fn unk_id(&self) -> u32 {
        self.vocabulary.len() as u32
    }

    /// Number of distinct encoded values, UNK included (0 for numeric).
    pub fn cardinality(&self) -> usize {
        match self.kind {
            FeatureKind::Categorical => self.vocabulary.len() + 1,
            FeatureKind::Numeric => 0,
        }
    }
}

/// Encoded value: a category id or a real number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Cat(u32),
    Num(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Cat(c) => c as f64,
            Value::Num(x) => x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub values: Vec<Value>,
    /// Fingerprint of the schema the record was encoded against.
    pub fingerprint: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub entries: Vec<FeatureEntry>,
}

impl FeatureSchema {
    pub fn new(entries: Vec<FeatureEntry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::Config(format!("duplicate feature name `{}`", e.name)));
            }
        }
        Ok(FeatureSchema { entries })
    }

    /// Learns vocabularies from the frame. Categories seen fewer than
    /// `min_count` times map to UNK.
    pub fn fit(frame: &RawFrame, min_count: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(frame.names.len());
        for (j, (name, kind)) in frame.names.iter().zip(&frame.kinds).enumerate() {
            let mut vocabulary = BTreeMap::new();
            if *kind == FeatureKind::Categorical {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for row in &frame.rows {
                    if let RawValue::Cat(c) = &row[j] {
                        *counts.entry(c.as_str()).or_default() += 1;
                    }
                }
                for (id, (cat, _)) in counts
                    .into_iter()
                    .filter(|(_, n)| *n >= min_count.max(1))
                    .enumerate()
                {
                    vocabulary.insert(cat.to_string(), id as u32);
                }
            }
            entries.push(FeatureEntry {
                name: name.clone(),
                kind: *kind,
                vocabulary,
            });
        }
        FeatureSchema::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Keeps the entries at `keep` (in that order).
    pub fn restrict(&self, keep: &[usize]) -> FeatureSchema {
        FeatureSchema {
            entries: keep.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }

    /// Stable 64-bit digest of the text serialization.
    pub fn fingerprint(&self) -> u64 {
        let digest = Sha256::digest(self.to_text().as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        u64::from_be_bytes(bytes)
    }

    pub fn encode_value(&self, i: usize, raw: &RawValue) -> Result<Value> {
        let e = &self.entries[i];
        match (e.kind, raw) {
            (FeatureKind::Categorical, RawValue::Cat(c)) => Ok(Value::Cat(
                e.vocabulary.get(c).copied().unwrap_or_else(|| e.unk_id()),
            )),
            (FeatureKind::Numeric, RawValue::Num(x)) => Ok(Value::Num(*x)),
            (kind, raw) => Err(Error::Invalid(format!(
                "feature `{}` is {kind} but got a {} value",
                e.name,
                raw.kind()
            ))),
        }
    }

    /// Encodes a frame whose columns may be a superset of, or reordered
    /// against, the schema; columns are matched by name.
    pub fn encode_frame(&self, frame: &RawFrame) -> Result<Vec<FeatureRecord>> {
        let index: HashMap<&str, usize> = frame
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let cols = self
            .entries
            .iter()
            .map(|e| {
                index
                    .get(e.name.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownFeature(e.name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let fp = self.fingerprint();
        frame
            .rows
            .iter()
            .map(|row| {
                let values = cols
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| self.encode_value(i, &row[c]))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FeatureRecord {
                    values,
                    fingerprint: fp,
                })
            })
            .collect()
    }

    /// `name<TAB>kind<TAB>vocab...` per entry; vocabulary in id order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.name);
            out.push('\t');
            out.push_str(&e.kind.to_string());
            let mut vocab: Vec<(&String, &u32)> = e.vocabulary.iter().collect();
            vocab.sort_by_key(|(_, id)| **id);
            for (cat, _) in vocab {
                out.push('\t');
                out.push_str(cat);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let mut cols = line.split('\t');
            let name = cols.next().unwrap_or_default().to_string();
            let kind = match cols.next() {
                Some("categorical") => FeatureKind::Categorical,
                Some("numeric") => FeatureKind::Numeric,
                other => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("invalid feature kind {other:?}"),
                    })
                }
            };
            let vocabulary = cols
                .enumerate()
                .map(|(id, c)| (c.to_string(), id as u32))
                .collect();
            entries.push(FeatureEntry {
                name,
                kind,
                vocabulary,
            });
        }
        FeatureSchema::new(entries)
    }
}
