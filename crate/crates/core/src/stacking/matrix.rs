//! Per-token module outputs and their tab-separated serialization:
//! `doc<TAB>sent<TAB>tok<TAB>label<TAB>p1,p2,...[<TAB>x1,x2,...]` with `#`
//! header lines naming the module, its label set and its extra columns.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::learners::argmax;

/// Position of a token: document name, sentence offset within the document,
/// 1-based token index within the sentence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenKey {
    pub doc: String,
    pub sent: usize,
    pub tok: usize,
}

impl std::fmt::Display for TokenKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.doc, self.sent, self.tok)
    }
}

/// Keys of every token in corpus order.
pub fn corpus_keys(docs: &[Document]) -> Vec<TokenKey> {
    docs.iter()
        .flat_map(|d| {
            d.sentences.iter().flat_map(move |s| {
                s.tokens.iter().map(move |t| TokenKey {
                    doc: d.name.clone(),
                    sent: s.doc_offset,
                    tok: t.index,
                })
            })
        })
        .collect()
}

/// What a base module says about one token.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleOutput {
    /// Predicted label, `_` for modules without a label set.
    pub label: String,
    pub probs: Vec<f64>,
    pub extras: Vec<f64>,
}

impl ModuleOutput {
    pub fn from_probs(labels: &[String], probs: Vec<f64>) -> Self {
        ModuleOutput {
            label: labels[argmax(&probs)].clone(),
            probs,
            extras: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleColumn {
    pub module: String,
    pub labels: Vec<String>,
    pub extras: Vec<String>,
    pub keys: Vec<TokenKey>,
    pub rows: Vec<ModuleOutput>,
}

impl ModuleColumn {
    pub fn new(module: &str, labels: Vec<String>, extras: Vec<String>) -> Self {
        ModuleColumn {
            module: module.to_string(),
            labels,
            extras,
            keys: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn check_row(&self, key: &TokenKey, out: &ModuleOutput) -> Result<()> {
        let bad = |why: String| Err(Error::External(format!("module `{}` token {key}: {why}", self.module)));
        if out.probs.len() != if out.probs.is_empty() { 0 } else { self.labels.len() } {
            return bad(format!("{} probabilities for {} labels", out.probs.len(), self.labels.len()));
        }
        if out.extras.len() != self.extras.len() {
            return bad(format!("{} extra values, expected {}", out.extras.len(), self.extras.len()));
        }
        if !self.labels.is_empty() && !self.labels.contains(&out.label) {
            return bad(format!("unknown label `{}`", out.label));
        }
        Ok(())
    }

    pub fn push(&mut self, key: TokenKey, out: ModuleOutput) -> Result<()> {
        self.check_row(&key, &out)?;
        self.keys.push(key);
        self.rows.push(out);
        Ok(())
    }

    /// The rows for `keys`, in that order. Fails on the first key without a row.
    pub fn select(&self, keys: &[TokenKey]) -> Result<ModuleColumn> {
        let index: HashMap<&TokenKey, usize> = self.keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut out = ModuleColumn::new(&self.module, self.labels.clone(), self.extras.clone());
        for k in keys {
            let &i = index
                .get(k)
                .ok_or_else(|| Error::External(format!("module `{}` has no prediction for token {k}", self.module)))?;
            out.keys.push(k.clone());
            out.rows.push(self.rows[i].clone());
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# module = {}", self.module);
        let _ = writeln!(s, "# labels = {}", self.labels.join(","));
        let _ = writeln!(s, "# extras = {}", self.extras.join(","));
        let join = |v: &[f64]| {
            if v.is_empty() {
                "_".to_string()
            } else {
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        for (k, r) in self.keys.iter().zip(&self.rows) {
            let _ = write!(s, "{}\t{}\t{}\t{}\t{}", k.doc, k.sent, k.tok, r.label, join(&r.probs));
            if !self.extras.is_empty() {
                let _ = write!(s, "\t{}", join(&r.extras));
            }
            s.push('\n');
        }
        s
    }

    /// Parses a serialized column. Header lines are optional and `defaults`
    /// supplies the module id and label set when they are absent.
    pub fn from_text(text: &str, module: &str, labels: &[String]) -> Result<ModuleColumn> {
        let mut col = ModuleColumn::new(module, labels.to_vec(), Vec::new());
        let mut seen: BTreeMap<TokenKey, usize> = BTreeMap::new();
        let split = |v: &str| -> Vec<String> {
            v.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
        };
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let perr = |message: String| Error::Parse { line: line_no, message };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                if let Some((k, v)) = h.split_once('=') {
                    match k.trim() {
                        "module" => col.module = v.trim().to_string(),
                        "labels" => col.labels = split(v),
                        "extras" => col.extras = split(v),
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 && fields.len() != 6 {
                return Err(perr(format!("expected 5 or 6 tab-separated fields, found {}", fields.len())));
            }
            let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| perr(format!("bad {what} `{s}`")));
            let key = TokenKey {
                doc: fields[0].to_string(),
                sent: num(fields[1], "sentence offset")?,
                tok: num(fields[2], "token index")?,
            };
            if let Some(first) = seen.insert(key.clone(), line_no) {
                return Err(Error::External(format!(
                    "duplicate token {key} on lines {first} and {line_no}"
                )));
            }
            let floats = |s: &str| -> Result<Vec<f64>> {
                if s == "_" {
                    return Ok(Vec::new());
                }
                s.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| perr(format!("bad number `{x}`"))))
                    .collect()
            };
            let mut probs = floats(fields[4])?;
            let extras = if fields.len() == 6 { floats(fields[5])? } else { Vec::new() };
            if !probs.is_empty() {
                normalize(&mut probs, &key)?;
            }
            let mut label = fields[3].to_string();
            if label == "_" && !probs.is_empty() && !col.labels.is_empty() {
                label = col.labels[argmax(&probs)].clone();
            }
            col.push(key, ModuleOutput { label, probs, extras })?;
        }
        Ok(col)
    }
}

fn normalize(probs: &mut [f64], key: &TokenKey) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::External(format!("token {key}: probabilities must be finite and non-negative")));
    }
    let sum: f64 = probs.iter().sum();
    if sum <= 0.0 {
        return Err(Error::External(format!("token {key}: probabilities sum to zero")));
    }
    if (sum - 1.0).abs() > 1e-6 {
        log::warn!("token {key}: probabilities sum to {sum}, renormalizing");
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(())
}

/// Reads an externally produced prediction file for `docs`. Every token of
/// `docs` must be covered; rows for other tokens are ignored.
pub fn ingest_external(text: &str, module: &str, labels: &[String], docs: &[Document]) -> Result<ModuleColumn> {
    let col = ModuleColumn::from_text(text, module, labels)?;
    if col.labels != labels {
        return Err(Error::External(format!(
            "module `{module}` declares labels {:?}, expected {:?}",
            col.labels, labels
        )));
    }
    let mut out = col.select(&corpus_keys(docs))?;
    out.module = module.to_string();
    Ok(out)
}

/// Columns of several modules over the same tokens.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MultitrainMatrix {
    pub columns: Vec<ModuleColumn>,
}

impl MultitrainMatrix {
    pub fn get(&self, module: &str) -> Option<&ModuleColumn> {
        self.columns.iter().find(|c| c.module == module)
    }
}
