use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;

const MAX_SUFFIX: usize = 3;

/// Most-frequent-tag POS tagger with suffix and shape backoff, used to
/// re-tag text whose gold tags cannot be trusted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnigramTagger {
    pub by_form: BTreeMap<String, String>,
    /// Keyed by lowercased suffix of 1..=3 characters.
    pub by_suffix: BTreeMap<String, String>,
    pub default: String,
}

fn majority(counts: BTreeMap<String, BTreeMap<String, u64>>) -> BTreeMap<String, String> {
    counts
        .into_iter()
        .map(|(k, tags)| {
            let best = tags
                .into_iter()
                .fold((String::new(), 0), |acc, (t, n)| if n > acc.1 { (t, n) } else { acc });
            (k, best.0)
        })
        .collect()
}

fn suffix(form: &str, n: usize) -> Option<String> {
    let lower = form.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    (chars.len() > n).then(|| chars[chars.len() - n..].iter().collect())
}

impl UnigramTagger {
    pub fn train(docs: &[Document]) -> Self {
        let mut forms: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        let mut suffixes: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        let mut all: BTreeMap<String, u64> = BTreeMap::new();
        for t in docs.iter().flat_map(|d| d.tokens()) {
            if t.upos == "_" || t.upos.is_empty() {
                continue;
            }
            *forms.entry(t.form.clone()).or_default().entry(t.upos.clone()).or_default() += 1;
            for n in 1..=MAX_SUFFIX {
                if let Some(s) = suffix(&t.form, n) {
                    *suffixes.entry(s).or_default().entry(t.upos.clone()).or_default() += 1;
                }
            }
            *all.entry(t.upos.clone()).or_default() += 1;
        }
        let default = all
            .into_iter()
            .fold((String::from("X"), 0), |acc, (t, n)| if n > acc.1 { (t, n) } else { acc })
            .0;
        UnigramTagger {
            by_form: majority(forms),
            by_suffix: majority(suffixes),
            default,
        }
    }

    pub fn tag(&self, form: &str) -> String {
        if let Some(t) = self.by_form.get(form) {
            return t.clone();
        }
        if !form.is_empty() && form.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '-')) && form.chars().any(|c| c.is_ascii_digit()) {
            return "NUM".into();
        }
        if !form.is_empty() && form.chars().all(|c| !c.is_alphanumeric()) {
            return "PUNCT".into();
        }
        for n in (1..=MAX_SUFFIX).rev() {
            if let Some(t) = suffix(form, n).and_then(|s| self.by_suffix.get(&s)) {
                return t.clone();
            }
        }
        self.default.clone()
    }

    /// Overwrites every token's UPOS with the tagger's guess.
    pub fn retag(&self, doc: &mut Document) {
        for t in doc.tokens_mut() {
            t.upos = self.tag(&t.form);
        }
    }
}
