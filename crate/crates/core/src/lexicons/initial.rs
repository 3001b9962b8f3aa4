use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

pub const DEFAULT_MIN_FREQ: u64 = 10;
pub const DEFAULT_MIN_RATIO: f64 = 0.5;

const SENTENCE_FINAL: [char; 3] = ['.', '?', '!'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialEntry {
    pub initial: u64,
    pub total: u64,
}

impl InitialEntry {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.initial as f64 / self.total as f64
        }
    }
}

/// Forms frequently seen at the start of a paragraph, hence of a sentence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialTokenLexicon {
    pub entries: BTreeMap<String, InitialEntry>,
}

/// Strips surrounding punctuation that whitespace tokenization leaves attached.
fn clean(token: &str) -> &str {
    token.trim_matches(|c: char| {
        matches!(
            c,
            '.' | ',' | ';' | ':' | '!' | '?' | '"' | '\'' | '(' | ')' | '[' | ']' | '“' | '”' | '‘' | '’' | '«' | '»'
        )
    })
}

fn select(counts: BTreeMap<String, InitialEntry>, min_freq: u64, min_ratio: f64) -> InitialTokenLexicon {
    InitialTokenLexicon {
        entries: counts
            .into_iter()
            .filter(|(_, e)| e.initial > min_freq && e.ratio() > min_ratio)
            .collect(),
    }
}

/// Builds the lexicon from raw paragraphs (one per element). The first
/// whitespace token of the text before the first `.`, `?` or `!` counts as
/// initial; every token occurrence counts towards the total.
pub fn build_initial_lexicon<S: AsRef<str>>(paragraphs: &[S], min_freq: u64, min_ratio: f64) -> InitialTokenLexicon {
    let mut counts: BTreeMap<String, InitialEntry> = BTreeMap::new();
    for p in paragraphs {
        let p = p.as_ref();
        let first_sentence = p.split(SENTENCE_FINAL).next().unwrap_or("");
        if let Some(first) = first_sentence.split_whitespace().map(clean).find(|t| !t.is_empty()) {
            counts
                .entry(first.to_string())
                .or_insert(InitialEntry { initial: 0, total: 0 })
                .initial += 1;
        }
        for tok in p.split_whitespace().map(clean).filter(|t| !t.is_empty()) {
            counts
                .entry(tok.to_string())
                .or_insert(InitialEntry { initial: 0, total: 0 })
                .total += 1;
        }
    }
    select(counts, min_freq, min_ratio)
}

/// Builds the lexicon from tokenized documents, treating each sentence's
/// first token, and any token flagged `sent_initial`, as initial.
pub fn initial_lexicon_from_documents(docs: &[Document], min_freq: u64, min_ratio: f64) -> InitialTokenLexicon {
    let mut counts: BTreeMap<String, InitialEntry> = BTreeMap::new();
    for doc in docs {
        for s in &doc.sentences {
            for (i, t) in s.tokens.iter().enumerate() {
                let e = counts
                    .entry(t.form.clone())
                    .or_insert(InitialEntry { initial: 0, total: 0 });
                e.total += 1;
                if i == 0 || t.sent_initial {
                    e.initial += 1;
                }
            }
        }
    }
    select(counts, min_freq, min_ratio)
}

impl InitialTokenLexicon {
    pub fn get(&self, form: &str) -> Option<&InitialEntry> {
        self.entries.get(form)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `form<TAB>initial_count<TAB>total_count` lines.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(f, e)| format!("{f}\t{}\t{}\n", e.initial, e.total))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parse {
                line: i + 1,
                message: "expected form<TAB>initial<TAB>total".into(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [form, initial, total] = cols[..] else {
                return Err(bad());
            };
            let entry = InitialEntry {
                initial: initial.parse().map_err(|_| bad())?,
                total: total.parse().map_err(|_| bad())?,
            };
            if entry.initial > entry.total {
                return Err(bad());
            }
            entries.insert(form.to_string(), entry);
        }
        Ok(InitialTokenLexicon { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paragraphs(initial: usize, extra: usize) -> Vec<String> {
        let mut p: Vec<String> = (0..initial).map(|_| "Introduction . the rest".to_string()).collect();
        p.extend((0..extra).map(|_| "see the Introduction".to_string()));
        p
    }

    #[test]
    fn thresholds() {
        let lex = build_initial_lexicon(&paragraphs(20, 5), DEFAULT_MIN_FREQ, DEFAULT_MIN_RATIO);
        let e = lex.get("Introduction").unwrap();
        assert_eq!((e.initial, e.total), (20, 25));
        assert_eq!(e.ratio(), 0.8);
        let lex = build_initial_lexicon(&paragraphs(5, 0), DEFAULT_MIN_FREQ, DEFAULT_MIN_RATIO);
        assert!(lex.get("Introduction").is_none());
        assert!(build_initial_lexicon::<&str>(&[], 10, 0.5).is_empty());
    }

    #[test]
    fn first_sentence_only() {
        let lex = build_initial_lexicon(&["\"Hello, world. Bye"], 0, 0.0);
        assert_eq!(lex.get("Hello").unwrap().initial, 1);
        assert!(lex.get("Bye").is_none());
    }

    #[test]
    fn kept_entries_satisfy_thresholds_on_rescan() {
        let mut p = paragraphs(12, 3);
        p.extend((0..30).map(|i| format!("word{} and more", i % 3)));
        let lex = build_initial_lexicon(&p, 10, 0.5);
        for (form, e) in &lex.entries {
            let initial = p
                .iter()
                .filter(|x| x.split(['.', '?', '!']).next().unwrap().split_whitespace().next() == Some(form))
                .count() as u64;
            let total = p.iter().flat_map(|x| x.split_whitespace()).filter(|t| t == form).count() as u64;
            assert_eq!((e.initial, e.total), (initial, total));
            assert!(initial > 10 && initial as f64 / total as f64 > 0.5);
        }
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn text_round_trip() {
        let lex = build_initial_lexicon(&paragraphs(12, 1), 10, 0.5);
        assert_eq!(InitialTokenLexicon::from_text(&lex.to_text()).unwrap(), lex);
        assert!(InitialTokenLexicon::from_text("a\t3\t2").is_err());
    }
}
