use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConnLabel, Document};
use crate::error::{Error, Result};

pub const MAX_CONN_LEN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnEntry {
    pub conn: u64,
    pub total: u64,
}

impl ConnEntry {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.conn as f64 / self.total as f64
        }
    }
}

/// Attested connective token sequences with how often each occurrence was
/// labeled as a connective.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConnectiveTable {
    #[serde(with = "as_pairs")]
    pub entries: BTreeMap<Vec<String>, ConnEntry>,
}

// JSON object keys must be strings, so the map is stored as a list of pairs.
mod as_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::ConnEntry;

    pub fn serialize<S: Serializer>(map: &BTreeMap<Vec<String>, ConnEntry>, s: S) -> Result<S::Ok, S::Error> {
        map.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Vec<String>, ConnEntry>, D::Error> {
        Ok(Vec::<(Vec<String>, ConnEntry)>::deserialize(d)?.into_iter().collect())
    }
}

/// Maximal gold spans (start, length) in a document's token stream. A span
/// opens at `B-Conn` or at an `I-Conn` that follows a non-connective.
pub fn gold_spans(labels: &[ConnLabel]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        if labels[i].is_conn() {
            let start = i;
            i += 1;
            while i < labels.len() && labels[i] == ConnLabel::I {
                i += 1;
            }
            spans.push((start, i - start));
        } else {
            i += 1;
        }
    }
    spans
}

pub fn build_connective_table(docs: &[Document]) -> ConnectiveTable {
    let mut entries: BTreeMap<Vec<String>, ConnEntry> = BTreeMap::new();
    for doc in docs {
        let forms: Vec<&str> = doc.tokens().map(|t| t.form.as_str()).collect();
        let labels: Vec<ConnLabel> = doc.tokens().map(|t| t.conn_label).collect();
        for (start, len) in gold_spans(&labels) {
            if len > MAX_CONN_LEN {
                log::warn!(
                    "{}: connective span of {len} tokens at {start} truncated to {MAX_CONN_LEN}",
                    doc.name
                );
            }
            let len = len.min(MAX_CONN_LEN);
            let key: Vec<String> = forms[start..start + len].iter().map(|s| s.to_string()).collect();
            entries.entry(key).or_insert(ConnEntry { conn: 0, total: 0 }).conn += 1;
        }
    }
    // total occurrences, overlapping matches allowed
    for doc in docs {
        let forms: Vec<String> = doc.tokens().map(|t| t.form.clone()).collect();
        for s in 0..forms.len() {
            for len in 1..=MAX_CONN_LEN.min(forms.len() - s) {
                if let Some(e) = entries.get_mut(&forms[s..s + len]) {
                    e.total += 1;
                }
            }
        }
    }
    ConnectiveTable { entries }
}

/// Longest table match covering a token.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqMatch {
    pub ratio: f64,
    /// Training occurrences of the matched sequence.
    pub freq: u64,
    pub position: ConnLabel,
    pub len: usize,
}

impl FreqMatch {
    pub const NONE: FreqMatch = FreqMatch {
        ratio: 0.0,
        freq: 0,
        position: ConnLabel::O,
        len: 0,
    };
}

impl ConnectiveTable {
    pub fn get(&self, seq: &[String]) -> Option<&ConnEntry> {
        self.entries.get(seq)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Per token: the longest covering entry (ties go to the higher ratio,
    /// then the earlier start).
    pub fn predict(&self, forms: &[String]) -> Vec<FreqMatch> {
        let mut out = vec![FreqMatch::NONE; forms.len()];
        for s in 0..forms.len() {
            for len in 1..=MAX_CONN_LEN.min(forms.len() - s) {
                let Some(e) = self.entries.get(&forms[s..s + len]) else {
                    continue;
                };
                let ratio = e.ratio();
                for (i, slot) in out.iter_mut().enumerate().skip(s).take(len) {
                    if len > slot.len || (len == slot.len && ratio > slot.ratio) {
                        *slot = FreqMatch {
                            ratio,
                            freq: e.total,
                            position: if i == s { ConnLabel::B } else { ConnLabel::I },
                            len,
                        };
                    }
                }
            }
        }
        out
    }

    /// `sequence<TAB>conn_count<TAB>total_count`, sequence tokens joined by spaces.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, e)| format!("{}\t{}\t{}\n", k.join(" "), e.conn, e.total))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                line: i + 1,
                message: m.into(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [seq, conn, total] = cols[..] else {
                return Err(bad("expected sequence<TAB>conn_count<TAB>total_count"));
            };
            let key: Vec<String> = seq.split(' ').map(String::from).collect();
            if key.len() > MAX_CONN_LEN {
                return Err(bad("sequence longer than 5 tokens"));
            }
            let e = ConnEntry {
                conn: conn.parse().map_err(|_| bad("invalid count"))?,
                total: total.parse().map_err(|_| bad("invalid count"))?,
            };
            entries.insert(key, e);
        }
        Ok(ConnectiveTable { entries })
    }
}

/// Per-token longest-match lookup over a whole document.
pub fn freq_conn_predict(doc: &Document, table: &ConnectiveTable) -> Vec<FreqMatch> {
    let forms: Vec<String> = doc.tokens().map(|t| t.form.clone()).collect();
    table.predict(&forms)
}

/// Marks `B-Conn` on tokens whose form only ever occurs inside connective
/// spans in training; everything else is `O`.
pub fn exclusive_conn_baseline(train: &[Document], test: &Document) -> Vec<ConnLabel> {
    let mut seen: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for doc in train {
        for t in doc.tokens() {
            let e = seen.entry(t.form.as_str()).or_default();
            e.1 += 1;
            if t.conn_label.is_conn() {
                e.0 += 1;
            }
        }
    }
    test.tokens()
        .map(|t| match seen.get(t.form.as_str()) {
            Some((c, n)) if c == n => ConnLabel::B,
            _ => ConnLabel::O,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};
    use proptest::prelude::*;

    pub(crate) fn doc(words: &[(&str, ConnLabel)]) -> Document {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, (w, l))| {
                let mut t = Token::new(i + 1, *w);
                t.conn_label = *l;
                t
            })
            .collect();
        Document {
            name: "d".into(),
            genre: "all".into(),
            sentences: vec![Sentence {
                tokens,
                ..Default::default()
            }],
        }
    }

    use ConnLabel::{B, I, O};

    /// Brute-force recount: labeled spans and raw occurrences of `seq`.
    fn recount(docs: &[Document], seq: &[&str]) -> (u64, u64) {
        let mut conn = 0;
        let mut total = 0;
        for d in docs {
            let toks: Vec<_> = d.tokens().collect();
            for s in 0..toks.len() {
                if s + seq.len() > toks.len() {
                    break;
                }
                if (0..seq.len()).all(|k| toks[s + k].form == seq[k]) {
                    total += 1;
                    let starts = toks[s].conn_label.is_conn() && (s == 0 || !toks[s - 1].conn_label.is_conn() || toks[s].conn_label == B);
                    let inside = (1..seq.len()).all(|k| toks[s + k].conn_label == I);
                    let ends = s + seq.len() == toks.len() || toks[s + seq.len()].conn_label != I;
                    if starts && inside && ends {
                        conn += 1;
                    }
                }
            }
        }
        (conn, total)
    }

    fn fixture() -> Vec<Document> {
        vec![
            doc(&[("however", B), ("it", O), ("rained", O), ("as", B), ("if", I), ("on", O), ("cue", O)]),
            doc(&[("however", B), ("however", O), ("as", B), ("if", I), ("however", B)]),
        ]
    }

    #[test]
    fn ratios_match_recount() {
        let docs = fixture();
        let t = build_connective_table(&docs);
        let key = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let e = t.get(&key(&["however"])).unwrap();
        assert_eq!((e.conn, e.total), recount(&docs, &["however"]));
        assert_eq!(e.ratio(), 0.75);
        let e = t.get(&key(&["as", "if"])).unwrap();
        assert_eq!((e.conn, e.total), recount(&docs, &["as", "if"]));
        assert_eq!(e.ratio(), 1.0);
        assert!(t.get(&key(&["rained"])).is_none());
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn long_spans_truncated() {
        let words: Vec<(&str, ConnLabel)> = ["a", "b", "c", "d", "e", "f"]
            .iter()
            .enumerate()
            .map(|(i, w)| (*w, if i == 0 { B } else { I }))
            .collect();
        let t = build_connective_table(&[doc(&words)]);
        assert_eq!(t.entries.keys().next().unwrap().len(), 5);
    }

    #[test]
    fn longest_match_wins() {
        let mut t = ConnectiveTable::default();
        t.entries.insert(vec!["so".into()], ConnEntry { conn: 6, total: 10 });
        t.entries.insert(vec!["so".into(), "that".into()], ConnEntry { conn: 3, total: 10 });
        t.entries.insert(
            vec!["in".into(), "order".into(), "that".into()],
            ConnEntry { conn: 1, total: 1 },
        );
        let forms: Vec<String> = ["x", "so", "that", "in", "order", "that"].iter().map(|s| s.to_string()).collect();
        let m = t.predict(&forms);
        assert_eq!(m[0], FreqMatch::NONE);
        assert_eq!((m[1].ratio, m[1].position, m[1].len), (0.3, B, 2));
        assert_eq!(m[2].position, I);
        assert_eq!((m[4].position, m[4].len, m[4].freq), (I, 3, 1));
    }

    #[test]
    fn exclusive_baseline() {
        let train = vec![doc(&[("but", B), ("and", B), ("and", O), ("x", O)]), doc(&[("but", B)])];
        let test = doc(&[("but", O), ("and", O), ("new", O)]);
        assert_eq!(exclusive_conn_baseline(&train, &test), vec![B, O, O]);
    }

    #[test]
    fn text_round_trip() {
        let t = build_connective_table(&fixture());
        assert_eq!(ConnectiveTable::from_text(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn json_round_trip() {
        let t = build_connective_table(&fixture());
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<ConnectiveTable>(&json).unwrap(), t);
    }

    fn label() -> impl Strategy<Value = ConnLabel> {
        prop_oneof![Just(B), Just(I), Just(O), Just(O)]
    }

    proptest! {
        #[test]
        fn table_equals_recount(words in proptest::collection::vec(("[abc]", label()), 1..30)) {
            let w: Vec<(&str, ConnLabel)> = words.iter().map(|(s, l)| (s.as_str(), *l)).collect();
            let docs = vec![doc(&w)];
            let t = build_connective_table(&docs);
            for (k, e) in &t.entries {
                let seq: Vec<&str> = k.iter().map(String::as_str).collect();
                if seq.len() < MAX_CONN_LEN {
                    prop_assert_eq!((e.conn, e.total), recount(&docs, &seq));
                }
                prop_assert!(e.conn <= e.total);
            }
        }

        #[test]
        fn exclusive_precision_on_training_data(words in proptest::collection::vec(("[abcd]", label()), 1..30)) {
            let w: Vec<(&str, ConnLabel)> = words.iter().map(|(s, l)| (s.as_str(), *l)).collect();
            let d = doc(&w);
            let pred = exclusive_conn_baseline(std::slice::from_ref(&d), &d);
            for (p, t) in pred.iter().zip(d.tokens()) {
                if *p == B {
                    prop_assert!(t.conn_label.is_conn());
                }
            }
        }
    }
}
