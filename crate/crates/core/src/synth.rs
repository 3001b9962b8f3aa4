//! Seeded generators for small rule-governed corpora with dependency trees,
//! used by tests, benchmarks and the acceptance suite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ConnLabel, Document, SegLabel, Sentence, Token};

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Chance that a sentence carries a subordinate clause (segmentation) or
    /// a quote, heading or abbreviation (sentencer).
    pub rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 60,
            min_sentences: 4,
            max_sentences: 9,
            rate: 0.5,
            seed: 7,
        }
    }
}

const DETS: &[&str] = &["the", "a", "this", "every", "one"];
const NOUNS: &[&str] = &[
    "cat", "dog", "teacher", "student", "report", "city", "river", "idea", "house", "car", "book", "child", "farmer",
    "letter", "garden", "engine",
];
const PLURALS: &[&str] = &["cats", "dogs", "teachers", "students", "farmers", "children"];
const ADJS: &[&str] = &["old", "big", "small", "happy", "red", "quiet"];
const TRANSITIVE: &[&str] = &["saw", "liked", "found", "wrote", "built", "read", "visited", "moved", "painted"];
const INTRANSITIVE: &[&str] = &["slept", "left", "arrived", "laughed", "waited", "smiled", "rested"];
const PRONOUNS: &[&str] = &["she", "he", "they", "we"];
const PREPS: &[&str] = &["after", "before", "with", "in", "near"];
const MARKS: &[&str] = &["because", "when", "although", "if", "while", "after", "before"];
const NAMES: &[&str] = &["Smith", "Jones", "Brown", "Taylor"];
const TITLES: &[&str] = &["Dr.", "Mr.", "Mrs."];
const HEADINGS: &[&str] = &["Introduction", "Background", "Results", "Discussion", "Summary", "Methods"];
const HEADING_ADJS: &[&str] = &["Early", "Final", "Further"];
const DAYS: &[&str] = &["Monday", "Friday", "noon", "dawn"];

/// Accumulates the tokens of one sentence; heads are 1-based, 0 is the root.
#[derive(Default)]
struct Builder {
    toks: Vec<(String, &'static str, usize, &'static str)>,
    conn: Vec<ConnLabel>,
}

impl Builder {
    fn push(&mut self, form: &str, upos: &'static str, deprel: &'static str) -> usize {
        self.toks.push((form.to_string(), upos, 0, deprel));
        self.conn.push(ConnLabel::O);
        self.toks.len()
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.toks[dep - 1].2 = head;
    }

    fn relabel(&mut self, dep: usize, deprel: &'static str) {
        self.toks[dep - 1].3 = deprel;
    }

    fn pick<'a>(rng: &mut ChaCha8Rng, v: &[&'a str]) -> &'a str {
        v.choose(rng).unwrap()
    }

    /// Noun phrase; returns the head noun.
    fn np(&mut self, rng: &mut ChaCha8Rng, deprel: &'static str) -> usize {
        if deprel == "nsubj" && rng.gen_bool(0.25) {
            return self.push(Self::pick(rng, PRONOUNS), "PRON", deprel);
        }
        let det = self.push(Self::pick(rng, DETS), "DET", "det");
        let adj = rng.gen_bool(0.3).then(|| self.push(Self::pick(rng, ADJS), "ADJ", "amod"));
        let noun = self.push(Self::pick(rng, NOUNS), "NOUN", deprel);
        self.attach(det, noun);
        if let Some(a) = adj {
            self.attach(a, noun);
        }
        noun
    }

    /// Subject, verb, optional object and prepositional phrase; returns the verb.
    fn clause(&mut self, rng: &mut ChaCha8Rng, mark: Option<&str>) -> usize {
        let m = mark.map(|w| self.push(w, "SCONJ", "mark"));
        let subj = self.np(rng, "nsubj");
        let transitive = rng.gen_bool(0.6);
        let verb = self.push(
            Self::pick(rng, if transitive { TRANSITIVE } else { INTRANSITIVE }),
            "VERB",
            "root",
        );
        self.attach(subj, verb);
        if let Some(m) = m {
            self.attach(m, verb);
        }
        if transitive {
            let obj = self.np(rng, "obj");
            self.attach(obj, verb);
        }
        if rng.gen_bool(0.3) {
            let case = self.push(Self::pick(rng, PREPS), "ADP", "case");
            let noun = self.np(rng, "obl");
            self.attach(case, noun);
            self.attach(noun, verb);
        }
        verb
    }

    fn punct(&mut self, form: &str, head: usize) {
        let p = self.push(form, "PUNCT", "punct");
        self.attach(p, head);
    }

    fn finish(mut self, root: usize, doc_offset: usize) -> Sentence {
        self.toks[root - 1].2 = 0;
        self.toks[root - 1].3 = "root";
        let tokens = self
            .toks
            .into_iter()
            .zip(self.conn)
            .enumerate()
            .map(|(i, ((form, upos, head, deprel), conn))| {
                let mut t = Token::new(i + 1, form.clone());
                t.lemma = form.to_lowercase();
                t.upos = upos.to_string();
                t.head = Some(head);
                t.deprel = deprel.to_string();
                t.seg_label = if i == 0 || deprel == "mark" {
                    SegLabel::BeginSeg
                } else {
                    SegLabel::NoSeg
                };
                t.conn_label = conn;
                t.sent_initial = i == 0;
                t
            })
            .collect();
        let mut s = Sentence {
            tokens,
            doc_offset,
            ..Default::default()
        };
        capitalize(&mut s.tokens[0].form);
        s
    }
}

fn capitalize(form: &mut String) {
    let mut c = form.chars();
    if let Some(f) = c.next() {
        *form = f.to_uppercase().chain(c).collect();
    }
}

fn documents(cfg: &SynthConfig, prefix: &str, mut sentence: impl FnMut(&mut ChaCha8Rng, usize) -> Vec<Sentence>) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_docs)
        .map(|d| {
            let n = rng.gen_range(cfg.min_sentences..=cfg.max_sentences.max(cfg.min_sentences));
            let mut sentences = Vec::new();
            while sentences.len() < n {
                let offset = sentences.len();
                sentences.extend(sentence(&mut rng, offset));
            }
            for (i, s) in sentences.iter_mut().enumerate() {
                s.doc_offset = i;
            }
            Document {
                name: format!("{prefix}_{d:03}"),
                genre: if d % 2 == 0 { "news" } else { "fiction" }.into(),
                sentences,
            }
        })
        .collect()
}

/// One sentence with a subordinate clause with probability `rate`. Gold
/// `BeginSeg` falls on sentence starts and on every `mark` token.
fn seg_sentence(rng: &mut ChaCha8Rng, offset: usize, rate: f64) -> Sentence {
    let mut b = Builder::default();
    if !rng.gen_bool(rate) {
        let v = b.clause(rng, None);
        b.punct(".", v);
        return b.finish(v, offset);
    }
    match rng.gen_range(0..3) {
        0 => {
            let v = b.clause(rng, None);
            let mark = Builder::pick(rng, MARKS);
            let sub = b.clause(rng, Some(mark));
            b.attach(sub, v);
            b.relabel(sub, "advcl");
            b.punct(".", v);
            b.finish(v, offset)
        }
        1 => {
            let mark = Builder::pick(rng, MARKS);
            let sub = b.clause(rng, Some(mark));
            b.punct(",", sub);
            let v = b.clause(rng, None);
            b.attach(sub, v);
            b.relabel(sub, "advcl");
            b.punct(".", v);
            b.finish(v, offset)
        }
        _ => {
            let subj = b.np(rng, "nsubj");
            let v = b.push(Builder::pick(rng, &["said", "thought", "knew"]), "VERB", "root");
            b.attach(subj, v);
            let sub = b.clause(rng, Some("that"));
            b.attach(sub, v);
            b.relabel(sub, "ccomp");
            b.punct(".", v);
            b.finish(v, offset)
        }
    }
}

/// Per-sentence subordinate-clause rate at which `share` of all units start
/// inside a sentence. Two of the three clause patterns add an internal unit;
/// the third opens the sentence with its `mark`.
pub fn rate_for_internal_share(share: f64) -> f64 {
    (1.5 * share / (1.0 - share)).clamp(0.0, 1.0)
}

/// Segmentation corpus with trees; `rate` is the per-sentence chance of a
/// sentence-internal unit.
pub fn seg_corpus(cfg: &SynthConfig) -> Vec<Document> {
    let rate = cfg.rate;
    documents(cfg, "seg", |rng, off| vec![seg_sentence(rng, off, rate)])
}

/// Sentencer corpus: headings without final punctuation, quoted speech with
/// the closing quote after the period, titles like `Dr.` inside sentences,
/// and a mix of `.`, `!` and `?` endings.
pub fn sent_corpus(cfg: &SynthConfig) -> Vec<Document> {
    let rate = cfg.rate;
    documents(cfg, "sent", move |rng, off| {
        let mut out = Vec::new();
        if off == 0 || rng.gen_bool(rate * 0.3) {
            let mut b = Builder::default();
            let head = if rng.gen_bool(0.4) {
                let a = b.push(Builder::pick(rng, HEADING_ADJS), "ADJ", "amod");
                let n = b.push(Builder::pick(rng, HEADINGS), "NOUN", "root");
                b.attach(a, n);
                n
            } else {
                b.push(Builder::pick(rng, HEADINGS), "NOUN", "root")
            };
            out.push(b.finish(head, off));
        }
        let mut b = Builder::default();
        let end = *[".", ".", ".", "!", "?"].choose(rng).unwrap();
        let r: f64 = rng.gen();
        let sent = if r < rate * 0.5 {
            // " Clause . " she said .
            let open = b.push("\"", "PUNCT", "punct");
            let inner = b.clause(rng, None);
            b.punct(".", inner);
            let close = b.push("\"", "PUNCT", "punct");
            let subj = b.push(Builder::pick(rng, PRONOUNS), "PRON", "nsubj");
            let v = b.push("said", "VERB", "root");
            b.attach(open, inner);
            b.attach(close, inner);
            b.attach(subj, v);
            b.attach(inner, v);
            b.relabel(inner, "ccomp");
            b.punct(".", v);
            b.finish(v, off + out.len())
        } else if r < rate {
            // Dr. Smith verb ...
            let title = b.push(Builder::pick(rng, TITLES), "PROPN", "compound");
            let name = b.push(Builder::pick(rng, NAMES), "PROPN", "nsubj");
            b.attach(title, name);
            let v = b.push(Builder::pick(rng, INTRANSITIVE), "VERB", "root");
            b.attach(name, v);
            b.punct(end, v);
            b.finish(v, off + out.len())
        } else {
            let v = b.clause(rng, None);
            b.punct(end, v);
            b.finish(v, off + out.len())
        };
        out.push(sent);
        out
    })
}

fn conn_sentence(rng: &mut ChaCha8Rng, offset: usize) -> Sentence {
    let mut b = Builder::default();
    let mark_span = |b: &mut Builder, first: usize, len: usize| {
        b.conn[first - 1] = ConnLabel::B;
        for i in first..first + len - 1 {
            b.conn[i] = ConnLabel::I;
        }
    };
    let joined = |b: &mut Builder, rng: &mut ChaCha8Rng, words: &[(&str, &'static str)], comma: bool| {
        let v = b.clause(rng, None);
        if comma {
            b.punct(",", v);
        }
        let first = b.toks.len() + 1;
        let ids: Vec<usize> = words.iter().map(|(w, u)| b.push(w, u, "cc")).collect();
        let v2 = b.clause(rng, None);
        for i in ids {
            b.attach(i, v2);
        }
        b.attach(v2, v);
        b.relabel(v2, "conj");
        mark_span(b, first, words.len());
        v
    };
    let v = match rng.gen_range(0..10) {
        0 => {
            let h = b.push("however", "ADV", "advmod");
            b.punct(",", 0);
            let v = b.clause(rng, None);
            b.attach(h, v);
            b.attach(2, v);
            mark_span(&mut b, 1, 1);
            v
        }
        1 => joined(&mut b, rng, &[("but", "CCONJ")], false),
        2 => joined(&mut b, rng, &[("and", "CCONJ")], true),
        3 => {
            // noun coordination: not a connective
            let n1 = b.push(Builder::pick(rng, PLURALS), "NOUN", "nsubj");
            let c = b.push("and", "CCONJ", "cc");
            let n2 = b.push(Builder::pick(rng, PLURALS), "NOUN", "conj");
            let v = b.push(Builder::pick(rng, INTRANSITIVE), "VERB", "root");
            b.attach(n1, v);
            b.attach(c, n2);
            b.attach(n2, n1);
            v
        }
        4 => joined(&mut b, rng, &[("as", "ADV"), ("well", "ADV"), ("as", "ADP")], false),
        5 => joined(&mut b, rng, &[("so", "ADV"), ("that", "SCONJ")], false),
        6 => joined(&mut b, rng, &[("because", "SCONJ")], false),
        7 => joined(&mut b, rng, &[("since", "SCONJ")], false),
        8 => {
            // temporal preposition: not a connective
            let v = b.clause(rng, None);
            let s = b.push("since", "ADP", "case");
            let d = b.push(Builder::pick(rng, DAYS), "PROPN", "obl");
            b.attach(s, d);
            b.attach(d, v);
            v
        }
        _ => b.clause(rng, None),
    };
    b.punct(".", v);
    b.finish(v, offset)
}

/// Connective corpus mixing unambiguous connectives, multiword ones, and
/// `and` / `since` used both as connectives and otherwise.
pub fn conn_corpus(cfg: &SynthConfig) -> Vec<Document> {
    let mut docs = documents(cfg, "conn", |rng, off| vec![conn_sentence(rng, off)]);
    // conn corpora carry no segmentation labels
    for d in &mut docs {
        for t in d.tokens_mut() {
            t.seg_label = SegLabel::NoSeg;
        }
    }
    docs
}

/// Consecutive 80/10/10 train/dev/test split.
pub fn split_80_10_10(docs: &[Document]) -> (Vec<Document>, Vec<Document>, Vec<Document>) {
    let n = docs.len();
    let a = n * 8 / 10;
    let b = n * 9 / 10;
    (docs[..a].to_vec(), docs[a..b].to_vec(), docs[b..].to_vec())
}
