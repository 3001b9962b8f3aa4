//! Token-level precision, recall and F scoring, and score reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConnLabel, Document, SegLabel, Task};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }

    /// True when precision or recall fell back to 0 for lack of a denominator.
    pub fn degenerate(&self) -> bool {
        self.tp + self.fp == 0 || self.tp + self.fn_ == 0
    }

    pub fn add(&self, other: &Score) -> Score {
        Score::from_counts(self.tp + other.tp, self.fp + other.fp, self.fn_ + other.fn_)
    }
}

/// Pairs documents by name when names are unique on both sides, else by order.
fn pair_documents<'a>(gold: &'a [Document], pred: &'a [Document]) -> Result<Vec<(&'a Document, &'a Document)>> {
    if gold.len() != pred.len() {
        return Err(Error::Misalignment(format!(
            "{} gold documents but {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let unique = |d: &[Document]| {
        let mut names: Vec<&str> = d.iter().map(|x| x.name.as_str()).collect();
        names.sort_unstable();
        names.windows(2).all(|w| w[0] != w[1])
    };
    let pairs: Vec<(&Document, &Document)> = if unique(gold) && unique(pred) {
        let by_name: BTreeMap<&str, &Document> = pred.iter().map(|d| (d.name.as_str(), d)).collect();
        gold.iter()
            .map(|g| {
                by_name
                    .get(g.name.as_str())
                    .map(|p| (g, *p))
                    .ok_or_else(|| Error::Misalignment(format!("document `{}` missing from predictions", g.name)))
            })
            .collect::<Result<_>>()?
    } else {
        gold.iter().zip(pred).collect()
    };
    for (g, p) in &pairs {
        if g.token_count() != p.token_count() {
            return Err(Error::Misalignment(format!(
                "document `{}`: {} gold tokens but {} predicted",
                g.name,
                g.token_count(),
                p.token_count()
            )));
        }
        if let Some((i, (a, b))) = g.tokens().zip(p.tokens()).enumerate().find(|(_, (a, b))| a.form != b.form) {
            return Err(Error::Misalignment(format!(
                "document `{}` token {}: gold `{}` vs predicted `{}`",
                g.name, i, a.form, b.form
            )));
        }
    }
    Ok(pairs)
}

fn count(pairs: impl Iterator<Item = (bool, bool)>) -> Score {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (g, p) in pairs {
        match (g, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    Score::from_counts(tp, fp, fn_)
}

/// Boundary scoring. For sentences the positive class is a sentence start and
/// document-initial tokens are skipped; for segments every `BeginSeg` counts.
pub fn score_boundaries(gold: &[Document], pred: &[Document], task: Task) -> Result<Score> {
    let pairs = pair_documents(gold, pred)?;
    let mut total = Score::default();
    for (g, p) in pairs {
        let s = match task {
            Task::Sent => count(g.tokens().zip(p.tokens()).skip(1).map(|(a, b)| (a.sent_initial, b.sent_initial))),
            Task::Seg => count(
                g.tokens()
                    .zip(p.tokens())
                    .map(|(a, b)| (a.seg_label == SegLabel::BeginSeg, b.seg_label == SegLabel::BeginSeg)),
            ),
            Task::Conn => return Err(Error::Invalid("use score_connectives for connectives".into())),
        };
        total = total.add(&s);
    }
    Ok(total)
}

/// Per-token connective scoring of label sequences. With `merge_bi`, B and I
/// count as one positive class.
pub fn score_conn_labels(gold: &[ConnLabel], pred: &[ConnLabel], merge_bi: bool) -> Score {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (g, p) in gold.iter().zip(pred) {
        let matched = if merge_bi { g.is_conn() == p.is_conn() } else { g == p };
        if g.is_conn() && p.is_conn() && matched {
            tp += 1;
            continue;
        }
        if p.is_conn() {
            fp += 1;
        }
        if g.is_conn() {
            fn_ += 1;
        }
    }
    Score::from_counts(tp, fp, fn_)
}

pub fn score_connectives(gold: &[Document], pred: &[Document], merge_bi: bool) -> Result<Score> {
    let pairs = pair_documents(gold, pred)?;
    let mut total = Score::default();
    for (g, p) in pairs {
        let gl: Vec<ConnLabel> = g.tokens().map(|t| t.conn_label).collect();
        let pl: Vec<ConnLabel> = p.tokens().map(|t| t.conn_label).collect();
        total = total.add(&score_conn_labels(&gl, &pl, merge_bi));
    }
    Ok(total)
}

/// Scores per-token class ids (in `Task::classes` order) for any task.
/// Sentence scoring skips each sequence's first token.
pub fn score_class_ids(task: Task, gold: &[Vec<usize>], pred: &[Vec<usize>], merge_bi: bool) -> Score {
    let mut total = Score::default();
    for (g, p) in gold.iter().zip(pred) {
        let s = match task {
            Task::Sent => count(g.iter().zip(p).skip(1).map(|(a, b)| (*a == 0, *b == 0))),
            Task::Seg => count(g.iter().zip(p).map(|(a, b)| (*a == 0, *b == 0))),
            Task::Conn => {
                let conv = |v: &[usize]| -> Vec<ConnLabel> {
                    v.iter()
                        .map(|c| match c {
                            0 => ConnLabel::B,
                            1 => ConnLabel::I,
                            _ => ConnLabel::O,
                        })
                        .collect()
                };
                score_conn_labels(&conv(g), &conv(p), merge_bi)
            }
        };
        total = total.add(&s);
    }
    total
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fixed-width P/R/F table with mean and population standard deviation rows,
/// followed by `corpus<TAB>metric<TAB>value` lines. Scores with a zero
/// denominator are marked with `*`.
pub fn report(scores: &[(String, Score)]) -> String {
    let width = scores.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(6) + 2;
    let mut out = String::new();
    let rule = "-".repeat(width + 24);
    let _ = writeln!(out, "{:<width$}{:>8}{:>8}{:>8}", "corpus", "P", "R", "F");
    let _ = writeln!(out, "{rule}");
    let mut flagged = false;
    for (name, s) in scores {
        let mark = if s.degenerate() {
            flagged = true;
            " *"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{:<width$}{:>8.3}{:>8.3}{:>8.3}{mark}",
            name, s.precision, s.recall, s.f1
        );
    }
    let cols: Vec<(f64, f64)> = [
        scores.iter().map(|(_, s)| s.precision).collect::<Vec<_>>(),
        scores.iter().map(|(_, s)| s.recall).collect(),
        scores.iter().map(|(_, s)| s.f1).collect(),
    ]
    .iter()
    .map(|v| if v.is_empty() { (0.0, 0.0) } else { mean_std(v) })
    .collect();
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "{:<width$}{:>8.3}{:>8.3}{:>8.3}", "mean", cols[0].0, cols[1].0, cols[2].0);
    let _ = writeln!(out, "{:<width$}{:>8.3}{:>8.3}{:>8.3}", "std", cols[0].1, cols[1].1, cols[2].1);
    if flagged {
        let _ = writeln!(out, "* zero denominator: reported as 0");
    }
    out.push('\n');
    for (name, s) in scores {
        let _ = writeln!(out, "{name}\ttp\t{}", s.tp);
        let _ = writeln!(out, "{name}\tfp\t{}", s.fp);
        let _ = writeln!(out, "{name}\tfn\t{}", s.fn_);
        let _ = writeln!(out, "{name}\tprecision\t{:.6}", s.precision);
        let _ = writeln!(out, "{name}\trecall\t{:.6}", s.recall);
        let _ = writeln!(out, "{name}\tf1\t{:.6}", s.f1);
    }
    for (row, idx) in [("mean", 0usize), ("std", 1)] {
        let pick = |c: (f64, f64)| if idx == 0 { c.0 } else { c.1 };
        let _ = writeln!(out, "{row}\tprecision\t{:.6}", pick(cols[0]));
        let _ = writeln!(out, "{row}\trecall\t{:.6}", pick(cols[1]));
        let _ = writeln!(out, "{row}\tf1\t{:.6}", pick(cols[2]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};
    use proptest::prelude::*;

    fn seg_doc(name: &str, labels: &[bool]) -> Document {
        let tokens = labels
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let mut t = Token::new(i + 1, format!("w{i}"));
                t.seg_label = if *b { SegLabel::BeginSeg } else { SegLabel::NoSeg };
                t
            })
            .collect();
        Document {
            name: name.into(),
            genre: "all".into(),
            sentences: vec![Sentence {
                tokens,
                ..Default::default()
            }],
        }
    }

    #[test]
    fn hand_counted_fixture() {
        // gold: 5 boundaries; pred: 4 of them plus 2 spurious
        let gold = seg_doc("d", &[true, false, true, false, true, false, true, false, true, false]);
        let pred = seg_doc("d", &[true, true, true, false, true, true, true, false, false, false]);
        let s = score_boundaries(&[gold], &[pred], Task::Seg).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (4, 2, 1));
        assert_eq!(format!("{:.3} {:.3} {:.3}", s.precision, s.recall, s.f1), "0.667 0.800 0.727");
        let p: f64 = 4.0 / 6.0;
        let r: f64 = 4.0 / 5.0;
        assert!((s.f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
    }

    #[test]
    fn all_negative_prediction() {
        let gold = seg_doc("d", &[true, false, true]);
        let pred = seg_doc("d", &[false, false, false]);
        let s = score_boundaries(&[gold], &[pred], Task::Seg).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        assert!(s.degenerate());
    }

    #[test]
    fn sentence_scoring_skips_document_start() {
        let mut g = seg_doc("d", &[false; 4]);
        g.sentences[0].tokens[2].sent_initial = true;
        let mut p = g.clone();
        p.sentences[0].tokens[0].sent_initial = false;
        let s = score_boundaries(&[g], &[p], Task::Sent).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
    }

    #[test]
    fn misalignment_reported() {
        let a = seg_doc("d", &[true, false]);
        let b = seg_doc("d", &[true]);
        assert!(matches!(score_boundaries(std::slice::from_ref(&a), &[b], Task::Seg), Err(Error::Misalignment(_))));
        let mut c = a.clone();
        c.sentences[0].tokens[1].form = "zz".into();
        let err = score_boundaries(&[a], &[c], Task::Seg).unwrap_err().to_string();
        assert!(err.contains("token 1"), "{err}");
    }

    #[test]
    fn connective_hand_counts() {
        use ConnLabel::{B, I, O};
        let s = score_conn_labels(&[B, I], &[B, O], false);
        assert_eq!((s.tp, s.fp, s.fn_, s.precision, s.recall), (1, 0, 1, 1.0, 0.5));
        let s = score_conn_labels(&[I], &[B], false);
        assert_eq!((s.tp, s.fp, s.fn_), (0, 1, 1));
        let s = score_conn_labels(&[I], &[B], true);
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
        let s = score_conn_labels(&[B, I, O], &[B, I, O], false);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn report_mean_and_std() {
        let a = Score {
            f1: 0.8,
            ..Score::from_counts(4, 1, 1)
        };
        let b = Score {
            f1: 0.9,
            ..Score::from_counts(9, 1, 1)
        };
        let r = report(&[("a".into(), a), ("b".into(), b)]);
        assert!(r.contains("mean\tf1\t0.850000"), "{r}");
        assert!(r.contains("std\tf1\t0.050000"), "{r}");
        let single = report(&[("a".into(), a)]);
        assert!(single.contains("std\tf1\t0.000000"));
    }

    fn conn_label() -> impl Strategy<Value = ConnLabel> {
        prop_oneof![Just(ConnLabel::B), Just(ConnLabel::I), Just(ConnLabel::O)]
    }

    proptest! {
        #[test]
        fn counts_match_positive_totals(pairs in proptest::collection::vec((conn_label(), conn_label()), 0..40), merge in any::<bool>()) {
            let g: Vec<ConnLabel> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<ConnLabel> = pairs.iter().map(|p| p.1).collect();
            let s = score_conn_labels(&g, &p, merge);
            prop_assert_eq!(s.tp + s.fn_, g.iter().filter(|l| l.is_conn()).count() as u64);
            prop_assert_eq!(s.tp + s.fp, p.iter().filter(|l| l.is_conn()).count() as u64);
            let perfect = score_conn_labels(&g, &g, merge);
            if g.iter().any(|l| l.is_conn()) {
                prop_assert_eq!((perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0));
            }
        }

        #[test]
        fn permutation_invariant(docs in proptest::collection::vec(proptest::collection::vec((any::<bool>(), any::<bool>()), 1..8), 1..5), rot in 0usize..5) {
            let gold: Vec<Document> = docs.iter().enumerate().map(|(i, d)| seg_doc(&format!("d{i}"), &d.iter().map(|x| x.0).collect::<Vec<_>>())).collect();
            let pred: Vec<Document> = docs.iter().enumerate().map(|(i, d)| seg_doc(&format!("d{i}"), &d.iter().map(|x| x.1).collect::<Vec<_>>())).collect();
            let base = score_boundaries(&gold, &pred, Task::Seg).unwrap();
            let mut rotated = pred.clone();
            rotated.rotate_left(rot % pred.len());
            prop_assert_eq!(score_boundaries(&gold, &rotated, Task::Seg).unwrap(), base);
        }
    }
}
