//! Dependency-tree features: clause brackets, head distance and the
//! subtree window used by the subtree segmenter.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Placeholder label for absent tree positions and children.
pub const NONE_LABEL: &str = "NONE";

/// Pseudo-relation matching `conj` only between two verbal tokens.
pub const CONJ_OF_CLAUSE: &str = "conj-of-clause";

/// Relations whose dependents open a bracketed clause span.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClausalRelations {
    pub labels: BTreeSet<String>,
}

impl Default for ClausalRelations {
    fn default() -> Self {
        ClausalRelations::new([
            "advcl",
            "acl",
            "acl:relcl",
            "xcomp",
            "ccomp",
            "csubj",
            "parataxis",
            CONJ_OF_CLAUSE,
        ])
    }
}

impl ClausalRelations {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ClausalRelations {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    /// A relation matches exactly or through its base label (`acl:relcl` -> `acl`).
    pub fn is_clausal(&self, deprel: &str, dep_upos: &str, head_upos: &str) -> bool {
        if self.labels.contains(deprel) {
            return true;
        }
        let base = deprel.split(':').next().unwrap_or(deprel);
        if base == "conj" && self.labels.contains(CONJ_OF_CLAUSE) {
            return is_verbal(dep_upos) && is_verbal(head_upos);
        }
        base != deprel && self.labels.contains(base)
    }
}

fn is_verbal(upos: &str) -> bool {
    matches!(upos, "VERB" | "AUX")
}

/// 0-based parent positions; `None` marks the root.
pub fn parents(sentence: &Sentence) -> Result<Vec<Option<usize>>> {
    sentence
        .tokens
        .iter()
        .map(|t| match t.head {
            Some(0) => Ok(None),
            Some(h) => Ok(Some(h - 1)),
            None => Err(Error::MissingTrees(format!(
                "token {} (`{}`) has no dependency head; syntax features need parsed input",
                t.index, t.form
            ))),
        })
        .collect()
}

/// Children lists in position order.
fn children(parents: &[Option<usize>]) -> Vec<Vec<usize>> {
    let mut kids = vec![Vec::new(); parents.len()];
    for (i, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            kids[p].push(i);
        }
    }
    kids
}

/// Descendants of `node`, excluding the node, in ascending position order.
fn descendants(kids: &[Vec<usize>], node: usize) -> Vec<usize> {
    let mut seen = vec![false; kids.len()];
    seen[node] = true;
    let mut stack = vec![node];
    let mut out = Vec::new();
    while let Some(n) = stack.pop() {
        for &c in &kids[n] {
            if !seen[c] {
                seen[c] = true;
                out.push(c);
                stack.push(c);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Distance from each token to the root (root = 0). Tokens caught in a
/// malformed cycle get the sentence length.
pub fn depths(parents: &[Option<usize>]) -> Vec<i64> {
    parents
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut d = 0i64;
            let mut cur = i;
            while let Some(p) = parents[cur] {
                d += 1;
                cur = p;
                if d as usize > parents.len() {
                    break;
                }
            }
            d
        })
        .collect()
}

/// A contiguous clause span (0-based, inclusive) headed by a clausal dependent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseSpan {
    pub head: usize,
    pub relation: String,
    pub start: usize,
    pub end: usize,
}

impl ClauseSpan {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// One span per clausal dependent, covering the min..max hull of its subtree.
pub fn clause_spans(sentence: &Sentence, clausal: &ClausalRelations) -> Result<Vec<ClauseSpan>> {
    let parents = parents(sentence)?;
    let kids = children(&parents);
    let mut spans = Vec::new();
    for (i, tok) in sentence.tokens.iter().enumerate() {
        let Some(p) = parents[i] else { continue };
        let head_upos = &sentence.tokens[p].upos;
        if !clausal.is_clausal(&tok.deprel, &tok.upos, head_upos) {
            continue;
        }
        let desc = descendants(&kids, i);
        let start = desc.first().map_or(i, |&d| d.min(i));
        let end = desc.last().map_or(i, |&d| d.max(i));
        spans.push(ClauseSpan {
            head: i,
            relation: tok.deprel.clone(),
            start,
            end,
        });
    }
    Ok(spans)
}

/// BIEO clause bracket tag per token (`B-advcl`, `I-advcl`, `E-advcl`, `O`).
/// Where spans nest, the smallest span covering a token decides its tag.
pub fn dep_brackets(sentence: &Sentence, clausal: &ClausalRelations) -> Result<Vec<String>> {
    let mut spans = clause_spans(sentence, clausal)?;
    // paint outermost first so inner spans overwrite
    spans.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then(a.start.cmp(&b.start))
            .then(a.head.cmp(&b.head))
    });
    let mut tags = vec!["O".to_string(); sentence.len()];
    for span in &spans {
        for (pos, tag) in tags.iter_mut().enumerate().take(span.end + 1).skip(span.start) {
            let prefix = if pos == span.start {
                "B"
            } else if pos == span.end {
                "E"
            } else {
                "I"
            };
            *tag = format!("{prefix}-{}", span.relation);
        }
    }
    Ok(tags)
}

/// Signed offset `head_position - token_position`; 0 for the root.
pub fn head_distance(sentence: &Sentence, index: usize) -> Result<i64> {
    let tok = sentence
        .tokens
        .get(index.wrapping_sub(1))
        .ok_or_else(|| Error::Invalid(format!("no token {index} in sentence")))?;
    match tok.head {
        Some(0) => Ok(0),
        Some(h) => Ok(h as i64 - index as i64),
        None => Err(Error::MissingTrees(format!(
            "token {index} has no dependency head"
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeadDistanceBin {
    Zero,
    NextLeft,
    NextRight,
    CloseLeft,
    CloseRight,
    FarLeft,
    FarRight,
}

impl HeadDistanceBin {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadDistanceBin::Zero => "zero",
            HeadDistanceBin::NextLeft => "next-left",
            HeadDistanceBin::NextRight => "next-right",
            HeadDistanceBin::CloseLeft => "close-left",
            HeadDistanceBin::CloseRight => "close-right",
            HeadDistanceBin::FarLeft => "far-left",
            HeadDistanceBin::FarRight => "far-right",
        }
    }
}

pub fn bin_head_distance(d: i64) -> HeadDistanceBin {
    use HeadDistanceBin::*;
    match (d.signum(), d.unsigned_abs()) {
        (0, _) => Zero,
        (-1, 1) => NextLeft,
        (1, 1) => NextRight,
        (-1, 2..=3) => CloseLeft,
        (1, 2..=3) => CloseRight,
        (-1, _) => FarLeft,
        _ => FarRight,
    }
}

/// Tree features of one window position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotFeatures {
    pub deprel: String,
    pub depth: i64,
    pub same_parent_left: bool,
    pub same_parent_right: bool,
}

impl SlotFeatures {
    fn sentinel() -> Self {
        SlotFeatures {
            deprel: NONE_LABEL.into(),
            depth: -1,
            same_parent_left: false,
            same_parent_right: false,
        }
    }
}

/// Window positions around a node, in `SubtreeFeatures::slots` order.
pub const SLOT_NAMES: [&str; 7] = ["min2", "min1", "node", "pls1", "pls2", "par", "parpar"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubtreeFeatures {
    /// min2, min1, node, pls1, pls2, par, parpar.
    pub slots: [SlotFeatures; 7],
    pub lspan: usize,
    pub rspan: usize,
    pub lchild_near: String,
    pub lchild_far: String,
    pub rchild_near: String,
    pub rchild_far: String,
}

/// Precomputed tree structure of one sentence, shared by all its nodes.
pub struct SentenceTree {
    parents: Vec<Option<usize>>,
    kids: Vec<Vec<usize>>,
    depths: Vec<i64>,
    deprels: Vec<String>,
}

impl SentenceTree {
    pub fn new(sentence: &Sentence) -> Result<Self> {
        let parents = parents(sentence)?;
        let kids = children(&parents);
        let depths = depths(&parents);
        Ok(SentenceTree {
            parents,
            kids,
            depths,
            deprels: sentence.tokens.iter().map(|t| t.deprel.clone()).collect(),
        })
    }

    fn slot(&self, pos: Option<usize>) -> SlotFeatures {
        let Some(p) = pos.filter(|&p| p < self.parents.len()) else {
            return SlotFeatures::sentinel();
        };
        let same = |q: Option<usize>| q.is_some_and(|q| self.parents[q] == self.parents[p]);
        SlotFeatures {
            deprel: self.deprels[p].clone(),
            depth: self.depths[p],
            same_parent_left: same(p.checked_sub(1)),
            same_parent_right: same(Some(p + 1).filter(|&q| q < self.parents.len())),
        }
    }

    /// Features for the 0-based position `node`.
    pub fn features(&self, node: usize) -> SubtreeFeatures {
        let parent = self.parents[node];
        let grandparent = parent.and_then(|p| self.parents[p]);
        let slots = [
            self.slot(node.checked_sub(2)),
            self.slot(node.checked_sub(1)),
            self.slot(Some(node)),
            self.slot(Some(node + 1)),
            self.slot(Some(node + 2)),
            self.slot(parent),
            self.slot(grandparent),
        ];
        let desc = descendants(&self.kids, node);
        let left: Vec<usize> = desc.iter().copied().filter(|&d| d < node).collect();
        let right: Vec<usize> = desc.iter().copied().filter(|&d| d > node).collect();
        let label = |p: Option<&usize>| {
            p.map(|&p| self.deprels[p].clone())
                .unwrap_or_else(|| NONE_LABEL.into())
        };
        SubtreeFeatures {
            slots,
            lspan: left.len(),
            rspan: right.len(),
            lchild_near: label(left.last()),
            lchild_far: label(left.first()),
            rchild_near: label(right.first()),
            rchild_far: label(right.last()),
        }
    }
}

/// Subtree window features for the 1-based token `index`.
pub fn subtree_features(sentence: &Sentence, index: usize) -> Result<SubtreeFeatures> {
    if index == 0 || index > sentence.len() {
        return Err(Error::Invalid(format!("no token {index} in sentence")));
    }
    Ok(SentenceTree::new(sentence)?.features(index - 1))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::corpus::{Sentence, Token};

    /// `allowed as ants when given the choice ignore poison`: allowed is the
    /// root, ignore an advcl of allowed, given an advcl of ignore.
    pub fn ants_fragment() -> Sentence {
        let rows = [
            ("allowed", "VERB", 0, "root"),
            ("as", "SCONJ", 8, "mark"),
            ("ants", "NOUN", 8, "nsubj"),
            ("when", "SCONJ", 5, "mark"),
            ("given", "VERB", 8, "advcl"),
            ("the", "DET", 7, "det"),
            ("choice", "NOUN", 5, "obj"),
            ("ignore", "VERB", 1, "advcl"),
            ("poison", "NOUN", 8, "obj"),
        ];
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, (form, upos, head, rel))| {
                let mut t = Token::new(i + 1, *form);
                t.upos = upos.to_string();
                t.head = Some(*head);
                t.deprel = rel.to_string();
                t
            })
            .collect();
        Sentence {
            tokens,
            ..Sentence::default()
        }
    }
}
