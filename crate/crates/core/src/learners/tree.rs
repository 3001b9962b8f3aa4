//! Histogram-binned CART trees shared by the forest, extra-trees and boosting
//! learners.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::featurizer::{FeatureKind, FeatureRecord, Value};

pub const MAX_BINS: usize = 255;

/// Rows satisfying the test go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    Le(f64),
    Eq(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        test: SplitTest,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: Vec<f64>) -> Self {
        Tree {
            nodes: vec![Node::Leaf(value)],
        }
    }

    pub fn predict(&self, values: &[Value]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    let goes_left = match (test, values[*feature]) {
                        (SplitTest::Le(t), v) => v.as_f64() <= *t,
                        (SplitTest::Eq(c), Value::Cat(x)) => x == *c,
                        (SplitTest::Eq(_), Value::Num(_)) => false,
                    };
                    i = if goes_left { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Clone, Debug)]
pub(crate) enum ColumnBins {
    /// Upper bounds; bin `b` holds values in `(upper[b-1], upper[b]]`.
    Numeric(Vec<f64>),
    /// Bin `i` is category `cats[i]`; bin `cats.len()` collects the rest.
    Categorical(Vec<u32>),
}

impl ColumnBins {
    fn n_bins(&self) -> usize {
        match self {
            ColumnBins::Numeric(u) => u.len(),
            ColumnBins::Categorical(c) => c.len() + 1,
        }
    }
}

/// Column-major bin indices for a record matrix.
#[derive(Clone, Debug)]
pub(crate) struct Binned {
    pub cols: Vec<Vec<u16>>,
    pub bins: Vec<ColumnBins>,
}

impl Binned {
    pub fn new(records: &[FeatureRecord], kinds: &[FeatureKind], max_bins: usize) -> Self {
        let max_bins = max_bins.clamp(2, MAX_BINS);
        let mut cols = Vec::with_capacity(kinds.len());
        let mut bins = Vec::with_capacity(kinds.len());
        for (j, kind) in kinds.iter().enumerate() {
            match kind {
                FeatureKind::Numeric => {
                    let vals: Vec<f64> = records.iter().map(|r| r.values[j].as_f64()).collect();
                    let mut sorted = vals.clone();
                    sorted.sort_by(f64::total_cmp);
                    let mut uniq = sorted.clone();
                    uniq.dedup();
                    let upper = if uniq.len() <= max_bins {
                        uniq
                    } else {
                        let n = sorted.len();
                        let mut u: Vec<f64> = (1..=max_bins).map(|i| sorted[(i * n / max_bins).max(1) - 1]).collect();
                        u.dedup();
                        u
                    };
                    let upper = if upper.is_empty() { vec![0.0] } else { upper };
                    let last = upper.len() - 1;
                    cols.push(
                        vals.iter()
                            .map(|v| upper.partition_point(|u| u < v).min(last) as u16)
                            .collect(),
                    );
                    bins.push(ColumnBins::Numeric(upper));
                }
                FeatureKind::Categorical => {
                    let ids: Vec<u32> = records
                        .iter()
                        .map(|r| match r.values[j] {
                            Value::Cat(c) => c,
                            Value::Num(x) => x as u32,
                        })
                        .collect();
                    let mut counts: std::collections::BTreeMap<u32, usize> = Default::default();
                    for &c in &ids {
                        *counts.entry(c).or_default() += 1;
                    }
                    let mut by_count: Vec<(u32, usize)> = counts.into_iter().collect();
                    by_count.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                    let mut cats: Vec<u32> = by_count.iter().take(max_bins - 1).map(|p| p.0).collect();
                    cats.sort_unstable();
                    let other = cats.len();
                    cols.push(
                        ids.iter()
                            .map(|c| cats.binary_search(c).unwrap_or(other) as u16)
                            .collect(),
                    );
                    bins.push(ColumnBins::Categorical(cats));
                }
            }
        }
        Binned { cols, bins }
    }
}

/// Split quality as the gain of a scoring function over per-bin statistics.
/// `Gini` statistics are class weights followed by the total weight; `Newton`
/// statistics are gradient sum, hessian sum and row count.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Criterion {
    Gini { n_classes: usize },
    Newton { lambda: f64 },
}

impl Criterion {
    pub fn width(self) -> usize {
        match self {
            Criterion::Gini { n_classes } => n_classes + 1,
            Criterion::Newton { .. } => 3,
        }
    }

    fn count(self, s: &[f64]) -> f64 {
        s[s.len() - 1]
    }

    fn score(self, s: &[f64]) -> f64 {
        match self {
            Criterion::Gini { n_classes } => {
                let n = s[n_classes];
                if n <= 0.0 {
                    0.0
                } else {
                    s[..n_classes].iter().map(|c| c * c).sum::<f64>() / n
                }
            }
            Criterion::Newton { lambda } => s[0] * s[0] / (s[1] + lambda),
        }
    }

    fn is_pure(self, s: &[f64]) -> bool {
        match self {
            Criterion::Gini { n_classes } => s[..n_classes].iter().filter(|c| **c > 0.0).count() <= 1,
            Criterion::Newton { .. } => false,
        }
    }

    fn leaf(self, s: &[f64]) -> Vec<f64> {
        match self {
            Criterion::Gini { n_classes } => {
                let n = s[n_classes];
                s[..n_classes].iter().map(|c| c / n).collect()
            }
            Criterion::Newton { lambda } => vec![-s[0] / (s[1] + lambda)],
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split before falling back to the rest.
    pub mtry: Option<usize>,
    pub random_thresholds: bool,
}

struct Candidate {
    feature: usize,
    bin: usize,
    gain: f64,
}

pub(crate) struct Grower<'a> {
    pub data: &'a Binned,
    pub criterion: Criterion,
    /// Row-major statistics, `criterion.width()` per row.
    pub stats: &'a [f64],
    pub params: &'a GrowParams,
    /// Features eligible for splitting.
    pub features: &'a [usize],
}

impl Grower<'_> {
    pub fn grow(&self, rows: &mut [u32], rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = Vec::new();
        self.grow_node(rows, 0, rng, &mut nodes);
        Tree { nodes }
    }

    fn sum_stats(&self, rows: &[u32]) -> Vec<f64> {
        let w = self.criterion.width();
        let mut s = vec![0.0; w];
        for &r in rows {
            let r = r as usize;
            for (a, b) in s.iter_mut().zip(&self.stats[r * w..(r + 1) * w]) {
                *a += b;
            }
        }
        s
    }

    fn grow_node(&self, rows: &mut [u32], depth: usize, rng: &mut ChaCha8Rng, nodes: &mut Vec<Node>) -> usize {
        let id = nodes.len();
        let total = self.sum_stats(rows);
        nodes.push(Node::Leaf(self.criterion.leaf(&total)));
        let crit = self.criterion;
        if depth >= self.params.max_depth
            || rows.len() < 2 * self.params.min_leaf.max(1)
            || crit.is_pure(&total)
        {
            return id;
        }
        let Some(best) = self.best_split(rows, &total, rng) else {
            return id;
        };
        let data = self.data;
        let col = &data.cols[best.feature];
        let goes_left = |r: u32| match &data.bins[best.feature] {
            ColumnBins::Numeric(_) => col[r as usize] as usize <= best.bin,
            ColumnBins::Categorical(_) => col[r as usize] as usize == best.bin,
        };
        let mut split = 0;
        for i in 0..rows.len() {
            if goes_left(rows[i]) {
                rows.swap(i, split);
                split += 1;
            }
        }
        let test = match &data.bins[best.feature] {
            ColumnBins::Numeric(u) => SplitTest::Le(u[best.bin]),
            ColumnBins::Categorical(c) => SplitTest::Eq(c[best.bin]),
        };
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow_node(l, depth + 1, rng, nodes);
        let right = self.grow_node(r, depth + 1, rng, nodes);
        nodes[id] = Node::Split {
            feature: best.feature,
            test,
            left,
            right,
        };
        id
    }

    fn best_split(&self, rows: &[u32], total: &[f64], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let mut order: Vec<usize> = self.features.to_vec();
        let first = match self.params.mtry {
            Some(m) => {
                order.shuffle(rng);
                m.clamp(1, order.len().max(1))
            }
            None => order.len(),
        };
        let mut best: Option<Candidate> = None;
        for (i, &f) in order.iter().enumerate() {
            if i >= first && best.is_some() {
                break;
            }
            if let Some(c) = self.feature_split(f, rows, total, rng) {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn feature_split(&self, f: usize, rows: &[u32], total: &[f64], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let crit = self.criterion;
        let w = crit.width();
        let bins = &self.data.bins[f];
        let nb = bins.n_bins();
        let col = &self.data.cols[f];
        let mut hist = vec![0.0; nb * w];
        let mut present = vec![false; nb];
        for &r in rows {
            let b = col[r as usize] as usize;
            present[b] = true;
            for (a, s) in hist[b * w..(b + 1) * w]
                .iter_mut()
                .zip(&self.stats[r as usize * w..(r as usize + 1) * w])
            {
                *a += s;
            }
        }
        let parent = crit.score(total);
        let min_leaf = self.params.min_leaf.max(1) as f64;
        let evaluate = |left: &[f64]| -> Option<f64> {
            let right: Vec<f64> = total.iter().zip(left).map(|(t, l)| t - l).collect();
            let (nl, nr) = (crit.count(left), crit.count(&right));
            if nl < min_leaf || nr < min_leaf || nl <= 0.0 || nr <= 0.0 {
                return None;
            }
            let gain = crit.score(left) + crit.score(&right) - parent;
            (gain > -1e-12).then_some(gain)
        };
        let nonempty: Vec<usize> = (0..nb).filter(|&b| present[b]).collect();
        if nonempty.len() < 2 {
            return None;
        }
        match bins {
            ColumnBins::Numeric(upper) => {
                if self.params.random_thresholds {
                    let lo = upper[nonempty[0]];
                    let hi = upper[*nonempty.last().unwrap()];
                    let t = rng.gen_range(lo..hi);
                    let bin = *nonempty.iter().rev().find(|&&b| upper[b] <= t).unwrap();
                    let mut left = vec![0.0; w];
                    for b in nonempty.iter().take_while(|&&b| b <= bin) {
                        add(&mut left, &hist[b * w..(b + 1) * w]);
                    }
                    return evaluate(&left).map(|gain| Candidate { feature: f, bin, gain });
                }
                let mut left = vec![0.0; w];
                let mut best: Option<Candidate> = None;
                for &b in &nonempty[..nonempty.len() - 1] {
                    add(&mut left, &hist[b * w..(b + 1) * w]);
                    if let Some(gain) = evaluate(&left) {
                        if best.as_ref().is_none_or(|c| gain > c.gain) {
                            best = Some(Candidate { feature: f, bin: b, gain });
                        }
                    }
                }
                best
            }
            ColumnBins::Categorical(cats) => {
                let named: Vec<usize> = nonempty.iter().copied().filter(|&b| b < cats.len()).collect();
                if named.is_empty() {
                    return None;
                }
                if self.params.random_thresholds {
                    let b = named[rng.gen_range(0..named.len())];
                    return evaluate(&hist[b * w..(b + 1) * w]).map(|gain| Candidate { feature: f, bin: b, gain });
                }
                let mut best: Option<Candidate> = None;
                for b in named {
                    if let Some(gain) = evaluate(&hist[b * w..(b + 1) * w]) {
                        if best.as_ref().is_none_or(|c| gain > c.gain) {
                            best = Some(Candidate { feature: f, bin: b, gain });
                        }
                    }
                }
                best
            }
        }
    }
}

fn add(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}
