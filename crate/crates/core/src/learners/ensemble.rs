//! Single trees, random forests, extremely randomized trees and gradient boosting.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Labels};
use super::linear::softmax_in_place;
use super::tree::{Binned, Criterion, GrowParams, Grower, Tree, MAX_BINS};
use crate::error::{Error, Result};
use crate::featurizer::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Tree,
    Forest,
    ExtraTrees,
    Gbt,
}

impl TreeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TreeKind::Tree => "tree",
            TreeKind::Forest => "forest",
            TreeKind::ExtraTrees => "extratrees",
            TreeKind::Gbt => "gbt",
        }
    }
}

impl std::str::FromStr for TreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(TreeKind::Tree),
            "forest" | "rf" => Ok(TreeKind::Forest),
            "extratrees" | "et" => Ok(TreeKind::ExtraTrees),
            "gbt" | "xgb" => Ok(TreeKind::Gbt),
            other => Err(Error::Config(format!("unknown tree learner `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub learning_rate: f64,
    /// Fraction of rows drawn (without replacement) per boosting stage.
    pub subsample: f64,
    /// Fraction of features available to each boosted tree.
    pub colsample: f64,
    pub seed: u64,
    /// L2 penalty on boosted leaf values.
    pub l2: f64,
    pub max_bins: usize,
}

impl TreeParams {
    pub fn defaults(kind: TreeKind) -> Self {
        let (n_trees, max_depth) = match kind {
            TreeKind::Gbt => (200, 4),
            TreeKind::Tree => (1, 12),
            _ => (200, 12),
        };
        TreeParams {
            n_trees,
            max_depth,
            min_leaf: 1,
            learning_rate: 0.1,
            subsample: 1.0,
            colsample: 1.0,
            seed: 42,
            l2: 1.0,
            max_bins: MAX_BINS,
        }
    }
}

/// Averaged leaf distributions (classification) or leaf means (regression).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    pub regression: bool,
}

impl TreeEnsemble {
    pub fn predict(&self, values: &[Value]) -> Vec<f64> {
        let mut acc = self.trees[0].predict(values).to_vec();
        for t in &self.trees[1..] {
            for (a, b) in acc.iter_mut().zip(t.predict(values)) {
                *a += b;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|v| *v /= n);
        acc
    }
}

/// Stage-wise boosted margins. Two classes share one sigmoid margin (for the
/// second class); more classes get one margin each, combined by softmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_classes: usize,
    pub base: Vec<f64>,
    /// One tree per margin per stage; leaf values already include shrinkage.
    pub stages: Vec<Vec<Tree>>,
}

impl GbtModel {
    fn n_margins(n_classes: usize) -> usize {
        if n_classes == 2 {
            1
        } else {
            n_classes
        }
    }

    pub fn margins(&self, values: &[Value], n_stages: usize) -> Vec<f64> {
        let mut f = self.base.clone();
        for stage in self.stages.iter().take(n_stages) {
            for (m, t) in stage.iter().enumerate() {
                f[m] += t.predict(values)[0];
            }
        }
        f
    }

    pub fn predict(&self, values: &[Value]) -> Vec<f64> {
        self.predict_stages(values, self.stages.len())
    }

    /// Probabilities using only the first `n_stages` boosting stages.
    pub fn predict_stages(&self, values: &[Value], n_stages: usize) -> Vec<f64> {
        margins_to_proba(&self.margins(values, n_stages), self.n_classes)
    }
}

fn margins_to_proba(f: &[f64], n_classes: usize) -> Vec<f64> {
    if n_classes == 2 {
        let p = 1.0 / (1.0 + (-f[0]).exp());
        vec![1.0 - p, p]
    } else {
        let mut p = f.to_vec();
        softmax_in_place(&mut p);
        p
    }
}

pub(crate) enum TreeFit {
    Constant(Vec<f64>),
    Trees(TreeEnsemble),
    Gbt(GbtModel),
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn fit_trees(ds: &Dataset, kind: TreeKind, params: &TreeParams) -> Result<TreeFit> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if params.max_depth == 0 {
        return Err(Error::Config("max_depth must be at least 1".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    let kinds: Vec<_> = ds.schema.entries.iter().map(|e| e.kind).collect();
    let data = Binned::new(&ds.records, &kinds, params.max_bins);
    let n = ds.len();
    let d = kinds.len();
    let all_features: Vec<usize> = (0..d).collect();

    if kind == TreeKind::Gbt {
        return fit_gbt(ds, &data, params);
    }

    let (criterion, stats, regression) = match &ds.labels {
        Labels::Class(y) => {
            let k = ds.classes.len();
            if y.iter().all(|&c| c == y[0]) {
                let mut p = vec![0.0; k];
                p[y[0]] = 1.0;
                return Ok(TreeFit::Constant(p));
            }
            let mut s = Vec::with_capacity(n * (k + 1));
            for &c in y {
                s.extend((0..k).map(|j| if j == c { 1.0 } else { 0.0 }));
                s.push(1.0);
            }
            (Criterion::Gini { n_classes: k }, s, false)
        }
        // variance reduction: g = -y, h = 1, no penalty
        Labels::Real(y) => (
            Criterion::Newton { lambda: 0.0 },
            y.iter().flat_map(|&v| [-v, 1.0, 1.0]).collect(),
            true,
        ),
    };
    let mtry = match kind {
        TreeKind::Tree => None,
        _ => Some(((d as f64).sqrt().ceil() as usize).max(1)),
    };
    let grow = GrowParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry,
        random_thresholds: kind == TreeKind::ExtraTrees,
    };
    let n_trees = if kind == TreeKind::Tree { 1 } else { params.n_trees };
    let w = criterion.width();
    let trees: Vec<Tree> = (0..n_trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(params.seed, t);
            if kind == TreeKind::Forest {
                let mut weight = vec![0.0; n];
                for _ in 0..n {
                    weight[rng.gen_range(0..n)] += 1.0;
                }
                let weighted: Vec<f64> = stats
                    .chunks(w)
                    .zip(&weight)
                    .flat_map(|(s, &m)| s.iter().map(move |v| v * m))
                    .collect();
                let mut rows: Vec<u32> = (0..n as u32).filter(|&i| weight[i as usize] > 0.0).collect();
                let g = Grower {
                    data: &data,
                    criterion,
                    stats: &weighted,
                    params: &grow,
                    features: &all_features,
                };
                g.grow(&mut rows, &mut rng)
            } else {
                let mut rows: Vec<u32> = (0..n as u32).collect();
                let g = Grower {
                    data: &data,
                    criterion,
                    stats: &stats,
                    params: &grow,
                    features: &all_features,
                };
                g.grow(&mut rows, &mut rng)
            }
        })
        .collect();
    Ok(TreeFit::Trees(TreeEnsemble { trees, regression }))
}

fn fit_gbt(ds: &Dataset, data: &Binned, params: &TreeParams) -> Result<TreeFit> {
    let y = ds.class_labels()?;
    let k = ds.classes.len();
    if k < 2 || y.iter().all(|&c| c == y[0]) {
        let mut p = vec![0.0; k.max(1)];
        p[y[0]] = 1.0;
        return Ok(TreeFit::Constant(p));
    }
    let n = ds.len();
    let d = data.bins.len();
    let m = GbtModel::n_margins(k);
    let mut prior = vec![0.0; k];
    for &c in y {
        prior[c] += 1.0 / n as f64;
    }
    let base: Vec<f64> = if k == 2 {
        let p = prior[1].clamp(1e-6, 1.0 - 1e-6);
        vec![(p / (1.0 - p)).ln()]
    } else {
        prior.iter().map(|p| p.max(1e-6).ln()).collect()
    };
    let target = |i: usize, margin: usize| -> f64 {
        let class = if k == 2 { 1 } else { margin };
        if y[i] == class {
            1.0
        } else {
            0.0
        }
    };
    let grow = GrowParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry: None,
        random_thresholds: false,
    };
    let criterion = Criterion::Newton { lambda: params.l2 };
    let mut f: Vec<Vec<f64>> = vec![base.clone(); n];
    let mut stages = Vec::with_capacity(params.n_trees);
    let n_rows = ((params.subsample.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
    let n_cols = ((params.colsample.clamp(0.0, 1.0) * d as f64).ceil() as usize).clamp(1, d.max(1));
    for s in 0..params.n_trees {
        let mut rng = rng_for(params.seed, s as u64);
        let probs: Vec<Vec<f64>> = f.iter().map(|fi| margins_to_proba(fi, k)).collect();
        let rows: Vec<u32> = if n_rows < n {
            let mut r: Vec<u32> = sample(&mut rng, n, n_rows).into_iter().map(|i| i as u32).collect();
            r.sort_unstable();
            r
        } else {
            (0..n as u32).collect()
        };
        let features: Vec<usize> = if n_cols < d {
            let mut c = sample(&mut rng, d, n_cols).into_vec();
            c.sort_unstable();
            c
        } else {
            (0..d).collect()
        };
        let stage: Vec<Tree> = (0..m)
            .into_par_iter()
            .map(|mi| {
                let class = if k == 2 { 1 } else { mi };
                let mut stats = Vec::with_capacity(n * 3);
                for (i, p) in probs.iter().enumerate() {
                    let pi = p[class];
                    stats.extend([pi - target(i, mi), (pi * (1.0 - pi)).max(1e-16), 1.0]);
                }
                let g = Grower {
                    data,
                    criterion,
                    stats: &stats,
                    params: &grow,
                    features: &features,
                };
                let mut tree_rows = rows.clone();
                let mut tree_rng = rng_for(params.seed ^ 0x9e37_79b9_7f4a_7c15, (s * m + mi) as u64);
                let mut tree = g.grow(&mut tree_rows, &mut tree_rng);
                for node in &mut tree.nodes {
                    if let super::tree::Node::Leaf(v) = node {
                        v[0] *= params.learning_rate;
                    }
                }
                tree
            })
            .collect();
        for (i, fi) in f.iter_mut().enumerate() {
            for (mi, t) in stage.iter().enumerate() {
                fi[mi] += t.predict(&ds.records[i].values)[0];
            }
        }
        stages.push(stage);
    }
    Ok(TreeFit::Gbt(GbtModel {
        n_classes: k,
        base,
        stages,
    }))
}
