use rayon::prelude::*;

use super::matrix::{corpus_keys, MultitrainMatrix};
use crate::corpus::{Document, Task};
use crate::error::{Error, Result};
use crate::eval::score_class_ids;
use crate::featurizer::{windowed_frame, FeatureContext, FeatureKind, FeatureSchema, RawFrame, RawValue, TokenFeature};
use crate::learners::{train_tree_ensemble, Dataset, Labels, TrainedModel, TreeKind, TreeParams};

/// Module outputs for the tokens of `docs` followed by window-expanded token
/// features. Module `m` contributes `m_label` (when it has a label set),
/// `m_p_<label>` per probability and `m_<extra>` per extra value.
pub fn meta_frame(
    matrix: &MultitrainMatrix,
    modules: &[String],
    docs: &[Document],
    features: &[TokenFeature],
    window: usize,
    ctx: &FeatureContext,
) -> Result<RawFrame> {
    let keys = corpus_keys(docs);
    let mut frame = RawFrame::new(Vec::new(), Vec::new());
    frame.rows = vec![Vec::new(); keys.len()];
    for id in modules {
        let col = matrix
            .get(id)
            .ok_or_else(|| Error::Invalid(format!("missing module column `{id}`")))?
            .select(&keys)?;
        let mut part = RawFrame::new(Vec::new(), Vec::new());
        if !col.labels.is_empty() {
            part.names.push(format!("{id}_label"));
            part.kinds.push(FeatureKind::Categorical);
            for l in &col.labels {
                part.names.push(format!("{id}_p_{l}"));
                part.kinds.push(FeatureKind::Numeric);
            }
        }
        for x in &col.extras {
            part.names.push(format!("{id}_{x}"));
            part.kinds.push(FeatureKind::Numeric);
        }
        for row in &col.rows {
            let mut r = Vec::with_capacity(part.names.len());
            if !col.labels.is_empty() {
                r.push(RawValue::Cat(row.label.clone()));
                if row.probs.is_empty() {
                    // label-only rows: one-hot on the label
                    r.extend(col.labels.iter().map(|l| RawValue::Num(f64::from(u8::from(*l == row.label)))));
                } else {
                    r.extend(row.probs.iter().map(|p| RawValue::Num(*p)));
                }
            }
            r.extend(row.extras.iter().map(|x| RawValue::Num(*x)));
            part.rows.push(r);
        }
        frame.hstack(part)?;
    }
    if !features.is_empty() {
        frame.hstack(windowed_frame(docs, features, window, ctx)?)?;
    }
    Ok(frame)
}

/// The metalearner dataset for `docs`: module outputs plus windowed token
/// features, labelled with the task's gold classes. A schema is fitted when
/// none is given.
#[allow(clippy::too_many_arguments)]
pub fn assemble_meta(
    matrix: &MultitrainMatrix,
    modules: &[String],
    docs: &[Document],
    task: Task,
    features: &[TokenFeature],
    window: usize,
    ctx: &FeatureContext,
    schema: Option<&FeatureSchema>,
) -> Result<Dataset> {
    let frame = meta_frame(matrix, modules, docs, features, window, ctx)?;
    let schema = match schema {
        Some(s) => s.clone(),
        None => FeatureSchema::fit(&frame, 1)?,
    };
    let records = schema.encode_frame(&frame)?;
    let labels = docs.iter().flat_map(|d| d.tokens()).map(|t| task.gold_class(t)).collect();
    Dataset::new(
        records,
        Labels::Class(labels),
        schema,
        task.classes().iter().map(|s| s.to_string()).collect(),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaCandidate {
    pub kind: TreeKind,
    pub params: TreeParams,
}

#[derive(Clone, Debug)]
pub struct MetaSelection {
    pub model: TrainedModel,
    pub kind: TreeKind,
    /// Dev F of every candidate that trained, in candidate order.
    pub dev_scores: Vec<(TreeKind, f64)>,
}

pub fn dev_f1(model: &TrainedModel, dev: &Dataset, task: Task) -> Result<f64> {
    let pred = dev.records.iter().map(|r| model.predict_class(r)).collect::<Result<Vec<_>>>()?;
    let gold = dev.class_labels()?.to_vec();
    Ok(score_class_ids(task, &[gold], &[pred], false).f1)
}

/// Trains every candidate on `ds` and keeps the one with the best F on
/// `dev`; ties go to the earlier candidate.
pub fn train_meta(ds: &Dataset, candidates: &[MetaCandidate], dev: &Dataset, task: Task) -> Result<MetaSelection> {
    if dev.is_empty() {
        return Err(Error::Empty("dev set"));
    }
    if candidates.is_empty() {
        return Err(Error::Config("no metalearner candidates".into()));
    }
    let trained: Vec<Result<(TrainedModel, f64)>> = candidates
        .par_iter()
        .map(|c| {
            let m = train_tree_ensemble(ds, c.kind, &c.params)?;
            let f = dev_f1(&m, dev, task)?;
            Ok((m, f))
        })
        .collect();
    let mut best: Option<(TrainedModel, TreeKind, f64)> = None;
    let mut dev_scores = Vec::new();
    let mut last_err = None;
    for (c, r) in candidates.iter().zip(trained) {
        match r {
            Ok((m, f)) => {
                log::info!("metalearner {}: dev F {f:.4}", c.kind.as_str());
                dev_scores.push((c.kind, f));
                if best.as_ref().is_none_or(|b| f > b.2) {
                    best = Some((m, c.kind, f));
                }
            }
            Err(e) => {
                log::warn!("metalearner {} failed: {e}", c.kind.as_str());
                last_err = Some(e);
            }
        }
    }
    match best {
        Some((model, kind, _)) => Ok(MetaSelection { model, kind, dev_scores }),
        None => Err(Error::Invalid(format!(
            "all metalearner candidates failed; last error: {}",
            last_err.map(|e| e.to_string()).unwrap_or_default()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SegLabel, Sentence, Token};
    use crate::featurizer::{FeatureEntry, FeatureRecord, Value};
    use crate::stacking::matrix::{ModuleColumn, ModuleOutput};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn docs() -> Vec<Document> {
        (0..3)
            .map(|d| Document {
                name: format!("d{d}"),
                genre: "all".into(),
                sentences: vec![Sentence {
                    tokens: (1..=4)
                        .map(|i| {
                            let mut t = Token::new(i, format!("w{i}"));
                            t.upos = "NOUN".into();
                            if i == 1 {
                                t.seg_label = SegLabel::BeginSeg;
                            }
                            t
                        })
                        .collect(),
                    ..Default::default()
                }],
            })
            .collect()
    }

    fn column(id: &str, docs: &[Document]) -> ModuleColumn {
        let labels: Vec<String> = vec!["BeginSeg".into(), "NoSeg".into()];
        let mut c = ModuleColumn::new(id, labels.clone(), vec![]);
        for k in corpus_keys(docs) {
            c.push(k, ModuleOutput::from_probs(&labels, vec![0.3, 0.7])).unwrap();
        }
        c
    }

    #[test]
    fn record_width_and_sentinels() {
        let d = docs();
        let matrix = MultitrainMatrix {
            columns: vec![column("a", &d), column("b", &d)],
        };
        let feats = vec![TokenFeature::Word, TokenFeature::Upos, TokenFeature::Case];
        let ids = vec!["a".to_string(), "b".to_string()];
        let ds = assemble_meta(&matrix, &ids, &d, Task::Seg, &feats, 3, &FeatureContext::default(), None).unwrap();
        assert_eq!(ds.schema.len(), 2 * (2 + 1) + 3 * 3);
        assert_eq!(ds.len(), 12);
        let frame = meta_frame(&matrix, &ids, &d, &feats, 3, &FeatureContext::default()).unwrap();
        let col = frame.names.iter().position(|n| n == "word@-1").unwrap();
        assert_eq!(frame.rows[0][col], RawValue::Cat("<s>".into()));
        assert_eq!(ds.class_labels().unwrap()[..4], [0, 1, 1, 1]);
    }

    #[test]
    fn missing_column_rejected() {
        let d = docs();
        let matrix = MultitrainMatrix {
            columns: vec![column("a", &d)],
        };
        let err = assemble_meta(&matrix, &["a".into(), "zz".into()], &d, Task::Seg, &[], 3, &FeatureContext::default(), None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("zz"));
    }

    /// Two numeric features; the label is their XOR, which no single split can
    /// express.
    fn xor_data(n: usize, seed: u64) -> Dataset {
        let schema = FeatureSchema::new(
            ["x", "y"]
                .iter()
                .map(|n| FeatureEntry {
                    name: n.to_string(),
                    kind: FeatureKind::Numeric,
                    vocabulary: Default::default(),
                })
                .collect(),
        )
        .unwrap();
        let fp = schema.fingerprint();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let (x, y): (f64, f64) = (rng.gen(), rng.gen());
            labels.push(usize::from((x > 0.5) != (y > 0.5)));
            records.push(FeatureRecord {
                values: vec![Value::Num(x), Value::Num(y)],
                fingerprint: fp,
            });
        }
        Dataset::new(records, Labels::Class(labels), schema, vec!["BeginSeg".into(), "NoSeg".into()]).unwrap()
    }

    fn stump(kind: TreeKind) -> MetaCandidate {
        let mut params = TreeParams::defaults(kind);
        params.max_depth = 1;
        params.n_trees = 1;
        MetaCandidate { kind, params }
    }

    #[test]
    fn planted_gbt_wins() {
        let train = xor_data(400, 1);
        let dev = xor_data(200, 2);
        let mut gbt = TreeParams::defaults(TreeKind::Gbt);
        gbt.n_trees = 50;
        gbt.max_depth = 3;
        let cands = vec![
            stump(TreeKind::Tree),
            stump(TreeKind::Forest),
            MetaCandidate {
                kind: TreeKind::Gbt,
                params: gbt,
            },
        ];
        let sel = train_meta(&train, &cands, &dev, Task::Seg).unwrap();
        assert_eq!(sel.kind, TreeKind::Gbt);
        // direct evaluation agrees with the reported ordering
        for (c, (kind, f)) in cands.iter().zip(&sel.dev_scores) {
            let m = train_tree_ensemble(&train, c.kind, &c.params).unwrap();
            assert_eq!(*kind, c.kind);
            assert_eq!(dev_f1(&m, &dev, Task::Seg).unwrap(), *f);
        }
        assert!(sel.dev_scores[2].1 > sel.dev_scores[0].1.max(sel.dev_scores[1].1) + 0.1);
    }

    #[test]
    fn single_candidate_and_determinism() {
        let train = xor_data(100, 1);
        let dev = xor_data(50, 2);
        let a = train_meta(&train, &[stump(TreeKind::Forest)], &dev, Task::Seg).unwrap();
        assert_eq!(a.kind, TreeKind::Forest);
        let cands = vec![stump(TreeKind::Tree), stump(TreeKind::Tree)];
        let b = train_meta(&train, &cands, &dev, Task::Seg).unwrap();
        let c = train_meta(&train, &cands, &dev, Task::Seg).unwrap();
        assert_eq!(b.model, c.model);
        assert_eq!(b.dev_scores[0].1, b.dev_scores[1].1);
    }

    #[test]
    fn empty_dev_rejected() {
        let train = xor_data(10, 1);
        let dev = train.subset(&[]);
        assert!(matches!(train_meta(&train, &[stump(TreeKind::Tree)], &dev, Task::Seg), Err(Error::Empty(_))));
    }
}
