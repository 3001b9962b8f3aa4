//! Base modules: how each is fitted on a set of documents and what it emits
//! per token.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{GeneralConfig, ModuleKind, TaskConfig};
use crate::corpus::{Document, Task};
use crate::error::{Error, Result};
use crate::featurizer::{
    build_lexicon, filter_redundant, windowed_frame, ClausalRelations, FeatureContext, FeatureEntry, FeatureKind,
    FeatureRecord, FeatureSchema, RawFrame, TokenFeature, Value,
};
use crate::learners::{
    train_linear, train_mlp, train_tree_ensemble, Dataset, Labels, LinearTask, MlpParams, TrainedModel, TreeKind,
    TreeParams,
};
use crate::lexicons::{
    build_connective_table, freq_conn_predict, initial_lexicon_from_documents, punct_split, ConnectiveTable,
    InitialTokenLexicon,
};
use crate::stacking::{BasePredictor, BaseTrainer, ModuleOutput};

pub fn task_labels(task: Task) -> Vec<String> {
    task.classes().iter().map(|s| s.to_string()).collect()
}

fn gold_classes(docs: &[Document], task: Task) -> Vec<usize> {
    docs.iter().flat_map(|d| d.tokens()).map(|t| task.gold_class(t)).collect()
}

fn one_hot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WindowLearner {
    Mlp(MlpParams),
    Logistic(Vec<f64>),
    Gbt(TreeParams),
}

/// A classifier over window-expanded token features. Each group is a
/// feature list with its own window size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowModel {
    pub groups: Vec<(Vec<TokenFeature>, usize)>,
    pub ctx: FeatureContext,
    pub schema: FeatureSchema,
    pub model: TrainedModel,
}

fn frame_for(docs: &[Document], groups: &[(Vec<TokenFeature>, usize)], ctx: &FeatureContext) -> Result<RawFrame> {
    let mut frame = RawFrame::new(Vec::new(), Vec::new());
    for (features, window) in groups {
        frame.hstack(windowed_frame(docs, features, *window, ctx)?)?;
    }
    Ok(frame)
}

/// Fitted schema and records, optionally filtered for redundant columns.
/// Returns the raw and the final schema sizes too.
pub fn fit_schema(frame: &RawFrame, filter: bool) -> Result<(FeatureSchema, Vec<FeatureRecord>, usize)> {
    let schema = FeatureSchema::fit(frame, 2)?;
    let raw = schema.len();
    if !filter {
        let records = schema.encode_frame(frame)?;
        return Ok((schema, records, raw));
    }
    let records = schema.encode_frame(frame)?;
    let kept = filter_redundant(&records, &schema)?;
    log::debug!("feature filter kept {} of {raw} columns", kept.len());
    let records = kept.encode_frame(frame)?;
    Ok((kept, records, raw))
}

impl WindowModel {
    #[allow(clippy::too_many_arguments)]
    pub fn fit(
        docs: &[Document],
        task: Task,
        groups: Vec<(Vec<TokenFeature>, usize)>,
        lexicon_size: usize,
        general: &GeneralConfig,
        learner: &WindowLearner,
        filter: bool,
    ) -> Result<WindowModel> {
        let ctx = FeatureContext {
            lexicon: build_lexicon(docs.iter().flat_map(|d| d.tokens()).map(|t| t.form.as_str()), lexicon_size),
            language: general.language.clone(),
            clausal: ClausalRelations::new(general.clausal.iter().cloned()),
            ..Default::default()
        };
        let frame = frame_for(docs, &groups, &ctx)?;
        if frame.is_empty() {
            return Err(Error::Empty("training corpus"));
        }
        let (schema, records, _) = fit_schema(&frame, filter)?;
        let ds = Dataset::new(records, Labels::Class(gold_classes(docs, task)), schema.clone(), task_labels(task))?;
        let model = match learner {
            WindowLearner::Mlp(p) => train_mlp(&ds, p)?,
            WindowLearner::Logistic(grid) => train_linear(&ds, LinearTask::Logistic, grid)?,
            WindowLearner::Gbt(p) => train_tree_ensemble(&ds, TreeKind::Gbt, p)?,
        };
        Ok(WindowModel {
            groups,
            ctx,
            schema,
            model,
        })
    }

    pub fn predict_proba(&self, doc: &Document) -> Result<Vec<Vec<f64>>> {
        let frame = frame_for(std::slice::from_ref(doc), &self.groups, &self.ctx)?;
        self.schema
            .encode_frame(&frame)?
            .iter()
            .map(|r| self.model.predict_proba(r))
            .collect()
    }
}

/// Ridge regression from a sentence's bag of frequent words and POS counts to
/// its number of unit starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowModel {
    pub words: BTreeMap<String, usize>,
    pub tags: BTreeMap<String, usize>,
    pub schema: FeatureSchema,
    pub model: TrainedModel,
}

fn bow_vector(
    words: &BTreeMap<String, usize>,
    tags: &BTreeMap<String, usize>,
    fingerprint: u64,
    sentence: &crate::corpus::Sentence,
) -> FeatureRecord {
    let mut v = vec![0.0; words.len() + tags.len()];
    for t in &sentence.tokens {
        if let Some(&i) = words.get(&t.form.to_lowercase()) {
            v[i] += 1.0;
        }
        if let Some(&i) = tags.get(&t.upos) {
            v[words.len() + i] += 1.0;
        }
    }
    FeatureRecord {
        values: v.into_iter().map(Value::Num).collect(),
        fingerprint,
    }
}

impl BowModel {
    pub fn fit(docs: &[Document], task: Task, n_words: usize, grid: &[f64]) -> Result<BowModel> {
        let lower: Vec<String> = docs.iter().flat_map(|d| d.tokens()).map(|t| t.form.to_lowercase()).collect();
        let lex = build_lexicon(lower.iter().map(String::as_str), n_words);
        let words: BTreeMap<String, usize> = lex.items.keys().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let tag_set: std::collections::BTreeSet<&str> = docs.iter().flat_map(|d| d.tokens()).map(|t| t.upos.as_str()).collect();
        let tags: BTreeMap<String, usize> = tag_set.into_iter().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
        let entry = |name: String| FeatureEntry {
            name,
            kind: FeatureKind::Numeric,
            vocabulary: Default::default(),
        };
        let schema = FeatureSchema::new(
            words
                .keys()
                .map(|w| entry(format!("bow={w}")))
                .chain(tags.keys().map(|t| entry(format!("pos={t}"))))
                .collect(),
        )?;
        let fp = schema.fingerprint();
        let mut records = Vec::new();
        let mut counts = Vec::new();
        for s in docs.iter().flat_map(|d| &d.sentences) {
            records.push(bow_vector(&words, &tags, fp, s));
            counts.push(s.tokens.iter().filter(|t| task.gold_class(t) == 0).count() as f64);
        }
        let ds = Dataset::new(records, Labels::Real(counts), schema.clone(), Vec::new())?;
        let model = train_linear(&ds, LinearTask::Ridge, grid)?;
        Ok(BowModel {
            words,
            tags,
            schema,
            model,
        })
    }

    /// The sentence prediction, repeated for every token of the sentence.
    pub fn predict(&self, doc: &Document) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(doc.token_count());
        for s in &doc.sentences {
            let y = self
                .model
                .predict_value(&bow_vector(&self.words, &self.tags, self.model.fingerprint, s))?;
            out.extend(std::iter::repeat_n(y, s.len()));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModuleBody {
    Window(WindowModel),
    Wiki(InitialTokenLexicon),
    Punct,
    Bow(BowModel),
    Freq(ConnectiveTable),
    Oracle,
    Constant(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModule {
    pub id: String,
    pub kind: ModuleKind,
    pub task: Task,
    pub body: ModuleBody,
}

impl ModuleKind {
    /// Label set of the module's outputs; empty for purely numeric modules.
    pub fn labels(self, task: Task) -> Vec<String> {
        match self {
            ModuleKind::Bow => Vec::new(),
            _ => task_labels(task),
        }
    }

    pub fn extras(self) -> Vec<String> {
        match self {
            ModuleKind::Bow => vec!["count".into()],
            ModuleKind::Freq => vec!["log_freq".into()],
            _ => Vec::new(),
        }
    }
}

impl FittedModule {
    pub fn labels(&self) -> Vec<String> {
        self.kind.labels(self.task)
    }

    pub fn extras(&self) -> Vec<String> {
        self.kind.extras()
    }
}

impl BasePredictor for FittedModule {
    fn predict(&self, doc: &Document) -> Result<Vec<ModuleOutput>> {
        let labels = self.labels();
        let probs = |p: Vec<f64>| ModuleOutput::from_probs(&labels, p);
        let n = labels.len();
        Ok(match &self.body {
            ModuleBody::Window(m) => m.predict_proba(doc)?.into_iter().map(probs).collect(),
            ModuleBody::Wiki(lex) => doc
                .tokens()
                .map(|t| {
                    let r = lex.get(&t.form).map_or(0.0, |e| e.ratio());
                    probs(vec![r, 1.0 - r])
                })
                .collect(),
            ModuleBody::Punct => {
                let forms: Vec<&str> = doc.tokens().map(|t| t.form.as_str()).collect();
                punct_split(&forms)
                    .into_iter()
                    .map(|start| probs(one_hot(2, usize::from(!start))))
                    .collect()
            }
            ModuleBody::Bow(m) => m
                .predict(doc)?
                .into_iter()
                .map(|y| ModuleOutput {
                    label: "_".into(),
                    probs: Vec::new(),
                    extras: vec![y],
                })
                .collect(),
            ModuleBody::Freq(table) => freq_conn_predict(doc, table)
                .into_iter()
                .map(|m| {
                    // ratio mass on the matched position, the rest on O
                    let mut p = vec![0.0, 0.0, 1.0];
                    let slot = Task::Conn.classes().iter().position(|c| *c == m.position.as_str()).unwrap_or(2);
                    if slot < 2 {
                        p[slot] = m.ratio;
                        p[2] = 1.0 - m.ratio;
                    }
                    ModuleOutput {
                        extras: vec![(m.freq as f64).ln_1p()],
                        ..probs(p)
                    }
                })
                .collect(),
            ModuleBody::Oracle => doc.tokens().map(|t| probs(one_hot(n, self.task.gold_class(t)))).collect(),
            ModuleBody::Constant(p) => doc.tokens().map(|_| probs(p.clone())).collect(),
        })
    }
}

/// Fits one base module kind with the task's settings.
#[derive(Clone, Debug)]
pub struct ModuleTrainer {
    pub kind: ModuleKind,
    pub task: Task,
    pub cfg: TaskConfig,
    pub general: GeneralConfig,
    /// Window for the MLP module.
    pub mlp_window: usize,
    /// Lexicon for the wiki module, when not built from training data.
    pub wiki: Option<InitialTokenLexicon>,
}

impl ModuleTrainer {
    pub fn fit(&self, docs: &[Document]) -> Result<FittedModule> {
        if docs.is_empty() {
            return Err(Error::Empty("training corpus"));
        }
        let c = &self.cfg;
        let body = match self.kind {
            ModuleKind::Mlp => {
                let params = MlpParams {
                    embed_dim: c.mlp_embed,
                    hidden_dims: c.mlp_hidden.clone(),
                    window: self.mlp_window,
                    epochs: c.mlp_epochs,
                    lr: c.mlp_lr,
                    seed: self.general.seed,
                    ..Default::default()
                };
                ModuleBody::Window(WindowModel::fit(
                    docs,
                    self.task,
                    vec![(c.mlp_features.clone(), self.mlp_window)],
                    c.lexicon_size,
                    &self.general,
                    &WindowLearner::Mlp(params),
                    false,
                )?)
            }
            ModuleKind::Lr => ModuleBody::Window(WindowModel::fit(
                docs,
                self.task,
                vec![(c.lr_features.clone(), c.lr_window)],
                c.lexicon_size,
                &self.general,
                &WindowLearner::Logistic(c.lr_grid.clone()),
                false,
            )?),
            ModuleKind::Subtree => {
                let mut groups = vec![(c.subtree_features.clone(), c.subtree_window)];
                if c.subtree_children {
                    let children: Vec<TokenFeature> = TokenFeature::subtree_set()
                        .into_iter()
                        .filter(|f| !c.subtree_features.contains(f))
                        .collect();
                    groups.push((children, 1));
                }
                let params = TreeParams {
                    n_trees: c.subtree_trees,
                    max_depth: c.subtree_depth,
                    seed: self.general.seed,
                    ..TreeParams::defaults(TreeKind::Gbt)
                };
                ModuleBody::Window(WindowModel::fit(
                    docs,
                    self.task,
                    groups,
                    c.lexicon_size,
                    &self.general,
                    &WindowLearner::Gbt(params),
                    c.subtree_filter,
                )?)
            }
            ModuleKind::Wiki => ModuleBody::Wiki(match &self.wiki {
                Some(lex) => lex.clone(),
                None => initial_lexicon_from_documents(docs, c.wiki_min_freq, c.wiki_min_ratio),
            }),
            ModuleKind::Punct => ModuleBody::Punct,
            ModuleKind::Bow => ModuleBody::Bow(BowModel::fit(docs, self.task, c.bow_words, &c.bow_grid)?),
            ModuleKind::Freq => ModuleBody::Freq(build_connective_table(docs)),
            ModuleKind::Oracle => ModuleBody::Oracle,
            ModuleKind::Constant => {
                let gold = gold_classes(docs, self.task);
                let mut p = vec![0.0; self.task.classes().len()];
                for g in &gold {
                    p[*g] += 1.0 / gold.len() as f64;
                }
                ModuleBody::Constant(p)
            }
        };
        Ok(FittedModule {
            id: self.kind.as_str().to_string(),
            kind: self.kind,
            task: self.task,
            body,
        })
    }
}

impl BaseTrainer for ModuleTrainer {
    fn train(&self, docs: &[Document]) -> Result<Box<dyn BasePredictor>> {
        Ok(Box::new(self.fit(docs)?))
    }

    fn config_key(&self) -> String {
        serde_json::json!({
            "kind": self.kind,
            "task": self.task,
            "cfg": self.cfg,
            "general": self.general,
            "mlp_window": self.mlp_window,
            "wiki": self.wiki,
        })
        .to_string()
    }
}
