//! Generic stacked ensemble shared by the three task pipelines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{GeneralConfig, ModuleKind, PipelineConfig, TaskConfig};
use super::modules::{task_labels, FittedModule, ModuleTrainer};
use crate::corpus::{Document, Task};
use crate::error::{Error, Result};
use crate::eval::{score_class_ids, Score};
use crate::featurizer::{build_lexicon, ClausalRelations, FeatureContext, FeatureSchema};
use crate::learners::{TrainedModel, TreeKind, TreeParams};
use crate::lexicons::{InitialTokenLexicon, UnigramTagger};
use crate::persist;
use crate::stacking::{
    assemble_meta, make_folds, meta_frame, multitrain, predict_column, train_meta, BaseModuleSpec, FoldLog,
    MetaCandidate, ModuleColumn, ModuleSource, MultitrainMatrix, MultitrainOptions,
};

/// Predictions of one external base module for the training and dev corpora.
#[derive(Clone, Debug)]
pub struct ExternalColumns {
    pub train: ModuleColumn,
    pub dev: ModuleColumn,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    pub cache_dir: Option<std::path::PathBuf>,
    /// Overrides the wiki module's lexicon (otherwise built from training data
    /// or read from the configured file).
    pub wiki_lexicon: Option<InitialTokenLexicon>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub task: Task,
    pub config: TaskConfig,
    pub general: GeneralConfig,
    /// Re-tags input before featurization (sentencer only).
    pub tagger: Option<UnigramTagger>,
    pub modules: Vec<FittedModule>,
    pub externals: Vec<String>,
    pub meta_ctx: FeatureContext,
    pub meta_schema: FeatureSchema,
    pub meta_kind: TreeKind,
    pub meta: TrainedModel,
}

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    pub mlp_window: Option<usize>,
    pub fold_logs: Vec<(String, Vec<FoldLog>)>,
    pub train_matrix: MultitrainMatrix,
    /// Dev F of each metalearner candidate.
    pub meta_dev: Vec<(TreeKind, f64)>,
    /// Dev scores of the labelled base modules.
    pub module_dev: Vec<(String, Score)>,
}

/// Documents as the task's modules see them: the sentencer works on flat,
/// re-tagged text; segmentation needs trees when any feature does.
pub fn prepare(task: Task, docs: &[Document], tagger: Option<&UnigramTagger>, needs_trees: bool) -> Result<Vec<Document>> {
    match task {
        Task::Sent => Ok(docs
            .iter()
            .map(|d| {
                let mut f = d.flatten();
                if let Some(t) = tagger {
                    t.retag(&mut f);
                }
                f
            })
            .collect()),
        _ => {
            if needs_trees {
                if let Some(d) = docs.iter().find(|d| !d.has_syntax()) {
                    return Err(Error::MissingTrees(format!(
                        "document `{}` has no dependency trees; segment flat text by running the sentencer and a parser first",
                        d.name
                    )));
                }
            }
            Ok(docs.to_vec())
        }
    }
}

/// Out-of-fold column, fold logs and (for trained modules) the full-data fit.
type TrainedSpec = (ModuleColumn, Vec<FoldLog>, Option<FittedModule>);

fn needs_trees(cfg: &TaskConfig) -> bool {
    cfg.modules.contains(&ModuleKind::Subtree)
        || cfg.meta_features.iter().any(|f| f.needs_syntax())
        || (cfg.modules.iter().any(|m| matches!(m, ModuleKind::Mlp | ModuleKind::Lr))
            && cfg.mlp_features.iter().chain(&cfg.lr_features).any(|f| f.needs_syntax()))
}

fn meta_candidates(cfg: &TaskConfig, seed: u64) -> Vec<MetaCandidate> {
    cfg.meta_candidates
        .iter()
        .map(|&kind| {
            let mut params = TreeParams::defaults(kind);
            params.n_trees = if kind == TreeKind::Tree { 1 } else { cfg.meta_trees };
            params.max_depth = if kind == TreeKind::Gbt { cfg.meta_gbt_depth } else { cfg.meta_depth };
            params.min_leaf = cfg.meta_min_leaf;
            params.seed = seed;
            MetaCandidate { kind, params }
        })
        .collect()
}

fn labelled_score(task: Task, col: &ModuleColumn, docs: &[Document]) -> Option<Score> {
    if col.labels != task_labels(task) {
        return None;
    }
    let gold: Vec<usize> = docs.iter().flat_map(|d| d.tokens()).map(|t| task.gold_class(t)).collect();
    let pred: Vec<usize> = col.rows.iter().map(|r| col.labels.iter().position(|l| *l == r.label).unwrap_or(0)).collect();
    Some(score_class_ids(task, &[gold], &[pred], false))
}

fn check_sentence_splits(docs: &[Document]) -> Result<()> {
    if docs.iter().all(|d| d.sentences.len() <= 1) {
        return Err(Error::Invalid("the sentencer needs gold sentence splits in its training data".into()));
    }
    Ok(())
}

pub fn train_ensemble(
    task: Task,
    train: &[Document],
    dev: &[Document],
    cfg: &PipelineConfig,
    externals: &[ExternalColumns],
    opts: &TrainOptions,
) -> Result<(EnsembleModel, TrainReport)> {
    cfg.validate()?;
    let tcfg = cfg.task(task).clone();
    let general = cfg.general.clone();
    if train.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    if dev.iter().map(Document::token_count).sum::<usize>() == 0 {
        return Err(Error::Empty("dev corpus"));
    }
    if externals.len() != tcfg.externals.len() {
        return Err(Error::Config(format!(
            "{} external modules configured but {} prediction files given",
            tcfg.externals.len(),
            externals.len()
        )));
    }
    if task == Task::Sent {
        check_sentence_splits(train)?;
    }
    let tagger = (task == Task::Sent).then(|| UnigramTagger::train(train));
    let trees = needs_trees(&tcfg);
    let train_p = prepare(task, train, tagger.as_ref(), trees)?;
    let dev_p = prepare(task, dev, tagger.as_ref(), trees)?;

    let wiki = match (&opts.wiki_lexicon, &tcfg.wiki_lexicon) {
        (Some(l), _) => Some(l.clone()),
        (None, Some(path)) if tcfg.modules.contains(&ModuleKind::Wiki) => {
            Some(InitialTokenLexicon::from_text(&std::fs::read_to_string(path)?)?)
        }
        _ => None,
    };
    let trainer = |kind: ModuleKind, mlp_window: usize| ModuleTrainer {
        kind,
        task,
        cfg: tcfg.clone(),
        general: general.clone(),
        mlp_window,
        wiki: wiki.clone(),
    };

    let mut report = TrainReport::default();
    let mut mlp_window = tcfg.mlp_windows.first().copied().unwrap_or(5);
    if tcfg.modules.contains(&ModuleKind::Mlp) && tcfg.mlp_windows.len() > 1 {
        let scored: Vec<Result<f64>> = tcfg
            .mlp_windows
            .par_iter()
            .map(|&w| {
                let m = trainer(ModuleKind::Mlp, w).fit(&train_p)?;
                let mut col = ModuleColumn::new("mlp", m.labels(), m.extras());
                predict_column(&m, &dev_p, &mut col)?;
                Ok(labelled_score(task, &col, &dev_p).map_or(0.0, |s| s.f1))
            })
            .collect();
        let mut best = f64::NEG_INFINITY;
        for (&w, s) in tcfg.mlp_windows.iter().zip(scored) {
            let s = s?;
            log::info!("mlp window {w}: dev F {s:.4}");
            if s > best {
                best = s;
                mlp_window = w;
            }
        }
        report.mlp_window = Some(mlp_window);
    }

    let folds = make_folds(&train_p, general.folds, general.seed)?;
    let mt_opts = MultitrainOptions {
        cache_dir: opts.cache_dir.clone(),
        seed: general.seed,
    };
    let specs: Vec<BaseModuleSpec> = tcfg
        .modules
        .iter()
        .map(|&kind| {
            let t = trainer(kind, mlp_window);
            BaseModuleSpec {
                id: kind.as_str().into(),
                task,
                labels: kind.labels(task),
                extras: kind.extras(),
                source: ModuleSource::Trained(Box::new(t)),
            }
        })
        .chain(tcfg.externals.iter().zip(externals).map(|(id, ext)| BaseModuleSpec {
            id: id.clone(),
            task,
            labels: ext.train.labels.clone(),
            extras: ext.train.extras.clone(),
            source: ModuleSource::External(ext.train.clone()),
        }))
        .collect();

    // out-of-fold columns and full-data modules, all modules in parallel
    let trained: Vec<Result<TrainedSpec>> = specs
        .par_iter()
        .map(|spec| {
            let out = multitrain(spec, &train_p, &folds, &mt_opts)?;
            let fitted = match &spec.source {
                ModuleSource::Trained(_) => {
                    let kind: ModuleKind = spec.id.parse()?;
                    Some(trainer(kind, mlp_window).fit(&train_p)?)
                }
                ModuleSource::External(_) => None,
            };
            Ok((out.column, out.logs, fitted))
        })
        .collect();
    let mut train_matrix = MultitrainMatrix::default();
    let mut modules = Vec::new();
    for (spec, r) in specs.iter().zip(trained) {
        let (col, logs, fitted) = r?;
        report.fold_logs.push((spec.id.clone(), logs));
        train_matrix.columns.push(col);
        modules.extend(fitted);
    }

    let mut dev_matrix = MultitrainMatrix::default();
    for m in &modules {
        let mut col = ModuleColumn::new(&m.id, m.labels(), m.extras());
        predict_column(m, &dev_p, &mut col)?;
        dev_matrix.columns.push(col);
    }
    for (id, ext) in tcfg.externals.iter().zip(externals) {
        let mut col = ext.dev.select(&crate::stacking::corpus_keys(&dev_p))?;
        col.module = id.clone();
        dev_matrix.columns.push(col);
    }
    for col in &dev_matrix.columns {
        if let Some(s) = labelled_score(task, col, &dev_p) {
            report.module_dev.push((col.module.clone(), s));
        }
    }

    let meta_ctx = FeatureContext {
        lexicon: build_lexicon(train_p.iter().flat_map(|d| d.tokens()).map(|t| t.form.as_str()), tcfg.meta_lexicon),
        language: general.language.clone(),
        clausal: ClausalRelations::new(general.clausal.iter().cloned()),
        ..Default::default()
    };
    let ids = tcfg.module_ids();
    let ds = assemble_meta(&train_matrix, &ids, &train_p, task, &tcfg.meta_features, tcfg.meta_window, &meta_ctx, None)?;
    let dev_ds = assemble_meta(
        &dev_matrix,
        &ids,
        &dev_p,
        task,
        &tcfg.meta_features,
        tcfg.meta_window,
        &meta_ctx,
        Some(&ds.schema),
    )?;
    let selection = train_meta(&ds, &meta_candidates(&tcfg, general.seed), &dev_ds, task)?;
    log::info!("{task}: metalearner {} selected", selection.kind.as_str());
    report.meta_dev = selection.dev_scores;
    report.train_matrix = train_matrix;

    Ok((
        EnsembleModel {
            task,
            config: tcfg.clone(),
            general,
            tagger,
            modules,
            externals: tcfg.externals.clone(),
            meta_ctx,
            meta_schema: ds.schema,
            meta_kind: selection.kind,
            meta: selection.model,
        },
        report,
    ))
}

impl EnsembleModel {
    fn prepare(&self, docs: &[Document]) -> Result<Vec<Document>> {
        prepare(self.task, docs, self.tagger.as_ref(), needs_trees(&self.config))
    }

    /// Base module columns over `docs` (as prepared for this task).
    pub fn module_columns(&self, docs: &[Document], externals: &[ModuleColumn]) -> Result<(Vec<Document>, MultitrainMatrix)> {
        if externals.len() != self.externals.len() {
            return Err(Error::Config(format!(
                "model expects {} external prediction files, got {}",
                self.externals.len(),
                externals.len()
            )));
        }
        let prepared = self.prepare(docs)?;
        let mut matrix = MultitrainMatrix::default();
        for m in &self.modules {
            let mut col = ModuleColumn::new(&m.id, m.labels(), m.extras());
            predict_column(m, &prepared, &mut col)?;
            matrix.columns.push(col);
        }
        let keys = crate::stacking::corpus_keys(&prepared);
        for (id, ext) in self.externals.iter().zip(externals) {
            let mut col = ext.select(&keys)?;
            col.module = id.clone();
            matrix.columns.push(col);
        }
        Ok((prepared, matrix))
    }

    /// Scores of the labelled base modules against the gold labels of `docs`.
    pub fn module_scores(&self, docs: &[Document], externals: &[ModuleColumn]) -> Result<Vec<(String, Score)>> {
        let (prepared, matrix) = self.module_columns(docs, externals)?;
        Ok(matrix
            .columns
            .iter()
            .filter_map(|c| labelled_score(self.task, c, &prepared).map(|s| (c.module.clone(), s)))
            .collect())
    }

    /// Raw metalearner class ids per document, before task post-processing.
    pub fn predict_raw(&self, docs: &[Document], externals: &[ModuleColumn]) -> Result<Vec<Vec<usize>>> {
        let (prepared, matrix) = self.module_columns(docs, externals)?;
        let ids = self.config.module_ids();
        let frame = meta_frame(&matrix, &ids, &prepared, &self.config.meta_features, self.config.meta_window, &self.meta_ctx)?;
        let records = self.meta_schema.encode_frame(&frame)?;
        let flat: Vec<usize> = records.par_iter().map(|r| self.meta.predict_class(r)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(docs.len());
        let mut at = 0;
        for d in &prepared {
            let n = d.token_count();
            out.push(flat[at..at + n].to_vec());
            at += n;
        }
        Ok(out)
    }

    pub fn artifact_kind(task: Task) -> String {
        format!("ensemble-{task}")
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        persist::encode_artifact(&Self::artifact_kind(self.task), self.meta_schema.fingerprint(), self)
    }

    /// Reads a model of the given task, checking format version, kind and the
    /// metalearner's schema fingerprint.
    pub fn from_bytes(bytes: &[u8], task: Task) -> Result<Self> {
        let (fp, model): (u64, EnsembleModel) = persist::decode_artifact(bytes, &Self::artifact_kind(task))?;
        let expected = model.meta_schema.fingerprint();
        if fp != expected || model.meta.fingerprint != expected {
            return Err(Error::FingerprintMismatch { expected, found: fp });
        }
        Ok(model)
    }
}
