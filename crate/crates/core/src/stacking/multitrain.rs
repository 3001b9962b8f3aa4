use std::collections::BTreeSet;
use std::path::PathBuf;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::folds::Folds;
use super::matrix::{corpus_keys, ModuleColumn, ModuleOutput, TokenKey};
use crate::corpus::{Document, Task};
use crate::error::{Error, Result};

/// A fitted base module.
pub trait BasePredictor: Send + Sync {
    /// One output per token of `doc`, in document order.
    fn predict(&self, doc: &Document) -> Result<Vec<ModuleOutput>>;
}

/// Something that can fit a base module on a set of documents.
pub trait BaseTrainer: Send + Sync {
    fn train(&self, docs: &[Document]) -> Result<Box<dyn BasePredictor>>;
    /// Stable description of the trainer's configuration, used in cache keys.
    fn config_key(&self) -> String;
}

pub enum ModuleSource {
    Trained(Box<dyn BaseTrainer>),
    /// Stored predictions; multitraining reads them instead of training.
    External(ModuleColumn),
}

pub struct BaseModuleSpec {
    pub id: String,
    pub task: Task,
    pub labels: Vec<String>,
    pub extras: Vec<String>,
    pub source: ModuleSource,
}

/// Keys seen by one fold's trainer and predictor.
#[derive(Clone, Debug, Default)]
pub struct FoldLog {
    pub fold: usize,
    pub trained_on: BTreeSet<TokenKey>,
    pub predicted: BTreeSet<TokenKey>,
}

impl FoldLog {
    pub fn overlap(&self) -> usize {
        self.predicted.intersection(&self.trained_on).count()
    }
}

#[derive(Clone, Debug, Default)]
pub struct MultitrainOptions {
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
}

pub struct MultitrainOutput {
    pub column: ModuleColumn,
    /// Empty when the column came from the cache or an external file.
    pub logs: Vec<FoldLog>,
    pub from_cache: bool,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn corpus_hash(docs: &[Document]) -> Result<String> {
    let json = serde_json::to_vec(docs)?;
    Ok(hex(&Sha256::digest(&json)))
}

fn cache_path(dir: &std::path::Path, spec: &BaseModuleSpec, trainer: &dyn BaseTrainer, docs: &[Document], folds: &Folds, seed: u64) -> Result<PathBuf> {
    let mut h = Sha256::new();
    h.update(corpus_hash(docs)?.as_bytes());
    h.update(spec.id.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(serde_json::to_vec(folds)?);
    h.update(trainer.config_key().as_bytes());
    let digest = hex(&h.finalize());
    let safe: String = spec.id.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
    Ok(dir.join(format!("{safe}-{}.tsv", &digest[..16])))
}

/// Runs `predictor` over `docs` and appends the outputs to `column`.
pub fn predict_column(predictor: &dyn BasePredictor, docs: &[Document], column: &mut ModuleColumn) -> Result<()> {
    let outputs: Vec<Vec<ModuleOutput>> = docs.par_iter().map(|d| predictor.predict(d)).collect::<Result<_>>()?;
    for (doc, outs) in docs.iter().zip(outputs) {
        if outs.len() != doc.token_count() {
            return Err(Error::Invalid(format!(
                "module `{}` produced {} outputs for {} tokens of `{}`",
                column.module,
                outs.len(),
                doc.token_count(),
                doc.name
            )));
        }
        for (k, o) in corpus_keys(std::slice::from_ref(doc)).into_iter().zip(outs) {
            column.push(k, o)?;
        }
    }
    Ok(())
}

/// Out-of-fold predictions of one base module for every token of `docs`:
/// fold `f` is predicted by a model trained on all other folds.
pub fn multitrain(spec: &BaseModuleSpec, docs: &[Document], folds: &Folds, opts: &MultitrainOptions) -> Result<MultitrainOutput> {
    let keys = corpus_keys(docs);
    if keys.iter().collect::<BTreeSet<_>>().len() != keys.len() {
        return Err(Error::Invalid("duplicate token keys (repeated document names?)".into()));
    }
    let trainer = match &spec.source {
        ModuleSource::External(col) => {
            return Ok(MultitrainOutput {
                column: col.select(&keys)?,
                logs: Vec::new(),
                from_cache: false,
            })
        }
        ModuleSource::Trained(t) => t.as_ref(),
    };
    let cache = match &opts.cache_dir {
        Some(dir) => Some(cache_path(dir, spec, trainer, docs, folds, opts.seed)?),
        None => None,
    };
    if let Some(path) = cache.as_ref().filter(|p| p.exists()) {
        let text = std::fs::read_to_string(path)?;
        let col = ModuleColumn::from_text(&text, &spec.id, &spec.labels)?;
        if col.keys == keys {
            log::info!("module `{}`: reusing {}", spec.id, path.display());
            return Ok(MultitrainOutput {
                column: col,
                logs: Vec::new(),
                from_cache: true,
            });
        }
        log::warn!("stale cache {} ignored", path.display());
    }

    let results: Vec<Result<(FoldLog, ModuleColumn)>> = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let train = folds.train_part(docs, f);
            let held = folds.held_out(docs, f);
            let log = FoldLog {
                fold: f,
                trained_on: corpus_keys(&train).into_iter().collect(),
                predicted: corpus_keys(&held).into_iter().collect(),
            };
            let run = || -> Result<ModuleColumn> {
                let model = trainer.train(&train)?;
                let mut col = ModuleColumn::new(&spec.id, spec.labels.clone(), spec.extras.clone());
                predict_column(model.as_ref(), &held, &mut col)?;
                Ok(col)
            };
            run().map(|c| (log, c)).map_err(|e| Error::Fold {
                fold: f,
                source: Box::new(e),
            })
        })
        .collect();
    let mut logs = Vec::with_capacity(folds.k);
    let mut merged = ModuleColumn::new(&spec.id, spec.labels.clone(), spec.extras.clone());
    for r in results {
        let (log, col) = r?;
        logs.push(log);
        merged.keys.extend(col.keys);
        merged.rows.extend(col.rows);
    }
    let column = merged.select(&keys)?;
    if let Some(path) = cache {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, column.to_text())?;
    }
    Ok(MultitrainOutput {
        column,
        logs,
        from_cache: false,
    })
}
