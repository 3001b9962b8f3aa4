//! The sentencer, segmenter and connective detector pipelines, plus the
//! sentence-boundary segmentation baseline.

pub mod config;
pub mod ensemble;
pub mod modules;

pub use config::{GeneralConfig, ModuleKind, PipelineConfig, TaskConfig};
pub use ensemble::{prepare, train_ensemble, EnsembleModel, ExternalColumns, TrainOptions, TrainReport};
pub use modules::{BowModel, FittedModule, ModuleBody, ModuleTrainer, WindowLearner, WindowModel};

use crate::corpus::{ConnLabel, Document, SegLabel, Task};
use crate::error::{Error, Result};
use crate::lexicons::{freq_conn_predict, ConnectiveTable};
use crate::stacking::ModuleColumn;

pub type SentencerModel = EnsembleModel;
pub type SegmenterModel = EnsembleModel;
pub type ConnModel = EnsembleModel;

fn expect_task(model: &EnsembleModel, task: Task) -> Result<()> {
    if model.task != task {
        return Err(Error::InvalidModel(format!("model was trained for {}, not {task}", model.task)));
    }
    Ok(())
}

pub fn train_sentencer(
    train: &[Document],
    dev: &[Document],
    cfg: &PipelineConfig,
    externals: &[ExternalColumns],
    opts: &TrainOptions,
) -> Result<(SentencerModel, TrainReport)> {
    train_ensemble(Task::Sent, train, dev, cfg, externals, opts)
}

/// Sentence starts per token; the first token of every document is a start.
pub fn sentence_starts(model: &SentencerModel, docs: &[Document], externals: &[ModuleColumn]) -> Result<Vec<Vec<bool>>> {
    expect_task(model, Task::Sent)?;
    Ok(model
        .predict_raw(docs, externals)?
        .into_iter()
        .map(|ids| ids.iter().enumerate().map(|(i, &c)| i == 0 || c == 0).collect())
        .collect())
}

/// Re-splits `doc` so that sentences begin exactly at `starts` (the first
/// token always begins one). Token annotations other than sentence
/// membership are kept.
pub fn apply_sentence_starts(doc: &Document, starts: &[bool]) -> Document {
    let mut d = doc.clone();
    for (i, t) in d.tokens_mut().enumerate() {
        t.sent_initial = i == 0 || starts.get(i).copied().unwrap_or(false);
    }
    d.resplit()
}

pub fn predict_sentences(model: &SentencerModel, docs: &[Document], externals: &[ModuleColumn]) -> Result<Vec<Document>> {
    let starts = sentence_starts(model, docs, externals)?;
    Ok(docs.iter().zip(starts).map(|(d, s)| apply_sentence_starts(d, &s)).collect())
}

pub fn train_segmenter(
    train: &[Document],
    dev: &[Document],
    cfg: &PipelineConfig,
    externals: &[ExternalColumns],
    opts: &TrainOptions,
) -> Result<(SegmenterModel, TrainReport)> {
    train_ensemble(Task::Seg, train, dev, cfg, externals, opts)
}

/// Copies of `docs` carrying predicted `BeginSeg` labels. With
/// `force_sentence_starts` every sentence-initial token begins a unit.
pub fn predict_segments(
    model: &SegmenterModel,
    docs: &[Document],
    externals: &[ModuleColumn],
    force_sentence_starts: bool,
) -> Result<Vec<Document>> {
    expect_task(model, Task::Seg)?;
    let raw = model.predict_raw(docs, externals)?;
    Ok(docs
        .iter()
        .zip(raw)
        .map(|(d, ids)| {
            let mut out = d.clone();
            for (t, c) in out.tokens_mut().zip(ids) {
                Task::Seg.set_class(t, c);
                if force_sentence_starts && t.index == 1 {
                    t.seg_label = SegLabel::BeginSeg;
                }
            }
            out
        })
        .collect())
}

pub fn train_connective(
    train: &[Document],
    dev: &[Document],
    cfg: &PipelineConfig,
    externals: &[ExternalColumns],
    opts: &TrainOptions,
) -> Result<(ConnModel, TrainReport)> {
    train_ensemble(Task::Conn, train, dev, cfg, externals, opts)
}

/// Rewrites every `I-Conn` that follows an `O` (or opens the sequence) to `B-Conn`.
pub fn repair_orphans(labels: &mut [ConnLabel]) {
    for i in 0..labels.len() {
        if labels[i] == ConnLabel::I && (i == 0 || labels[i - 1] == ConnLabel::O) {
            labels[i] = ConnLabel::B;
        }
    }
}

pub fn predict_connectives(model: &ConnModel, docs: &[Document], externals: &[ModuleColumn]) -> Result<Vec<Document>> {
    expect_task(model, Task::Conn)?;
    let raw = model.predict_raw(docs, externals)?;
    Ok(docs
        .iter()
        .zip(raw)
        .map(|(d, ids)| {
            let mut labels: Vec<ConnLabel> = ids
                .iter()
                .map(|&c| match c {
                    0 => ConnLabel::B,
                    1 => ConnLabel::I,
                    _ => ConnLabel::O,
                })
                .collect();
            repair_orphans(&mut labels);
            let mut out = d.clone();
            for (t, l) in out.tokens_mut().zip(labels) {
                t.conn_label = l;
            }
            out
        })
        .collect())
}

/// `BeginSeg` exactly on sentence-initial tokens.
pub fn baseline_segment_by_sentence(docs: &[Document]) -> Vec<Document> {
    docs.iter()
        .map(|d| {
            let mut out = d.clone();
            for s in &mut out.sentences {
                for (i, t) in s.tokens.iter_mut().enumerate() {
                    t.seg_label = if i == 0 { SegLabel::BeginSeg } else { SegLabel::NoSeg };
                }
            }
            out
        })
        .collect()
}

/// The frequency-table detector on its own: a matched position is kept when
/// its ratio reaches `threshold`, then orphans are repaired.
pub fn freq_detector(table: &ConnectiveTable, doc: &Document, threshold: f64) -> Vec<ConnLabel> {
    let mut labels: Vec<ConnLabel> = freq_conn_predict(doc, table)
        .into_iter()
        .map(|m| if m.ratio >= threshold { m.position } else { ConnLabel::O })
        .collect();
    repair_orphans(&mut labels);
    labels
}
