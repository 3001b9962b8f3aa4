//! Out-of-fold multitraining of base modules and metalearner training.

pub mod folds;
pub mod matrix;
pub mod meta;
pub mod multitrain;

pub use folds::{make_folds, FoldLevel, Folds};
pub use matrix::{corpus_keys, ingest_external, ModuleColumn, ModuleOutput, MultitrainMatrix, TokenKey};
pub use meta::{assemble_meta, dev_f1, meta_frame, train_meta, MetaCandidate, MetaSelection};
pub use multitrain::{
    corpus_hash, multitrain, predict_column, BaseModuleSpec, BasePredictor, BaseTrainer, FoldLog, ModuleSource,
    MultitrainOptions, MultitrainOutput,
};
