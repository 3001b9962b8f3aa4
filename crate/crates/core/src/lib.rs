//! Stacked ensembles for sentence splitting, discourse unit segmentation and
//! discourse connective detection over CoNLL-U style corpora.
//!
//! Each task is solved by a set of heterogeneous base modules whose
//! out-of-fold predictions, together with windowed token features, train a
//! tree-ensemble metalearner.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod featurizer;
pub mod learners;
pub mod lexicons;
pub mod persist;
pub mod pipelines;
pub mod stacking;
pub mod synth;

pub use corpus::{Document, Sentence, Task, Token};
pub use error::{Error, Result};
