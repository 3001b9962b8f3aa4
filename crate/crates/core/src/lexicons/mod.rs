//! Count-based predictors: sentence-initial token lexicon, connective
//! sequence table, punctuation splitter, exclusive-connective baseline and a
//! unigram POS tagger.

pub mod connectives;
pub mod initial;
pub mod punct;
pub mod tagger;

pub use connectives::{
    build_connective_table, exclusive_conn_baseline, freq_conn_predict, gold_spans, ConnEntry, ConnectiveTable,
    FreqMatch, MAX_CONN_LEN,
};
pub use initial::{
    build_initial_lexicon, initial_lexicon_from_documents, InitialEntry, InitialTokenLexicon, DEFAULT_MIN_FREQ,
    DEFAULT_MIN_RATIO,
};
pub use punct::punct_split;
pub use tagger::UnigramTagger;
