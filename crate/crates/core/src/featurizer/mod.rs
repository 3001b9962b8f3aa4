//! Token features: orthography, lexicon lookups, document context and
//! dependency-tree structure, plus schema fitting and redundancy filtering.

pub mod chars;
pub mod context;
pub mod extract;
pub mod filter;
pub mod lexicon;
pub mod schema;
pub mod syntax;

pub use chars::{char_type_counts, first_last_chars, orth_case, CharTypeCounts};
pub use context::{quote_paren_state, sent_percentile, QuoteConfig};
pub use extract::{
    parse_features, token_table, window_features, window_names, windowed_frame, FeatureContext,
    TokenFeature, WindowedName, LEFT_SENTINEL, RIGHT_SENTINEL,
};
pub use filter::{filter_redundant, pearson, theils_u};
pub use lexicon::{build_lexicon, Lexicon};
pub use schema::{FeatureEntry, FeatureKind, FeatureRecord, FeatureSchema, RawFrame, RawValue, Value};
pub use syntax::{
    bin_head_distance, clause_spans, dep_brackets, head_distance, subtree_features,
    ClausalRelations, HeadDistanceBin, SubtreeFeatures,
};
