//! Shared inputs for the benchmarks.

use gumdrop::corpus::{write_conllu, Document};
use gumdrop::featurizer::{build_lexicon, windowed_frame, FeatureContext, FeatureSchema, TokenFeature};
use gumdrop::learners::{Dataset, Labels};
use gumdrop::synth::{seg_corpus, SynthConfig};
use gumdrop::Task;

pub fn corpus(n_docs: usize) -> Vec<Document> {
    seg_corpus(&SynthConfig {
        n_docs,
        ..SynthConfig::default()
    })
}

pub fn conllu(n_docs: usize) -> String {
    write_conllu(&corpus(n_docs), Task::Seg)
}

pub fn context(docs: &[Document]) -> FeatureContext {
    FeatureContext {
        lexicon: build_lexicon(docs.iter().flat_map(|d| d.tokens()).map(|t| t.form.as_str()), 100),
        ..FeatureContext::default()
    }
}

pub const FEATURES: &[TokenFeature] = &[
    TokenFeature::Word,
    TokenFeature::Upos,
    TokenFeature::Deprel,
    TokenFeature::DepBracket,
    TokenFeature::SentLen,
];

/// Segmentation dataset over windowed features of a synthetic corpus.
pub fn seg_dataset(n_docs: usize) -> Dataset {
    let docs = corpus(n_docs);
    let ctx = context(&docs);
    let frame = windowed_frame(&docs, FEATURES, 3, &ctx).unwrap();
    let schema = FeatureSchema::fit(&frame, 2).unwrap();
    let records = schema.encode_frame(&frame).unwrap();
    let labels = docs.iter().flat_map(|d| d.tokens()).map(|t| Task::Seg.gold_class(t)).collect();
    let classes = Task::Seg.classes().iter().map(|c| c.to_string()).collect();
    Dataset::new(records, Labels::Class(labels), schema, classes).unwrap()
}
