use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use gumdrop::corpus::{parse_conllu, ParseMode};
use gumdrop::featurizer::{dep_brackets, windowed_frame, ClausalRelations, FeatureSchema};
use gumdrop_bench::{conllu, context, corpus, FEATURES};

fn parse(c: &mut Criterion) {
    let text = conllu(60);
    let mut g = c.benchmark_group("parse_conllu");
    g.throughput(Throughput::Bytes(text.len() as u64));
    g.bench_function("60 docs", |b| b.iter(|| parse_conllu(&text, ParseMode::GoldSentences).unwrap()));
    g.finish();
}

fn brackets(c: &mut Criterion) {
    let docs = corpus(60);
    let clausal = ClausalRelations::default();
    c.bench_function("dep_brackets/60 docs", |b| {
        b.iter(|| {
            for d in &docs {
                for s in &d.sentences {
                    dep_brackets(s, &clausal).unwrap();
                }
            }
        })
    });
}

fn frames(c: &mut Criterion) {
    let docs = corpus(60);
    let ctx = context(&docs);
    let mut g = c.benchmark_group("windowed_frame");
    for window in [1, 3, 5] {
        g.bench_with_input(BenchmarkId::from_parameter(window), &window, |b, &w| {
            b.iter(|| windowed_frame(&docs, FEATURES, w, &ctx).unwrap())
        });
    }
    g.finish();

    let frame = windowed_frame(&docs, FEATURES, 3, &ctx).unwrap();
    let schema = FeatureSchema::fit(&frame, 2).unwrap();
    c.bench_function("encode_frame/window 3", |b| b.iter(|| schema.encode_frame(&frame).unwrap()));
}

criterion_group!(benches, parse, brackets, frames);
criterion_main!(benches);
