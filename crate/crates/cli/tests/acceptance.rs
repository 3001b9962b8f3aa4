//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 8 runs only when `GUMDROP_ACCEPTANCE_CORPUS` names a directory
//! holding `*_train.conllu`, `*_dev.conllu` and `*_test.conllu` files of one
//! corpus; otherwise it is reported as SKIP.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gumdrop::corpus::{write_conllu, ConnLabel, SegLabel, Sentence, Token};
use gumdrop::eval::{report, score_boundaries, score_conn_labels, score_connectives, Score};
use gumdrop::featurizer::{
    dep_brackets, subtree_features, theils_u, ClausalRelations, FeatureEntry, FeatureKind, FeatureRecord,
    FeatureSchema, Value,
};
use gumdrop::learners::{
    init_mlp, ridge_solve, train_linear, train_mlp, train_tree_ensemble, Dataset, Labels, LinearTask,
    LogisticObjective, MlpParams, TreeKind, TreeParams,
};
use gumdrop::lexicons::{build_connective_table, exclusive_conn_baseline};
use gumdrop::pipelines::{
    baseline_segment_by_sentence, freq_detector, predict_connectives, predict_segments, train_connective,
    train_segmenter, GeneralConfig, ModuleKind, ModuleTrainer, PipelineConfig, TaskConfig, TrainOptions,
};
use gumdrop::stacking::{corpus_keys, make_folds, multitrain, BaseModuleSpec, ModuleSource, MultitrainOptions};
use gumdrop::synth::{conn_corpus, rate_for_internal_share, seg_corpus, split_80_10_10, SynthConfig};
use gumdrop::{Document, Task};

type Check = Result<String, String>;
/// Number, title, time limit and the check itself (`None` means skipped).
type Criterion = (u32, &'static str, Duration, Box<dyn Fn() -> Option<Check>>);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// criterion 1

fn figure_fragment() -> Sentence {
    let rows = [
        ("allowed", "VERB", 0, "root"),
        ("as", "SCONJ", 8, "mark"),
        ("ants", "NOUN", 8, "nsubj"),
        ("when", "SCONJ", 5, "mark"),
        ("given", "VERB", 8, "advcl"),
        ("the", "DET", 7, "det"),
        ("choice", "NOUN", 5, "obj"),
        ("ignore", "VERB", 1, "advcl"),
        ("poison", "NOUN", 8, "obj"),
    ];
    let tokens = rows
        .iter()
        .enumerate()
        .map(|(i, (form, upos, head, rel))| {
            let mut t = Token::new(i + 1, *form);
            t.upos = upos.to_string();
            t.head = Some(*head);
            t.deprel = rel.to_string();
            t
        })
        .collect();
    Sentence {
        tokens,
        ..Sentence::default()
    }
}

fn criterion_1() -> Check {
    let s = figure_fragment();
    let tags = dep_brackets(&s, &ClausalRelations::default()).map_err(err)?;
    let want = ["O", "B-advcl", "I-advcl", "B-advcl", "I-advcl", "I-advcl", "E-advcl", "I-advcl", "E-advcl"];
    ensure(tags == want, format!("brackets {tags:?}"))?;
    let f = subtree_features(&s, 5).map_err(err)?;
    let got = (
        f.lspan,
        f.rspan,
        f.lchild_near.as_str(),
        f.lchild_far.as_str(),
        f.rchild_near.as_str(),
        f.rchild_far.as_str(),
    );
    ensure(got == (1, 2, "mark", "mark", "det", "obj"), format!("subtree {got:?}"))?;
    Ok("brackets and subtree features exact".into())
}

// criterion 2

fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|x, y| m[*x][c].abs().total_cmp(&m[*y][c].abs())).unwrap();
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for j in c..n {
                m[r][j] -= f * m[c][j];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| m[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    x
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

fn cat_num_dataset(n: usize, seed: u64, classes: usize) -> Dataset {
    let schema = FeatureSchema::new(vec![
        FeatureEntry {
            name: "c".into(),
            kind: FeatureKind::Categorical,
            vocabulary: (0..4).map(|i| (format!("v{i}"), i)).collect(),
        },
        FeatureEntry {
            name: "x".into(),
            kind: FeatureKind::Numeric,
            vocabulary: BTreeMap::new(),
        },
    ])
    .unwrap();
    let fp = schema.fingerprint();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let c = rng.gen_range(0..4u32);
        recs.push(FeatureRecord {
            values: vec![Value::Cat(c), Value::Num(rng.gen_range(-1.0..1.0))],
            fingerprint: fp,
        });
        ys.push((c as usize + i) % classes);
    }
    let names = (0..classes).map(|c| format!("k{c}")).collect();
    Dataset::new(recs, Labels::Class(ys), schema, names).unwrap()
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    // ridge against the normal equations solved independently
    let x: Vec<Vec<f64>> = (0..10).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let lambda = 0.3;
    let (w, _) = ridge_solve(&x, &y, lambda, false).map_err(err)?;
    let gram: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| x.iter().map(|r| r[i] * r[j]).sum::<f64>() + if i == j { lambda } else { 0.0 })
                .collect()
        })
        .collect();
    let xty: Vec<f64> = (0..3).map(|i| x.iter().zip(&y).map(|(r, t)| r[i] * t).sum()).collect();
    let closed = solve(gram, xty);
    let ridge_dev = w.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(ridge_dev <= 1e-8, format!("ridge deviates by {ridge_dev:e}"))?;

    // logistic gradient
    let rows: Vec<Vec<(usize, f64)>> = (0..10).map(|_| (0..4).map(|c| (c, rng.gen_range(-1.0..1.0))).collect()).collect();
    let labels: Vec<usize> = (0..10).map(|_| rng.gen_range(0..3)).collect();
    let obj = LogisticObjective {
        rows: &rows,
        labels: &labels,
        n_classes: 3,
        width: 4,
        lambda: 0.1,
    };
    let params: Vec<f64> = (0..obj.n_params()).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let (_, g) = obj.loss_and_grad(&params);
    let h = 1e-4;
    let mut worst_lr: f64 = 0.0;
    for i in 0..params.len() {
        let mut p = params.clone();
        p[i] += h;
        let up = obj.loss_and_grad(&p).0;
        p[i] -= 2.0 * h;
        let down = obj.loss_and_grad(&p).0;
        worst_lr = worst_lr.max(rel_err((up - down) / (2.0 * h), g[i]));
    }
    ensure(worst_lr <= 1e-4, format!("logistic gradient rel err {worst_lr:e}"))?;

    // mlp gradient
    let ds = cat_num_dataset(10, 3, 2);
    let mlp = init_mlp(
        &ds,
        &MlpParams {
            embed_dim: 3,
            hidden_dims: vec![4],
            ..MlpParams::default()
        },
    )
    .map_err(err)?;
    let ys = ds.class_labels().unwrap().to_vec();
    let mrows: Vec<(&[Value], usize)> = ds.records.iter().map(|r| r.values.as_slice()).zip(ys).collect();
    let (_, g) = mlp.loss_and_grad(&mlp.params, &mrows);
    let mut worst_mlp: f64 = 0.0;
    for i in 0..mlp.params.len() {
        let mut p = mlp.params.clone();
        p[i] += h;
        let up = mlp.loss_and_grad(&p, &mrows).0;
        p[i] -= 2.0 * h;
        let down = mlp.loss_and_grad(&p, &mrows).0;
        worst_mlp = worst_mlp.max(rel_err((up - down) / (2.0 * h), g[i]));
    }
    ensure(worst_mlp <= 1e-4, format!("mlp gradient rel err {worst_mlp:e}"))?;

    // Theil's U against a brute-force contingency table
    let xs: Vec<u8> = (0..200).map(|_| rng.gen_range(0..4)).collect();
    let yv: Vec<u8> = xs.iter().map(|&v| if rng.gen_bool(0.7) { v % 3 } else { rng.gen_range(0..3) }).collect();
    let mut table = [[0f64; 3]; 4];
    for (a, b) in xs.iter().zip(&yv) {
        table[*a as usize][*b as usize] += 1.0;
    }
    let n = xs.len() as f64;
    let ent = |ps: &mut dyn Iterator<Item = f64>| -> f64 { ps.filter(|p| *p > 0.0).map(|p| -p * p.ln()).sum() };
    let h_y = ent(&mut (0..3).map(|j| (0..4).map(|i| table[i][j]).sum::<f64>() / n));
    let mut h_y_x = 0.0;
    for row in &table {
        let rs: f64 = row.iter().sum();
        if rs > 0.0 {
            h_y_x += rs / n * ent(&mut row.iter().map(|c| c / rs));
        }
    }
    let brute = (h_y - h_y_x) / h_y;
    let u = theils_u(&xs, &yv).map_err(err)?;
    ensure((u - brute).abs() <= 1e-10, format!("theils_u {u} vs {brute}"))?;

    // probability outputs
    let ds = cat_num_dataset(60, 4, 3);
    let mut worst_sum: f64 = 0.0;
    let mut models = vec![
        train_linear(&ds, LinearTask::Logistic, &[0.1, 1.0]).map_err(err)?,
        train_mlp(&ds, &MlpParams::default()).map_err(err)?,
    ];
    for kind in [TreeKind::Tree, TreeKind::Forest, TreeKind::ExtraTrees, TreeKind::Gbt] {
        let mut p = TreeParams::defaults(kind);
        p.n_trees = p.n_trees.min(20);
        models.push(train_tree_ensemble(&ds, kind, &p).map_err(err)?);
    }
    for m in &models {
        for r in &ds.records {
            let p = m.predict_proba(r).map_err(err)?;
            worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        }
    }
    ensure(worst_sum <= 1e-9, format!("probabilities off by {worst_sum:e}"))?;
    Ok(format!(
        "ridge {ridge_dev:.1e}, lr grad {worst_lr:.1e}, mlp grad {worst_mlp:.1e}, U {:.1e}, sum {worst_sum:.1e}",
        (u - brute).abs()
    ))
}

// criterion 3

fn small_seg_config() -> TaskConfig {
    let mut c = TaskConfig::defaults(Task::Seg);
    c.subtree_trees = 30;
    c
}

fn criterion_3() -> Check {
    let docs = seg_corpus(&SynthConfig::default());
    ensure(docs.len() >= 50, "synthetic corpus too small")?;
    let folds = make_folds(&docs, 5, 42).map_err(err)?;
    let all = corpus_keys(&docs);
    let mut seen = BTreeMap::new();
    for f in 0..folds.k {
        for k in corpus_keys(&folds.held_out(&docs, f)) {
            *seen.entry(k).or_insert(0) += 1;
        }
    }
    ensure(seen.len() == all.len() && seen.values().all(|&c| c == 1), "folds are not a partition of the tokens")?;

    let cache = tempfile::tempdir().map_err(err)?;
    let spec = BaseModuleSpec {
        id: "subtree".into(),
        task: Task::Seg,
        labels: ModuleKind::Subtree.labels(Task::Seg),
        extras: ModuleKind::Subtree.extras(),
        source: ModuleSource::Trained(Box::new(ModuleTrainer {
            kind: ModuleKind::Subtree,
            task: Task::Seg,
            cfg: small_seg_config(),
            general: GeneralConfig::default(),
            mlp_window: 5,
            wiki: None,
        })),
    };
    let opts = MultitrainOptions {
        cache_dir: Some(cache.path().to_path_buf()),
        seed: 42,
    };
    let first = multitrain(&spec, &docs, &folds, &opts).map_err(err)?;
    let overlap: usize = first.logs.iter().map(|l| l.overlap()).sum();
    ensure(overlap == 0, format!("{overlap} tokens leaked into their own fold"))?;
    ensure(first.logs.len() == 5, "expected five fold logs")?;
    let second = multitrain(&spec, &docs, &folds, &opts).map_err(err)?;
    ensure(second.from_cache, "second run did not use the cache")?;
    ensure(first.column.to_text() == second.column.to_text(), "cached matrix differs")?;
    Ok(format!("{} docs, {} tokens, zero overlap, cache identical", docs.len(), all.len()))
}

// criterion 4

fn seg_f(gold: &[Document], pred: &[Document]) -> Result<f64, String> {
    Ok(score_boundaries(gold, pred, Task::Seg).map_err(err)?.f1)
}

fn internal_share(docs: &[Document]) -> f64 {
    let (mut begin, mut internal) = (0usize, 0usize);
    for t in docs.iter().flat_map(|d| d.tokens()) {
        if t.seg_label == SegLabel::BeginSeg {
            begin += 1;
            if t.index != 1 {
                internal += 1;
            }
        }
    }
    internal as f64 / begin as f64
}

fn criterion_4() -> Check {
    let cfg = PipelineConfig::default();
    let docs = seg_corpus(&SynthConfig::default());
    let (train, dev, test) = split_80_10_10(&docs);
    let (model, _) = train_segmenter(&train, &dev, &cfg, &[], &TrainOptions::default()).map_err(err)?;
    let pred = predict_segments(&model, &test, &[], true).map_err(err)?;
    let f = seg_f(&test, &pred)?;
    let bases = model.module_scores(&test, &[]).map_err(err)?;
    let best = bases.iter().map(|(_, s)| s.f1).fold(0.0, f64::max);
    ensure(f >= 0.95, format!("ensemble F {f:.3} < 0.95"))?;
    ensure(f >= best - 0.02, format!("ensemble F {f:.3} below best base {best:.3} - 0.02"))?;

    let vdocs = seg_corpus(&SynthConfig {
        rate: rate_for_internal_share(0.3),
        seed: 19,
        ..SynthConfig::default()
    });
    let share = internal_share(&vdocs);
    let (vtrain, vdev, vtest) = split_80_10_10(&vdocs);
    let (vmodel, _) = train_segmenter(&vtrain, &vdev, &cfg, &[], &TrainOptions::default()).map_err(err)?;
    let vf = seg_f(&vtest, &predict_segments(&vmodel, &vtest, &[], true).map_err(err)?)?;
    let bf = seg_f(&vtest, &baseline_segment_by_sentence(&vtest))?;
    ensure(bf < vf, format!("baseline F {bf:.3} not below ensemble F {vf:.3}"))?;
    Ok(format!(
        "test F {f:.3} (best base {best:.3}); {:.0}% internal: ensemble {vf:.3} > baseline {bf:.3}",
        share * 100.0
    ))
}

// criterion 5

fn conn_doc(name: &str, words: &str) -> Document {
    // `word/B`, `word/I` mark connective tokens
    let tokens = words
        .split_whitespace()
        .enumerate()
        .map(|(i, w)| {
            let (form, label) = match w.rsplit_once('/') {
                Some((f, "B")) => (f, ConnLabel::B),
                Some((f, "I")) => (f, ConnLabel::I),
                _ => (w, ConnLabel::O),
            };
            let mut t = Token::new(i + 1, form);
            t.conn_label = label;
            t
        })
        .collect();
    Document {
        name: name.into(),
        genre: "all".into(),
        sentences: vec![Sentence {
            tokens,
            ..Sentence::default()
        }],
    }
}

/// Counts (connective uses, occurrences) of every gold span form sequence.
fn recount(docs: &[Document]) -> BTreeMap<Vec<String>, (u64, u64)> {
    let mut out: BTreeMap<Vec<String>, (u64, u64)> = BTreeMap::new();
    for d in docs {
        let toks: Vec<&Token> = d.tokens().collect();
        let mut i = 0;
        while i < toks.len() {
            if toks[i].conn_label == ConnLabel::O {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < toks.len() && toks[j].conn_label == ConnLabel::I {
                j += 1;
            }
            let key = toks[i..j].iter().map(|t| t.form.clone()).collect();
            out.entry(key).or_default().0 += 1;
            i = j;
        }
    }
    for (key, v) in out.iter_mut() {
        for d in docs {
            let forms: Vec<&str> = d.tokens().map(|t| t.form.as_str()).collect();
            v.1 += forms.windows(key.len()).filter(|w| w.iter().zip(key).all(|(a, b)| *a == b)).count() as u64;
        }
    }
    out
}

fn criterion_5() -> Check {
    let fixture = vec![
        conn_doc("a", "however/B it rained and/B we left . cats and dogs slept"),
        conn_doc("b", "as/B well/I as/I that , he sang so/B that/I we heard that he sang"),
        conn_doc("c", "he said that however/B nothing changed because/B of rain and so on"),
    ];
    let mut checked = 0;
    for docs in [fixture, conn_corpus(&SynthConfig::default())] {
        let table = build_connective_table(&docs);
        let oracle = recount(&docs);
        ensure(table.len() == oracle.len(), "table and recount disagree on entries")?;
        for (key, (c, t)) in &oracle {
            let e = table.get(key).ok_or_else(|| format!("{key:?} missing from table"))?;
            ensure(e.conn == *c && e.total == *t, format!("{key:?}: {}/{} vs {c}/{t}", e.conn, e.total))?;
            checked += 1;
        }
    }

    let docs = conn_corpus(&SynthConfig::default());
    let (train, dev, test) = split_80_10_10(&docs);
    let mut base = Score::default();
    for d in &train {
        let gold: Vec<ConnLabel> = d.tokens().map(|t| t.conn_label).collect();
        base = base.add(&score_conn_labels(&gold, &exclusive_conn_baseline(&train, d), true));
    }
    ensure(base.precision == 1.0, format!("exclusive baseline precision {:.3}", base.precision))?;

    let cfg = PipelineConfig::default();
    let (model, _) = train_connective(&train, &dev, &cfg, &[], &TrainOptions::default()).map_err(err)?;
    let pred = predict_connectives(&model, &test, &[]).map_err(err)?;
    let f = score_connectives(&test, &pred, false).map_err(err)?.f1;
    let table = build_connective_table(&train);
    let mut freq = Score::default();
    for d in &test {
        let gold: Vec<ConnLabel> = d.tokens().map(|t| t.conn_label).collect();
        freq = freq.add(&score_conn_labels(&gold, &freq_detector(&table, d, 0.5), false));
    }
    ensure(f >= freq.f1, format!("ensemble F {f:.3} < frequency detector F {:.3}", freq.f1))?;
    Ok(format!(
        "{checked} entries recounted; baseline P {:.3} R {:.3}; ensemble F {f:.3} >= freq F {:.3}",
        base.precision, base.recall, freq.f1
    ))
}

// criterion 6

fn seg_doc(gold: &[bool]) -> Document {
    let tokens = gold
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let mut t = Token::new(i + 1, format!("w{i}"));
            t.seg_label = if b { SegLabel::BeginSeg } else { SegLabel::NoSeg };
            t
        })
        .collect();
    Document {
        name: "fixture".into(),
        genre: "all".into(),
        sentences: vec![Sentence {
            tokens,
            ..Sentence::default()
        }],
    }
}

fn criterion_6() -> Check {
    // gold positives at 0, 3, 5, 8, 11; predicted 0, 3, 5, 8 plus 1 and 9
    let mut g = vec![false; 12];
    let mut p = vec![false; 12];
    for i in [0, 3, 5, 8, 11] {
        g[i] = true;
    }
    for i in [0, 3, 5, 8, 1, 9] {
        p[i] = true;
    }
    let s = score_boundaries(&[seg_doc(&g)], &[seg_doc(&p)], Task::Seg).map_err(err)?;
    let shown = format!("{:.3}/{:.3}/{:.3}", s.precision, s.recall, s.f1);
    ensure(shown == "0.667/0.800/0.727", format!("got {shown}"))?;

    let a = Score::from_counts(8, 2, 2);
    let b = Score::from_counts(9, 1, 1);
    let text = report(&[("a".into(), a), ("b".into(), b)]);
    let row = |name: &str| text.lines().find(|l| l.starts_with(name)).map(|l| l.split_whitespace().collect::<Vec<_>>());
    let mean = row("mean").ok_or("no mean row")?;
    let std = row("std").ok_or("no std row")?;
    ensure(mean[1..4] == ["0.850"; 3], format!("mean row {mean:?}"))?;
    ensure(std[1..4] == ["0.050"; 3], format!("std row {std:?}"))?;
    Ok(format!("fixture {shown}; mean 0.850, std 0.050"))
}

// criterion 7

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gumdrop")
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin()).args(args).output().map_err(err)?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("gumdrop {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn write_corpus(dir: &Path, name: &str, docs: &[Document], task: Task) -> Result<PathBuf, String> {
    let p = dir.join(name);
    std::fs::write(&p, write_conllu(docs, task)).map_err(err)?;
    Ok(p)
}

fn criterion_7() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let d = dir.path();
    let mut compared = 0;
    for (task, docs) in [
        (Task::Seg, seg_corpus(&SynthConfig { n_docs: 30, ..SynthConfig::default() })),
        (Task::Conn, conn_corpus(&SynthConfig { n_docs: 30, ..SynthConfig::default() })),
    ] {
        let (train, dev, test) = split_80_10_10(&docs);
        let t = task.as_str();
        let tr = write_corpus(d, &format!("{t}_train.conllu"), &train, task)?;
        let dv = write_corpus(d, &format!("{t}_dev.conllu"), &dev, task)?;
        let te = write_corpus(d, &format!("{t}_test.conllu"), &test, task)?;
        let mut outputs = Vec::new();
        for run in 0..2 {
            let model = d.join(format!("{t}-{run}.model"));
            let pred = d.join(format!("{t}-{run}.pred.conllu"));
            let s = |p: &Path| p.to_str().unwrap().to_string();
            run_cli(&["train", "--task", t, "--train", &s(&tr), "--dev", &s(&dv), "--out", &s(&model), "--seed", "42"])?;
            run_cli(&["predict", "--task", t, "--model", &s(&model), "--input", &s(&te), "--out", &s(&pred)])?;
            outputs.push((std::fs::read(&model).map_err(err)?, std::fs::read(&pred).map_err(err)?));
        }
        ensure(outputs[0].0 == outputs[1].0, format!("{t}: model files differ"))?;
        ensure(outputs[0].1 == outputs[1].1, format!("{t}: prediction files differ"))?;
        compared += 2;
    }
    Ok(format!("{compared} artifact pairs byte-identical (seg, conn)"))
}

// criterion 8

fn find_split(dir: &Path, split: &str) -> Option<PathBuf> {
    std::fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| p.to_string_lossy().ends_with(&format!("_{split}.conllu")))
}

fn score_stdout(gold: &Path, pred: &Path) -> Result<f64, String> {
    let out = Command::new(bin())
        .args(["score", "--task", "seg", "--gold"])
        .arg(gold)
        .arg("--pred")
        .arg(pred)
        .output()
        .map_err(err)?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    text.lines()
        .find_map(|l| l.strip_prefix("mean\tf1\t"))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| format!("no mean f1 line in report:\n{text}"))
}

fn criterion_8() -> Option<Check> {
    let dir = PathBuf::from(std::env::var_os("GUMDROP_ACCEPTANCE_CORPUS")?);
    Some((|| {
        let train = find_split(&dir, "train").ok_or("no *_train.conllu")?;
        let dev = find_split(&dir, "dev").ok_or("no *_dev.conllu")?;
        let test = find_split(&dir, "test").ok_or("no *_test.conllu")?;
        let work = tempfile::tempdir().map_err(err)?;
        let model = work.path().join("seg.model");
        let pred = work.path().join("pred.conllu");
        let base = work.path().join("baseline.conllu");
        let s = |p: &Path| p.to_str().unwrap().to_string();
        run_cli(&["train", "--task", "seg", "--train", &s(&train), "--dev", &s(&dev), "--out", &s(&model)])?;
        run_cli(&["predict", "--task", "seg", "--model", &s(&model), "--input", &s(&test), "--out", &s(&pred)])?;
        run_cli(&["baseline", "--input", &s(&test), "--out", &s(&base)])?;
        let f = score_stdout(&test, &pred)?;
        let b = score_stdout(&test, &base)?;
        ensure(f >= b, format!("ensemble F {f:.3} below baseline F {b:.3}"))?;
        Ok(format!("ensemble F {f:.3} >= baseline F {b:.3}"))
    })())
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "dependency brackets and subtree features", Duration::from_secs(1), Box::new(|| Some(criterion_1()))),
        (2, "learner oracles", Duration::from_secs(30), Box::new(|| Some(criterion_2()))),
        (3, "stacking protocol", Duration::from_secs(60), Box::new(|| Some(criterion_3()))),
        (4, "end-to-end synthetic segmentation", Duration::from_secs(300), Box::new(|| Some(criterion_4()))),
        (5, "connective suite", Duration::from_secs(120), Box::new(|| Some(criterion_5()))),
        (6, "scorer exactness", Duration::from_secs(1), Box::new(|| Some(criterion_6()))),
        (7, "determinism", Duration::from_secs(300), Box::new(|| Some(criterion_7()))),
        (8, "real-data protocol check", Duration::from_secs(24 * 3600), Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (n, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match outcome {
            None => ("SKIP", "set GUMDROP_ACCEPTANCE_CORPUS to a corpus directory".to_string()),
            Some(Ok(d)) if secs <= limit.as_secs_f64() => ("PASS", d),
            Some(Ok(d)) => ("FAIL", format!("{d}; took {secs:.1}s, limit {}s", limit.as_secs())),
            Some(Err(e)) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {n} {status}: {name} ({secs:.2}s): {detail}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
