use std::path::{Path, PathBuf};

use gumdrop::corpus::{parse_conllu_with, write_conllu, GenreRules, ParseMode};
use gumdrop::eval::{report, score_boundaries, score_connectives};
use gumdrop::lexicons::{build_initial_lexicon, InitialTokenLexicon};
use gumdrop::pipelines::modules::task_labels;
use gumdrop::pipelines::{
    baseline_segment_by_sentence, predict_connectives, predict_segments, predict_sentences, train_ensemble,
    EnsembleModel, ExternalColumns, PipelineConfig, TrainOptions,
};
use gumdrop::stacking::{ingest_external, ModuleColumn};
use gumdrop::{Document, Task};

use crate::exit::{CliError, CliResult, CONFIG, OTHER};
use crate::manifest::{manifest_path, RunManifest};
use crate::{BaselineArgs, LexiconArgs, OnOff, PredictArgs, ScoreArgs, TrainArgs};

const CACHE_ENV: &str = "GUMDROP_CACHE";

fn read(what: &str, path: &Path, manifest: &mut RunManifest) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(what, path, e))?;
    manifest.input(path, &bytes);
    String::from_utf8(bytes).map_err(|_| CliError::new(OTHER, format!("{what} {} is not UTF-8", path.display())))
}

fn read_corpus(what: &str, path: &Path, genres: &GenreRules, manifest: &mut RunManifest) -> CliResult<Vec<Document>> {
    let text = read(what, path, manifest)?;
    parse_conllu_with(&text, ParseMode::GoldSentences, genres)
        .map_err(|e| context(e, format!("{what} {}", path.display())))
}

/// Keeps the exit code of `e` and prefixes its message.
fn context(e: gumdrop::Error, ctx: impl std::fmt::Display) -> CliError {
    let mut c = CliError::from(e);
    c.message = format!("{ctx}: {}", c.message);
    c
}

fn load_config(path: Option<&Path>, manifest: &mut RunManifest) -> CliResult<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = read("config", path, manifest)?;
    PipelineConfig::parse(&text).map_err(|e| context(e, format!("config {}", path.display())))
}

/// The token view external prediction files are keyed on: the sentencer
/// sees each document as a single sentence.
fn external_view(task: Task, docs: &[Document]) -> Vec<Document> {
    match task {
        Task::Sent => docs.iter().map(Document::flatten).collect(),
        _ => docs.to_vec(),
    }
}

/// Module id and label set declared by an external prediction file.
fn external_header(task: Task, path: &Path, text: &str) -> CliResult<(String, Vec<String>)> {
    let col = ModuleColumn::from_text(text, &file_stem(path), &task_labels(task))
        .map_err(|e| context(e, path.display()))?;
    Ok((col.module, col.labels))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "external".into(), |s| s.to_string_lossy().into_owned())
}

fn ingest(text: &str, id: &str, labels: &[String], docs: &[Document], path: &Path) -> CliResult<ModuleColumn> {
    ingest_external(text, id, labels, docs).map_err(|e| context(e, path.display()))
}

fn check_exists(what: &str, path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::new(crate::exit::NOT_FOUND, format!("{what} not found: {}", path.display())))
    }
}

fn write_out(path: &Path, bytes: &[u8], manifest: &mut RunManifest) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::new(OTHER, format!("cannot write {}: {e}", path.display())))?;
    manifest.artifact(path);
    Ok(())
}

pub fn train(a: &TrainArgs) -> CliResult<()> {
    let task: Task = a.task.into();
    let mut manifest = RunManifest::start("train");
    let mut cfg = load_config(a.config.as_deref(), &mut manifest)?;
    if let Some(seed) = a.seed {
        cfg.general.seed = seed;
    }
    if let Some(f) = a.force_sentence_starts {
        cfg.seg.force_sentence_starts = f == OnOff::On;
    }
    let cache_dir: Option<PathBuf> = std::env::var_os(CACHE_ENV).map(PathBuf::from).or_else(|| a.cache_dir.clone());

    if a.dry_run {
        check_exists("training corpus", &a.train)?;
        check_exists("dev corpus", &a.dev)?;
        for p in &a.external_preds {
            check_exists("external prediction file", p)?;
        }
    }
    let mut externals_text = Vec::new();
    for p in &a.external_preds {
        let text = read("external prediction file", p, &mut manifest)?;
        let (id, labels) = external_header(task, p, &text)?;
        externals_text.push((p.clone(), id, labels, text));
    }
    if cfg.task(task).externals.is_empty() {
        cfg.task_mut(task).externals = externals_text.iter().map(|(_, id, _, _)| id.clone()).collect();
    }
    cfg.validate()?;
    let echo = cfg.to_text();
    if a.dry_run {
        eprint!("{echo}");
        return Ok(());
    }
    log::info!("resolved configuration:\n{echo}");
    manifest.resolved_config = Some(echo);
    manifest.seed = Some(cfg.general.seed);

    let train = read_corpus("training corpus", &a.train, &cfg.general.genres, &mut manifest)?;
    let dev = read_corpus("dev corpus", &a.dev, &cfg.general.genres, &mut manifest)?;
    let (tview, dview) = (external_view(task, &train), external_view(task, &dev));
    let ids = cfg.task(task).externals.clone();
    if ids.len() != externals_text.len() {
        return Err(CliError::new(
            CONFIG,
            format!("{} external modules configured but {} prediction files given", ids.len(), externals_text.len()),
        ));
    }
    let mut externals = Vec::new();
    for (id, (path, _, labels, text)) in ids.iter().zip(&externals_text) {
        externals.push(ExternalColumns {
            train: ingest(text, id, labels, &tview, path)?,
            dev: ingest(text, id, labels, &dview, path)?,
        });
    }
    let wiki_lexicon = match &a.wiki_lexicon {
        Some(p) => Some(InitialTokenLexicon::from_text(&read("wiki lexicon", p, &mut manifest)?)?),
        None => None,
    };
    let opts = TrainOptions {
        cache_dir,
        wiki_lexicon,
    };
    let (model, rep) = train_ensemble(task, &train, &dev, &cfg, &externals, &opts)?;
    for (m, s) in &rep.module_dev {
        log::info!("dev {m}: P {:.3} R {:.3} F {:.3}", s.precision, s.recall, s.f1);
    }
    for (k, f) in &rep.meta_dev {
        log::info!("dev metalearner {}: F {f:.3}", k.as_str());
    }
    write_out(&a.out, &model.to_bytes()?, &mut manifest)?;
    manifest.write(&manifest_path(a.manifest.as_deref(), &a.out))
}

pub fn predict(a: &PredictArgs) -> CliResult<()> {
    let task: Task = a.task.into();
    let mut manifest = RunManifest::start("predict");
    if a.dry_run {
        check_exists("model", &a.model)?;
        check_exists("input corpus", &a.input)?;
    }
    let bytes = std::fs::read(&a.model).map_err(|e| CliError::io("model", &a.model, e))?;
    manifest.input(&a.model, &bytes);
    let model = EnsembleModel::from_bytes(&bytes, task)?;
    let echo = task_section(&model);
    if a.dry_run {
        eprint!("{echo}");
        return Ok(());
    }
    manifest.resolved_config = Some(echo);
    manifest.seed = Some(model.general.seed);
    let docs = read_corpus("input corpus", &a.input, &model.general.genres, &mut manifest)?;
    if a.external_preds.len() != model.externals.len() {
        return Err(CliError::new(
            CONFIG,
            format!("model expects {} external prediction files, got {}", model.externals.len(), a.external_preds.len()),
        ));
    }
    let view = external_view(task, &docs);
    let mut externals = Vec::new();
    for (id, p) in model.externals.iter().zip(&a.external_preds) {
        let text = read("external prediction file", p, &mut manifest)?;
        let (_, labels) = external_header(task, p, &text)?;
        externals.push(ingest(&text, id, &labels, &view, p)?);
    }
    let out = match task {
        Task::Sent => predict_sentences(&model, &docs, &externals)?,
        Task::Seg => {
            let force = a.force_sentence_starts.map_or(model.config.force_sentence_starts, |f| f == OnOff::On);
            predict_segments(&model, &docs, &externals, force)?
        }
        Task::Conn => predict_connectives(&model, &docs, &externals)?,
    };
    write_out(&a.out, write_conllu(&out, task).as_bytes(), &mut manifest)?;
    manifest.write(&manifest_path(a.manifest.as_deref(), &a.out))
}

fn task_section(model: &EnsembleModel) -> String {
    let mut cfg = PipelineConfig {
        general: model.general.clone(),
        ..Default::default()
    };
    *cfg.task_mut(model.task) = model.config.clone();
    cfg.to_text()
}

pub fn score(a: &ScoreArgs) -> CliResult<()> {
    let task: Task = a.task.into();
    let mut manifest = RunManifest::start("score");
    if a.gold.len() != a.pred.len() {
        return Err(CliError::new(
            CONFIG,
            format!("{} gold files but {} prediction files", a.gold.len(), a.pred.len()),
        ));
    }
    if a.dry_run {
        for (g, p) in a.gold.iter().zip(&a.pred) {
            check_exists("gold corpus", g)?;
            check_exists("prediction corpus", p)?;
        }
        return Ok(());
    }
    let genres = GenreRules::default();
    let mut rows = Vec::new();
    for (g, p) in a.gold.iter().zip(&a.pred) {
        let gold = read_corpus("gold corpus", g, &genres, &mut manifest)?;
        let pred = read_corpus("prediction corpus", p, &genres, &mut manifest)?;
        let s = match task {
            Task::Conn => score_connectives(&gold, &pred, a.conn_merge_bi),
            t => score_boundaries(&gold, &pred, t),
        }
        .map_err(|e| context(e, format!("{} vs {}", g.display(), p.display())))?;
        rows.push((file_stem(g), s));
    }
    print!("{}", report(&rows));
    let mut first = a.pred[0].as_os_str().to_os_string();
    first.push(".score");
    manifest.write(&manifest_path(a.manifest.as_deref(), Path::new(&first)))
}

pub fn baseline(a: &BaselineArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("baseline");
    if a.dry_run {
        return check_exists("input corpus", &a.input);
    }
    let docs = read_corpus("input corpus", &a.input, &GenreRules::default(), &mut manifest)?;
    let out = baseline_segment_by_sentence(&docs);
    write_out(&a.out, write_conllu(&out, Task::Seg).as_bytes(), &mut manifest)?;
    manifest.write(&manifest_path(a.manifest.as_deref(), &a.out))
}

pub fn build_lexicon(a: &LexiconArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("build-lexicon");
    if a.dry_run {
        return check_exists("paragraph file", &a.paragraphs);
    }
    let text = read("paragraph file", &a.paragraphs, &mut manifest)?;
    let paragraphs: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let lex = build_initial_lexicon(&paragraphs, a.min_freq, a.min_ratio);
    log::info!("{} lexicon entries", lex.len());
    write_out(&a.out, lex.to_text().as_bytes(), &mut manifest)?;
    manifest.write(&manifest_path(a.manifest.as_deref(), &a.out))
}
