//! Line-oriented pipeline configuration: `key = value` pairs under
//! `[general]`, `[sent]`, `[seg]` and `[conn]` headers. Lists are
//! comma-separated; booleans accept on/off, true/false, yes/no and 1/0.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{GenreRules, Task};
use crate::error::{Error, Result};
use crate::featurizer::{parse_features, ClausalRelations, TokenFeature};
use crate::learners::TreeKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleKind {
    Mlp,
    Lr,
    Wiki,
    Punct,
    Subtree,
    Bow,
    Freq,
    /// Reads the gold labels; for plumbing checks only.
    Oracle,
    /// Predicts the training class prior everywhere.
    Constant,
}

impl ModuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModuleKind::Mlp => "mlp",
            ModuleKind::Lr => "lr",
            ModuleKind::Wiki => "wiki",
            ModuleKind::Punct => "punct",
            ModuleKind::Subtree => "subtree",
            ModuleKind::Bow => "bow",
            ModuleKind::Freq => "freq",
            ModuleKind::Oracle => "oracle",
            ModuleKind::Constant => "constant",
        }
    }

    fn allowed(self, task: Task) -> bool {
        match self {
            ModuleKind::Wiki | ModuleKind::Punct => task == Task::Sent,
            ModuleKind::Bow => task == Task::Seg,
            ModuleKind::Freq => task == Task::Conn,
            _ => true,
        }
    }
}

impl FromStr for ModuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mlp" => ModuleKind::Mlp,
            "lr" => ModuleKind::Lr,
            "wiki" => ModuleKind::Wiki,
            "punct" => ModuleKind::Punct,
            "subtree" => ModuleKind::Subtree,
            "bow" | "bowcounter" => ModuleKind::Bow,
            "freq" => ModuleKind::Freq,
            "oracle" => ModuleKind::Oracle,
            "constant" => ModuleKind::Constant,
            other => return Err(Error::Config(format!("unknown base module `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralConfig {
    pub seed: u64,
    pub folds: usize,
    pub language: String,
    pub clausal: Vec<String>,
    pub genres: GenreRules,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        GeneralConfig {
            seed: 42,
            folds: 5,
            language: "eng".into(),
            clausal: ClausalRelations::default().labels.into_iter().collect(),
            genres: GenreRules::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub modules: Vec<ModuleKind>,
    /// Names of base modules whose predictions come from files.
    pub externals: Vec<String>,
    pub meta_features: Vec<TokenFeature>,
    pub meta_window: usize,
    pub meta_lexicon: usize,
    pub meta_candidates: Vec<TreeKind>,
    pub meta_trees: usize,
    pub meta_depth: usize,
    pub meta_gbt_depth: usize,
    pub meta_min_leaf: usize,
    pub lexicon_size: usize,
    pub mlp_features: Vec<TokenFeature>,
    pub mlp_windows: Vec<usize>,
    pub mlp_epochs: usize,
    pub mlp_embed: usize,
    pub mlp_hidden: Vec<usize>,
    pub mlp_lr: f64,
    pub lr_features: Vec<TokenFeature>,
    pub lr_window: usize,
    pub lr_grid: Vec<f64>,
    pub wiki_min_freq: u64,
    pub wiki_min_ratio: f64,
    /// Prebuilt initial-token lexicon; built from the training data when unset.
    pub wiki_lexicon: Option<String>,
    pub subtree_features: Vec<TokenFeature>,
    pub subtree_window: usize,
    pub subtree_children: bool,
    pub subtree_trees: usize,
    pub subtree_depth: usize,
    pub subtree_filter: bool,
    pub bow_words: usize,
    pub bow_grid: Vec<f64>,
    pub force_sentence_starts: bool,
}

fn feats(names: &[&str]) -> Vec<TokenFeature> {
    parse_features(names).expect("built-in feature names")
}

impl TaskConfig {
    pub fn defaults(task: Task) -> Self {
        let (modules, meta_features, meta_candidates) = match task {
            Task::Sent => (
                vec![ModuleKind::Mlp, ModuleKind::Lr, ModuleKind::Wiki, ModuleKind::Punct],
                feats(&["word", "upos", "case"]),
                vec![TreeKind::Forest, TreeKind::ExtraTrees, TreeKind::Gbt],
            ),
            Task::Seg => (
                vec![ModuleKind::Subtree, ModuleKind::Bow],
                feats(&["word", "upos", "deprel", "genre", "sent_len", "depbracket"]),
                vec![TreeKind::Forest, TreeKind::ExtraTrees, TreeKind::Gbt],
            ),
            Task::Conn => (vec![ModuleKind::Freq], feats(&["word", "upos", "case"]), vec![TreeKind::Forest]),
        };
        TaskConfig {
            modules,
            externals: Vec::new(),
            meta_features,
            meta_window: 3,
            meta_lexicon: 100,
            meta_candidates,
            meta_trees: 200,
            meta_depth: 12,
            meta_gbt_depth: 4,
            meta_min_leaf: 1,
            lexicon_size: 200,
            mlp_features: feats(&["word", "upos", "case"]),
            mlp_windows: vec![5, 7, 9],
            mlp_epochs: 8,
            mlp_embed: 16,
            mlp_hidden: vec![64],
            mlp_lr: 0.01,
            lr_features: feats(&[
                "first_char",
                "last_char",
                "upos",
                "n_consonants",
                "n_vowels",
                "n_digits",
                "n_other",
                "tok_len",
                "tok_frq",
            ]),
            lr_window: 5,
            lr_grid: vec![0.01, 0.1, 1.0, 10.0],
            wiki_min_freq: 10,
            wiki_min_ratio: 0.5,
            wiki_lexicon: None,
            subtree_features: feats(&["word", "case", "upos", "deprel"]),
            subtree_window: 3,
            subtree_children: true,
            subtree_trees: 200,
            subtree_depth: 4,
            subtree_filter: true,
            bow_words: 200,
            bow_grid: vec![0.1, 1.0, 10.0, 100.0],
            force_sentence_starts: true,
        }
    }

    /// Ids of all base modules, trained ones first.
    pub fn module_ids(&self) -> Vec<String> {
        self.modules
            .iter()
            .map(|m| m.as_str().to_string())
            .chain(self.externals.iter().cloned())
            .collect()
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "modules" => self.modules = list(value)?,
            "externals" => self.externals = strings(value),
            "meta_features" => self.meta_features = features(value)?,
            "meta_window" => self.meta_window = scalar(key, value)?,
            "meta_lexicon" => self.meta_lexicon = scalar(key, value)?,
            "meta_candidates" => self.meta_candidates = list(value)?,
            "meta_trees" => self.meta_trees = scalar(key, value)?,
            "meta_depth" => self.meta_depth = scalar(key, value)?,
            "meta_gbt_depth" => self.meta_gbt_depth = scalar(key, value)?,
            "meta_min_leaf" => self.meta_min_leaf = scalar(key, value)?,
            "lexicon_size" => self.lexicon_size = scalar(key, value)?,
            "mlp_features" => self.mlp_features = features(value)?,
            "mlp_windows" => self.mlp_windows = scalars(key, value)?,
            "mlp_epochs" => self.mlp_epochs = scalar(key, value)?,
            "mlp_embed" => self.mlp_embed = scalar(key, value)?,
            "mlp_hidden" => self.mlp_hidden = scalars(key, value)?,
            "mlp_lr" => self.mlp_lr = scalar(key, value)?,
            "lr_features" => self.lr_features = features(value)?,
            "lr_window" => self.lr_window = scalar(key, value)?,
            "lr_grid" => self.lr_grid = scalars(key, value)?,
            "wiki_min_freq" => self.wiki_min_freq = scalar(key, value)?,
            "wiki_min_ratio" => self.wiki_min_ratio = scalar(key, value)?,
            "wiki_lexicon" => self.wiki_lexicon = (!value.is_empty() && value != "none").then(|| value.to_string()),
            "subtree_features" => self.subtree_features = features(value)?,
            "subtree_window" => self.subtree_window = scalar(key, value)?,
            "subtree_children" => self.subtree_children = boolean(key, value)?,
            "subtree_trees" => self.subtree_trees = scalar(key, value)?,
            "subtree_depth" => self.subtree_depth = scalar(key, value)?,
            "subtree_filter" => self.subtree_filter = boolean(key, value)?,
            "bow_words" => self.bow_words = scalar(key, value)?,
            "bow_grid" => self.bow_grid = scalars(key, value)?,
            "force_sentence_starts" => self.force_sentence_starts = boolean(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let join = |v: Vec<String>| v.join(", ");
        let fs = |v: &[TokenFeature]| join(v.iter().map(|f| f.name()).collect());
        let nums = |v: &[usize]| join(v.iter().map(|x| x.to_string()).collect());
        let reals = |v: &[f64]| join(v.iter().map(|x| x.to_string()).collect());
        let onoff = |b: bool| if b { "on" } else { "off" }.to_string();
        vec![
            ("modules", join(self.modules.iter().map(|m| m.as_str().into()).collect())),
            ("externals", self.externals.join(", ")),
            ("meta_features", fs(&self.meta_features)),
            ("meta_window", self.meta_window.to_string()),
            ("meta_lexicon", self.meta_lexicon.to_string()),
            ("meta_candidates", join(self.meta_candidates.iter().map(|k| k.as_str().into()).collect())),
            ("meta_trees", self.meta_trees.to_string()),
            ("meta_depth", self.meta_depth.to_string()),
            ("meta_gbt_depth", self.meta_gbt_depth.to_string()),
            ("meta_min_leaf", self.meta_min_leaf.to_string()),
            ("lexicon_size", self.lexicon_size.to_string()),
            ("mlp_features", fs(&self.mlp_features)),
            ("mlp_windows", nums(&self.mlp_windows)),
            ("mlp_epochs", self.mlp_epochs.to_string()),
            ("mlp_embed", self.mlp_embed.to_string()),
            ("mlp_hidden", nums(&self.mlp_hidden)),
            ("mlp_lr", self.mlp_lr.to_string()),
            ("lr_features", fs(&self.lr_features)),
            ("lr_window", self.lr_window.to_string()),
            ("lr_grid", reals(&self.lr_grid)),
            ("wiki_min_freq", self.wiki_min_freq.to_string()),
            ("wiki_min_ratio", self.wiki_min_ratio.to_string()),
            ("wiki_lexicon", self.wiki_lexicon.clone().unwrap_or_else(|| "none".into())),
            ("subtree_features", fs(&self.subtree_features)),
            ("subtree_window", self.subtree_window.to_string()),
            ("subtree_children", onoff(self.subtree_children)),
            ("subtree_trees", self.subtree_trees.to_string()),
            ("subtree_depth", self.subtree_depth.to_string()),
            ("subtree_filter", onoff(self.subtree_filter)),
            ("bow_words", self.bow_words.to_string()),
            ("bow_grid", reals(&self.bow_grid)),
            ("force_sentence_starts", onoff(self.force_sentence_starts)),
        ]
    }

    pub fn validate(&self, task: Task) -> Result<()> {
        if self.modules.is_empty() && self.externals.is_empty() {
            return Err(Error::Config(format!("[{task}] enables no base modules")));
        }
        if let Some(m) = self.modules.iter().find(|m| !m.allowed(task)) {
            return Err(Error::Config(format!("base module `{}` does not apply to task {task}", m.as_str())));
        }
        let ids = self.module_ids();
        if let Some(dup) = ids.iter().enumerate().find(|(i, id)| ids[..*i].contains(id)) {
            return Err(Error::Config(format!("base module id `{}` used twice", dup.1)));
        }
        if self.meta_candidates.is_empty() {
            return Err(Error::Config(format!("[{task}] lists no metalearner candidates")));
        }
        let mut windows = vec![("meta_window", self.meta_window), ("lr_window", self.lr_window), ("subtree_window", self.subtree_window)];
        windows.extend(self.mlp_windows.iter().map(|&w| ("mlp_windows", w)));
        if let Some((k, w)) = windows.iter().find(|(_, w)| w % 2 == 0) {
            return Err(Error::Config(format!("{k} must be odd, got {w}")));
        }
        if self.modules.contains(&ModuleKind::Mlp) && self.mlp_windows.is_empty() {
            return Err(Error::Config("mlp_windows is empty".into()));
        }
        if self.meta_trees == 0 || self.meta_depth == 0 || self.meta_gbt_depth == 0 {
            return Err(Error::Config("metalearner trees and depths must be positive".into()));
        }
        Ok(())
    }
}

fn strings(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn list<T: FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    strings(value).iter().map(|s| s.parse()).collect()
}

fn features(value: &str) -> Result<Vec<TokenFeature>> {
    parse_features(&strings(value))
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn scalars<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    strings(value).iter().map(|s| scalar(key, s)).collect()
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub general: GeneralConfig,
    pub sent: TaskConfig,
    pub seg: TaskConfig,
    pub conn: TaskConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            general: GeneralConfig::default(),
            sent: TaskConfig::defaults(Task::Sent),
            seg: TaskConfig::defaults(Task::Seg),
            conn: TaskConfig::defaults(Task::Conn),
        }
    }
}

impl PipelineConfig {
    pub fn task(&self, task: Task) -> &TaskConfig {
        match task {
            Task::Sent => &self.sent,
            Task::Seg => &self.seg,
            Task::Conn => &self.conn,
        }
    }

    pub fn task_mut(&mut self, task: Task) -> &mut TaskConfig {
        match task {
            Task::Sent => &mut self.sent,
            Task::Seg => &mut self.seg,
            Task::Conn => &mut self.conn,
        }
    }

    /// Parses a configuration over the defaults. Keys before any header
    /// belong to `[general]`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut section = "general".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", i + 1)),
                other => other,
            };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !matches!(section.as_str(), "general" | "sent" | "seg" | "conn") {
                    return Err(at(Error::Config(format!("unknown section [{section}]"))));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(Error::Config(format!("expected `key = value`, found `{line}`"))))?;
            let (key, value) = (key.trim(), value.trim());
            if section == "general" {
                cfg.general_set(key, value).map_err(at)?;
            } else {
                let task: Task = section.parse()?;
                cfg.task_mut(task).set(key, value).map_err(at)?;
            }
        }
        Ok(cfg)
    }

    fn general_set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.general;
        match key {
            "seed" => g.seed = scalar(key, value)?,
            "folds" => g.folds = scalar(key, value)?,
            "language" => g.language = value.to_string(),
            "clausal" => g.clausal = strings(value),
            "genres" => {
                let mut rules = GenreRules::default();
                for pair in strings(value) {
                    let (sub, tag) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("genre rule `{pair}` is not `substring:tag`")))?;
                    if sub == "*" {
                        rules.default = tag.to_string();
                    } else {
                        rules.rules.push((sub.to_string(), tag.to_string()));
                    }
                }
                g.genres = rules;
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.general.folds < 2 {
            return Err(Error::Config("folds must be at least 2".into()));
        }
        for t in [Task::Sent, Task::Seg, Task::Conn] {
            self.task(t).validate(t)?;
        }
        Ok(())
    }

    /// Every setting, defaults included, in the format `parse` reads.
    pub fn to_text(&self) -> String {
        let mut s = String::from("[general]\n");
        let g = &self.general;
        let _ = writeln!(s, "seed = {}", g.seed);
        let _ = writeln!(s, "folds = {}", g.folds);
        let _ = writeln!(s, "language = {}", g.language);
        let _ = writeln!(s, "clausal = {}", g.clausal.join(", "));
        let mut genres: Vec<String> = g.genres.rules.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        genres.push(format!("*:{}", g.genres.default));
        let _ = writeln!(s, "genres = {}", genres.join(", "));
        for t in [Task::Sent, Task::Seg, Task::Conn] {
            let _ = writeln!(s, "\n[{t}]");
            for (k, v) in self.task(t).entries() {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.seg.force_sentence_starts = false;
        cfg.conn.externals = vec!["rnn".into()];
        cfg.general.genres.rules.push(("gum_".into(), "gum".into()));
        let text = cfg.to_text();
        assert_eq!(PipelineConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn sections_and_errors() {
        let cfg = PipelineConfig::parse("seed = 7\n[seg]\nforce_sentence_starts = off # comment\nmeta_trees = 10\n").unwrap();
        assert_eq!(cfg.general.seed, 7);
        assert!(!cfg.seg.force_sentence_starts);
        assert_eq!(cfg.seg.meta_trees, 10);
        assert!(cfg.sent.force_sentence_starts);
        assert!(matches!(PipelineConfig::parse("[seg]\nmeta_features = word, blorp"), Err(Error::UnknownFeature(f)) if f == "blorp"));
        assert!(matches!(PipelineConfig::parse("[seg]\nbogus = 1"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::parse("[nope]"), Err(Error::Config(_))));
        let mut bad = PipelineConfig::default();
        bad.seg.modules = vec![ModuleKind::Punct];
        assert!(bad.validate().is_err());
        bad.seg.modules.clear();
        assert!(bad.validate().is_err());
        let mut even = PipelineConfig::default();
        even.sent.mlp_windows = vec![4];
        assert!(even.validate().is_err());
        assert!(PipelineConfig::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn unknown_feature_names_are_reported(name in "[a-z]{3,10}") {
            prop_assume!(name.parse::<TokenFeature>().is_err());
            let text = format!("[conn]\nmeta_features = word, {name}\n");
            match PipelineConfig::parse(&text) {
                Err(Error::UnknownFeature(f)) => prop_assert_eq!(f, name),
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }
}
