//! Reading and writing CoNLL-U style shared-task files.
//!
//! Discourse labels live in the MISC column: `BeginSeg=Yes` marks the first
//! token of a discourse unit and `Seg=B-Conn` / `Seg=I-Conn` mark connective
//! spans. Documents are delimited by `# newdoc id = NAME` comments; a file
//! without such markers is read as a single document.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three token-level tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Sent,
    Seg,
    Conn,
}

impl Task {
    /// Class labels in the order used by every probability vector for this task.
    pub fn classes(self) -> &'static [&'static str] {
        match self {
            Task::Sent => &["SentStart", "NoStart"],
            Task::Seg => &["BeginSeg", "NoSeg"],
            Task::Conn => &["B-Conn", "I-Conn", "O"],
        }
    }

    /// Gold class id of a token for this task.
    pub fn gold_class(self, token: &Token) -> usize {
        match self {
            Task::Sent => usize::from(!token.sent_initial),
            Task::Seg => usize::from(token.seg_label == SegLabel::NoSeg),
            Task::Conn => match token.conn_label {
                ConnLabel::B => 0,
                ConnLabel::I => 1,
                ConnLabel::O => 2,
            },
        }
    }

    /// Writes a predicted class id into the token's label for this task.
    pub fn set_class(self, token: &mut Token, class: usize) {
        match self {
            Task::Sent => token.sent_initial = class == 0,
            Task::Seg => {
                token.seg_label = if class == 0 {
                    SegLabel::BeginSeg
                } else {
                    SegLabel::NoSeg
                }
            }
            Task::Conn => {
                token.conn_label = match class {
                    0 => ConnLabel::B,
                    1 => ConnLabel::I,
                    _ => ConnLabel::O,
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Sent => "sent",
            Task::Seg => "seg",
            Task::Conn => "conn",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sent" => Ok(Task::Sent),
            "seg" => Ok(Task::Seg),
            "conn" => Ok(Task::Conn),
            other => Err(Error::Config(format!(
                "unknown task `{other}` (expected sent, seg or conn)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegLabel {
    BeginSeg,
    #[default]
    NoSeg,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConnLabel {
    B,
    I,
    #[default]
    O,
}

impl ConnLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ConnLabel::B => "B-Conn",
            ConnLabel::I => "I-Conn",
            ConnLabel::O => "O",
        }
    }

    pub fn is_conn(self) -> bool {
        self != ConnLabel::O
    }
}

/// One syntactic word.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// Sentence-internal head index, 0 for the root, `None` when no syntax is available.
    pub head: Option<usize>,
    pub deprel: String,
    pub deps: String,
    /// MISC entries other than the discourse labels, in file order.
    pub misc: Vec<String>,
    pub seg_label: SegLabel,
    pub conn_label: ConnLabel,
    pub sent_initial: bool,
}

impl Token {
    pub fn new(index: usize, form: impl Into<String>) -> Self {
        Token {
            index,
            form: form.into(),
            lemma: "_".into(),
            upos: "_".into(),
            xpos: "_".into(),
            feats: "_".into(),
            head: None,
            deprel: "_".into(),
            deps: "_".into(),
            misc: Vec::new(),
            seg_label: SegLabel::NoSeg,
            conn_label: ConnLabel::O,
            sent_initial: index == 1,
        }
    }
}

/// A multiword token range line (`3-4 du _ ...`), kept only for writing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiwordToken {
    /// First and last syntactic word positions covered (1-based, inclusive).
    pub first: usize,
    pub last: usize,
    /// Columns 2..10 exactly as read.
    pub columns: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// 0-based position of the sentence in its document.
    pub doc_offset: usize,
    /// Comment lines (without `# newdoc`) preceding the sentence.
    pub comments: Vec<String>,
    pub multiword: Vec<MultiwordToken>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// True when every token carries a head.
    pub fn has_syntax(&self) -> bool {
        self.tokens.iter().all(|t| t.head.is_some())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub name: String,
    pub sentences: Vec<Sentence>,
    pub genre: String,
}

impl Document {
    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn tokens_mut(&mut self) -> impl Iterator<Item = &mut Token> {
        self.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut())
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn has_syntax(&self) -> bool {
        self.sentences.iter().all(Sentence::has_syntax)
    }

    /// Collapses the document into one sentence. Sentence starts survive in
    /// `sent_initial`; heads are dropped because they are sentence-relative.
    pub fn flatten(&self) -> Document {
        let mut tokens = Vec::with_capacity(self.token_count());
        let mut multiword = Vec::new();
        for sent in &self.sentences {
            let base = tokens.len();
            for mw in &sent.multiword {
                multiword.push(MultiwordToken {
                    first: mw.first + base,
                    last: mw.last + base,
                    columns: mw.columns.clone(),
                });
            }
            for tok in &sent.tokens {
                let mut t = tok.clone();
                t.index = tokens.len() + 1;
                t.head = None;
                tokens.push(t);
            }
        }
        Document {
            name: self.name.clone(),
            genre: self.genre.clone(),
            sentences: vec![Sentence {
                tokens,
                doc_offset: 0,
                comments: Vec::new(),
                multiword,
            }],
        }
    }

    /// Re-draws sentence boundaries from the tokens' `sent_initial` flags.
    /// Sentences whose extent is unchanged keep their syntax and comments.
    pub fn resplit(&self) -> Document {
        let mut originals: Vec<(usize, &Sentence)> = Vec::new();
        let mut offset = 0;
        for s in &self.sentences {
            originals.push((offset, s));
            offset += s.len();
        }
        let flat: Vec<(usize, &Token)> = self.tokens().enumerate().collect();
        let mut bounds = Vec::new();
        for (pos, tok) in &flat {
            if *pos == 0 || tok.sent_initial {
                bounds.push(*pos);
            }
        }
        let mut sentences = Vec::with_capacity(bounds.len());
        for (i, &start) in bounds.iter().enumerate() {
            let end = bounds.get(i + 1).copied().unwrap_or(flat.len());
            let doc_offset = sentences.len();
            if let Some((_, orig)) = originals
                .iter()
                .find(|(o, s)| *o == start && s.len() == end - start)
            {
                let mut s = (*orig).clone();
                s.doc_offset = doc_offset;
                for t in &mut s.tokens {
                    t.sent_initial = t.index == 1;
                }
                sentences.push(s);
                continue;
            }
            let mut tokens = Vec::with_capacity(end - start);
            for (_, tok) in &flat[start..end] {
                let mut t = (*tok).clone();
                t.index = tokens.len() + 1;
                t.head = None;
                t.sent_initial = t.index == 1;
                tokens.push(t);
            }
            let mut multiword = Vec::new();
            for (o, s) in &originals {
                for mw in &s.multiword {
                    let (first, last) = (o + mw.first - 1, o + mw.last - 1);
                    if first >= start && last < end {
                        multiword.push(MultiwordToken {
                            first: first - start + 1,
                            last: last - start + 1,
                            columns: mw.columns.clone(),
                        });
                    }
                }
            }
            sentences.push(Sentence {
                tokens,
                doc_offset,
                comments: Vec::new(),
                multiword,
            });
        }
        Document {
            name: self.name.clone(),
            genre: self.genre.clone(),
            sentences,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ParseMode {
    /// Keep the sentence splits found in the file.
    #[default]
    GoldSentences,
    /// One token sequence per document; original splits survive only as `sent_initial`.
    Flat,
}

/// Ordered `substring -> tag` rules deriving a genre from a document name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenreRules {
    pub rules: Vec<(String, String)>,
    pub default: String,
}

impl Default for GenreRules {
    fn default() -> Self {
        GenreRules {
            rules: Vec::new(),
            default: "all".into(),
        }
    }
}

impl GenreRules {
    /// Reads `substring<TAB>tag` lines. A `*` substring sets the default tag.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = GenreRules::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (sub, tag) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "genre rule must be `substring<TAB>tag`".into(),
            })?;
            if sub == "*" {
                rules.default = tag.to_string();
            } else {
                rules.rules.push((sub.to_string(), tag.to_string()));
            }
        }
        Ok(rules)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (sub, tag) in &self.rules {
            out.push_str(&format!("{sub}\t{tag}\n"));
        }
        out.push_str(&format!("*\t{}\n", self.default));
        out
    }
}

/// First rule whose substring occurs in the name wins.
pub fn extract_genre(doc_name: &str, rules: &GenreRules) -> String {
    rules
        .rules
        .iter()
        .find(|(sub, _)| doc_name.contains(sub.as_str()))
        .map(|(_, tag)| tag.clone())
        .unwrap_or_else(|| rules.default.clone())
}

pub fn parse_conllu(text: &str, mode: ParseMode) -> Result<Vec<Document>> {
    parse_conllu_with(text, mode, &GenreRules::default())
}

pub fn parse_conllu_with(text: &str, mode: ParseMode, genres: &GenreRules) -> Result<Vec<Document>> {
    let mut parser = Parser::default();
    for (i, raw) in text.lines().enumerate() {
        parser.line(i + 1, raw.trim_end_matches('\r'))?;
    }
    parser.finish_sentence()?;
    parser.finish_doc();

    let mut docs = parser.docs;
    for doc in &mut docs {
        doc.genre = extract_genre(&doc.name, genres);
    }
    if mode == ParseMode::Flat {
        docs = docs.iter().map(Document::flatten).collect();
    }
    Ok(docs)
}

#[derive(Default)]
struct Parser {
    docs: Vec<Document>,
    current: Option<Document>,
    comments: Vec<String>,
    tokens: Vec<(usize, Token)>,
    multiword: Vec<MultiwordToken>,
}

impl Parser {
    fn doc(&mut self) -> &mut Document {
        self.current.get_or_insert_with(|| Document {
            name: "doc".into(),
            ..Document::default()
        })
    }

    fn finish_doc(&mut self) {
        if let Some(doc) = self.current.take() {
            if !doc.sentences.is_empty() {
                self.docs.push(doc);
            }
        }
    }

    fn line(&mut self, lineno: usize, line: &str) -> Result<()> {
        if line.trim().is_empty() {
            return self.finish_sentence();
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(name) = newdoc_id(comment) {
                self.finish_sentence()?;
                self.finish_doc();
                self.current = Some(Document {
                    name,
                    ..Document::default()
                });
            } else {
                self.comments.push(line.to_string());
            }
            return Ok(());
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        let id = cols[0];
        if let Some((a, b)) = id.split_once('-') {
            let first = parse_index(a, lineno)?;
            let last = parse_index(b, lineno)?;
            self.multiword.push(MultiwordToken {
                first,
                last,
                columns: cols[1..].join("\t"),
            });
            return Ok(());
        }
        if id.contains('.') {
            // empty nodes carry no surface token
            return Ok(());
        }
        let index = parse_index(id, lineno)?;
        let expected = self.tokens.len() + 1;
        if self.tokens.iter().any(|(_, t)| t.index == index) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("duplicate token index {index}"),
            });
        }
        if index != expected {
            return Err(Error::Parse {
                line: lineno,
                message: format!("token index {index} out of sequence (expected {expected})"),
            });
        }
        let head = match cols[6] {
            "_" => None,
            h => Some(h.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid head `{h}`"),
            })?),
        };
        let mut token = Token {
            index,
            form: cols[1].into(),
            lemma: cols[2].into(),
            upos: cols[3].into(),
            xpos: cols[4].into(),
            feats: cols[5].into(),
            head,
            deprel: cols[7].into(),
            deps: cols[8].into(),
            misc: Vec::new(),
            seg_label: SegLabel::NoSeg,
            conn_label: ConnLabel::O,
            sent_initial: index == 1,
        };
        if cols[9] != "_" {
            for entry in cols[9].split('|') {
                match entry {
                    "BeginSeg=Yes" => token.seg_label = SegLabel::BeginSeg,
                    "Seg=B-Conn" => token.conn_label = ConnLabel::B,
                    "Seg=I-Conn" => token.conn_label = ConnLabel::I,
                    "Seg=O" | "" => {}
                    other => token.misc.push(other.to_string()),
                }
            }
        }
        self.tokens.push((lineno, token));
        Ok(())
    }

    fn finish_sentence(&mut self) -> Result<()> {
        if self.tokens.is_empty() {
            if !self.multiword.is_empty() {
                return Err(Error::Parse {
                    line: 0,
                    message: "multiword range without syntactic words".into(),
                });
            }
            // stray comments before a blank line are kept for the next sentence
            return Ok(());
        }
        let len = self.tokens.len();
        for (lineno, tok) in &self.tokens {
            if let Some(h) = tok.head {
                if h > len {
                    return Err(Error::Parse {
                        line: *lineno,
                        message: format!("head {h} out of range for a {len}-token sentence"),
                    });
                }
                if h == tok.index {
                    return Err(Error::Parse {
                        line: *lineno,
                        message: format!("token {} is its own head", tok.index),
                    });
                }
            }
        }
        let tokens = std::mem::take(&mut self.tokens)
            .into_iter()
            .map(|(_, t)| t)
            .collect();
        let comments = std::mem::take(&mut self.comments);
        let multiword = std::mem::take(&mut self.multiword);
        let doc = self.doc();
        let doc_offset = doc.sentences.len();
        doc.sentences.push(Sentence {
            tokens,
            doc_offset,
            comments,
            multiword,
        });
        Ok(())
    }
}

fn newdoc_id(comment: &str) -> Option<String> {
    let rest = comment.trim_start().strip_prefix("newdoc")?;
    let rest = rest.trim_start().strip_prefix("id")?;
    let rest = rest.trim_start().strip_prefix('=')?;
    Some(rest.trim().to_string())
}

fn parse_index(s: &str, line: usize) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i),
        _ => Err(Error::Parse {
            line,
            message: format!("invalid token index `{s}`"),
        }),
    }
}

/// Serializes documents. `Seg` and `Conn` emit that task's labels in MISC;
/// `Sent` re-draws sentence boundaries from `sent_initial` and keeps both
/// label families.
pub fn write_conllu(docs: &[Document], task: Task) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str("# newdoc id = ");
        out.push_str(&doc.name);
        out.push('\n');
        let redrawn;
        let doc = if task == Task::Sent {
            redrawn = doc.resplit();
            &redrawn
        } else {
            doc
        };
        for sent in &doc.sentences {
            for c in &sent.comments {
                out.push_str(c);
                out.push('\n');
            }
            for tok in &sent.tokens {
                for mw in sent.multiword.iter().filter(|m| m.first == tok.index) {
                    out.push_str(&format!("{}-{}\t{}\n", mw.first, mw.last, mw.columns));
                }
                write_token(&mut out, tok, task);
            }
            out.push('\n');
        }
    }
    out
}

fn write_token(out: &mut String, tok: &Token, task: Task) {
    let head = tok
        .head
        .map(|h| h.to_string())
        .unwrap_or_else(|| "_".into());
    let mut misc: Vec<&str> = tok.misc.iter().map(String::as_str).collect();
    if matches!(task, Task::Seg | Task::Sent) && tok.seg_label == SegLabel::BeginSeg {
        misc.push("BeginSeg=Yes");
    }
    if matches!(task, Task::Conn | Task::Sent) {
        match tok.conn_label {
            ConnLabel::B => misc.push("Seg=B-Conn"),
            ConnLabel::I => misc.push("Seg=I-Conn"),
            ConnLabel::O => {}
        }
    }
    let misc = if misc.is_empty() {
        "_".to_string()
    } else {
        misc.join("|")
    };
    out.push_str(&format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        tok.index,
        tok.form,
        tok.lemma,
        tok.upos,
        tok.xpos,
        tok.feats,
        head,
        tok.deprel,
        tok.deps,
        misc
    ));
}
