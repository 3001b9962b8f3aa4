//! The per-token feature catalog and sliding-window extraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::chars::{char_type_counts, first_last_chars, orth_case};
use super::context::{quote_paren_state, sent_percentile, QuoteConfig};
use super::lexicon::Lexicon;
use super::schema::{FeatureKind, FeatureRecord, FeatureSchema, RawFrame, RawValue};
use super::syntax::{bin_head_distance, dep_brackets, ClausalRelations, SentenceTree, SLOT_NAMES};
use crate::corpus::Document;
use crate::error::{Error, Result};

pub const LEFT_SENTINEL: &str = "<s>";
pub const RIGHT_SENTINEL: &str = "</s>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotField {
    Deprel,
    Depth,
    SameParentLeft,
    SameParentRight,
}

const SLOT_FIELDS: [(SlotField, &str); 4] = [
    (SlotField::Deprel, "deprel"),
    (SlotField::Depth, "depth"),
    (SlotField::SameParentLeft, "same_parent_left"),
    (SlotField::SameParentRight, "same_parent_right"),
];

/// Every per-token feature that can be named in a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenFeature {
    /// Raw surface form.
    Form,
    /// Form if in the lexicon, else its UPOS.
    Word,
    Lemma,
    Upos,
    Xpos,
    Case,
    FirstChar,
    LastChar,
    Digits,
    Consonants,
    Vowels,
    OtherChars,
    TokLen,
    TokFreq,
    Genre,
    InQuote,
    InParen,
    SentPct,
    SentLen,
    Deprel,
    HeadDist,
    HeadDistBin,
    DepBracket,
    LSpan,
    RSpan,
    LChildNear,
    LChildFar,
    RChildNear,
    RChildFar,
    /// Tree feature of a window slot (`SLOT_NAMES` index; 2 is the node itself).
    Slot(u8, SlotField),
}

const SIMPLE: &[(TokenFeature, &str)] = &[
    (TokenFeature::Form, "form"),
    (TokenFeature::Word, "word"),
    (TokenFeature::Lemma, "lemma"),
    (TokenFeature::Upos, "upos"),
    (TokenFeature::Xpos, "xpos"),
    (TokenFeature::Case, "case"),
    (TokenFeature::FirstChar, "first_char"),
    (TokenFeature::LastChar, "last_char"),
    (TokenFeature::Digits, "n_digits"),
    (TokenFeature::Consonants, "n_consonants"),
    (TokenFeature::Vowels, "n_vowels"),
    (TokenFeature::OtherChars, "n_other"),
    (TokenFeature::TokLen, "tok_len"),
    (TokenFeature::TokFreq, "tok_frq"),
    (TokenFeature::Genre, "genre"),
    (TokenFeature::InQuote, "in_quote"),
    (TokenFeature::InParen, "in_paren"),
    (TokenFeature::SentPct, "sent_pct"),
    (TokenFeature::SentLen, "sent_len"),
    (TokenFeature::Deprel, "deprel"),
    (TokenFeature::HeadDist, "head_dist"),
    (TokenFeature::HeadDistBin, "head_dist_bin"),
    (TokenFeature::DepBracket, "depbracket"),
    (TokenFeature::LSpan, "lspan"),
    (TokenFeature::RSpan, "rspan"),
    (TokenFeature::LChildNear, "lchild_near"),
    (TokenFeature::LChildFar, "lchild_far"),
    (TokenFeature::RChildNear, "rchild_near"),
    (TokenFeature::RChildFar, "rchild_far"),
];

impl TokenFeature {
    pub fn name(self) -> String {
        if let TokenFeature::Slot(slot, field) = self {
            let field = SLOT_FIELDS.iter().find(|(f, _)| *f == field).unwrap().1;
            // the node slot reuses the plain names
            return if slot == 2 {
                if field == "deprel" {
                    "deprel".into()
                } else {
                    field.into()
                }
            } else {
                format!("{}_{field}", SLOT_NAMES[slot as usize])
            };
        }
        SIMPLE.iter().find(|(f, _)| *f == self).unwrap().1.to_string()
    }

    pub fn kind(self) -> FeatureKind {
        use TokenFeature::*;
        match self {
            Digits | Consonants | Vowels | OtherChars | TokLen | TokFreq | InQuote | InParen
            | SentPct | SentLen | HeadDist | LSpan | RSpan => FeatureKind::Numeric,
            Slot(_, SlotField::Deprel) => FeatureKind::Categorical,
            Slot(..) => FeatureKind::Numeric,
            _ => FeatureKind::Categorical,
        }
    }

    pub fn needs_syntax(self) -> bool {
        use TokenFeature::*;
        matches!(
            self,
            HeadDist
                | HeadDistBin
                | DepBracket
                | LSpan
                | RSpan
                | LChildNear
                | LChildFar
                | RChildNear
                | RChildFar
                | Slot(..)
        )
    }

    fn needs_subtree(self) -> bool {
        use TokenFeature::*;
        matches!(
            self,
            LSpan | RSpan | LChildNear | LChildFar | RChildNear | RChildFar | Slot(..)
        )
    }

    /// The `children` feature set: node, neighbour, parent and grandparent
    /// tree features plus span lengths and nearest/farthest child labels.
    pub fn subtree_set() -> Vec<TokenFeature> {
        let mut out = vec![
            TokenFeature::LSpan,
            TokenFeature::RSpan,
            TokenFeature::LChildNear,
            TokenFeature::LChildFar,
            TokenFeature::RChildNear,
            TokenFeature::RChildFar,
            TokenFeature::DepBracket,
            TokenFeature::Deprel,
        ];
        for slot in 0..SLOT_NAMES.len() as u8 {
            for (field, _) in SLOT_FIELDS {
                if slot == 2 && field == SlotField::Deprel {
                    continue;
                }
                out.push(TokenFeature::Slot(slot, field));
            }
        }
        out
    }
}

impl fmt::Display for TokenFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TokenFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some((f, _)) = SIMPLE.iter().find(|(_, n)| *n == s) {
            return Ok(*f);
        }
        for (field, fname) in SLOT_FIELDS {
            if s == fname && field != SlotField::Deprel {
                return Ok(TokenFeature::Slot(2, field));
            }
            if let Some(slot) = s.strip_suffix(fname).and_then(|p| p.strip_suffix('_')) {
                if let Some(i) = SLOT_NAMES.iter().position(|n| *n == slot && *n != "node") {
                    return Ok(TokenFeature::Slot(i as u8, field));
                }
            }
        }
        Err(Error::UnknownFeature(s.to_string()))
    }
}

/// Parses a list of feature names (`word, upos, ...`).
pub fn parse_features<S: AsRef<str>>(names: &[S]) -> Result<Vec<TokenFeature>> {
    names.iter().map(|n| n.as_ref().trim().parse()).collect()
}

/// Resources shared by feature computations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureContext {
    pub lexicon: Lexicon,
    pub language: String,
    pub clausal: ClausalRelations,
    pub quotes: QuoteConfig,
}

/// Raw values of `features` for every token of `doc`, in document order.
pub fn token_table(
    doc: &Document,
    features: &[TokenFeature],
    ctx: &FeatureContext,
) -> Result<Vec<Vec<RawValue>>> {
    let wants = |pred: fn(&TokenFeature) -> bool| features.iter().any(pred);
    let qp = if wants(|f| matches!(f, TokenFeature::InQuote | TokenFeature::InParen)) {
        quote_paren_state(doc, &ctx.quotes)
    } else {
        Vec::new()
    };
    let pct = sent_percentile(doc);
    let syntax = wants(|f| f.needs_syntax());
    let subtree = wants(|f| f.needs_subtree());
    let brackets = wants(|f| *f == TokenFeature::DepBracket);

    let mut rows = Vec::with_capacity(doc.token_count());
    let mut flat = 0;
    for (si, sent) in doc.sentences.iter().enumerate() {
        let tree = if syntax {
            Some(SentenceTree::new(sent)?)
        } else {
            None
        };
        let tags = if brackets {
            dep_brackets(sent, &ctx.clausal)?
        } else {
            Vec::new()
        };
        for (ti, tok) in sent.tokens.iter().enumerate() {
            let sub = if subtree {
                tree.as_ref().map(|t| t.features(ti))
            } else {
                None
            };
            let mut row = Vec::with_capacity(features.len());
            for f in features {
                use TokenFeature::*;
                let cat = |s: &str| RawValue::Cat(s.to_string());
                let v = match *f {
                    Form => cat(&tok.form),
                    Word => cat(ctx.lexicon.lookup(&tok.form, &tok.upos)),
                    Lemma => cat(&tok.lemma),
                    Upos => cat(&tok.upos),
                    Xpos => cat(&tok.xpos),
                    Case => cat(orth_case(&tok.form)),
                    FirstChar => RawValue::Cat(first_last_chars(&tok.form, &ctx.language).0),
                    LastChar => RawValue::Cat(first_last_chars(&tok.form, &ctx.language).1),
                    Digits => RawValue::Num(char_type_counts(&tok.form).digits as f64),
                    Consonants => RawValue::Num(char_type_counts(&tok.form).consonants as f64),
                    Vowels => RawValue::Num(char_type_counts(&tok.form).vowels as f64),
                    OtherChars => RawValue::Num(char_type_counts(&tok.form).other as f64),
                    TokLen => RawValue::Num(tok.form.chars().count() as f64),
                    TokFreq => RawValue::Num(ctx.lexicon.log_frequency(&tok.form)),
                    Genre => cat(&doc.genre),
                    InQuote => RawValue::Num(f64::from(u8::from(qp[flat].0))),
                    InParen => RawValue::Num(f64::from(u8::from(qp[flat].1))),
                    SentPct => RawValue::Num(pct[si]),
                    SentLen => RawValue::Num(sent.len() as f64),
                    Deprel => cat(&tok.deprel),
                    HeadDist => RawValue::Num(head_dist(tok.head, tok.index) as f64),
                    HeadDistBin => cat(bin_head_distance(head_dist(tok.head, tok.index)).as_str()),
                    DepBracket => cat(&tags[ti]),
                    LSpan => RawValue::Num(sub.as_ref().unwrap().lspan as f64),
                    RSpan => RawValue::Num(sub.as_ref().unwrap().rspan as f64),
                    LChildNear => cat(&sub.as_ref().unwrap().lchild_near),
                    LChildFar => cat(&sub.as_ref().unwrap().lchild_far),
                    RChildNear => cat(&sub.as_ref().unwrap().rchild_near),
                    RChildFar => cat(&sub.as_ref().unwrap().rchild_far),
                    Slot(slot, field) => {
                        let s = &sub.as_ref().unwrap().slots[slot as usize];
                        match field {
                            SlotField::Deprel => cat(&s.deprel),
                            SlotField::Depth => RawValue::Num(s.depth as f64),
                            SlotField::SameParentLeft => {
                                RawValue::Num(f64::from(u8::from(s.same_parent_left)))
                            }
                            SlotField::SameParentRight => {
                                RawValue::Num(f64::from(u8::from(s.same_parent_right)))
                            }
                        }
                    }
                };
                row.push(v);
            }
            rows.push(row);
            flat += 1;
        }
    }
    Ok(rows)
}

fn head_dist(head: Option<usize>, index: usize) -> i64 {
    match head {
        Some(0) | None => 0,
        Some(h) => h as i64 - index as i64,
    }
}

/// A feature at a window offset: `word` (offset 0), `word@-1`, `word@+2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindowedName {
    pub feature: TokenFeature,
    pub offset: i32,
}

impl fmt::Display for WindowedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset == 0 {
            write!(f, "{}", self.feature)
        } else {
            write!(f, "{}@{:+}", self.feature, self.offset)
        }
    }
}

impl FromStr for WindowedName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (base, offset) = match s.split_once('@') {
            Some((b, o)) => (
                b,
                o.parse::<i32>()
                    .map_err(|_| Error::UnknownFeature(s.to_string()))?,
            ),
            None => (s, 0),
        };
        let feature = base
            .parse()
            .map_err(|_| Error::UnknownFeature(s.to_string()))?;
        Ok(WindowedName { feature, offset })
    }
}

fn half_window(window_size: usize) -> Result<i32> {
    if window_size == 0 || window_size.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "window size must be odd and at least 1, got {window_size}"
        )));
    }
    Ok((window_size / 2) as i32)
}

fn sentinel(kind: FeatureKind, left: bool) -> RawValue {
    match kind {
        FeatureKind::Numeric => RawValue::Num(0.0),
        FeatureKind::Categorical if left => RawValue::Cat(LEFT_SENTINEL.into()),
        FeatureKind::Categorical => RawValue::Cat(RIGHT_SENTINEL.into()),
    }
}

/// Feature names, offset-major, for positions `p-k ..= p+k`.
pub fn window_names(features: &[TokenFeature], window_size: usize) -> Result<Vec<WindowedName>> {
    let k = half_window(window_size)?;
    Ok((-k..=k)
        .flat_map(|offset| {
            features
                .iter()
                .map(move |&feature| WindowedName { feature, offset })
        })
        .collect())
}

/// Window-expanded raw features for every token of every document.
pub fn windowed_frame(
    docs: &[Document],
    features: &[TokenFeature],
    window_size: usize,
    ctx: &FeatureContext,
) -> Result<RawFrame> {
    let names = window_names(features, window_size)?;
    let mut frame = RawFrame::new(
        names.iter().map(ToString::to_string).collect(),
        names.iter().map(|n| n.feature.kind()).collect(),
    );
    for doc in docs {
        let table = token_table(doc, features, ctx)?;
        for p in 0..table.len() {
            frame.rows.push(window_row(&table, p, &names, features));
        }
    }
    Ok(frame)
}

fn window_row(
    table: &[Vec<RawValue>],
    p: usize,
    names: &[WindowedName],
    features: &[TokenFeature],
) -> Vec<RawValue> {
    names
        .iter()
        .map(|n| {
            let col = features.iter().position(|f| *f == n.feature).unwrap();
            let q = p as i64 + i64::from(n.offset);
            if q < 0 {
                sentinel(n.feature.kind(), true)
            } else if q as usize >= table.len() {
                sentinel(n.feature.kind(), false)
            } else {
                table[q as usize][col].clone()
            }
        })
        .collect()
}

/// Encodes the window around `position` (0-based over the document's tokens)
/// against `schema`, whose entry names must be windowed feature names within
/// the window.
pub fn window_features(
    doc: &Document,
    position: usize,
    window_size: usize,
    schema: &FeatureSchema,
    ctx: &FeatureContext,
) -> Result<FeatureRecord> {
    let k = half_window(window_size)?;
    let names = schema
        .names()
        .map(|n| {
            let w: WindowedName = n.parse()?;
            if w.offset.abs() > k {
                return Err(Error::Config(format!(
                    "feature `{n}` lies outside a window of {window_size}"
                )));
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut features: Vec<TokenFeature> = Vec::new();
    for n in &names {
        if !features.contains(&n.feature) {
            features.push(n.feature);
        }
    }
    let table = token_table(doc, &features, ctx)?;
    if position >= table.len() {
        return Err(Error::Invalid(format!(
            "position {position} beyond document of {} tokens",
            table.len()
        )));
    }
    let row = window_row(&table, position, &names, &features);
    let values = row
        .iter()
        .enumerate()
        .map(|(i, v)| schema.encode_value(i, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureRecord {
        values,
        fingerprint: schema.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};
    use crate::featurizer::lexicon::build_lexicon;
    use crate::featurizer::schema::Value;

    fn doc() -> Document {
        let tokens: Vec<Token> = ["Hello", "world", ".", "Bye"]
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut t = Token::new(i + 1, *f);
                t.upos = if *f == "." { "PUNCT" } else { "NOUN" }.into();
                t
            })
            .collect();
        Document {
            name: "d".into(),
            genre: "news".into(),
            sentences: vec![Sentence {
                tokens,
                ..Sentence::default()
            }],
        }
    }

    #[test]
    fn names_round_trip() {
        for f in TokenFeature::subtree_set()
            .into_iter()
            .chain(SIMPLE.iter().map(|(f, _)| *f))
        {
            assert_eq!(f.name().parse::<TokenFeature>().unwrap(), f, "{}", f.name());
        }
        let w: WindowedName = "word@-2".parse().unwrap();
        assert_eq!(w.offset, -2);
        assert_eq!(w.to_string(), "word@-2");
        assert!(matches!("bogus".parse::<TokenFeature>(), Err(Error::UnknownFeature(_))));
    }

    fn schema_for(names: &[&str]) -> FeatureSchema {
        let frame = windowed_frame(&[doc()], &[TokenFeature::Form, TokenFeature::TokLen], 5, &FeatureContext::default()).unwrap();
        let full = FeatureSchema::fit(&frame, 1).unwrap();
        let keep: Vec<usize> = names.iter().map(|n| full.position(n).unwrap()).collect();
        full.restrict(&keep)
    }

    #[test]
    fn left_sentinels_at_start() {
        let schema = schema_for(&["form@-1", "form", "tok_len@-1"]);
        let ctx = FeatureContext::default();
        let rec = window_features(&doc(), 0, 3, &schema, &ctx).unwrap();
        let left = schema.entries[0].vocabulary[LEFT_SENTINEL];
        assert_eq!(rec.values[0], Value::Cat(left));
        assert_eq!(rec.values[2], Value::Num(0.0));
    }

    #[test]
    fn window_one_is_node_only() {
        let names = window_names(&[TokenFeature::Form, TokenFeature::TokLen], 1).unwrap();
        assert_eq!(names.len(), 2);
        assert!(names.iter().all(|n| n.offset == 0));
        let frame = windowed_frame(&[doc()], &[TokenFeature::Form], 5, &FeatureContext::default()).unwrap();
        assert_eq!(frame.names.len(), 5);
        assert_eq!(frame.rows[1][0], RawValue::Cat(LEFT_SENTINEL.into()));
        assert_eq!(frame.rows[1][3], RawValue::Cat(".".into()));
        assert_eq!(frame.rows[3][4], RawValue::Cat(RIGHT_SENTINEL.into()));
    }

    #[test]
    fn unknown_feature_in_schema() {
        let mut schema = schema_for(&["form"]);
        schema.entries[0].name = "nonsense".into();
        let err = window_features(&doc(), 0, 3, &schema, &FeatureContext::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownFeature(n) if n == "nonsense"));
        assert!(window_names(&[TokenFeature::Form], 4).is_err());
    }

    #[test]
    fn lexicon_backoff_feature() {
        let ctx = FeatureContext {
            lexicon: build_lexicon(["Hello", "Hello", "world"], 1),
            ..FeatureContext::default()
        };
        let rows = token_table(&doc(), &[TokenFeature::Word, TokenFeature::TokFreq], &ctx).unwrap();
        assert_eq!(rows[0][0], RawValue::Cat("Hello".into()));
        assert_eq!(rows[1][0], RawValue::Cat("NOUN".into()));
        assert_eq!(rows[0][1], RawValue::Num(2f64.ln_1p()));
    }

    #[test]
    fn syntax_features_need_heads() {
        let err = token_table(&doc(), &[TokenFeature::DepBracket], &FeatureContext::default());
        assert!(matches!(err, Err(Error::MissingTrees(_))));
    }
}
