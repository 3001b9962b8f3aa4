//! Document-level context features.

use serde::{Deserialize, Serialize};

use crate::corpus::Document;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoteConfig {
    /// Forms that toggle the quotation state.
    pub quotes: Vec<String>,
    pub open_paren: String,
    pub close_paren: String,
}

impl Default for QuoteConfig {
    fn default() -> Self {
        QuoteConfig {
            quotes: ["\"", "“", "”", "«", "»"].iter().map(|s| s.to_string()).collect(),
            open_paren: "(".into(),
            close_paren: ")".into(),
        }
    }
}

/// Per-token `(in_quote, in_paren)`. A token counts as inside when the state
/// is open both before and after it, so the delimiters that open or close the
/// outermost region are themselves outside.
pub fn quote_paren_state(doc: &Document, cfg: &QuoteConfig) -> Vec<(bool, bool)> {
    let mut quote_open = false;
    let mut depth = 0usize;
    doc.tokens()
        .map(|tok| {
            let quote_before = quote_open;
            let depth_before = depth;
            if cfg.quotes.contains(&tok.form) {
                quote_open = !quote_open;
            }
            if tok.form == cfg.open_paren {
                depth += 1;
            } else if tok.form == cfg.close_paren {
                depth = depth.saturating_sub(1);
            }
            (quote_before && quote_open, depth_before.min(depth) > 0)
        })
        .collect()
}

/// Relative position of each sentence: `i / max(n - 1, 1)`.
pub fn sent_percentile(doc: &Document) -> Vec<f64> {
    let n = doc.sentences.len();
    let denom = n.saturating_sub(1).max(1) as f64;
    (0..n).map(|i| i as f64 / denom).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};

    fn doc_of(forms: &str) -> Document {
        let tokens = forms
            .split_whitespace()
            .enumerate()
            .map(|(i, f)| Token::new(i + 1, f))
            .collect();
        Document {
            name: "d".into(),
            genre: "all".into(),
            sentences: vec![Sentence {
                tokens,
                ..Sentence::default()
            }],
        }
    }

    /// Brute-force interval checker: pair up delimiters, then mark tokens
    /// strictly between an opener and its closer.
    fn oracle(forms: &[&str]) -> Vec<(bool, bool)> {
        let n = forms.len();
        let mut inq = vec![false; n];
        let mut inp = vec![false; n];
        let quotes: Vec<usize> = (0..n).filter(|&i| forms[i] == "\"").collect();
        for pair in quotes.chunks(2) {
            if let [a, b] = pair {
                for x in inq.iter_mut().take(*b).skip(a + 1) {
                    *x = true;
                }
            } else {
                for x in inq.iter_mut().skip(pair[0] + 1) {
                    *x = true;
                }
            }
        }
        let mut stack = Vec::new();
        for i in 0..n {
            match forms[i] {
                "(" => stack.push(i),
                ")" => {
                    if let Some(a) = stack.pop() {
                        for x in inp.iter_mut().take(i).skip(a + 1) {
                            *x = true;
                        }
                    }
                }
                _ => {}
            }
        }
        for a in stack {
            for x in inp.iter_mut().skip(a + 1) {
                *x = true;
            }
        }
        inq.into_iter().zip(inp).collect()
    }

    fn check(text: &str) -> Vec<(bool, bool)> {
        let forms: Vec<&str> = text.split_whitespace().collect();
        let got = quote_paren_state(&doc_of(text), &QuoteConfig::default());
        assert_eq!(got, oracle(&forms), "{text}");
        got
    }

    #[test]
    fn quotes() {
        let s = check("He said \" go home \"");
        let inside: Vec<bool> = s.iter().map(|x| x.0).collect();
        assert_eq!(inside, vec![false, false, false, true, true, false]);
    }

    #[test]
    fn plain_and_nested() {
        assert!(check("no delimiters here").iter().all(|&(q, p)| !q && !p));
        let s = check("( a ( b ) c )");
        let inside: Vec<bool> = s.iter().map(|x| x.1).collect();
        assert_eq!(inside, vec![false, true, true, true, true, true, false]);
        check("x ) ) ( y");
        check("\" a ( b \" c ) d");
    }

    #[test]
    fn percentile() {
        let mut d = doc_of("a");
        assert_eq!(sent_percentile(&d), vec![0.0]);
        d.sentences = vec![Sentence::default(); 4];
        let p = sent_percentile(&d);
        assert!((p[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p[3], 1.0);
    }
}
