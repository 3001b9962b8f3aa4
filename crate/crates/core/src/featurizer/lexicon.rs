use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The `n` most frequent training forms. Forms outside the top `n` back off to
/// their POS tag. Full training counts are retained for `tok_frq`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub size: usize,
    /// form -> 1-based frequency rank
    pub items: BTreeMap<String, usize>,
    pub counts: BTreeMap<String, u64>,
}

/// Keeps the `n` most frequent forms; ties go to the lexicographically smaller form.
pub fn build_lexicon<'a, I>(forms: I, n: usize) -> Lexicon
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for f in forms {
        *counts.entry(f.to_string()).or_default() += 1;
    }
    let mut ranked: Vec<(&String, &u64)> = counts.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let items = ranked
        .iter()
        .take(n)
        .enumerate()
        .map(|(i, (f, _))| ((*f).clone(), i + 1))
        .collect();
    Lexicon {
        size: n,
        items,
        counts,
    }
}

impl Lexicon {
    pub fn contains(&self, form: &str) -> bool {
        self.items.contains_key(form)
    }

    /// The form itself when in the lexicon, otherwise its POS category.
    pub fn lookup<'a>(&'a self, form: &'a str, upos: &'a str) -> &'a str {
        if self.contains(form) {
            form
        } else {
            upos
        }
    }

    pub fn frequency(&self, form: &str) -> u64 {
        self.counts.get(form).copied().unwrap_or(0)
    }

    /// `ln(1 + count)` of the training frequency.
    pub fn log_frequency(&self, form: &str) -> f64 {
        (self.frequency(form) as f64).ln_1p()
    }

    /// `form<TAB>rank<TAB>count` lines; rank 0 marks forms outside the top `n`.
    pub fn to_text(&self) -> String {
        let mut out = format!("#lexicon\t{}\n", self.size);
        for (form, count) in &self.counts {
            let rank = self.items.get(form).copied().unwrap_or(0);
            out.push_str(&format!("{form}\t{rank}\t{count}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lex = Lexicon::default();
        for (i, line) in text.lines().enumerate() {
            let bad = |m: &str| Error::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            if let Some(rest) = line.strip_prefix("#lexicon\t") {
                lex.size = rest.parse().map_err(|_| bad("invalid lexicon size"))?;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [form, rank, count] = cols[..] else {
                return Err(bad("expected form<TAB>rank<TAB>count"));
            };
            let rank: usize = rank.parse().map_err(|_| bad("invalid rank"))?;
            let count: u64 = count.parse().map_err(|_| bad("invalid count"))?;
            if rank > 0 {
                lex.items.insert(form.to_string(), rank);
            }
            lex.counts.insert(form.to_string(), count);
        }
        Ok(lex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn top_n_with_backoff() {
        let lex = build_lexicon(["a", "b", "a", "c", "b", "a"], 2);
        assert_eq!(lex.items.keys().collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(lex.lookup("c", "NOUN"), "NOUN");
        assert_eq!(lex.lookup("a", "DET"), "a");
        assert_eq!(lex.frequency("c"), 1);
    }

    #[test]
    fn oversized_and_ties() {
        assert_eq!(build_lexicon(["x", "y"], 10).items.len(), 2);
        let lex = build_lexicon(["b", "a", "b", "a"], 1);
        assert_eq!(lex.items.keys().collect::<Vec<_>>(), vec!["a"]);
    }

    #[test]
    fn text_round_trip() {
        let lex = build_lexicon(["the", "cat", "the", "sat"], 2);
        assert_eq!(Lexicon::from_text(&lex.to_text()).unwrap(), lex);
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut forms in proptest::collection::vec("[a-e]", 0..40), n in 1usize..6, seed in any::<u64>()) {
            let a = build_lexicon(forms.iter().map(String::as_str), n);
            // deterministic shuffle
            let len = forms.len();
            if len > 1 {
                let mut s = seed;
                for i in (1..len).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    forms.swap(i, (s >> 33) as usize % (i + 1));
                }
            }
            let b = build_lexicon(forms.iter().map(String::as_str), n);
            prop_assert_eq!(a, b);
        }
    }
}
