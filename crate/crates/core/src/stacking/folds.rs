use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldLevel {
    Document,
    Sentence,
}

/// Fold id of every sentence of every document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Folds {
    pub k: usize,
    pub level: FoldLevel,
    pub assignment: Vec<Vec<usize>>,
}

/// Round-robin over a seeded shuffle, by document when there are at least
/// `k` documents and by sentence otherwise.
pub fn make_folds(docs: &[Document], k: usize, seed: u64) -> Result<Folds> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if docs.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: Vec<Vec<usize>> = docs.iter().map(|d| vec![0; d.sentences.len()]).collect();
    if docs.len() >= k {
        let mut order: Vec<usize> = (0..docs.len()).collect();
        order.shuffle(&mut rng);
        for (pos, &d) in order.iter().enumerate() {
            assignment[d].iter_mut().for_each(|f| *f = pos % k);
        }
        return Ok(Folds {
            k,
            level: FoldLevel::Document,
            assignment,
        });
    }
    let mut units: Vec<(usize, usize)> = docs
        .iter()
        .enumerate()
        .flat_map(|(d, doc)| (0..doc.sentences.len()).map(move |s| (d, s)))
        .collect();
    if units.len() < k {
        return Err(Error::Invalid(format!(
            "{} sentences cannot fill {k} folds",
            units.len()
        )));
    }
    units.shuffle(&mut rng);
    for (pos, (d, s)) in units.into_iter().enumerate() {
        assignment[d][s] = pos % k;
    }
    Ok(Folds {
        k,
        level: FoldLevel::Sentence,
        assignment,
    })
}

impl Folds {
    /// Documents restricted to the sentences inside (`inside`) or outside
    /// fold `f`. Documents left without sentences are dropped; sentences keep
    /// their original offsets.
    pub fn part(&self, docs: &[Document], f: usize, inside: bool) -> Vec<Document> {
        docs.iter()
            .zip(&self.assignment)
            .filter_map(|(doc, folds)| {
                let sentences: Vec<_> = doc
                    .sentences
                    .iter()
                    .zip(folds)
                    .filter(|(_, &g)| (g == f) == inside)
                    .map(|(s, _)| s.clone())
                    .collect();
                (!sentences.is_empty()).then(|| Document {
                    name: doc.name.clone(),
                    genre: doc.genre.clone(),
                    sentences,
                })
            })
            .collect()
    }

    pub fn train_part(&self, docs: &[Document], f: usize) -> Vec<Document> {
        self.part(docs, f, false)
    }

    pub fn held_out(&self, docs: &[Document], f: usize) -> Vec<Document> {
        self.part(docs, f, true)
    }

    /// Number of documents (or sentences) per fold.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        match self.level {
            FoldLevel::Document => self
                .assignment
                .iter()
                .filter_map(|a| a.first())
                .for_each(|&f| sizes[f] += 1),
            FoldLevel::Sentence => self.assignment.iter().flatten().for_each(|&f| sizes[f] += 1),
        }
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};
    use proptest::prelude::*;

    fn corpus(n_docs: usize, n_sents: usize) -> Vec<Document> {
        (0..n_docs)
            .map(|d| Document {
                name: format!("d{d}"),
                genre: "all".into(),
                sentences: (0..n_sents)
                    .map(|s| Sentence {
                        tokens: vec![Token::new(1, "x")],
                        doc_offset: s,
                        ..Default::default()
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn document_fold_sizes() {
        let f = make_folds(&corpus(10, 2), 5, 1).unwrap();
        assert_eq!(f.level, FoldLevel::Document);
        assert_eq!(f.sizes(), vec![2; 5]);
        let f = make_folds(&corpus(5, 2), 5, 1).unwrap();
        assert_eq!(f.sizes(), vec![1; 5]);
    }

    #[test]
    fn sentence_level_fallback_is_a_partition() {
        let docs = corpus(3, 4);
        let f = make_folds(&docs, 5, 9).unwrap();
        assert_eq!(f.level, FoldLevel::Sentence);
        // every (doc, sentence) lands in exactly one held-out part
        let mut seen = std::collections::BTreeMap::new();
        for fold in 0..5 {
            for d in f.held_out(&docs, fold) {
                for s in &d.sentences {
                    *seen.entry((d.name.clone(), s.doc_offset)).or_insert(0) += 1;
                }
            }
        }
        assert_eq!(seen.len(), 12);
        assert!(seen.values().all(|&n| n == 1));
    }

    #[test]
    fn errors() {
        assert!(matches!(make_folds(&[], 5, 0), Err(Error::Empty(_))));
        assert!(make_folds(&corpus(1, 2), 5, 0).is_err());
        assert!(make_folds(&corpus(4, 2), 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_for_every_seed(n_docs in 1usize..12, n_sents in 1usize..4, k in 2usize..6, seed in any::<u64>()) {
            let docs = corpus(n_docs, n_sents);
            let Ok(f) = make_folds(&docs, k, seed) else {
                prop_assert!(n_docs * n_sents < k);
                return Ok(());
            };
            let sizes = f.sizes();
            prop_assert_eq!(sizes.iter().sum::<usize>(), if f.level == FoldLevel::Document { n_docs } else { n_docs * n_sents });
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            for fold in 0..k {
                let train: usize = f.train_part(&docs, fold).iter().map(|d| d.sentences.len()).sum();
                let held: usize = f.held_out(&docs, fold).iter().map(|d| d.sentences.len()).sum();
                prop_assert_eq!(train + held, n_docs * n_sents);
            }
        }
    }
}
