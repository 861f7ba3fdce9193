//! Token-count features over a train-fitted vocabulary, with an optional
//! five-bit heuristic tail.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::heuristics::{HeuristicEncoder, HEURISTIC_BITS};
use crate::textproc::token_surfaces;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("line {line}: expected `term<TAB>index`")]
    MalformedVocabLine { line: usize },
    #[error("line {line}: duplicate term `{term}`")]
    DuplicateTerm { line: usize, term: String },
    #[error("vocabulary indexes are not exactly 0..{expected}")]
    NonContiguousIndexes { expected: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Token-to-column mapping in first-occurrence order over the fitting text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Collects distinct tokens in order of first occurrence. Fit on the
    /// training partition only.
    pub fn fit<'a, I>(texts: I) -> Vocabulary
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut terms = Vec::new();
        let mut index = HashMap::new();
        for text in texts {
            for token in token_surfaces(text) {
                if !index.contains_key(&token) {
                    index.insert(token.clone(), terms.len());
                    terms.push(token);
                }
            }
        }
        Vocabulary { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// One `term<TAB>index` line per term.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, term) in self.terms.iter().enumerate() {
            out.push_str(term);
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Vocabulary, FeatureError> {
        let mut pairs: Vec<(String, usize)> = Vec::new();
        let mut seen: HashMap<String, ()> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let (term, idx) = raw
                .split_once('\t')
                .ok_or(FeatureError::MalformedVocabLine { line: line_no })?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| FeatureError::MalformedVocabLine { line: line_no })?;
            if term.is_empty() {
                return Err(FeatureError::MalformedVocabLine { line: line_no });
            }
            if seen.insert(term.to_owned(), ()).is_some() {
                return Err(FeatureError::DuplicateTerm {
                    line: line_no,
                    term: term.to_owned(),
                });
            }
            pairs.push((term.to_owned(), idx));
        }
        let n = pairs.len();
        let mut terms = vec![String::new(); n];
        let mut filled = vec![false; n];
        for (term, idx) in pairs {
            if idx >= n || filled[idx] {
                return Err(FeatureError::NonContiguousIndexes { expected: n });
            }
            filled[idx] = true;
            terms[idx] = term;
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Vocabulary { terms, index })
    }

    pub fn load(path: &Path) -> Result<Vocabulary, FeatureError> {
        Self::parse_tsv(&std::fs::read_to_string(path)?)
    }
}

/// Sparse feature row. Entries are `(column, value)` with strictly
/// increasing columns, all below `width`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
    pub width: usize,
}

impl FeatureVector {
    pub fn value(&self, column: usize) -> f64 {
        match self.entries.binary_search_by_key(&column, |(c, _)| *c) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut row = vec![0.0; self.width];
        for (c, v) in &self.entries {
            row[*c] = *v;
        }
        row
    }
}

/// Turns text into count vectors; optionally appends the heuristic bits
/// after the vocabulary columns.
#[derive(Debug, Clone)]
pub struct Vectorizer {
    pub vocab: Vocabulary,
    pub heuristics: Option<HeuristicEncoder>,
}

impl Vectorizer {
    pub fn new(vocab: Vocabulary, heuristics: Option<HeuristicEncoder>) -> Self {
        Vectorizer { vocab, heuristics }
    }

    /// Total column count: vocabulary terms plus the heuristic tail when
    /// enabled.
    pub fn width(&self) -> usize {
        self.vocab.len()
            + if self.heuristics.is_some() {
                HEURISTIC_BITS
            } else {
                0
            }
    }

    /// Counts in-vocabulary tokens; out-of-vocabulary tokens contribute
    /// nothing. Heuristic bits land at columns `vocab.len()..width`.
    pub fn vectorize(&self, text: &str) -> FeatureVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for token in token_surfaces(text) {
            if let Some(idx) = self.vocab.index_of(&token) {
                *counts.entry(idx).or_insert(0.0) += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts.into_iter().collect();
        entries.sort_unstable_by_key(|(c, _)| *c);
        if let Some(encoder) = &self.heuristics {
            let bits = encoder.encode(text);
            let base = self.vocab.len();
            for (k, bit) in bits.iter().enumerate() {
                if *bit != 0 {
                    entries.push((base + k, 1.0));
                }
            }
        }
        FeatureVector {
            entries,
            width: self.width(),
        }
    }

    pub fn vectorize_all<'a, I>(&self, texts: I) -> Vec<FeatureVector>
    where
        I: IntoIterator<Item = &'a str>,
    {
        texts.into_iter().map(|t| self.vectorize(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::{HeuristicLexicon, LexiconEntries, SentimentLexicon};
    use proptest::prelude::*;

    #[test]
    fn fit_uses_first_occurrence_order() {
        let vocab = Vocabulary::fit(["jack and jill", "and jack went"]);
        assert_eq!(vocab.terms(), &["jack", "and", "jill", "went"]);
        assert_eq!(vocab.index_of("jill"), Some(2));
        assert_eq!(vocab.index_of("hill"), None);
    }

    #[test]
    fn vectorize_counts_tokens() {
        let vocab = Vocabulary::fit(["up up and away"]);
        let vec = Vectorizer::new(vocab, None).vectorize("up and up!");
        assert_eq!(vec.entries, vec![(0, 2.0), (1, 1.0)]);
        assert_eq!(vec.width, 3);
    }

    #[test]
    fn out_of_vocabulary_tokens_drop() {
        let vocab = Vocabulary::fit(["one two"]);
        let vec = Vectorizer::new(vocab, None).vectorize("three four");
        assert!(vec.entries.is_empty());
    }

    fn tiny_encoder() -> HeuristicEncoder {
        let entries = LexiconEntries::parse(concat!(
            "[male_names]\njack\n",
            "[female_names]\njill\n",
            "[stereotype_phrases]\nfetch the water\n",
        ))
        .unwrap();
        let sentiment =
            SentimentLexicon::parse("[polarity]\nhappy\t0.8\n[negators]\nnot\n").unwrap();
        HeuristicEncoder::new(HeuristicLexicon::from_full_list(&entries), sentiment)
    }

    #[test]
    fn heuristic_tail_occupies_trailing_columns() {
        let vocab = Vocabulary::fit(["jack and jill"]);
        let vectorizer = Vectorizer::new(vocab, Some(tiny_encoder()));
        assert_eq!(vectorizer.width(), 3 + HEURISTIC_BITS);
        let vec = vectorizer.vectorize("jill was happy");
        // Column 2 is the token count for "jill"; 3 = male, 4 = female,
        // 7 = positive sentiment.
        assert_eq!(vec.entries, vec![(2, 1.0), (4, 1.0), (7, 1.0)]);
    }

    #[test]
    fn vocab_tsv_round_trip() {
        let vocab = Vocabulary::fit(["jack and jill went up the hill"]);
        let reparsed = Vocabulary::parse_tsv(&vocab.to_tsv()).unwrap();
        assert_eq!(vocab, reparsed);
    }

    #[test]
    fn vocab_tsv_rejects_gaps_and_duplicates() {
        assert!(matches!(
            Vocabulary::parse_tsv("a\t0\nb\t2\n"),
            Err(FeatureError::NonContiguousIndexes { .. })
        ));
        assert!(matches!(
            Vocabulary::parse_tsv("a\t0\na\t1\n"),
            Err(FeatureError::DuplicateTerm { .. })
        ));
        assert!(matches!(
            Vocabulary::parse_tsv("a 0\n"),
            Err(FeatureError::MalformedVocabLine { line: 1 })
        ));
    }

    proptest! {
        #[test]
        fn vector_invariants_hold(texts in proptest::collection::vec("[a-d ]{0,30}", 1..8)) {
            let vocab = Vocabulary::fit(texts.iter().map(String::as_str));
            let vectorizer = Vectorizer::new(vocab, Some(tiny_encoder()));
            for text in &texts {
                let vec = vectorizer.vectorize(text);
                prop_assert_eq!(vec.width, vectorizer.width());
                for window in vec.entries.windows(2) {
                    prop_assert!(window[0].0 < window[1].0);
                }
                for (c, v) in &vec.entries {
                    prop_assert!(*c < vec.width);
                    prop_assert!(*v > 0.0);
                }
                let token_total: f64 = vec.entries.iter()
                    .filter(|(c, _)| *c < vectorizer.vocab.len())
                    .map(|(_, v)| v)
                    .sum();
                prop_assert_eq!(token_total as usize,
                    crate::textproc::token_surfaces(text).len());
            }
        }
    }
}
