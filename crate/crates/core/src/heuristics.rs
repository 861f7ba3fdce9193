//! Lexicon-driven heuristic features.
//!
//! The encoder maps a piece of text to five binary indicators:
//! male reference, female reference, stereotype phrase, negative sentiment,
//! positive sentiment. Reference lists are curated by annotators against
//! training data; before use in a model they are restricted to entries that
//! actually occur in the training partition so nothing leaks in from held-out
//! text.
//!
//! Lexicon file format (`#` starts a comment line):
//!
//! ```text
//! [male_names]
//! jack
//! [female_names]
//! jill
//! [stereotype_phrases]
//! couldn't keep her
//! ```
//!
//! Sentiment file format, polarity values in `[-1, 1]`:
//!
//! ```text
//! [polarity]
//! happy   0.8
//! [negators]
//! not
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::textproc::{token_surfaces, tokenize, Token};

/// Sentiment cutoff: mean polarity beyond `±DEFAULT_TAU` trips a bit.
pub const DEFAULT_TAU: f64 = 0.05;

/// Number of preceding tokens scanned for a negator.
pub const NEGATION_WINDOW: usize = 3;

type Phrase = Vec<String>;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: entry appears before any section header")]
    EntryOutsideSection { line: usize },
    #[error("line {line}: unknown section `{name}`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: entry has no word tokens")]
    EmptyEntry { line: usize },
    #[error("line {line}: expected exactly one word token")]
    NotOneToken { line: usize },
    #[error("`{entry}` is listed as both a male and a female reference")]
    GenderOverlap { entry: String },
    #[error("line {line}: expected `token<TAB>polarity`")]
    MalformedPolarity { line: usize },
    #[error("line {line}: polarity {value} outside [-1, 1]")]
    PolarityOutOfRange { line: usize, value: f64 },
    #[error("line {line}: duplicate token `{token}`")]
    DuplicateToken { line: usize, token: String },
    #[error("negator `{token}` also carries a polarity value")]
    NegatorWithPolarity { token: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn normalize_entry(raw: &str, line: usize) -> Result<Phrase, LexiconError> {
    let tokens = token_surfaces(raw);
    if tokens.is_empty() {
        return Err(LexiconError::EmptyEntry { line });
    }
    Ok(tokens)
}

fn render_phrase(phrase: &Phrase) -> String {
    phrase.join(" ")
}

/// Master annotator-curated reference lists. Name sections hold given names
/// plus gendered references (pronouns, kin terms); stereotype entries are
/// token sequences matched contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntries {
    pub male_names: BTreeSet<Phrase>,
    pub female_names: BTreeSet<Phrase>,
    pub stereotype_phrases: BTreeSet<Phrase>,
}

impl LexiconEntries {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut male = BTreeSet::new();
        let mut female = BTreeSet::new();
        let mut phrases = BTreeSet::new();
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = match name {
                    "male_names" => Some("male"),
                    "female_names" => Some("female"),
                    "stereotype_phrases" => Some("phrases"),
                    other => {
                        return Err(LexiconError::UnknownSection {
                            line: line_no,
                            name: other.to_owned(),
                        })
                    }
                };
                continue;
            }
            let entry = normalize_entry(line, line_no)?;
            match section {
                Some("male") => {
                    male.insert(entry);
                }
                Some("female") => {
                    female.insert(entry);
                }
                Some("phrases") => {
                    phrases.insert(entry);
                }
                _ => return Err(LexiconError::EntryOutsideSection { line: line_no }),
            }
        }
        if let Some(both) = male.intersection(&female).next() {
            return Err(LexiconError::GenderOverlap {
                entry: render_phrase(both),
            });
        }
        Ok(LexiconEntries {
            male_names: male,
            female_names: female,
            stereotype_phrases: phrases,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Ships with the crate; curated against public-domain nursery verse.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../lexicons/references.lex"))
            .expect("builtin reference lexicon is well-formed")
    }

    pub fn to_lexicon_string(&self) -> String {
        render_sections(
            &self.male_names,
            &self.female_names,
            &self.stereotype_phrases,
        )
    }
}

fn render_sections(
    male: &BTreeSet<Phrase>,
    female: &BTreeSet<Phrase>,
    phrases: &BTreeSet<Phrase>,
) -> String {
    let mut out = String::new();
    for (header, set) in [
        ("male_names", male),
        ("female_names", female),
        ("stereotype_phrases", phrases),
    ] {
        let _ = writeln!(out, "[{header}]");
        for entry in set {
            let _ = writeln!(out, "{}", render_phrase(entry));
        }
    }
    out
}

/// Where a [`HeuristicLexicon`]'s entries were allowed to come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconSource {
    /// Entries filtered to those occurring in training text.
    TrainRestricted,
    /// The full master list, unfiltered.
    FullList,
}

/// Reference lists ready for encoding, tagged with their provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicLexicon {
    pub male_names: BTreeSet<Phrase>,
    pub female_names: BTreeSet<Phrase>,
    pub stereotype_phrases: BTreeSet<Phrase>,
    pub source: LexiconSource,
}

impl HeuristicLexicon {
    /// Keeps only the entries that occur somewhere in `train_texts`. This is
    /// the constructor model fitting must use: held-out text never
    /// contributes entries.
    pub fn restricted_to_train<'a, I>(entries: &LexiconEntries, train_texts: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let token_lists: Vec<Vec<Token>> = train_texts.into_iter().map(tokenize).collect();
        let occurs = |phrase: &Phrase| {
            token_lists
                .iter()
                .any(|tokens| phrase_present(tokens, phrase))
        };
        let keep = |set: &BTreeSet<Phrase>| set.iter().filter(|p| occurs(p)).cloned().collect();
        HeuristicLexicon {
            male_names: keep(&entries.male_names),
            female_names: keep(&entries.female_names),
            stereotype_phrases: keep(&entries.stereotype_phrases),
            source: LexiconSource::TrainRestricted,
        }
    }

    /// Uses the master list as-is, for one-off encoding outside a
    /// train/test experiment.
    pub fn from_full_list(entries: &LexiconEntries) -> Self {
        HeuristicLexicon {
            male_names: entries.male_names.clone(),
            female_names: entries.female_names.clone(),
            stereotype_phrases: entries.stereotype_phrases.clone(),
            source: LexiconSource::FullList,
        }
    }

    pub fn entry_counts(&self) -> (usize, usize, usize) {
        (
            self.male_names.len(),
            self.female_names.len(),
            self.stereotype_phrases.len(),
        )
    }

    pub fn to_lexicon_string(&self) -> String {
        render_sections(
            &self.male_names,
            &self.female_names,
            &self.stereotype_phrases,
        )
    }
}

/// Graded word polarities plus negation markers.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    polarities: Vec<(String, f64)>,
    negators: BTreeSet<String>,
}

impl SentimentLexicon {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut polarities: Vec<(String, f64)> = Vec::new();
        let mut negators = BTreeSet::new();
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = match name {
                    "polarity" => Some("polarity"),
                    "negators" => Some("negators"),
                    other => {
                        return Err(LexiconError::UnknownSection {
                            line: line_no,
                            name: other.to_owned(),
                        })
                    }
                };
                continue;
            }
            match section {
                Some("polarity") => {
                    let mut fields = line.split_whitespace();
                    let (token, value) = match (fields.next(), fields.next(), fields.next()) {
                        (Some(t), Some(v), None) => (t, v),
                        _ => return Err(LexiconError::MalformedPolarity { line: line_no }),
                    };
                    let value: f64 = value
                        .parse()
                        .map_err(|_| LexiconError::MalformedPolarity { line: line_no })?;
                    if !value.is_finite() || value.abs() > 1.0 {
                        return Err(LexiconError::PolarityOutOfRange {
                            line: line_no,
                            value,
                        });
                    }
                    let token = single_token(token, line_no)?;
                    if polarities.iter().any(|(t, _)| *t == token) {
                        return Err(LexiconError::DuplicateToken {
                            line: line_no,
                            token,
                        });
                    }
                    polarities.push((token, value));
                }
                Some("negators") => {
                    negators.insert(single_token(line, line_no)?);
                }
                _ => return Err(LexiconError::EntryOutsideSection { line: line_no }),
            }
        }
        for negator in &negators {
            if polarities.iter().any(|(t, _)| t == negator) {
                return Err(LexiconError::NegatorWithPolarity {
                    token: negator.clone(),
                });
            }
        }
        Ok(SentimentLexicon {
            polarities,
            negators,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn builtin() -> Self {
        Self::parse(include_str!("../lexicons/sentiment.lex"))
            .expect("builtin sentiment lexicon is well-formed")
    }

    pub fn polarity(&self, token: &str) -> Option<f64> {
        self.polarities
            .iter()
            .find(|(t, _)| t == token)
            .map(|(_, v)| *v)
    }

    pub fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token)
    }

    /// Mean polarity over matched tokens; a negator within the three tokens
    /// before a match flips that match's sign. No matches scores 0.
    pub fn score(&self, tokens: &[Token]) -> f64 {
        let mut sum = 0.0;
        let mut hits = 0usize;
        for (i, token) in tokens.iter().enumerate() {
            let Some(value) = self.polarity(token.as_str()) else {
                continue;
            };
            let window_start = i.saturating_sub(NEGATION_WINDOW);
            let negated = tokens[window_start..i]
                .iter()
                .any(|t| self.is_negator(t.as_str()));
            sum += if negated { -value } else { value };
            hits += 1;
        }
        if hits == 0 {
            0.0
        } else {
            sum / hits as f64
        }
    }
}

fn single_token(raw: &str, line: usize) -> Result<String, LexiconError> {
    let mut tokens = token_surfaces(raw);
    if tokens.len() != 1 {
        return Err(LexiconError::NotOneToken { line });
    }
    Ok(tokens.remove(0))
}

fn phrase_present(tokens: &[Token], phrase: &Phrase) -> bool {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return false;
    }
    tokens.windows(phrase.len()).any(|window| {
        window
            .iter()
            .zip(phrase.iter())
            .all(|(token, word)| token.as_str() == word)
    })
}

/// Width of the heuristic feature vector.
pub const HEURISTIC_BITS: usize = 5;

/// Maps text to the five-bit heuristic vector
/// `[male, female, stereotype, negative, positive]`.
#[derive(Debug, Clone)]
pub struct HeuristicEncoder {
    pub lexicon: HeuristicLexicon,
    pub sentiment: SentimentLexicon,
    pub tau: f64,
}

impl HeuristicEncoder {
    pub fn new(lexicon: HeuristicLexicon, sentiment: SentimentLexicon) -> Self {
        HeuristicEncoder {
            lexicon,
            sentiment,
            tau: DEFAULT_TAU,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        assert!(
            tau >= 0.0 && tau.is_finite(),
            "tau must be finite and nonnegative"
        );
        self.tau = tau;
        self
    }

    /// Built-in lists, unrestricted. Suitable for one-off encoding.
    pub fn builtin() -> Self {
        HeuristicEncoder::new(
            HeuristicLexicon::from_full_list(&LexiconEntries::builtin()),
            SentimentLexicon::builtin(),
        )
    }

    pub fn encode(&self, text: &str) -> [u8; HEURISTIC_BITS] {
        let tokens = tokenize(text);
        let any = |set: &BTreeSet<Phrase>| set.iter().any(|p| phrase_present(&tokens, p));
        let male = any(&self.lexicon.male_names);
        let female = any(&self.lexicon.female_names);
        let stereotype = any(&self.lexicon.stereotype_phrases);
        let score = self.sentiment.score(&tokens);
        [
            u8::from(male),
            u8::from(female),
            u8::from(stereotype),
            u8::from(score < -self.tau),
            u8::from(score > self.tau),
        ]
    }
}
