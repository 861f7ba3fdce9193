//! Tokenization and line-window segmentation.

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Label};

/// A lowercased token plus its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub span: (usize, usize),
}

impl Token {
    pub fn as_str(&self) -> &str {
        &self.surface
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits text into lowercased word tokens. A token is a maximal run of
/// alphanumeric characters, possibly joined by internal apostrophes, so
/// `"couldn't keep her."` yields `couldn't`, `keep`, `her`. Punctuation and
/// whitespace separate tokens and are never emitted. Curly apostrophes are
/// normalized to ASCII in the surface form; spans index the original bytes.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    while i < chars.len() {
        if !is_word_char(chars[i].1) {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut surface = String::new();
        let mut end = start;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if is_word_char(c) {
                for lower in c.to_lowercase() {
                    surface.push(lower);
                }
                end = pos + c.len_utf8();
                i += 1;
            } else if is_apostrophe(c)
                && i + 1 < chars.len()
                && is_word_char(chars[i + 1].1)
                && !surface.is_empty()
            {
                surface.push('\'');
                end = pos + c.len_utf8();
                i += 1;
            } else {
                break;
            }
        }
        tokens.push(Token {
            surface,
            span: (start, end),
        });
    }
    tokens
}

/// Convenience wrapper returning only the token surfaces.
pub fn token_surfaces(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.surface).collect()
}

/// Line-window width used when slicing documents into training units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// One line per segment.
    L1,
    /// Two consecutive lines per segment.
    L2,
    /// Three consecutive lines per segment.
    L3,
    /// The whole document as one segment.
    Full,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::L1, Scheme::L2, Scheme::L3, Scheme::Full];

    /// Window width in lines; `None` means the whole document.
    pub fn window(self) -> Option<usize> {
        match self {
            Scheme::L1 => Some(1),
            Scheme::L2 => Some(2),
            Scheme::L3 => Some(3),
            Scheme::Full => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::L1 => "l1",
            Scheme::L2 => "l2",
            Scheme::L3 => "l3",
            Scheme::Full => "full",
        }
    }

    /// Number of segments a document with `line_count` lines produces.
    pub fn segment_count(self, line_count: usize) -> usize {
        match self.window() {
            Some(k) => line_count.div_ceil(k),
            None => usize::from(line_count > 0),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Scheme::L1),
            "l2" => Ok(Scheme::L2),
            "l3" => Ok(Scheme::L3),
            "full" => Ok(Scheme::Full),
            other => Err(format!(
                "unknown scheme `{other}` (expected l1, l2, l3, or full)"
            )),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A contiguous run of document lines treated as one classification unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub doc_id: String,
    /// Half-open line index range `[start, end)` within the document.
    pub line_span: (usize, usize),
    /// Segment lines joined by `\n`.
    pub text: String,
    pub label: Label,
}

/// Slices a document into non-overlapping line windows. The final window
/// keeps whatever lines remain, so every line lands in exactly one segment.
/// A segment is stereotypical iff any covered line is.
pub fn segment(doc: &Document, scheme: Scheme) -> Vec<Segment> {
    let width = scheme.window().unwrap_or(doc.lines.len().max(1));
    doc.lines
        .chunks(width)
        .map(|chunk| {
            let start = chunk[0].index;
            let end = chunk[chunk.len() - 1].index + 1;
            let text = chunk
                .iter()
                .map(|l| l.text.as_str())
                .collect::<Vec<_>>()
                .join("\n");
            let label = chunk
                .iter()
                .map(|l| l.label)
                .fold(Label::NonStereotypical, Label::or);
            Segment {
                doc_id: doc.id.clone(),
                line_span: (start, end),
                text,
                label,
            }
        })
        .collect()
}

/// Segments every document under one scheme, preserving document order.
pub fn segment_all(docs: &[Document], scheme: Scheme) -> Vec<Segment> {
    docs.iter().flat_map(|d| segment(d, scheme)).collect()
}
