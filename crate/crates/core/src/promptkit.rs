//! Prompt construction for the two generation tasks (meaning-preserving
//! augmentation and stereotype rectification), plus bookkeeping for the
//! responses that come back.
//!
//! Generation itself happens behind [`CompletionClient`]; the crate ships
//! only [`StubClient`], a deterministic offline stand-in, so experiments
//! stay reproducible without a network. Returned text is registered as a
//! new corpus document whose labels either transfer from the parent or are
//! explicitly marked as needing human annotation.

use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Document, Label, Line, Provenance};

/// Instruction block sent ahead of a poem when asking for a reworded
/// variant that keeps rhyme and structure.
pub const AUGMENTATION_TEMPLATE: &str = "Replace [*nouns or subject/objects from the poem or rhyme*] with synonyms. Keep the poem rhyme scheme and sentence formation intact forcefully";

/// Instruction block sent ahead of a poem flagged as stereotypical.
pub const RECTIFICATION_TEMPLATE: &str = "Change the poem to remove gender stereotypes and make sure to keep sentence formation and rhyme scheme close to the original as much as possible.";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("document `{id}` has provenance {provenance:?}; only originals are augmented")]
    NotOriginal { id: String, provenance: Provenance },
    #[error("document `{id}` is not flagged as stereotypical; nothing to rectify")]
    NotFlagged { id: String },
    #[error("job was built for `{job_doc}` but parent is `{parent}`")]
    ParentMismatch { job_doc: String, parent: String },
    #[error("response contains no usable lines")]
    EmptyResponse,
    #[error("journal line {line}: {message}")]
    MalformedJournal { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
#[error("completion failed: {0}")]
pub struct CompletionError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Augment,
    Rectify,
}

/// A fully rendered prompt awaiting completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptJob {
    pub doc_id: String,
    pub kind: PromptKind,
    pub prompt_text: String,
    /// Unix seconds at construction time.
    pub created_at: u64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn render(template: &str, doc: &Document) -> String {
    format!("{template}\n\n{}", doc.text())
}

/// Renders the augmentation prompt for an original document: instruction
/// block, blank line, then the poem verbatim, ending on its last line.
pub fn build_augmentation_prompt(doc: &Document) -> Result<PromptJob, PromptError> {
    if doc.provenance != Provenance::Original {
        return Err(PromptError::NotOriginal {
            id: doc.id.clone(),
            provenance: doc.provenance,
        });
    }
    Ok(PromptJob {
        doc_id: doc.id.clone(),
        kind: PromptKind::Augment,
        prompt_text: render(AUGMENTATION_TEMPLATE, doc),
        created_at: unix_now(),
    })
}

/// Renders the rectification prompt. `flagged` is the caller's attestation
/// that detection marked this document stereotypical; unflagged documents
/// are refused.
pub fn build_rectification_prompt(doc: &Document, flagged: bool) -> Result<PromptJob, PromptError> {
    if !flagged {
        return Err(PromptError::NotFlagged { id: doc.id.clone() });
    }
    Ok(PromptJob {
        doc_id: doc.id.clone(),
        kind: PromptKind::Rectify,
        prompt_text: render(RECTIFICATION_TEMPLATE, doc),
        created_at: unix_now(),
    })
}

/// Anything that can turn a prompt into generated text.
pub trait CompletionClient {
    fn complete(&self, prompt: &str) -> Result<String, CompletionError>;
}

/// Offline stand-in for a live generation service: returns the poem part
/// of the prompt unchanged. Deterministic, so downstream plumbing can be
/// tested end to end.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubClient;

impl CompletionClient for StubClient {
    fn complete(&self, prompt: &str) -> Result<String, CompletionError> {
        let poem = prompt
            .split_once("\n\n")
            .map(|(_, body)| body)
            .unwrap_or(prompt);
        Ok(poem.to_owned())
    }
}

/// How the registered document got its line labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelTransfer {
    /// Augmentation with matching line counts: labels copied line by line.
    CopiedFromParent,
    /// Placeholder labels only; a human must re-annotate before the
    /// document is used as ground truth.
    NeedsAnnotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptOutcome {
    pub document: Document,
    pub label_transfer: LabelTransfer,
}

/// Turns a completion response into a child document of `parent`.
///
/// Augmented children copy the parent's line labels when the response has
/// the same number of lines; otherwise every line takes the parent's
/// document-level label and the outcome is marked [`LabelTransfer::NeedsAnnotation`].
/// Rectified children always need annotation and carry non-stereotypical
/// placeholders, since removing the stereotype is the intent but not a
/// certainty.
pub fn register_response(
    job: &PromptJob,
    response: &str,
    parent: &Document,
    child_id: &str,
) -> Result<PromptOutcome, PromptError> {
    if job.doc_id != parent.id {
        return Err(PromptError::ParentMismatch {
            job_doc: job.doc_id.clone(),
            parent: parent.id.clone(),
        });
    }
    let texts: Vec<String> = response
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect();
    if texts.is_empty() {
        return Err(PromptError::EmptyResponse);
    }
    let (provenance, suffix) = match job.kind {
        PromptKind::Augment => (Provenance::Augmented, "augmented"),
        PromptKind::Rectify => (Provenance::Rectified, "rectified"),
    };
    let (labels, transfer): (Vec<Label>, LabelTransfer) = match job.kind {
        PromptKind::Augment if texts.len() == parent.lines.len() => (
            parent.lines.iter().map(|l| l.label).collect(),
            LabelTransfer::CopiedFromParent,
        ),
        PromptKind::Augment => (
            vec![crate::corpus::document_label(parent); texts.len()],
            LabelTransfer::NeedsAnnotation,
        ),
        PromptKind::Rectify => (
            vec![Label::NonStereotypical; texts.len()],
            LabelTransfer::NeedsAnnotation,
        ),
    };
    let lines = texts
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(index, (text, label))| Line { index, text, label })
        .collect();
    let title = if parent.title.is_empty() {
        String::new()
    } else {
        format!("{} ({suffix})", parent.title)
    };
    Ok(PromptOutcome {
        document: Document {
            id: child_id.to_owned(),
            title,
            kind: parent.kind,
            source_language: parent.source_language.clone(),
            lines,
            provenance,
            parent_id: Some(parent.id.clone()),
        },
        label_transfer: transfer,
    })
}

/// One journal row: the job as sent, and the response if one arrived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub job: PromptJob,
    pub response: Option<String>,
    pub recorded_at: u64,
}

impl JournalEntry {
    pub fn new(job: PromptJob, response: Option<String>) -> JournalEntry {
        JournalEntry {
            job,
            response,
            recorded_at: unix_now(),
        }
    }
}

/// Append-only JSON-lines log of prompt traffic. Entries are never
/// rewritten; reruns append.
#[derive(Debug, Clone)]
pub struct Journal {
    path: PathBuf,
}

impl Journal {
    pub fn at(path: impl Into<PathBuf>) -> Journal {
        Journal { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, entry: &JournalEntry) -> Result<(), PromptError> {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        let json = serde_json::to_string(entry).expect("journal entries serialize");
        writeln!(file, "{json}")?;
        Ok(())
    }

    /// Reads every entry in append order. A missing file is an empty
    /// journal.
    pub fn read_all(&self) -> Result<Vec<JournalEntry>, PromptError> {
        let file = match std::fs::File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: JournalEntry =
                serde_json::from_str(&line).map_err(|e| PromptError::MalformedJournal {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            entries.push(entry);
        }
        Ok(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Kind;

    fn parent() -> Document {
        Document {
            id: "r1".to_owned(),
            title: "Peter".to_owned(),
            kind: Kind::Rhyme,
            source_language: "en".to_owned(),
            lines: vec![
                Line {
                    index: 0,
                    text: "Peter, Peter, pumpkin eater,".to_owned(),
                    label: Label::NonStereotypical,
                },
                Line {
                    index: 1,
                    text: "Had a wife but couldn't keep her;".to_owned(),
                    label: Label::Stereotypical,
                },
            ],
            provenance: Provenance::Original,
            parent_id: None,
        }
    }

    #[test]
    fn augmentation_prompt_layout() {
        let doc = parent();
        let job = build_augmentation_prompt(&doc).unwrap();
        assert_eq!(job.kind, PromptKind::Augment);
        let expected = format!(
            "Replace [*nouns or subject/objects from the poem or rhyme*] with synonyms. Keep the poem rhyme scheme and sentence formation intact forcefully\n\n{}",
            doc.text()
        );
        assert_eq!(job.prompt_text, expected);
        assert!(job
            .prompt_text
            .ends_with("Had a wife but couldn't keep her;"));
    }

    #[test]
    fn rectification_prompt_layout() {
        let doc = parent();
        let job = build_rectification_prompt(&doc, true).unwrap();
        let expected = format!(
            "Change the poem to remove gender stereotypes and make sure to keep sentence formation and rhyme scheme close to the original as much as possible.\n\n{}",
            doc.text()
        );
        assert_eq!(job.prompt_text, expected);
    }

    #[test]
    fn augmentation_refuses_non_originals() {
        let mut doc = parent();
        doc.provenance = Provenance::Augmented;
        doc.parent_id = Some("r0".to_owned());
        assert!(matches!(
            build_augmentation_prompt(&doc),
            Err(PromptError::NotOriginal { .. })
        ));
    }

    #[test]
    fn rectification_requires_flag() {
        let doc = parent();
        assert!(matches!(
            build_rectification_prompt(&doc, false),
            Err(PromptError::NotFlagged { .. })
        ));
    }

    #[test]
    fn stub_client_echoes_poem_part() {
        let doc = parent();
        let job = build_augmentation_prompt(&doc).unwrap();
        let response = StubClient.complete(&job.prompt_text).unwrap();
        assert_eq!(response, doc.text());
    }

    #[test]
    fn register_augmentation_copies_labels_when_lines_match() {
        let doc = parent();
        let job = build_augmentation_prompt(&doc).unwrap();
        let response = "Simon, Simon, squash consumer,\nHad a spouse but couldn't keep her;";
        let outcome = register_response(&job, response, &doc, "r1-aug1").unwrap();
        assert_eq!(outcome.label_transfer, LabelTransfer::CopiedFromParent);
        assert_eq!(outcome.document.provenance, Provenance::Augmented);
        assert_eq!(outcome.document.parent_id.as_deref(), Some("r1"));
        assert_eq!(outcome.document.lines.len(), 2);
        assert_eq!(outcome.document.lines[0].label, Label::NonStereotypical);
        assert_eq!(outcome.document.lines[1].label, Label::Stereotypical);
        assert_eq!(outcome.document.title, "Peter (augmented)");
    }

    #[test]
    fn register_augmentation_with_changed_line_count_needs_annotation() {
        let doc = parent();
        let job = build_augmentation_prompt(&doc).unwrap();
        let outcome = register_response(&job, "One line only", &doc, "r1-aug2").unwrap();
        assert_eq!(outcome.label_transfer, LabelTransfer::NeedsAnnotation);
        // The parent is stereotypical overall, so the conservative
        // placeholder keeps that verdict.
        assert_eq!(outcome.document.lines[0].label, Label::Stereotypical);
    }

    #[test]
    fn register_rectification_always_needs_annotation() {
        let doc = parent();
        let job = build_rectification_prompt(&doc, true).unwrap();
        let response = "Peter, Peter, pumpkin eater,\nShared a garden, kept it together;";
        let outcome = register_response(&job, response, &doc, "r1-rect1").unwrap();
        assert_eq!(outcome.label_transfer, LabelTransfer::NeedsAnnotation);
        assert_eq!(outcome.document.provenance, Provenance::Rectified);
        assert!(outcome
            .document
            .lines
            .iter()
            .all(|l| l.label == Label::NonStereotypical));
    }

    #[test]
    fn register_rejects_mismatched_parent() {
        let doc = parent();
        let mut other = parent();
        other.id = "r2".to_owned();
        let job = build_augmentation_prompt(&doc).unwrap();
        assert!(matches!(
            register_response(&job, "text", &other, "x"),
            Err(PromptError::ParentMismatch { .. })
        ));
    }

    #[test]
    fn register_rejects_empty_response() {
        let doc = parent();
        let job = build_augmentation_prompt(&doc).unwrap();
        assert!(matches!(
            register_response(&job, "\n  \n", &doc, "x"),
            Err(PromptError::EmptyResponse)
        ));
    }

    #[test]
    fn registered_child_round_trips_through_corpus_format() {
        let doc = parent();
        let job = build_augmentation_prompt(&doc).unwrap();
        let response = StubClient.complete(&job.prompt_text).unwrap();
        let outcome = register_response(&job, &response, &doc, "r1-aug1").unwrap();
        let serialized = crate::corpus::corpus_to_string(&[doc, outcome.document.clone()]);
        let reparsed = crate::corpus::parse_corpus_str(&serialized).unwrap();
        assert_eq!(reparsed[1], outcome.document);
    }

    #[test]
    fn journal_appends_and_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let journal = Journal::at(dir.path().join("prompts.jsonl"));
        assert!(journal.read_all().unwrap().is_empty());
        let doc = parent();
        let job = build_augmentation_prompt(&doc).unwrap();
        let first = JournalEntry::new(job.clone(), None);
        let second = JournalEntry::new(job, Some("response text".to_owned()));
        journal.append(&first).unwrap();
        journal.append(&second).unwrap();
        let entries = journal.read_all().unwrap();
        assert_eq!(entries, vec![first, second]);
        assert_eq!(entries[1].response.as_deref(), Some("response text"));
    }
}
