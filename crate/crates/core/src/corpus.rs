//! Annotated verse corpus: record parsing, validation, and stratified
//! document-level splitting.
//!
//! The on-disk format is one self-describing JSON record per line:
//!
//! ```text
//! {"id":"r1","title":"Jack","kind":"rhyme","source_language":"en",
//!  "provenance":"original","lines":[{"text":"Jack be nimble","label":0}]}
//! ```
//!
//! Line labels are `0` (non-stereotypical) or `1` (stereotypical). Documents
//! with `provenance` `augmented` or `rectified` must carry a `parent_id`
//! that resolves within the same corpus.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default split seed; override via [`split_corpus`]'s `seed` argument.
pub const DEFAULT_SEED: u64 = 42;

/// Binary stereotype annotation attached to lines, segments, and documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    NonStereotypical,
    Stereotypical,
}

impl Label {
    pub fn is_stereotypical(self) -> bool {
        matches!(self, Label::Stereotypical)
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::NonStereotypical => 0,
            Label::Stereotypical => 1,
        }
    }

    /// OR-combines two labels: stereotypical wins.
    pub fn or(self, other: Label) -> Label {
        if self.is_stereotypical() || other.is_stereotypical() {
            Label::Stereotypical
        } else {
            Label::NonStereotypical
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0 => Ok(Label::NonStereotypical),
            1 => Ok(Label::Stereotypical),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(value: Label) -> u8 {
        value.bit()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Rhyme,
    Poem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Augmented,
    Rectified,
}

/// One annotated line of verse. `index` always equals the line's position
/// in its document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub index: usize,
    pub text: String,
    pub label: Label,
}

/// A rhyme or poem with per-line stereotype annotations and provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub kind: Kind,
    pub source_language: String,
    pub lines: Vec<Line>,
    pub provenance: Provenance,
    pub parent_id: Option<String>,
}

impl Document {
    /// Full text with lines joined by `\n`.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, line) in self.lines.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&line.text);
        }
        out
    }
}

/// Disjoint train/validation/test document-id lists plus the parameters
/// that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
    pub ratios: (f64, f64, f64),
}

impl CorpusSplit {
    pub fn partition_of(&self, id: &str) -> Option<PartitionName> {
        if self.train.iter().any(|d| d == id) {
            Some(PartitionName::Train)
        } else if self.validation.iter().any(|d| d == id) {
            Some(PartitionName::Validation)
        } else if self.test.iter().any(|d| d == id) {
            Some(PartitionName::Test)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionName {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("record {record}: {message}")]
    MalformedRecord { record: usize, message: String },
    #[error("record {record}: duplicate document id `{id}`")]
    DuplicateId { record: usize, id: String },
    #[error("document `{id}`: dangling parent `{parent}`")]
    DanglingParent { id: String, parent: String },
    #[error("document `{id}`: parent chain never reaches an original document")]
    UnrootedParentChain { id: String },
    #[error("split ratios must be nonnegative and sum to 1, got ({0}, {1}, {2})")]
    BadRatios(f64, f64, f64),
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("partition {partition:?} has a nonzero ratio but received no documents")]
    EmptyPartition { partition: PartitionName },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct LineRecord {
    text: String,
    label: Label,
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    #[serde(default)]
    title: String,
    kind: Kind,
    #[serde(default = "default_language")]
    source_language: String,
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent_id: Option<String>,
    lines: Vec<LineRecord>,
}

fn default_language() -> String {
    "en".to_owned()
}

fn contains_line_break(text: &str) -> bool {
    text.chars()
        .any(|c| matches!(c, '\n' | '\r' | '\u{2028}' | '\u{2029}'))
}

fn document_from_record(record: DocumentRecord, number: usize) -> Result<Document, CorpusError> {
    let malformed = |message: String| CorpusError::MalformedRecord {
        record: number,
        message,
    };
    if record.id.trim().is_empty() {
        return Err(malformed("empty document id".into()));
    }
    if record.lines.is_empty() {
        return Err(malformed(format!("document `{}` has no lines", record.id)));
    }
    match (record.provenance, &record.parent_id) {
        (Provenance::Original, Some(_)) => {
            return Err(malformed(format!(
                "original document `{}` must not carry a parent_id",
                record.id
            )));
        }
        (Provenance::Augmented | Provenance::Rectified, None) => {
            return Err(malformed(format!(
                "{:?} document `{}` requires a parent_id",
                record.provenance, record.id
            )));
        }
        _ => {}
    }
    if record.parent_id.as_deref() == Some(record.id.as_str()) {
        return Err(malformed(format!(
            "document `{}` names itself as parent",
            record.id
        )));
    }
    let mut lines = Vec::with_capacity(record.lines.len());
    for (index, line) in record.lines.into_iter().enumerate() {
        if line.text.trim().is_empty() {
            return Err(malformed(format!(
                "document `{}` line {index} is empty or whitespace-only",
                record.id
            )));
        }
        if contains_line_break(&line.text) {
            return Err(malformed(format!(
                "document `{}` line {index} contains a line break",
                record.id
            )));
        }
        lines.push(Line {
            index,
            text: line.text,
            label: line.label,
        });
    }
    Ok(Document {
        id: record.id,
        title: record.title,
        kind: record.kind,
        source_language: record.source_language,
        lines,
        provenance: record.provenance,
        parent_id: record.parent_id,
    })
}

fn record_from_document(doc: &Document) -> DocumentRecord {
    DocumentRecord {
        id: doc.id.clone(),
        title: doc.title.clone(),
        kind: doc.kind,
        source_language: doc.source_language.clone(),
        provenance: doc.provenance,
        parent_id: doc.parent_id.clone(),
        lines: doc
            .lines
            .iter()
            .map(|l| LineRecord {
                text: l.text.clone(),
                label: l.label,
            })
            .collect(),
    }
}

/// Parses a corpus record stream. Record numbers in errors are 1-based;
/// blank lines are skipped. Document order is preserved.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs: Vec<Document> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut record = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        record += 1;
        let parsed: DocumentRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                record,
                message: e.to_string(),
            })?;
        let doc = document_from_record(parsed, record)?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId { record, id: doc.id });
        }
        docs.push(doc);
    }
    check_parent_links(&docs)?;
    Ok(docs)
}

/// Parses a corpus held in memory.
pub fn parse_corpus_str(text: &str) -> Result<Vec<Document>, CorpusError> {
    parse_corpus(text.as_bytes())
}

fn check_parent_links(docs: &[Document]) -> Result<(), CorpusError> {
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    for doc in docs {
        if let Some(parent) = &doc.parent_id {
            if !by_id.contains_key(parent.as_str()) {
                return Err(CorpusError::DanglingParent {
                    id: doc.id.clone(),
                    parent: parent.clone(),
                });
            }
        }
        // Every parent chain must terminate at an original document within
        // |docs| steps, which also rules out cycles.
        let mut cursor = doc;
        let mut steps = 0usize;
        while let Some(parent) = &cursor.parent_id {
            steps += 1;
            if steps > docs.len() {
                return Err(CorpusError::UnrootedParentChain { id: doc.id.clone() });
            }
            cursor = match by_id.get(parent.as_str()) {
                Some(next) => next,
                None => {
                    return Err(CorpusError::DanglingParent {
                        id: cursor.id.clone(),
                        parent: parent.clone(),
                    })
                }
            };
        }
    }
    Ok(())
}

/// Writes documents in the one-record-per-line format read by
/// [`parse_corpus`].
pub fn write_corpus<W: Write>(docs: &[Document], mut writer: W) -> Result<(), CorpusError> {
    for doc in docs {
        let json = serde_json::to_string(&record_from_document(doc))
            .expect("document serialization cannot fail");
        writeln!(writer, "{json}")?;
    }
    Ok(())
}

/// Serializes documents to the record format as a string.
pub fn corpus_to_string(docs: &[Document]) -> String {
    let mut buf = Vec::new();
    write_corpus(docs, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("records are valid UTF-8")
}

/// A document is stereotypical iff any of its lines is.
pub fn document_label(doc: &Document) -> Label {
    doc.lines
        .iter()
        .map(|l| l.label)
        .fold(Label::NonStereotypical, Label::or)
}

/// Stratified document-level split.
///
/// Stratification keys on [`document_label`] of each family root, where a
/// family is an original document plus all of its augmented/rectified
/// descendants; children always land in their root's partition, so the
/// ratios apply to family-root counts. Per-class partition counts follow
/// largest-remainder rounding against exact partition targets, which keeps
/// whole-corpus partition sizes at `round(n * ratio)`. Deterministic for a
/// fixed document order and seed.
pub fn split_corpus(
    docs: &[Document],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<CorpusSplit, CorpusError> {
    let (r_train, r_val, r_test) = ratios;
    let parts = [r_train, r_val, r_test];
    if parts.iter().any(|r| *r < 0.0) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CorpusError::BadRatios(r_train, r_val, r_test));
    }
    if docs.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    check_parent_links(docs)?;

    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let root_of = |doc: &Document| -> String {
        let mut cursor = doc;
        while let Some(parent) = &cursor.parent_id {
            cursor = by_id[parent.as_str()];
        }
        cursor.id.clone()
    };

    // Family members in document order, keyed by root id.
    let mut families: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut roots_in_order: Vec<&Document> = Vec::new();
    for doc in docs {
        if doc.parent_id.is_none() {
            roots_in_order.push(doc);
        }
        families
            .entry(root_of(doc))
            .or_default()
            .push(doc.id.clone());
    }

    // Group family roots by class, preserving document order within a class.
    let mut class_order: Vec<Label> = Vec::new();
    let mut roots_by_class: HashMap<Label, Vec<String>> = HashMap::new();
    for root in &roots_in_order {
        let label = document_label(root);
        if !class_order.contains(&label) {
            class_order.push(label);
        }
        roots_by_class
            .entry(label)
            .or_default()
            .push(root.id.clone());
    }

    let n = roots_in_order.len();
    let targets = largest_remainder(&parts, n);

    // Per-class floor allocations against each partition's exact quota.
    let mut filled = [0usize; 3];
    let mut alloc: Vec<[usize; 3]> = Vec::with_capacity(class_order.len());
    let mut remainders: Vec<[f64; 3]> = Vec::with_capacity(class_order.len());
    for label in &class_order {
        let n_c = roots_by_class[label].len();
        let mut base = [0usize; 3];
        let mut rem = [0f64; 3];
        for p in 0..3 {
            let quota = n_c as f64 * parts[p];
            base[p] = quota.floor() as usize;
            rem[p] = quota - base[p] as f64;
            filled[p] += base[p];
        }
        alloc.push(base);
        remainders.push(rem);
    }
    // Distribute each class's leftover roots to its highest-remainder
    // partitions that still have capacity under the global targets.
    for (c, label) in class_order.iter().enumerate() {
        let n_c = roots_by_class[label].len();
        let mut extras = n_c - alloc[c].iter().sum::<usize>();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            remainders[c][b]
                .partial_cmp(&remainders[c][a])
                .expect("remainders are finite")
                .then(a.cmp(&b))
        });
        while extras > 0 {
            let slot = order
                .iter()
                .copied()
                .find(|&p| filled[p] < targets[p])
                .expect("total extras equal total remaining capacity");
            alloc[c][slot] += 1;
            filled[slot] += 1;
            extras -= 1;
        }
    }

    // Reject splits that leave a requested partition with no documents at all.
    for (p, ratio) in parts.iter().enumerate() {
        if *ratio > 0.0 && targets[p] == 0 {
            return Err(CorpusError::EmptyPartition {
                partition: partition_name(p),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut partitions: [Vec<String>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (c, label) in class_order.iter().enumerate() {
        let mut roots = roots_by_class[label].clone();
        roots.shuffle(&mut rng);
        let mut offset = 0usize;
        for p in 0..3 {
            for root in &roots[offset..offset + alloc[c][p]] {
                partitions[p].extend(families[root].iter().cloned());
            }
            offset += alloc[c][p];
        }
    }

    let [train, validation, test] = partitions;
    Ok(CorpusSplit {
        train,
        validation,
        test,
        seed,
        ratios,
    })
}

fn partition_name(index: usize) -> PartitionName {
    match index {
        0 => PartitionName::Train,
        1 => PartitionName::Validation,
        _ => PartitionName::Test,
    }
}

/// Rounds `weights * total` to integers summing to `total`, assigning
/// leftovers by largest fractional remainder (ties to the earlier slot).
fn largest_remainder(weights: &[f64; 3], total: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut rem = [0f64; 3];
    let mut assigned = 0usize;
    for p in 0..3 {
        let quota = weights[p] * total as f64;
        out[p] = quota.floor() as usize;
        rem[p] = quota - out[p] as f64;
        assigned += out[p];
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        rem[b]
            .partial_cmp(&rem[a])
            .expect("remainders are finite")
            .then(a.cmp(&b))
    });
    for p in order.into_iter().cycle() {
        if assigned == total {
            break;
        }
        out[p] += 1;
        assigned += 1;
    }
    out
}
