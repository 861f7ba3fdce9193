//! End-to-end experiment driver: split, fit, score, report.
//!
//! One [`ExperimentSpec`] fixes everything that can move (segmentation
//! scheme, heuristic tail on or off, model family, ratios, seed, training
//! settings), so a report is a pure function of corpus plus spec. Grids
//! sweep specs and keep going when individual runs fail.
//!
//! Spec files are `key = value` lines, `#` comments:
//!
//! ```text
//! scheme = l2
//! heuristics = on
//! model = gbdt
//! train_ratio = 0.8
//! test_ratio = 0.2
//! seed = 42
//! ```

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::corpus::{document_label, split_corpus, CorpusError, CorpusSplit, Document, Label};
use crate::eval::{aggregate_document_prediction, evaluate, EvalError, MetricsReport};
use crate::features::{FeatureVector, Vectorizer, Vocabulary};
use crate::heuristics::{
    HeuristicEncoder, HeuristicLexicon, LexiconEntries, LexiconError, SentimentLexicon,
};
use crate::model::{
    GbdtModel, LogRegConfig, LogRegModel, Model, ModelError, ModelKind, TrainConfig,
};
use crate::textproc::{segment, Scheme};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("spec line {line}: {message}")]
    BadSpec { line: usize, message: String },
    #[error("train partition is empty; check the ratios")]
    EmptyTrainPartition,
    #[error("test partition is empty; check the ratios")]
    NoTestDocuments,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything one experiment run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scheme: Scheme,
    pub heuristics: bool,
    pub model: ModelKind,
    pub ratios: (f64, f64, f64),
    pub seed: u64,
    pub train: TrainConfig,
    pub logreg: LogRegConfig,
    /// Master reference lists; the built-in ones when absent.
    pub lexicon_path: Option<PathBuf>,
    pub sentiment_path: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            scheme: Scheme::Full,
            heuristics: true,
            model: ModelKind::Gbdt,
            ratios: (0.8, 0.0, 0.2),
            seed: 42,
            train: TrainConfig::default(),
            logreg: LogRegConfig::default(),
            lexicon_path: None,
            sentiment_path: None,
        }
    }
}

impl ExperimentSpec {
    /// Short tag like `l2+he gbdt` used in grid output.
    pub fn label(&self) -> String {
        format!(
            "{}{} {}",
            self.scheme,
            if self.heuristics { "+he" } else { "" },
            self.model
        )
    }

    /// Parses the `key = value` spec format. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<ExperimentSpec, PipelineError> {
        let mut spec = ExperimentSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| PipelineError::BadSpec {
                line: line_no,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |message: String| PipelineError::BadSpec {
                line: line_no,
                message,
            };
            match key {
                "scheme" => {
                    spec.scheme = value.parse().map_err(bad)?;
                }
                "heuristics" => {
                    spec.heuristics = match value {
                        "on" | "true" | "yes" => true,
                        "off" | "false" | "no" => false,
                        other => {
                            return Err(bad(format!("bad flag `{other}` (expected on or off)")))
                        }
                    };
                }
                "model" => {
                    spec.model = value.parse().map_err(bad)?;
                }
                "train_ratio" => spec.ratios.0 = parse_num(value, line_no)?,
                "validation_ratio" => spec.ratios.1 = parse_num(value, line_no)?,
                "test_ratio" => spec.ratios.2 = parse_num(value, line_no)?,
                "seed" => spec.seed = parse_num(value, line_no)?,
                "rounds" => spec.train.rounds = parse_num(value, line_no)?,
                "max_depth" => spec.train.max_depth = parse_num(value, line_no)?,
                "learning_rate" => spec.train.learning_rate = parse_num(value, line_no)?,
                "l2_lambda" => spec.train.l2_lambda = parse_num(value, line_no)?,
                "min_child_weight" => spec.train.min_child_weight = parse_num(value, line_no)?,
                "logreg_iterations" => spec.logreg.iterations = parse_num(value, line_no)?,
                "logreg_learning_rate" => spec.logreg.learning_rate = parse_num(value, line_no)?,
                "logreg_l2_lambda" => spec.logreg.l2_lambda = parse_num(value, line_no)?,
                "lexicon" => spec.lexicon_path = Some(PathBuf::from(value)),
                "sentiment" => spec.sentiment_path = Some(PathBuf::from(value)),
                other => {
                    return Err(bad(format!("unknown key `{other}`")));
                }
            }
        }
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<ExperimentSpec, PipelineError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize) -> Result<T, PipelineError> {
    value.parse().map_err(|_| PipelineError::BadSpec {
        line,
        message: format!("bad numeric value `{value}`"),
    })
}

/// SplitMix64 step; derives stream seeds from the master seed.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Split plus all artifacts fitted on its train partition.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub spec: ExperimentSpec,
    pub split: CorpusSplit,
    pub vectorizer: Vectorizer,
    pub model: Model,
}

impl FittedPipeline {
    pub fn lexicon(&self) -> Option<&HeuristicLexicon> {
        self.vectorizer.heuristics.as_ref().map(|e| &e.lexicon)
    }
}

fn resolve_entries(
    spec: &ExperimentSpec,
) -> Result<(LexiconEntries, SentimentLexicon), PipelineError> {
    let entries = match &spec.lexicon_path {
        Some(path) => LexiconEntries::load(path)?,
        None => LexiconEntries::builtin(),
    };
    let sentiment = match &spec.sentiment_path {
        Some(path) => SentimentLexicon::load(path)?,
        None => SentimentLexicon::builtin(),
    };
    Ok((entries, sentiment))
}

fn docs_in_partition<'a>(docs: &'a [Document], ids: &[String]) -> Vec<&'a Document> {
    let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
    docs.iter()
        .filter(|d| wanted.contains(d.id.as_str()))
        .collect()
}

/// Splits the corpus and fits vocabulary, lexicon restriction, and model on
/// the train partition alone.
pub fn fit(docs: &[Document], spec: &ExperimentSpec) -> Result<FittedPipeline, PipelineError> {
    let (entries, sentiment) = resolve_entries(spec)?;
    let split = split_corpus(docs, spec.ratios, spec.seed)?;
    let train_docs = docs_in_partition(docs, &split.train);
    if train_docs.is_empty() {
        return Err(PipelineError::EmptyTrainPartition);
    }
    let train_segments: Vec<_> = train_docs
        .iter()
        .flat_map(|d| segment(d, spec.scheme))
        .collect();
    let vocabulary = Vocabulary::fit(train_segments.iter().map(|s| s.text.as_str()));
    let encoder = if spec.heuristics {
        let train_texts: Vec<String> = train_docs.iter().map(|d| d.text()).collect();
        let lexicon =
            HeuristicLexicon::restricted_to_train(&entries, train_texts.iter().map(String::as_str));
        Some(HeuristicEncoder::new(lexicon, sentiment))
    } else {
        None
    };
    let vectorizer = Vectorizer::new(vocabulary, encoder);
    let rows: Vec<FeatureVector> = train_segments
        .iter()
        .map(|s| vectorizer.vectorize(&s.text))
        .collect();
    let labels: Vec<Label> = train_segments.iter().map(|s| s.label).collect();
    let mut train_config = spec.train;
    train_config.seed = splitmix64(spec.seed);
    let model = match spec.model {
        ModelKind::Gbdt => Model::Gbdt(GbdtModel::train(&rows, &labels, train_config)?),
        ModelKind::LogReg => Model::LogReg(LogRegModel::train(&rows, &labels, spec.logreg)?),
    };
    Ok(FittedPipeline {
        spec: spec.clone(),
        split,
        vectorizer,
        model,
    })
}

/// Metrics and provenance for one finished run. `elapsed_ms` is wall-clock
/// and excluded from [`ExperimentReport::to_records`], which is otherwise a
/// deterministic function of corpus and spec.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub scheme: Scheme,
    pub heuristics: bool,
    pub model: ModelKind,
    pub ratios: (f64, f64, f64),
    pub seed: u64,
    pub train_documents: usize,
    pub validation_documents: usize,
    pub test_documents: usize,
    pub train_segments: usize,
    pub test_segments: usize,
    pub vocabulary_size: usize,
    pub feature_width: usize,
    /// (male, female, stereotype) entry counts after train restriction.
    pub lexicon_counts: Option<(usize, usize, usize)>,
    pub segment_metrics: MetricsReport,
    pub document_metrics: MetricsReport,
    /// Test documents the model flags as stereotypical, in corpus order.
    pub flagged_documents: Vec<String>,
    pub elapsed_ms: u128,
}

impl ExperimentReport {
    /// Flat key/value view with a stable key order; deterministic for a
    /// fixed corpus and spec.
    pub fn to_records(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_owned(), v));
        push("scheme", self.scheme.to_string());
        push(
            "heuristics",
            if self.heuristics { "on" } else { "off" }.to_owned(),
        );
        push("model", self.model.to_string());
        push("train_ratio", self.ratios.0.to_string());
        push("validation_ratio", self.ratios.1.to_string());
        push("test_ratio", self.ratios.2.to_string());
        push("seed", self.seed.to_string());
        push("train_documents", self.train_documents.to_string());
        push(
            "validation_documents",
            self.validation_documents.to_string(),
        );
        push("test_documents", self.test_documents.to_string());
        push("train_segments", self.train_segments.to_string());
        push("test_segments", self.test_segments.to_string());
        push("vocabulary_size", self.vocabulary_size.to_string());
        push("feature_width", self.feature_width.to_string());
        if let Some((male, female, phrases)) = self.lexicon_counts {
            push("lexicon_male_entries", male.to_string());
            push("lexicon_female_entries", female.to_string());
            push("lexicon_stereotype_entries", phrases.to_string());
        }
        for (prefix, metrics) in [
            ("segment", &self.segment_metrics),
            ("document", &self.document_metrics),
        ] {
            push(&format!("{prefix}_accuracy"), metrics.accuracy.to_string());
            push(
                &format!("{prefix}_macro_precision"),
                metrics.macro_precision.to_string(),
            );
            push(
                &format!("{prefix}_macro_recall"),
                metrics.macro_recall.to_string(),
            );
            push(&format!("{prefix}_macro_f1"), metrics.macro_f1.to_string());
            push(
                &format!("{prefix}_true_positive"),
                metrics.confusion.true_positive.to_string(),
            );
            push(
                &format!("{prefix}_false_positive"),
                metrics.confusion.false_positive.to_string(),
            );
            push(
                &format!("{prefix}_true_negative"),
                metrics.confusion.true_negative.to_string(),
            );
            push(
                &format!("{prefix}_false_negative"),
                metrics.confusion.false_negative.to_string(),
            );
        }
        push("flagged_documents", self.flagged_documents.join(","));
        out
    }
}

/// Scores a fitted pipeline on its own test partition.
pub fn evaluate_fitted(
    docs: &[Document],
    fitted: &FittedPipeline,
) -> Result<ExperimentReport, PipelineError> {
    let spec = &fitted.spec;
    let test_docs = docs_in_partition(docs, &fitted.split.test);
    if test_docs.is_empty() {
        return Err(PipelineError::NoTestDocuments);
    }
    let train_docs = docs_in_partition(docs, &fitted.split.train);
    let train_segment_count: usize = train_docs
        .iter()
        .map(|d| spec.scheme.segment_count(d.lines.len()))
        .sum();

    let mut segment_truths = Vec::new();
    let mut segment_preds = Vec::new();
    let mut doc_truths = Vec::new();
    let mut doc_preds = Vec::new();
    let mut flagged = Vec::new();
    for doc in &test_docs {
        let segments = segment(doc, spec.scheme);
        let mut per_doc = Vec::with_capacity(segments.len());
        for seg in &segments {
            let row = fitted.vectorizer.vectorize(&seg.text);
            let pred = fitted.model.classify(&row)?;
            segment_truths.push(seg.label);
            segment_preds.push(pred);
            per_doc.push(pred);
        }
        let verdict = aggregate_document_prediction(doc, spec.scheme, &per_doc)?;
        doc_truths.push(document_label(doc));
        doc_preds.push(verdict);
        if verdict.is_stereotypical() {
            flagged.push(doc.id.clone());
        }
    }
    let segment_metrics = evaluate(&segment_truths, &segment_preds)?;
    let document_metrics = evaluate(&doc_truths, &doc_preds)?;
    Ok(ExperimentReport {
        scheme: spec.scheme,
        heuristics: spec.heuristics,
        model: spec.model,
        ratios: spec.ratios,
        seed: spec.seed,
        train_documents: fitted.split.train.len(),
        validation_documents: fitted.split.validation.len(),
        test_documents: fitted.split.test.len(),
        train_segments: train_segment_count,
        test_segments: segment_truths.len(),
        vocabulary_size: fitted.vectorizer.vocab.len(),
        feature_width: fitted.vectorizer.width(),
        lexicon_counts: fitted.lexicon().map(|l| l.entry_counts()),
        segment_metrics,
        document_metrics,
        flagged_documents: flagged,
        elapsed_ms: 0,
    })
}

/// Fits and scores in one call, recording wall-clock time.
pub fn run_experiment(
    docs: &[Document],
    spec: &ExperimentSpec,
) -> Result<ExperimentReport, PipelineError> {
    let started = Instant::now();
    let fitted = fit(docs, spec)?;
    let mut report = evaluate_fitted(docs, &fitted)?;
    report.elapsed_ms = started.elapsed().as_millis();
    Ok(report)
}

/// Runs every spec, collecting per-spec outcomes; one failure does not
/// abort the sweep.
pub fn run_grid(
    docs: &[Document],
    specs: &[ExperimentSpec],
) -> Vec<(ExperimentSpec, Result<ExperimentReport, PipelineError>)> {
    specs
        .iter()
        .map(|spec| (spec.clone(), run_experiment(docs, spec)))
        .collect()
}

/// The standard sweep: every segmentation scheme, heuristic tail on and
/// off.
pub fn default_grid(base: &ExperimentSpec) -> Vec<ExperimentSpec> {
    let mut specs = Vec::with_capacity(Scheme::ALL.len() * 2);
    for scheme in Scheme::ALL {
        for heuristics in [false, true] {
            let mut spec = base.clone();
            spec.scheme = scheme;
            spec.heuristics = heuristics;
            specs.push(spec);
        }
    }
    specs
}
