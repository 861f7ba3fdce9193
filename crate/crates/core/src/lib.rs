//! Detection and rectification support for explicit gender stereotypes in
//! children's rhymes and poems.
//!
//! The crate is organized as a pipeline over an annotated verse corpus:
//!
//! * [`corpus`]: record format, validation, stratified document splits.
//! * [`textproc`]: tokenization and line-window segmentation.
//! * [`heuristics`]: reference lexicons and the five-bit heuristic encoder.
//! * [`features`]: train-fitted vocabulary and sparse count vectors.
//! * [`model`]: boosted trees and a logistic baseline, with text dumps.
//! * [`eval`]: confusion matrices, macro metrics, document verdicts.
//! * [`stats`]: annotator agreement, paired t-tests, survey tallies.
//! * [`promptkit`]: prompt templates and response bookkeeping for the two
//!   generation tasks.
//! * [`pipeline`]: one-call experiments and grids over all of the above.

pub mod corpus;
pub mod eval;
pub mod features;
pub mod heuristics;
pub mod model;
pub mod pipeline;
pub mod promptkit;
pub mod stats;
pub mod textproc;

pub use corpus::{
    document_label, parse_corpus, parse_corpus_str, split_corpus, write_corpus, CorpusError,
    CorpusSplit, Document, Kind, Label, Line, Provenance,
};
pub use eval::{evaluate, ConfusionMatrix, EvalError, MetricsReport};
pub use features::{FeatureError, FeatureVector, Vectorizer, Vocabulary};
pub use heuristics::{
    HeuristicEncoder, HeuristicLexicon, LexiconEntries, LexiconError, SentimentLexicon,
};
pub use model::{GbdtModel, LogRegConfig, LogRegModel, Model, ModelError, ModelKind, TrainConfig};
pub use pipeline::{
    default_grid, run_experiment, run_grid, ExperimentReport, ExperimentSpec, FittedPipeline,
    PipelineError,
};
pub use promptkit::{
    build_augmentation_prompt, build_rectification_prompt, register_response, CompletionClient,
    CompletionError, Journal, JournalEntry, PromptError, PromptJob, PromptKind, StubClient,
};
pub use stats::{
    paired_t_test, t_cdf, tally_choices, AgreementTable, StatsError, SurveyChoice, SurveyRecord,
    TTestResult,
};
pub use textproc::{segment, segment_all, tokenize, Scheme, Segment, Token};
