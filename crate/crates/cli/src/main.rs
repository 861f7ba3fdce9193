//! `versekit`: the verse-analysis toolkit from one binary.
//!
//! Every subcommand is a thin adapter over `versekit-core`; results are
//! identical to calling the library directly. Exit codes: 0 success,
//! 1 usage error, 2 data error (bad or missing input), 3 internal error
//! (failed to write an output).

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use versekit_core::corpus::{
    corpus_to_string, document_label, parse_corpus_str, split_corpus, CorpusSplit, Document, Kind,
    Provenance,
};
use versekit_core::heuristics::{
    HeuristicEncoder, HeuristicLexicon, LexiconEntries, SentimentLexicon,
};
use versekit_core::model::ModelKind;
use versekit_core::pipeline::{self, ExperimentSpec};
use versekit_core::promptkit::{
    build_augmentation_prompt, build_rectification_prompt, register_response, CompletionClient,
    Journal, JournalEntry, PromptJob, PromptKind, StubClient,
};
use versekit_core::stats::{paired_t_test, parse_paired_scores, AgreementTable};
use versekit_core::textproc::Scheme;

#[derive(Parser)]
#[command(
    name = "versekit",
    version,
    about = "Detect and rectify explicit gender stereotypes in children's rhymes and poems",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus file and print label/kind statistics
    Ingest(IngestArgs),
    /// Produce a stratified train/validation/test split
    Split(SplitArgs),
    /// Encode one line of verse as the five heuristic bits
    Encode(EncodeArgs),
    /// Fit a model and write its artifacts to a directory
    Train(TrainArgs),
    /// Run one experiment end to end and print the report
    Eval(EvalArgs),
    /// Run the standard grid: every scheme, heuristics on and off
    Grid(GridArgs),
    /// Krippendorff's alpha over a two-rater agreement file
    Alpha(AlphaArgs),
    /// Paired two-tailed t-test over a two-column score file
    Ttest(TtestArgs),
    /// Render augmentation or rectification prompts
    Prompt(PromptArgs),
}

#[derive(Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Human-readable aligned columns
    #[default]
    Table,
    /// Line-delimited machine-readable records
    Records,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn as_bool(self) -> bool {
        matches!(self, Toggle::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PromptKindArg {
    Augment,
    Rectify,
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus file, one JSON document record per line
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    train_ratio: f64,
    #[arg(long, default_value_t = 0.0)]
    validation_ratio: f64,
    #[arg(long, default_value_t = 0.2)]
    test_ratio: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the split as JSON to this path
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct EncodeArgs {
    /// Line of verse to encode
    #[arg(long)]
    line: String,
    /// Reference lexicon file; the built-in one when absent
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Sentiment lexicon file; the built-in one when absent
    #[arg(long)]
    sentiment: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

/// Experiment settings shared by train, eval, and grid. A `--spec` file is
/// read first; any flag set here overrides the file's value.
#[derive(Args, Default)]
struct SpecArgs {
    /// Spec file in `key = value` form
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Segmentation scheme: l1, l2, l3, or full
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Append the five heuristic bits to every feature vector
    #[arg(long, value_enum)]
    heuristics: Option<Toggle>,
    /// Classifier: gbdt or logreg
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    train_ratio: Option<f64>,
    #[arg(long)]
    validation_ratio: Option<f64>,
    #[arg(long)]
    test_ratio: Option<f64>,
    /// Master seed; split and model seeds derive from it
    #[arg(long)]
    seed: Option<u64>,
    /// Boosting rounds
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2_lambda: Option<f64>,
    #[arg(long)]
    min_child_weight: Option<f64>,
    #[arg(long)]
    logreg_iterations: Option<usize>,
    #[arg(long)]
    logreg_learning_rate: Option<f64>,
    #[arg(long)]
    logreg_l2_lambda: Option<f64>,
    /// Reference lexicon file; the built-in one when absent
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Sentiment lexicon file; the built-in one when absent
    #[arg(long)]
    sentiment: Option<PathBuf>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<ExperimentSpec, Failure> {
        let mut spec = match &self.spec {
            Some(path) => ExperimentSpec::load(path).map_err(data)?,
            None => ExperimentSpec::default(),
        };
        if let Some(v) = self.scheme {
            spec.scheme = v;
        }
        if let Some(v) = self.heuristics {
            spec.heuristics = v.as_bool();
        }
        if let Some(v) = self.model {
            spec.model = v;
        }
        if let Some(v) = self.train_ratio {
            spec.ratios.0 = v;
        }
        if let Some(v) = self.validation_ratio {
            spec.ratios.1 = v;
        }
        if let Some(v) = self.test_ratio {
            spec.ratios.2 = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.rounds {
            spec.train.rounds = v;
        }
        if let Some(v) = self.max_depth {
            spec.train.max_depth = v;
        }
        if let Some(v) = self.learning_rate {
            spec.train.learning_rate = v;
        }
        if let Some(v) = self.l2_lambda {
            spec.train.l2_lambda = v;
        }
        if let Some(v) = self.min_child_weight {
            spec.train.min_child_weight = v;
        }
        if let Some(v) = self.logreg_iterations {
            spec.logreg.iterations = v;
        }
        if let Some(v) = self.logreg_learning_rate {
            spec.logreg.learning_rate = v;
        }
        if let Some(v) = self.logreg_l2_lambda {
            spec.logreg.l2_lambda = v;
        }
        if let Some(v) = &self.lexicon {
            spec.lexicon_path = Some(v.clone());
        }
        if let Some(v) = &self.sentiment {
            spec.sentiment_path = Some(v.clone());
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Directory for model.txt, vocabulary.tsv, lexicon.lex, split.json,
    /// and spec.txt
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Base settings; the grid varies scheme and heuristics on top
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct AlphaArgs {
    /// Agreement file: two whitespace-separated binary codes per line
    #[arg(long)]
    file: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct TtestArgs {
    /// Score file: two whitespace-separated floats per line
    #[arg(long)]
    file: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct PromptArgs {
    /// Task to render prompts for
    #[arg(long, value_enum)]
    kind: PromptKindArg,
    #[arg(long)]
    corpus: PathBuf,
    /// Specific document ids; explicit selection counts as flagging for
    /// rectification. Defaults to every eligible document.
    #[arg(long = "doc")]
    docs: Vec<String>,
    /// Complete each prompt with the offline stub client and print the
    /// corpus with the generated children appended
    #[arg(long)]
    stub: bool,
    /// Append prompt jobs and stub responses to this journal file
    #[arg(long)]
    journal: Option<PathBuf>,
    /// Write stub output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

enum Failure {
    Data(String),
    Internal(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

fn data(err: impl Display) -> Failure {
    Failure::Data(err.to_string())
}

fn internal(err: impl Display) -> Failure {
    Failure::Internal(err.to_string())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))
}

fn load_corpus(path: &Path) -> Result<Vec<Document>, Failure> {
    parse_corpus_str(&read_file(path)?).map_err(data)
}

fn print_kv(rows: &[(String, String)], format: Format) {
    match format {
        Format::Table => {
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in rows {
                println!("{k:<width$}  {v}");
            }
        }
        Format::Records => {
            for (k, v) in rows {
                println!("{k}\t{v}");
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Ingest(args) => ingest(args),
        Command::Split(args) => split(args),
        Command::Encode(args) => encode(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Grid(args) => grid(args),
        Command::Alpha(args) => alpha(args),
        Command::Ttest(args) => ttest(args),
        Command::Prompt(args) => prompt(args),
    }
}

fn ingest(args: IngestArgs) -> Result<(), Failure> {
    let docs = load_corpus(&args.corpus)?;
    let mut verses = [[0usize; 2]; 2];
    let mut lines = [[0usize; 2]; 2];
    for doc in &docs {
        let l = document_label(doc).bit() as usize;
        let k = match doc.kind {
            Kind::Rhyme => 0,
            Kind::Poem => 1,
        };
        verses[l][k] += 1;
        lines[l][k] += doc.lines.len();
    }
    let categories = [
        ("stereotypical rhymes", 1, 0),
        ("stereotypical poems", 1, 1),
        ("non-stereotypical rhymes", 0, 0),
        ("non-stereotypical poems", 0, 1),
    ];
    match args.format {
        Format::Table => {
            let name_width = categories
                .iter()
                .map(|(name, _, _)| name.len())
                .max()
                .unwrap_or(0);
            println!("{:<name_width$}  verses  lines", "category");
            for (name, l, k) in categories {
                println!(
                    "{name:<name_width$}  {:>6}  {:>5}",
                    verses[l][k], lines[l][k]
                );
            }
            let total_verses: usize = verses.iter().flatten().sum();
            let total_lines: usize = lines.iter().flatten().sum();
            println!(
                "{:<name_width$}  {total_verses:>6}  {total_lines:>5}",
                "total"
            );
        }
        Format::Records => {
            let mut rows = Vec::new();
            for (name, l, k) in categories {
                let key = name.replace([' ', '-'], "_");
                rows.push((format!("{key}_verses"), verses[l][k].to_string()));
                rows.push((format!("{key}_lines"), lines[l][k].to_string()));
            }
            let total_verses: usize = verses.iter().flatten().sum();
            let total_lines: usize = lines.iter().flatten().sum();
            rows.push(("total_verses".into(), total_verses.to_string()));
            rows.push(("total_lines".into(), total_lines.to_string()));
            print_kv(&rows, Format::Records);
        }
    }
    Ok(())
}

fn split(args: SplitArgs) -> Result<(), Failure> {
    let docs = load_corpus(&args.corpus)?;
    let ratios = (args.train_ratio, args.validation_ratio, args.test_ratio);
    let split = split_corpus(&docs, ratios, args.seed).map_err(data)?;
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&split).map_err(internal)?;
        write_file(out, &json)?;
    }
    match args.format {
        Format::Table => {
            for (name, ids) in partition_rows(&split) {
                println!("{name} ({}): {}", ids.len(), ids.join(" "));
            }
        }
        Format::Records => {
            for (name, ids) in partition_rows(&split) {
                for id in ids {
                    println!("{id}\t{name}");
                }
            }
        }
    }
    Ok(())
}

fn partition_rows(split: &CorpusSplit) -> [(&'static str, &[String]); 3] {
    [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ]
}

fn encode(args: EncodeArgs) -> Result<(), Failure> {
    let entries = match &args.lexicon {
        Some(path) => LexiconEntries::load(path).map_err(data)?,
        None => LexiconEntries::builtin(),
    };
    let sentiment = match &args.sentiment {
        Some(path) => SentimentLexicon::load(path).map_err(data)?,
        None => SentimentLexicon::builtin(),
    };
    let encoder = HeuristicEncoder::new(HeuristicLexicon::from_full_list(&entries), sentiment);
    let bits = encoder.encode(&args.line);
    match args.format {
        Format::Table => {
            let rendered: Vec<String> = bits.iter().map(|b| b.to_string()).collect();
            println!("{}", rendered.join(" "));
        }
        Format::Records => {
            let names = ["male", "female", "stereotype", "negative", "positive"];
            let rows: Vec<(String, String)> = names
                .iter()
                .zip(bits.iter())
                .map(|(n, b)| (n.to_string(), b.to_string()))
                .collect();
            print_kv(&rows, Format::Records);
        }
    }
    Ok(())
}

fn spec_to_string(spec: &ExperimentSpec) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("scheme", spec.scheme.to_string());
    push(
        "heuristics",
        if spec.heuristics { "on" } else { "off" }.into(),
    );
    push("model", spec.model.to_string());
    push("train_ratio", spec.ratios.0.to_string());
    push("validation_ratio", spec.ratios.1.to_string());
    push("test_ratio", spec.ratios.2.to_string());
    push("seed", spec.seed.to_string());
    push("rounds", spec.train.rounds.to_string());
    push("max_depth", spec.train.max_depth.to_string());
    push("learning_rate", spec.train.learning_rate.to_string());
    push("l2_lambda", spec.train.l2_lambda.to_string());
    push("min_child_weight", spec.train.min_child_weight.to_string());
    push("logreg_iterations", spec.logreg.iterations.to_string());
    push(
        "logreg_learning_rate",
        spec.logreg.learning_rate.to_string(),
    );
    push("logreg_l2_lambda", spec.logreg.l2_lambda.to_string());
    if let Some(path) = &spec.lexicon_path {
        push("lexicon", path.display().to_string());
    }
    if let Some(path) = &spec.sentiment_path {
        push("sentiment", path.display().to_string());
    }
    out
}

fn train(args: TrainArgs) -> Result<(), Failure> {
    let spec = args.spec.resolve()?;
    let docs = load_corpus(&args.corpus)?;
    let fitted = pipeline::fit(&docs, &spec).map_err(data)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::Internal(format!("{}: {e}", args.out_dir.display())))?;
    fitted
        .model
        .save(&args.out_dir.join("model.txt"))
        .map_err(internal)?;
    write_file(
        &args.out_dir.join("vocabulary.tsv"),
        &fitted.vectorizer.vocab.to_tsv(),
    )?;
    if let Some(lexicon) = fitted.lexicon() {
        write_file(
            &args.out_dir.join("lexicon.lex"),
            &lexicon.to_lexicon_string(),
        )?;
    }
    let split_json = serde_json::to_string_pretty(&fitted.split).map_err(internal)?;
    write_file(&args.out_dir.join("split.json"), &split_json)?;
    write_file(&args.out_dir.join("spec.txt"), &spec_to_string(&spec))?;
    let rows = vec![
        ("model".to_string(), spec.model.to_string()),
        ("scheme".to_string(), spec.scheme.to_string()),
        (
            "heuristics".to_string(),
            if spec.heuristics { "on" } else { "off" }.to_string(),
        ),
        (
            "train_documents".to_string(),
            fitted.split.train.len().to_string(),
        ),
        (
            "vocabulary_size".to_string(),
            fitted.vectorizer.vocab.len().to_string(),
        ),
        (
            "feature_width".to_string(),
            fitted.vectorizer.width().to_string(),
        ),
        ("out_dir".to_string(), args.out_dir.display().to_string()),
    ];
    print_kv(&rows, args.format);
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let spec = args.spec.resolve()?;
    let docs = load_corpus(&args.corpus)?;
    let report = pipeline::run_experiment(&docs, &spec).map_err(data)?;
    let mut rows = report.to_records();
    if args.format == Format::Table {
        rows.push(("elapsed_ms".into(), report.elapsed_ms.to_string()));
    }
    print_kv(&rows, args.format);
    Ok(())
}

fn grid(args: GridArgs) -> Result<(), Failure> {
    let base = args.spec.resolve()?;
    let docs = load_corpus(&args.corpus)?;
    let specs = pipeline::default_grid(&base);
    let outcomes = pipeline::run_grid(&docs, &specs);
    let mut succeeded = 0usize;
    match args.format {
        Format::Table => {
            let label_width = outcomes
                .iter()
                .map(|(spec, _)| spec.label().len())
                .max()
                .unwrap_or(0)
                .max("spec".len());
            println!(
                "{:<label_width$}  {:>8}  {:>9}  {:>8}  {:>8}",
                "spec", "accuracy", "precision", "recall", "f1"
            );
            for (spec, outcome) in &outcomes {
                match outcome {
                    Ok(report) => {
                        succeeded += 1;
                        let m = &report.document_metrics;
                        println!(
                            "{:<label_width$}  {:>8.4}  {:>9.4}  {:>8.4}  {:>8.4}",
                            spec.label(),
                            m.accuracy,
                            m.macro_precision,
                            m.macro_recall,
                            m.macro_f1
                        );
                    }
                    Err(err) => {
                        println!("{:<label_width$}  error: {err}", spec.label());
                    }
                }
            }
        }
        Format::Records => {
            for (spec, outcome) in &outcomes {
                match outcome {
                    Ok(report) => {
                        succeeded += 1;
                        for (k, v) in report.to_records() {
                            println!("{}\t{k}\t{v}", spec.label());
                        }
                    }
                    Err(err) => {
                        println!("{}\terror\t{err}", spec.label());
                    }
                }
            }
        }
    }
    if succeeded == 0 {
        return Err(Failure::Data("every grid entry failed".into()));
    }
    Ok(())
}

fn alpha(args: AlphaArgs) -> Result<(), Failure> {
    let table = AgreementTable::parse(&read_file(&args.file)?).map_err(data)?;
    let alpha = table.krippendorff_alpha().map_err(data)?;
    let rows = vec![
        ("units".to_string(), table.len().to_string()),
        ("alpha".to_string(), alpha.to_string()),
    ];
    print_kv(&rows, args.format);
    Ok(())
}

fn ttest(args: TtestArgs) -> Result<(), Failure> {
    let (a, b) = parse_paired_scores(&read_file(&args.file)?).map_err(data)?;
    let result = paired_t_test(&a, &b).map_err(data)?;
    let rows = vec![
        ("pairs".to_string(), a.len().to_string()),
        (
            "mean_difference".to_string(),
            result.mean_difference.to_string(),
        ),
        ("t".to_string(), result.t.to_string()),
        ("df".to_string(), result.df.to_string()),
        ("p_two_tailed".to_string(), result.p_two_tailed.to_string()),
    ];
    print_kv(&rows, args.format);
    Ok(())
}

fn prompt(args: PromptArgs) -> Result<(), Failure> {
    let docs = load_corpus(&args.corpus)?;
    let selected: Vec<&Document> = if args.docs.is_empty() {
        docs.iter()
            .filter(|d| match args.kind {
                PromptKindArg::Augment => d.provenance == Provenance::Original,
                PromptKindArg::Rectify => document_label(d).is_stereotypical(),
            })
            .collect()
    } else {
        let mut picked = Vec::with_capacity(args.docs.len());
        for id in &args.docs {
            let doc = docs
                .iter()
                .find(|d| &d.id == id)
                .ok_or_else(|| Failure::Data(format!("no document with id `{id}`")))?;
            picked.push(doc);
        }
        picked
    };
    let mut jobs: Vec<(PromptJob, &Document)> = Vec::with_capacity(selected.len());
    for doc in selected {
        let job = match args.kind {
            PromptKindArg::Augment => build_augmentation_prompt(doc).map_err(data)?,
            // Selection (explicit or by label) is the flagging attestation.
            PromptKindArg::Rectify => build_rectification_prompt(doc, true).map_err(data)?,
        };
        jobs.push((job, doc));
    }
    let journal = args.journal.as_ref().map(Journal::at);
    if args.stub {
        let client = StubClient;
        let mut extended = docs.clone();
        for (job, parent) in &jobs {
            let response = client.complete(&job.prompt_text).map_err(data)?;
            let suffix = match job.kind {
                PromptKind::Augment => "aug-stub",
                PromptKind::Rectify => "rect-stub",
            };
            let child_id = format!("{}-{suffix}", parent.id);
            let outcome = register_response(job, &response, parent, &child_id).map_err(data)?;
            extended.push(outcome.document);
            if let Some(journal) = &journal {
                journal
                    .append(&JournalEntry::new(job.clone(), Some(response)))
                    .map_err(internal)?;
            }
        }
        let rendered = corpus_to_string(&extended);
        match &args.out {
            Some(path) => write_file(path, &rendered)?,
            None => print!("{rendered}"),
        }
        return Ok(());
    }
    for (job, _) in &jobs {
        match args.format {
            Format::Table => {
                let kind = match job.kind {
                    PromptKind::Augment => "augment",
                    PromptKind::Rectify => "rectify",
                };
                println!("--- {} ({kind})", job.doc_id);
                println!("{}", job.prompt_text);
                println!();
            }
            Format::Records => {
                let line = serde_json::to_string(job).map_err(internal)?;
                println!("{line}");
            }
        }
        if let Some(journal) = &journal {
            journal
                .append(&JournalEntry::new(job.clone(), None))
                .map_err(internal)?;
        }
    }
    Ok(())
}
