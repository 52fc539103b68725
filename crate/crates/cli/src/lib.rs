//! The `appraise` command line. Every command writes its artifacts and a
//! `manifest.json` into one run directory.

pub mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use appraisal_core::agreement::{
    agreement_changes, agreement_delta, agreement_report, comparison_tsv, distribution_table,
    judgments_with_emotions, latest_by_instance, load_judgments, Judgment, Setting,
};
use appraisal_core::corpus::{load_corpus, stratified_sample, write_corpus, Corpus, CorpusFormat};
use appraisal_core::eval::{
    cross_validate, examples_corpus, load_examples, make_folds_with, write_examples, CvOutcome,
    Example, FoldPlan, Task, DEFAULT_FOLDS, DEFAULT_REPETITIONS,
};
use appraisal_core::models::{
    train_appraisal_emotion, MajorityBackend, NgramLogisticBackend, TextBackend, TrainConfig,
};
use appraisal_core::schema::{label_corpus, merge_schema, EmotionAppraisalMap};
use appraisal_service::{SessionManager, Store, SystemClock};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use manifest::Run;

pub const DATA_DIR_ENV: &str = "APPRAISE_DATA_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] appraisal_core::Error),
    #[error(transparent)]
    Service(#[from] appraisal_service::ServiceError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Parser)]
#[command(
    name = "appraise",
    version,
    about = "Appraisal annotation, agreement and modelling"
)]
pub struct Cli {
    /// Output directory for artifacts and manifest.json
    /// [default: $APPRAISE_DATA_DIR/runs/<command>, else runs/<command>]
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus file; relative paths also resolve against $APPRAISE_DATA_DIR.
    #[arg(long)]
    pub corpus: PathBuf,
    /// isear_tsv, tec, blogs or jsonl [default: from the file extension]
    #[arg(long)]
    pub format: Option<CorpusFormat>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Use these judgments as appraisal labels instead of the emotion rules;
    /// only judged instances are kept.
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    /// Merge judged seven-dimension vectors into the six-dimension schema.
    #[arg(long)]
    pub merge: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub batch_size: usize,
    /// Backend option as KEY=VALUE, e.g. lr=0.5 or aem_hidden=32 (repeatable).
    #[arg(long = "option", value_name = "KEY=VALUE")]
    pub options: Vec<String>,
    /// ngram-logreg or majority.
    #[arg(long, default_value = NgramLogisticBackend::ID)]
    pub backend: String,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    pub repetitions: usize,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    /// Reuse a fold plan written by an earlier run instead of drawing one.
    #[arg(long)]
    pub plan: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FourWay {
    #[arg(long)]
    pub vis_a: PathBuf,
    #[arg(long)]
    pub vis_b: PathBuf,
    #[arg(long)]
    pub hide_a: PathBuf,
    #[arg(long)]
    pub hide_b: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a corpus and write it as normalized JSONL.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "corpus.jsonl")]
        out: PathBuf,
    },
    /// Attach rule-based appraisal vectors derived from emotion labels.
    Autolabel {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Emotion → appraisal table (TSV) [default: built-in]
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value = "labels.jsonl")]
        out: PathBuf,
    },
    /// Draw an emotion-stratified sample.
    Sample {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "sample.jsonl")]
        out: PathBuf,
    },
    /// Per-dimension Cohen's κ between two annotators.
    Kappa {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// emohide, emovis or auto [default: taken from the judgments]
        #[arg(long)]
        setting: Option<Setting>,
        #[arg(long, default_value = "kappa.tsv")]
        out: PathBuf,
    },
    /// κ with and without the emotion shown, and their difference.
    Delta {
        #[command(flatten)]
        files: FourWay,
        #[arg(long, default_value = "delta.tsv")]
        out: PathBuf,
    },
    /// Per-instance agreement change when the emotion is shown.
    ChangeScore {
        #[command(flatten)]
        files: FourWay,
        #[arg(long, default_value = "change_scores.tsv")]
        out: PathBuf,
    },
    /// Positive counts per emotion and appraisal.
    Distribution {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Judgments to count [default: rule-based labels of the corpus]
        #[arg(long)]
        judgments: Option<PathBuf>,
        #[arg(long, default_value = "distribution.tsv")]
        out: PathBuf,
    },
    /// Train one model on the whole corpus and save it.
    Train {
        /// t2a, t2e or a2e
        #[arg(long)]
        task: Task,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Repeated stratified cross-validation of one task.
    Xval {
        /// t2a, t2e, a2e, pipeline or oracle
        #[arg(long)]
        task: Task,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long, default_value = "xval.json")]
        out: PathBuf,
    },
    /// Cross-validate text → appraisal → emotion next to text → emotion.
    PipelineEval {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long, default_value = "pipeline.json")]
        out: PathBuf,
    },
    /// Cross-validate the oracle combination of text → emotion and the pipeline.
    EnsembleEval {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long, default_value = "ensemble.json")]
        out: PathBuf,
    },
    /// Run the annotation HTTP service.
    Serve {
        /// Corpus files to offer (repeatable).
        #[arg(long = "corpus", required = true)]
        corpora: Vec<PathBuf>,
        #[arg(long)]
        format: Option<CorpusFormat>,
        /// Directory for sessions and judgments.
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Export one session's judgments as JSONL.
    Export {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        session: String,
        #[arg(long, default_value = "export.jsonl")]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Autolabel { .. } => "autolabel",
            Command::Sample { .. } => "sample",
            Command::Kappa { .. } => "kappa",
            Command::Delta { .. } => "delta",
            Command::ChangeScore { .. } => "change-score",
            Command::Distribution { .. } => "distribution",
            Command::Train { .. } => "train",
            Command::Xval { .. } => "xval",
            Command::PipelineEval { .. } => "pipeline-eval",
            Command::EnsembleEval { .. } => "ensemble-eval",
            Command::Serve { .. } => "serve",
            Command::Export { .. } => "export",
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on failure, 2 on usage errors.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    let arguments = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match run(cli, arguments) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

/// Relative paths that do not exist from the working directory are looked
/// up under the data directory.
fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = data_dir() {
            let candidate = dir.join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn default_run_dir(command: &str) -> PathBuf {
    data_dir().unwrap_or_default().join("runs").join(command)
}

pub fn run(cli: Cli, arguments: Vec<String>) -> Result<()> {
    let name = cli.command.name();
    let dir = cli.run_dir.clone().unwrap_or_else(|| default_run_dir(name));
    let mut run = Run::start(dir, name, arguments)?;
    match cli.command {
        Command::Ingest { corpus, out } => {
            let c = read_corpus_arg(&mut run, &corpus)?;
            let mut bytes = Vec::new();
            write_corpus(&mut bytes, &c, CorpusFormat::Jsonl)?;
            run.output(&out, &bytes)?;
            let masked = c.instances().iter().filter(|i| i.emotion_masked).count();
            println!(
                "{}: {} instances, {masked} with the emotion masked",
                c.name(),
                c.len()
            );
            for (label, n) in c.class_counts() {
                println!("  {label}\t{n}");
            }
        }
        Command::Autolabel { corpus, map, out } => {
            let c = read_corpus_arg(&mut run, &corpus)?;
            let map = match map {
                Some(path) => {
                    let path = resolve(&path);
                    run.input(&path)?;
                    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                    EmotionAppraisalMap::from_tsv(&text)?
                }
                None => EmotionAppraisalMap::standard(),
            };
            let labeled = label_corpus(&c, &map)?;
            let examples: Vec<Example> = labeled
                .pairs
                .into_iter()
                .map(|(instance, v)| Example {
                    instance,
                    appraisal: Some(v),
                })
                .collect();
            let mut bytes = Vec::new();
            write_examples(&mut bytes, &examples)?;
            run.output(&out, &bytes)?;
            let mut skipped = Vec::new();
            for s in &labeled.skipped {
                serde_json::to_writer(&mut skipped, s).map_err(appraisal_core::Error::from)?;
                skipped.push(b'\n');
            }
            run.output(&sibling(&out, "skipped.jsonl"), &skipped)?;
            println!(
                "{} labeled, {} skipped",
                examples.len(),
                labeled.skipped.len()
            );
        }
        Command::Sample {
            corpus,
            n,
            seed,
            out,
        } => {
            run.seed("seed", seed);
            let c = read_corpus_arg(&mut run, &corpus)?;
            let sample = stratified_sample(&c, n, seed)?;
            let mut bytes = Vec::new();
            write_corpus(&mut bytes, &sample, CorpusFormat::Jsonl)?;
            run.output(&out, &bytes)?;
            for (label, k) in sample.class_counts() {
                println!("  {label}\t{k}");
            }
        }
        Command::Kappa { a, b, setting, out } => {
            let ja = read_judgments_arg(&mut run, &a)?;
            let jb = read_judgments_arg(&mut run, &b)?;
            let setting = match setting {
                Some(s) => s,
                None => ja.first().map(|j| j.setting).ok_or_else(|| {
                    CliError::Usage(format!("{} holds no judgments", a.display()))
                })?,
            };
            let report = agreement_report(&ja, &jb, setting)?;
            let tsv = report.to_tsv();
            print!("{tsv}");
            run.output(&out, tsv.as_bytes())?;
            run.output(&out.with_extension("json"), &to_json(&report)?)?;
        }
        Command::Delta { files, out } => {
            let (vis, hide) = four_way_reports(&mut run, &files)?;
            let tsv = comparison_tsv(&vis, &hide)?;
            print!("{tsv}");
            run.output(&out, tsv.as_bytes())?;
            #[derive(Serialize)]
            struct DeltaFile<'a> {
                emovis: &'a appraisal_core::agreement::AgreementReport,
                emohide: &'a appraisal_core::agreement::AgreementReport,
                delta: appraisal_core::agreement::AgreementDelta,
            }
            let delta = agreement_delta(&vis, &hide)?;
            run.output(
                &out.with_extension("json"),
                &to_json(&DeltaFile {
                    emovis: &vis,
                    emohide: &hide,
                    delta,
                })?,
            )?;
        }
        Command::ChangeScore { files, out } => {
            let va = read_judgments_arg(&mut run, &files.vis_a)?;
            let vb = read_judgments_arg(&mut run, &files.vis_b)?;
            let ha = read_judgments_arg(&mut run, &files.hide_a)?;
            let hb = read_judgments_arg(&mut run, &files.hide_b)?;
            let changes = agreement_changes(&ha, &hb, &va, &vb)?;
            let mut tsv = String::from("instance_id\tscore\tchanges\n");
            for c in &changes {
                tsv.push_str(&format!(
                    "{}\t{:+}\t{}\n",
                    c.instance_id,
                    c.score,
                    c.summary()
                ));
            }
            run.output(&out, tsv.as_bytes())?;
            println!("{} instances scored", changes.len());
        }
        Command::Distribution {
            corpus,
            judgments,
            out,
        } => {
            let c = read_corpus_arg(&mut run, &corpus)?;
            let labels = match judgments {
                Some(path) => {
                    let js = read_judgments_arg(&mut run, &path)?;
                    judgments_with_emotions(&js, &c)?
                }
                None => label_corpus(&c, &EmotionAppraisalMap::standard())?
                    .pairs
                    .into_iter()
                    .map(|(i, v)| (i.emotion.expect("labeled pairs carry an emotion"), v))
                    .collect(),
            };
            let table = distribution_table(&labels)?;
            let tsv = table.to_tsv();
            print!("{tsv}");
            run.output(&out, tsv.as_bytes())?;
            run.output(&out.with_extension("json"), &to_json(&table)?)?;
        }
        Command::Train {
            task,
            corpus,
            labels,
            train,
            out,
        } => {
            let config = train_config(&mut run, &train)?;
            let examples = read_examples_arg(&mut run, &corpus, &labels)?;
            let path = run.dir().join(&out);
            let backend = NgramLogisticBackend::default();
            if train.backend != NgramLogisticBackend::ID {
                return Err(CliError::Usage(format!(
                    "only `{}` models can be saved",
                    NgramLogisticBackend::ID
                )));
            }
            match task {
                Task::TextAppraisal => {
                    let data = appraisal_pairs(&examples, task)?;
                    let data: Vec<(&str, &_)> = data.iter().map(|(t, v)| (*t, *v)).collect();
                    backend.train_text_appraisal(&data, &config)?.save(&path)?;
                }
                Task::TextEmotion => {
                    let data = emotion_pairs(&examples, task)?;
                    backend.train_text_emotion(&data, &config)?.save(&path)?;
                }
                Task::AppraisalEmotion => {
                    let data: Vec<_> = appraisal_pairs(&examples, task)?
                        .into_iter()
                        .zip(emotion_pairs(&examples, task)?)
                        .map(|((_, v), (_, e))| (v.clone(), e.clone()))
                        .collect();
                    train_appraisal_emotion(&data, &config)?.save(&path)?;
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "`train` handles t2a, t2e and a2e; {other:?} is evaluated with xval"
                    )))
                }
            }
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            run.output(&out, &bytes)?;
        }
        Command::Xval {
            task,
            corpus,
            labels,
            train,
            cv,
            out,
        } => {
            let outcome = cross_validation(&mut run, task, &corpus, &labels, &train, &cv, &out)?;
            println!(
                "{task:?}: micro-F1 {:.4}, macro-F1 {:.4} over {} runs",
                outcome.report.micro.f1, outcome.report.macro_avg.f1, outcome.report.runs
            );
        }
        Command::PipelineEval {
            corpus,
            labels,
            train,
            cv,
            out,
        } => {
            let mut summary = BTreeMap::new();
            for (task, file) in [
                (Task::Pipeline, out.clone()),
                (Task::TextEmotion, sibling(&out, "text_emotion.json")),
            ] {
                let o = cross_validation(&mut run, task, &corpus, &labels, &train, &cv, &file)?;
                summary.insert(format!("{task:?}"), o.report.micro.f1);
            }
            for (task, f1) in summary {
                println!("{task}: micro-F1 {f1:.4}");
            }
        }
        Command::EnsembleEval {
            corpus,
            labels,
            train,
            cv,
            out,
        } => {
            let mut summary = Vec::new();
            for (task, file) in [
                (Task::Oracle, out.clone()),
                (Task::TextEmotion, sibling(&out, "text_emotion.json")),
                (Task::Pipeline, sibling(&out, "pipeline.json")),
            ] {
                let o = cross_validation(&mut run, task, &corpus, &labels, &train, &cv, &file)?;
                summary.push((task, o.report.micro.f1));
            }
            for (task, f1) in summary {
                println!("{task:?}: micro-F1 {f1:.4}");
            }
        }
        Command::Serve {
            corpora,
            format,
            store,
            addr,
        } => {
            let mut loaded = Vec::new();
            for path in &corpora {
                loaded.push(read_corpus_arg(
                    &mut run,
                    &CorpusArgs {
                        corpus: path.clone(),
                        format,
                    },
                )?);
            }
            let store = Store::open(&store)?;
            let manager = SessionManager::open(loaded, store, Arc::new(SystemClock))?;
            run.finish()?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io("<runtime>", e))?;
            println!("serving on http://{addr}");
            return rt
                .block_on(appraisal_service::serve(manager, addr))
                .map_err(|e| CliError::io(addr.to_string(), e));
        }
        Command::Export {
            store,
            session,
            out,
        } => {
            let store = Store::open(resolve(&store))?;
            let bytes = store.export_jsonl(&session)?;
            let lines = bytes.iter().filter(|&&b| b == b'\n').count();
            run.output(&out, &bytes)?;
            println!("{lines} judgments exported");
        }
    }
    run.finish()?;
    Ok(())
}

fn sibling(out: &Path, file: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{file}"))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(appraisal_core::Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn read_corpus_arg(run: &mut Run, args: &CorpusArgs) -> Result<Corpus> {
    let path = resolve(&args.corpus);
    let format = match args.format {
        Some(f) => f,
        None => CorpusFormat::from_path(&path).ok_or_else(|| {
            CliError::Usage(format!(
                "cannot tell the format of {}; pass --format",
                path.display()
            ))
        })?,
    };
    run.input(&path)?;
    Ok(load_corpus(&path, format)?)
}

fn read_judgments_arg(run: &mut Run, path: &Path) -> Result<Vec<Judgment>> {
    let path = resolve(path);
    run.input(&path)?;
    Ok(load_judgments(&path)?)
}

fn four_way_reports(
    run: &mut Run,
    files: &FourWay,
) -> Result<(
    appraisal_core::agreement::AgreementReport,
    appraisal_core::agreement::AgreementReport,
)> {
    let va = read_judgments_arg(run, &files.vis_a)?;
    let vb = read_judgments_arg(run, &files.vis_b)?;
    let ha = read_judgments_arg(run, &files.hide_a)?;
    let hb = read_judgments_arg(run, &files.hide_b)?;
    Ok((
        agreement_report(&va, &vb, Setting::EmoVis)?,
        agreement_report(&ha, &hb, Setting::EmoHide)?,
    ))
}

/// Examples from a labels file written by `autolabel`, or from any corpus
/// labeled by rule on the fly; `--judgments` swaps in judged vectors.
fn read_examples_arg(
    run: &mut Run,
    corpus: &CorpusArgs,
    labels: &LabelArgs,
) -> Result<Vec<Example>> {
    let path = resolve(&corpus.corpus);
    let is_jsonl = corpus.format == Some(CorpusFormat::Jsonl)
        || (corpus.format.is_none() && CorpusFormat::from_path(&path) == Some(CorpusFormat::Jsonl));
    let parsed = if is_jsonl {
        load_examples(&path).ok()
    } else {
        None
    };
    let mut examples = match parsed {
        Some(examples) => {
            run.input(&path)?;
            examples
        }
        None => {
            let c = read_corpus_arg(run, corpus)?;
            let map = EmotionAppraisalMap::standard();
            c.instances()
                .iter()
                .map(|i| Example {
                    appraisal: i.emotion.as_ref().and_then(|e| map.get(e).cloned()),
                    instance: i.clone(),
                })
                .collect()
        }
    };
    if let Some(jpath) = &labels.judgments {
        let judgments = read_judgments_arg(run, jpath)?;
        let latest = latest_by_instance(&judgments);
        let mut kept = Vec::new();
        for mut e in examples {
            if let Some(j) = latest.get(e.instance.id.as_str()) {
                e.appraisal = Some(if labels.merge {
                    merge_schema(&j.vector)?
                } else {
                    j.vector.clone()
                });
                kept.push(e);
            }
        }
        if kept.is_empty() {
            return Err(CliError::Usage(format!(
                "no judgment in {} matches an instance of {}",
                jpath.display(),
                corpus.corpus.display()
            )));
        }
        examples = kept;
    } else if labels.merge {
        return Err(CliError::Usage("--merge needs --judgments".into()));
    }
    Ok(examples)
}

fn train_config(run: &mut Run, args: &TrainArgs) -> Result<TrainConfig> {
    run.seed("seed", args.seed);
    let mut config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        options: BTreeMap::new(),
    };
    for opt in &args.options {
        let (k, v) = opt
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--option expects KEY=VALUE, got `{opt}`")))?;
        config = config.with_option(k.trim(), v.trim());
    }
    config.validate()?;
    Ok(config)
}

fn backend(name: &str) -> Result<Box<dyn TextBackend>> {
    match name {
        NgramLogisticBackend::ID => Ok(Box::new(NgramLogisticBackend::default())),
        "majority" => Ok(Box::new(MajorityBackend)),
        other => Err(CliError::Usage(format!(
            "unknown backend `{other}` (expected {} or majority)",
            NgramLogisticBackend::ID
        ))),
    }
}

fn appraisal_pairs(
    examples: &[Example],
    task: Task,
) -> Result<Vec<(&str, &appraisal_core::schema::AppraisalVector)>> {
    examples
        .iter()
        .map(|e| {
            e.appraisal
                .as_ref()
                .map(|v| (e.instance.text.as_str(), v))
                .ok_or_else(|| {
                    CliError::Core(appraisal_core::Error::TaskLabel {
                        task: format!("{task:?}"),
                        needs: "an appraisal vector",
                        instance: e.instance.id.clone(),
                    })
                })
        })
        .collect()
}

fn emotion_pairs(
    examples: &[Example],
    task: Task,
) -> Result<Vec<(&str, &appraisal_core::corpus::EmotionLabel)>> {
    examples
        .iter()
        .map(|e| {
            e.instance
                .emotion
                .as_ref()
                .map(|l| (e.instance.text.as_str(), l))
                .ok_or_else(|| {
                    CliError::Core(appraisal_core::Error::TaskLabel {
                        task: format!("{task:?}"),
                        needs: "an emotion label",
                        instance: e.instance.id.clone(),
                    })
                })
        })
        .collect()
}

fn fold_plan(run: &mut Run, examples: &[Example], cv: &CvArgs, seed: u64) -> Result<FoldPlan> {
    match &cv.plan {
        Some(path) => {
            let path = resolve(path);
            run.input(&path)?;
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            let plan: FoldPlan =
                serde_json::from_slice(&bytes).map_err(appraisal_core::Error::from)?;
            Ok(plan)
        }
        None => {
            let corpus = examples_corpus("cv", examples)?;
            Ok(make_folds_with(&corpus, cv.repetitions, cv.folds, seed)?)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cross_validation(
    run: &mut Run,
    task: Task,
    corpus: &CorpusArgs,
    labels: &LabelArgs,
    train: &TrainArgs,
    cv: &CvArgs,
    out: &Path,
) -> Result<CvOutcome> {
    let config = train_config(run, train)?;
    let backend = backend(&train.backend)?;
    let examples = read_examples_arg(run, corpus, labels)?;
    let plan = fold_plan(run, &examples, cv, train.seed)?;
    let outcome = cross_validate(&examples, &plan, task, backend.as_ref(), &config)?;
    run.output(out, &to_json(&outcome)?)?;
    run.output(
        &out.with_extension("tsv"),
        outcome.report.to_tsv().as_bytes(),
    )?;
    run.output(&sibling(out, "folds.json"), &to_json(&plan)?)?;
    Ok(outcome)
}
