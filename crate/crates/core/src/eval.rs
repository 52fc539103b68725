//! Precision/recall/F1 reports and the repeated stratified k-fold harness.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EmotionLabel, Instance};
use crate::error::{Error, Result};
use crate::models::{
    oracle_ensemble_eval, pipeline_predict, train_appraisal_emotion, TextBackend, TrainConfig,
};
use crate::schema::AppraisalVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion counts for one positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    fn add(&mut self, pred: bool, gold: bool) {
        match (pred, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    /// Zero wherever a denominator vanishes.
    pub fn prf(&self) -> Prf {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

pub fn prf1_binary(preds: &[bool], gold: &[bool]) -> Result<Prf> {
    if preds.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: gold.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty);
    }
    let mut c = Counts::default();
    for (&p, &g) in preds.iter().zip(gold) {
        c.add(p, g);
    }
    Ok(c.prf())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Multilabel,
    Multiclass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    #[serde(flatten)]
    pub prf: Prf,
}

/// Per-dimension or per-class scores with macro and micro aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: ReportKind,
    pub rows: Vec<ReportRow>,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub micro: Prf,
    /// Number of runs averaged into this report (1 for a single evaluation).
    pub runs: usize,
}

impl EvalReport {
    fn from_rows(kind: ReportKind, rows: Vec<ReportRow>, micro: Prf) -> Self {
        let n = rows.len().max(1) as f64;
        let macro_avg = Prf {
            precision: rows.iter().map(|r| r.prf.precision).sum::<f64>() / n,
            recall: rows.iter().map(|r| r.prf.recall).sum::<f64>() / n,
            f1: rows.iter().map(|r| r.prf.f1).sum::<f64>() / n,
        };
        EvalReport {
            kind,
            rows,
            macro_avg,
            micro,
            runs: 1,
        }
    }

    pub fn row(&self, label: &str) -> Option<&Prf> {
        self.rows.iter().find(|r| r.label == label).map(|r| &r.prf)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label\tprecision\trecall\tf1\n");
        let mut line = |label: &str, p: &Prf| {
            out.push_str(&format!(
                "{label}\t{:.4}\t{:.4}\t{:.4}\n",
                p.precision, p.recall, p.f1
            ));
        };
        for r in &self.rows {
            line(&r.label, &r.prf);
        }
        line("macro", &self.macro_avg);
        line("micro", &self.micro);
        out
    }
}

fn check_aligned<T, U>(preds: &[T], gold: &[U]) -> Result<()> {
    if preds.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: gold.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

/// Scores aligned appraisal predictions; micro pools every
/// (instance, dimension) decision.
pub fn multilabel_report(
    preds: &[AppraisalVector],
    gold: &[AppraisalVector],
) -> Result<EvalReport> {
    check_aligned(preds, gold)?;
    let schema = gold[0].schema();
    for v in preds.iter().chain(gold) {
        v.expect_schema(schema)?;
    }
    let mut per_dim = vec![Counts::default(); schema.len()];
    for (p, g) in preds.iter().zip(gold) {
        for (d, c) in per_dim.iter_mut().enumerate() {
            c.add(p.values()[d], g.values()[d]);
        }
    }
    let pooled = per_dim.iter().fold(Counts::default(), |acc, c| Counts {
        tp: acc.tp + c.tp,
        fp: acc.fp + c.fp,
        fn_: acc.fn_ + c.fn_,
    });
    let rows = schema
        .dimensions()
        .iter()
        .zip(&per_dim)
        .map(|(d, c)| ReportRow {
            label: d.name().to_string(),
            prf: c.prf(),
        })
        .collect();
    Ok(EvalReport::from_rows(
        ReportKind::Multilabel,
        rows,
        pooled.prf(),
    ))
}

/// One-vs-rest scores for every label seen in gold or predictions.
pub fn multiclass_report(preds: &[EmotionLabel], gold: &[EmotionLabel]) -> Result<EvalReport> {
    let labels: BTreeSet<EmotionLabel> = preds.iter().chain(gold).cloned().collect();
    let labels: Vec<EmotionLabel> = labels.into_iter().collect();
    multiclass_report_with_labels(preds, gold, &labels)
}

/// One-vs-rest scores with a fixed row set, so reports over different
/// folds line up. Micro scores count every instance and equal accuracy.
pub fn multiclass_report_with_labels(
    preds: &[EmotionLabel],
    gold: &[EmotionLabel],
    labels: &[EmotionLabel],
) -> Result<EvalReport> {
    check_aligned(preds, gold)?;
    let rows = labels
        .iter()
        .map(|label| {
            let mut c = Counts::default();
            for (p, g) in preds.iter().zip(gold) {
                c.add(p == label, g == label);
            }
            ReportRow {
                label: label.to_string(),
                prf: c.prf(),
            }
        })
        .collect();
    let correct = preds.iter().zip(gold).filter(|(p, g)| p == g).count();
    let micro = Counts {
        tp: correct,
        fp: preds.len() - correct,
        fn_: preds.len() - correct,
    }
    .prf();
    Ok(EvalReport::from_rows(ReportKind::Multiclass, rows, micro))
}

/// Unweighted mean of per-run reports.
pub fn average_reports(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports.first().ok_or(Error::Empty)?;
    for r in reports {
        let same_rows = r.rows.len() == first.rows.len()
            && r.rows
                .iter()
                .zip(&first.rows)
                .all(|(a, b)| a.label == b.label);
        if r.kind != first.kind || !same_rows {
            return Err(Error::DimensionMismatch(
                "reports to average have different rows".into(),
            ));
        }
    }
    let n = reports.len() as f64;
    let mean = |get: &dyn Fn(&EvalReport) -> Prf| {
        let (p, r, f) = reports.iter().map(get).fold((0.0, 0.0, 0.0), |acc, x| {
            (acc.0 + x.precision, acc.1 + x.recall, acc.2 + x.f1)
        });
        Prf {
            precision: p / n,
            recall: r / n,
            f1: f / n,
        }
    };
    let rows = first
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| ReportRow {
            label: row.label.clone(),
            prf: mean(&|r| r.rows[i].prf),
        })
        .collect();
    Ok(EvalReport {
        kind: first.kind,
        rows,
        macro_avg: mean(&|r| r.macro_avg),
        micro: mean(&|r| r.micro),
        runs: reports.iter().map(|r| r.runs).sum(),
    })
}

pub const DEFAULT_REPETITIONS: usize = 3;
pub const DEFAULT_FOLDS: usize = 10;

/// Fold assignment for repeated k-fold cross-validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub repetitions: usize,
    pub k: usize,
    pub seed: u64,
    pub instance_ids: Vec<String>,
    /// `assignments[rep][i]` is the test fold of instance `i` in repetition `rep`.
    pub assignments: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn test_indices(&self, rep: usize, fold: usize) -> Vec<usize> {
        self.assignments[rep]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self, rep: usize, fold: usize) -> Vec<usize> {
        self.assignments[rep]
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self, rep: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments[rep] {
            sizes[f] += 1;
        }
        sizes
    }
}

/// The 3×10 plan, stratified by emotion.
pub fn make_folds(corpus: &Corpus, seed: u64) -> Result<FoldPlan> {
    make_folds_with(corpus, DEFAULT_REPETITIONS, DEFAULT_FOLDS, seed)
}

pub fn make_folds_with(
    corpus: &Corpus,
    repetitions: usize,
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    let ids: Vec<String> = corpus.instances().iter().map(|i| i.id.clone()).collect();
    let strata: Vec<Option<EmotionLabel>> = corpus
        .instances()
        .iter()
        .map(|i| i.emotion.clone())
        .collect();
    plan_folds(ids, &strata, repetitions, k, seed)
}

/// Stratified assignment: each stratum is shuffled and dealt round-robin
/// across folds, continuing where the previous stratum stopped, so fold
/// sizes and per-stratum fold counts each differ by at most one.
pub fn plan_folds(
    instance_ids: Vec<String>,
    strata: &[Option<EmotionLabel>],
    repetitions: usize,
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 || repetitions == 0 {
        return Err(Error::Config(format!(
            "need k ≥ 2 and at least one repetition, got k={k}, repetitions={repetitions}"
        )));
    }
    if instance_ids.len() < k {
        return Err(Error::CorpusTooSmall {
            size: instance_ids.len(),
            required: k,
        });
    }
    let mut groups: BTreeMap<Option<EmotionLabel>, Vec<usize>> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        groups.entry(s.clone()).or_default().push(i);
    }
    for (label, members) in &groups {
        if members.len() < k {
            log::warn!(
                "class {:?} has {} instances, fewer than {k} folds; spreading best-effort",
                label.as_ref().map(|l| l.as_str()),
                members.len()
            );
        }
    }
    let mut assignments = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        let mut folds = vec![0; instance_ids.len()];
        let mut position = 0usize;
        for members in groups.values() {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            for idx in shuffled {
                folds[idx] = position % k;
                position += 1;
            }
        }
        assignments.push(folds);
    }
    Ok(FoldPlan {
        repetitions,
        k,
        seed,
        instance_ids,
        assignments,
    })
}

/// What a cross-validation run learns and predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Text → appraisal vector.
    TextAppraisal,
    /// Text → emotion.
    TextEmotion,
    /// Appraisal vector → emotion, no text.
    AppraisalEmotion,
    /// Text → appraisal → emotion.
    Pipeline,
    /// Credit if either text → emotion or the pipeline is right.
    Oracle,
}

impl Task {
    fn needs_appraisal(self) -> bool {
        !matches!(self, Task::TextEmotion)
    }

    fn needs_emotion(self) -> bool {
        !matches!(self, Task::TextAppraisal)
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t2a" | "text_appraisal" => Ok(Task::TextAppraisal),
            "t2e" | "text_emotion" => Ok(Task::TextEmotion),
            "a2e" | "appraisal_emotion" => Ok(Task::AppraisalEmotion),
            "pipeline" | "t2a2e" => Ok(Task::Pipeline),
            "oracle" | "ensemble" => Ok(Task::Oracle),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// An instance with an optional appraisal label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    #[serde(flatten)]
    pub instance: Instance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appraisal: Option<AppraisalVector>,
}

impl Example {
    pub fn unlabeled(instance: Instance) -> Self {
        Example {
            instance,
            appraisal: None,
        }
    }
}

/// Reads one [`Example`] per line.
pub fn read_examples<R: BufRead>(reader: R) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<examples>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
                format: "examples",
                row: idx + 1,
                rule: e.to_string(),
            })?,
        );
    }
    if out.is_empty() {
        return Err(Error::NoInstances);
    }
    Ok(out)
}

pub fn load_examples(path: &Path) -> Result<Vec<Example>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_examples(BufReader::new(file))
}

pub fn write_examples<W: Write>(mut w: W, examples: &[Example]) -> Result<()> {
    for e in examples {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|e| Error::io("<examples>", e))?;
    }
    Ok(())
}

/// The instances of `examples` as a corpus (ids must be unique).
pub fn examples_corpus(name: &str, examples: &[Example]) -> Result<Corpus> {
    Corpus::new(name, examples.iter().map(|e| e.instance.clone()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub repetition: usize,
    pub fold: usize,
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub task: Task,
    pub backend: String,
    pub report: EvalReport,
    pub runs: Vec<RunReport>,
}

fn validate_examples(examples: &[Example], plan: &FoldPlan, task: Task) -> Result<()> {
    let same_ids = examples.len() == plan.instance_ids.len()
        && examples
            .iter()
            .zip(&plan.instance_ids)
            .all(|(e, id)| &e.instance.id == id);
    if !same_ids {
        return Err(Error::InstanceMismatch(
            "fold plan was made for a different instance list".into(),
        ));
    }
    let task_name = format!("{task:?}");
    let mut schema = None;
    for e in examples {
        if task.needs_emotion() && e.instance.emotion.is_none() {
            return Err(Error::TaskLabel {
                task: task_name,
                needs: "an emotion label",
                instance: e.instance.id.clone(),
            });
        }
        if task.needs_appraisal() {
            let Some(v) = &e.appraisal else {
                return Err(Error::TaskLabel {
                    task: task_name,
                    needs: "an appraisal vector",
                    instance: e.instance.id.clone(),
                });
            };
            match schema {
                None => schema = Some(v.schema()),
                Some(s) => v.expect_schema(s)?,
            }
        }
    }
    Ok(())
}

fn run_fold(
    examples: &[Example],
    train: &[usize],
    test: &[usize],
    task: Task,
    labels: &[EmotionLabel],
    backend: &dyn TextBackend,
    config: &TrainConfig,
) -> Result<EvalReport> {
    let text = |i: usize| examples[i].instance.text.as_str();
    let vector = |i: usize| examples[i].appraisal.as_ref().expect("validated");
    let emotion = |i: usize| examples[i].instance.emotion.as_ref().expect("validated");
    let gold_emotions: Vec<EmotionLabel> = if task.needs_emotion() {
        test.iter().map(|&i| emotion(i).clone()).collect()
    } else {
        Vec::new()
    };
    let train_aem = || {
        let pairs: Vec<(AppraisalVector, EmotionLabel)> = train
            .iter()
            .map(|&i| (vector(i).clone(), emotion(i).clone()))
            .collect();
        train_appraisal_emotion(&pairs, config)
    };
    let train_tam = || {
        let data: Vec<(&str, &AppraisalVector)> =
            train.iter().map(|&i| (text(i), vector(i))).collect();
        backend.train_appraisal(&data, config)
    };
    let train_te = || {
        let data: Vec<(&str, &EmotionLabel)> =
            train.iter().map(|&i| (text(i), emotion(i))).collect();
        backend.train_emotion(&data, config)
    };

    match task {
        Task::TextAppraisal => {
            let tam = train_tam()?;
            let preds: Vec<AppraisalVector> = test
                .iter()
                .map(|&i| tam.predict_appraisal(text(i)))
                .collect();
            let gold: Vec<AppraisalVector> = test.iter().map(|&i| vector(i).clone()).collect();
            multilabel_report(&preds, &gold)
        }
        Task::TextEmotion => {
            let te = train_te()?;
            let preds: Vec<EmotionLabel> =
                test.iter().map(|&i| te.predict_emotion(text(i))).collect();
            multiclass_report_with_labels(&preds, &gold_emotions, labels)
        }
        Task::AppraisalEmotion => {
            let aem = train_aem()?;
            let preds = test
                .iter()
                .map(|&i| aem.predict(vector(i)))
                .collect::<Result<Vec<_>>>()?;
            multiclass_report_with_labels(&preds, &gold_emotions, labels)
        }
        Task::Pipeline => {
            let tam = train_tam()?;
            let aem = train_aem()?;
            let preds = test
                .iter()
                .map(|&i| pipeline_predict(tam.as_ref(), &aem, text(i)))
                .collect::<Result<Vec<_>>>()?;
            multiclass_report_with_labels(&preds, &gold_emotions, labels)
        }
        Task::Oracle => {
            let te = train_te()?;
            let tam = train_tam()?;
            let aem = train_aem()?;
            let te_preds: Vec<EmotionLabel> =
                test.iter().map(|&i| te.predict_emotion(text(i))).collect();
            let pipe_preds = test
                .iter()
                .map(|&i| pipeline_predict(tam.as_ref(), &aem, text(i)))
                .collect::<Result<Vec<_>>>()?;
            oracle_ensemble_eval(&te_preds, &pipe_preds, &gold_emotions, Some(labels))
        }
    }
}

/// Trains and tests once per (repetition, fold) and averages the per-run
/// reports. Folds run in parallel; results are merged in
/// (repetition, fold) order.
pub fn cross_validate(
    examples: &[Example],
    plan: &FoldPlan,
    task: Task,
    backend: &dyn TextBackend,
    config: &TrainConfig,
) -> Result<CvOutcome> {
    config.validate()?;
    validate_examples(examples, plan, task)?;
    let labels: Vec<EmotionLabel> = examples
        .iter()
        .filter_map(|e| e.instance.emotion.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let jobs: Vec<(usize, usize)> = (0..plan.repetitions)
        .flat_map(|r| (0..plan.k).map(move |f| (r, f)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(repetition, fold)| {
            let test = plan.test_indices(repetition, fold);
            if test.is_empty() {
                return Ok(None);
            }
            let train = plan.train_indices(repetition, fold);
            let report = run_fold(examples, &train, &test, task, &labels, backend, config)?;
            Ok(Some(RunReport {
                repetition,
                fold,
                report,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let runs: Vec<RunReport> = runs.into_iter().flatten().collect();
    let reports: Vec<EvalReport> = runs.iter().map(|r| r.report.clone()).collect();
    Ok(CvOutcome {
        task,
        backend: backend.id().to_string(),
        report: average_reports(&reports)?,
        runs,
    })
}
