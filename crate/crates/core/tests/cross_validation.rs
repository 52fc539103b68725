use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use appraisal_core::corpus::{load_corpus, Corpus, CorpusFormat, EmotionLabel};
use appraisal_core::eval::{cross_validate, make_folds, make_folds_with, Example, Task};
use appraisal_core::models::{MajorityBackend, NgramLogisticBackend, TrainConfig};
use appraisal_core::schema::{label_corpus, EmotionAppraisalMap};

fn corpus() -> Corpus {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/enisear_synthetic.tsv");
    load_corpus(&path, CorpusFormat::IsearTsv).unwrap()
}

fn auto_examples(corpus: &Corpus) -> Vec<Example> {
    let labeled = label_corpus(corpus, &EmotionAppraisalMap::standard()).unwrap();
    assert!(labeled.skipped.is_empty());
    labeled
        .pairs
        .into_iter()
        .map(|(instance, v)| Example {
            instance,
            appraisal: Some(v),
        })
        .collect()
}

#[test]
fn folds_are_balanced_disjoint_and_stratified() {
    let corpus = corpus();
    assert_eq!(corpus.len(), 1001);
    let plan = make_folds(&corpus, 1).unwrap();
    assert_eq!(plan.repetitions, 3);
    assert_eq!(plan.k, 10);
    for rep in 0..3 {
        let sizes = plan.fold_sizes(rep);
        assert!(sizes.iter().all(|&s| s == 100 || s == 101), "{sizes:?}");
        assert_eq!(sizes.iter().sum::<usize>(), 1001);
        let mut covered = vec![0; 1001];
        for fold in 0..10 {
            for i in plan.test_indices(rep, fold) {
                covered[i] += 1;
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
        let mut per_class: BTreeMap<(&EmotionLabel, usize), usize> = BTreeMap::new();
        for (i, inst) in corpus.instances().iter().enumerate() {
            *per_class
                .entry((inst.emotion.as_ref().unwrap(), plan.assignments[rep][i]))
                .or_default() += 1;
        }
        for label in corpus.inventory() {
            let counts: Vec<usize> = (0..10)
                .map(|f| per_class.get(&(label, f)).copied().unwrap_or(0))
                .collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "{label}: {counts:?}");
        }
    }
    assert_eq!(plan, make_folds(&corpus, 1).unwrap());
    assert_ne!(
        plan.assignments,
        make_folds(&corpus, 2).unwrap().assignments
    );
}

#[test]
fn appraisal_to_emotion_is_perfect_on_rule_labels() {
    let corpus = corpus();
    let examples = auto_examples(&corpus);
    let plan = make_folds(&corpus, 1).unwrap();
    let start = Instant::now();
    let outcome = cross_validate(
        &examples,
        &plan,
        Task::AppraisalEmotion,
        &NgramLogisticBackend::default(),
        &TrainConfig::default(),
    )
    .unwrap();
    assert_eq!(outcome.runs.len(), 30);
    assert_eq!(outcome.report.micro.f1, 1.0);
    assert_eq!(outcome.report.macro_avg.f1, 1.0);
    eprintln!("a2e cross-validation took {:?}", start.elapsed());
}

#[test]
fn constant_model_scores_majority_rate() {
    let corpus = corpus();
    let examples = auto_examples(&corpus);
    let plan = make_folds_with(&corpus, 1, 10, 1).unwrap();
    let outcome = cross_validate(
        &examples,
        &plan,
        Task::TextEmotion,
        &MajorityBackend,
        &TrainConfig::default(),
    )
    .unwrap();
    // Every fold holds 14 or 15 of each of the seven balanced classes, so a
    // constant guess is right for about one instance in seven.
    assert!(
        (outcome.report.micro.f1 - 1.0 / 7.0).abs() < 0.01,
        "{}",
        outcome.report.micro.f1
    );
}

#[test]
fn text_backend_beats_majority_on_rule_labels() {
    let corpus = corpus();
    let examples = auto_examples(&corpus);
    let plan = make_folds_with(&corpus, 1, 10, 1).unwrap();
    let config = TrainConfig::default();
    let run = |backend: &dyn appraisal_core::models::TextBackend| {
        cross_validate(&examples, &plan, Task::TextAppraisal, backend, &config)
            .unwrap()
            .report
            .micro
            .f1
    };
    let baseline = run(&MajorityBackend);
    let model = run(&NgramLogisticBackend::default());
    eprintln!("majority {baseline:.4}, n-gram logistic {model:.4}");
    assert!(model >= baseline + 0.05);
}

#[test]
fn examples_round_trip_through_jsonl() {
    use appraisal_core::eval::{examples_corpus, read_examples, write_examples};
    let examples = auto_examples(&corpus());
    let mut buf = Vec::new();
    write_examples(&mut buf, &examples).unwrap();
    let back = read_examples(buf.as_slice()).unwrap();
    assert_eq!(back, examples);
    // The same lines also load as a plain corpus.
    let as_corpus =
        appraisal_core::corpus::read_corpus(buf.as_slice(), "x", CorpusFormat::Jsonl).unwrap();
    assert_eq!(
        as_corpus.instances(),
        examples_corpus("x", &examples).unwrap().instances()
    );
}
