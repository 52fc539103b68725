use std::path::PathBuf;

use appraisal_core::agreement::{
    agreement_delta, agreement_report, distribution_table, judgments_with_emotions, load_judgments,
    Setting,
};
use appraisal_core::corpus::{load_corpus, CorpusFormat, EmotionLabel};
use appraisal_core::schema::Dimension;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

const DIMS: [Dimension; 7] = [
    Dimension::Attention,
    Dimension::Certainty,
    Dimension::Effort,
    Dimension::Pleasantness,
    Dimension::Responsibility,
    Dimension::Control,
    Dimension::Circumstance,
];
const VISIBLE: [f64; 7] = [0.55, 0.71, 0.44, 0.93, 0.80, 0.66, 0.65];
const HIDDEN: [f64; 7] = [0.30, 0.43, 0.38, 0.87, 0.64, 0.71, 0.54];
const DELTA: [f64; 7] = [0.25, 0.28, 0.06, 0.06, 0.16, -0.05, 0.11];

fn within(actual: f64, expected: f64) -> bool {
    (actual - expected).abs() <= 0.005 + 1e-12
}

#[test]
fn kappa_columns_match_to_rounding() {
    let vis = agreement_report(
        &load_judgments(&fixture("agreement/emovis_a1.jsonl")).unwrap(),
        &load_judgments(&fixture("agreement/emovis_a2.jsonl")).unwrap(),
        Setting::EmoVis,
    )
    .unwrap();
    let hide = agreement_report(
        &load_judgments(&fixture("agreement/emohide_a1.jsonl")).unwrap(),
        &load_judgments(&fixture("agreement/emohide_a2.jsonl")).unwrap(),
        Setting::EmoHide,
    )
    .unwrap();
    assert_eq!(vis.n_items, 210);
    assert_eq!(hide.n_items, 210);
    let delta = agreement_delta(&vis, &hide).unwrap();
    for (i, dim) in DIMS.iter().enumerate() {
        let v = vis.kappa(*dim).unwrap();
        let h = hide.kappa(*dim).unwrap();
        assert!(within(v, VISIBLE[i]), "{dim} visible {v}");
        assert!(within(h, HIDDEN[i]), "{dim} hidden {h}");
        assert!(within(delta.per_dimension[i].1, DELTA[i]), "{dim} delta");
    }
    assert!(within(vis.macro_kappa, 0.68), "{}", vis.macro_kappa);
    assert!(within(hide.macro_kappa, 0.55), "{}", hide.macro_kappa);
    assert!(within(delta.macro_delta, 0.13), "{}", delta.macro_delta);
}

#[test]
fn distribution_counts_are_exact() {
    let corpus = load_corpus(&fixture("enisear_synthetic.tsv"), CorpusFormat::IsearTsv).unwrap();
    let vis = judgments_with_emotions(
        &load_judgments(&fixture("agreement/emovis_full.jsonl")).unwrap(),
        &corpus,
    )
    .unwrap();
    let hide = judgments_with_emotions(
        &load_judgments(&fixture("agreement/emohide_full.jsonl")).unwrap(),
        &corpus,
    )
    .unwrap();
    let vis = distribution_table(&vis).unwrap();
    let hide = distribution_table(&hide).unwrap();

    let anger = EmotionLabel::new("anger");
    assert_eq!(vis.count(&anger, Dimension::Attention), Some(141));
    assert_eq!(vis.total(Dimension::Certainty), Some(872));
    assert_eq!(hide.total(Dimension::Attention), Some(648));

    let vis_totals = [623, 872, 570, 143, 337, 152, 294];
    let hide_totals = [648, 711, 355, 143, 374, 215, 368];
    for (i, dim) in DIMS.iter().enumerate() {
        assert_eq!(vis.total(*dim), Some(vis_totals[i]), "{dim}");
        assert_eq!(hide.total(*dim), Some(hide_totals[i]), "{dim}");
    }
    assert_eq!(
        vis.count(&EmotionLabel::new("joy"), Dimension::Pleasantness),
        Some(143)
    );
    assert_eq!(
        hide.count(&EmotionLabel::new("shame"), Dimension::Control),
        Some(62)
    );
}
