//! Inter-annotator agreement: Cohen's κ per appraisal dimension, the change
//! in agreement between annotation settings, per-instance change scores and
//! appraisal distribution tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EmotionLabel};
use crate::error::{Error, Result};
use crate::schema::{AppraisalSchema, AppraisalVector, Dimension};

/// Under which conditions a judgment was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// Annotator sees the text only.
    EmoHide,
    /// Annotator sees the text and the writer's emotion.
    EmoVis,
    /// Derived from the emotion label by rule.
    Auto,
}

impl Setting {
    pub fn expected_schema(self) -> AppraisalSchema {
        match self {
            Setting::EmoHide | Setting::EmoVis => AppraisalSchema::Split7,
            Setting::Auto => AppraisalSchema::Merged6,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::EmoHide => "emohide",
            Setting::EmoVis => "emovis",
            Setting::Auto => "auto",
        })
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "emohide" | "hide" | "hidden" => Ok(Setting::EmoHide),
            "emovis" | "vis" | "visible" => Ok(Setting::EmoVis),
            "auto" | "autoappr" => Ok(Setting::Auto),
            other => Err(Error::Config(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Deserialize)]
struct RawJudgment {
    annotator: String,
    instance_id: String,
    setting: Setting,
    vector: AppraisalVector,
    timestamp: u64,
}

/// One annotator's appraisal vector for one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawJudgment")]
pub struct Judgment {
    pub annotator: String,
    pub instance_id: String,
    pub setting: Setting,
    pub vector: AppraisalVector,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: u64,
}

impl TryFrom<RawJudgment> for Judgment {
    type Error = Error;

    fn try_from(r: RawJudgment) -> Result<Self> {
        Judgment::new(r.annotator, r.instance_id, r.setting, r.vector, r.timestamp)
    }
}

impl Judgment {
    pub fn new(
        annotator: impl Into<String>,
        instance_id: impl Into<String>,
        setting: Setting,
        vector: AppraisalVector,
        timestamp: u64,
    ) -> Result<Self> {
        vector.expect_schema(setting.expected_schema())?;
        Ok(Judgment {
            annotator: annotator.into(),
            instance_id: instance_id.into(),
            setting,
            vector,
            timestamp,
        })
    }
}

pub fn read_judgments<R: BufRead>(reader: R) -> Result<Vec<Judgment>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<judgments>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let j = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            format: "judgments",
            row: idx + 1,
            rule: e.to_string(),
        })?;
        out.push(j);
    }
    Ok(out)
}

pub fn load_judgments(path: &Path) -> Result<Vec<Judgment>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_judgments(BufReader::new(file))
}

pub fn write_judgments<W: Write>(mut w: W, judgments: &[Judgment]) -> Result<()> {
    for j in judgments {
        serde_json::to_writer(&mut w, j)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io("<judgments>", e))?;
    }
    Ok(())
}

/// Collapses resubmissions: the last judgment per instance wins.
pub fn latest_by_instance(judgments: &[Judgment]) -> BTreeMap<&str, &Judgment> {
    let mut map = BTreeMap::new();
    for j in judgments {
        map.insert(j.instance_id.as_str(), j);
    }
    map
}

/// κ together with its ingredients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub value: f64,
    pub observed: f64,
    pub expected: f64,
    /// Chance agreement was 1, so κ is set by convention.
    pub degenerate: bool,
}

/// Cohen's κ for two binary annotation sequences.
///
/// Computed from integer counts: with `n` items, `agree` matches and
/// `s = pos_a·pos_b + neg_a·neg_b`, κ = (agree·n − s) / (n² − s).
/// When chance agreement is 1 the value is 1.0 for identical sequences and
/// 0.0 otherwise.
pub fn kappa_detail(a: &[bool], b: &[bool]) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty);
    }
    let n = a.len() as u128;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u128;
    let pos_a = a.iter().filter(|&&x| x).count() as u128;
    let pos_b = b.iter().filter(|&&x| x).count() as u128;
    let chance = pos_a * pos_b + (n - pos_a) * (n - pos_b);
    let n2 = n * n;
    let observed = agree as f64 / n as f64;
    let expected = chance as f64 / n2 as f64;
    if chance == n2 {
        return Ok(Kappa {
            value: if agree == n { 1.0 } else { 0.0 },
            observed,
            expected,
            degenerate: true,
        });
    }
    let num = (agree * n) as f64 - chance as f64;
    let den = (n2 - chance) as f64;
    Ok(Kappa {
        value: num / den,
        observed,
        expected,
        degenerate: false,
    })
}

pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64> {
    kappa_detail(a, b).map(|k| k.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionKappa {
    pub dimension: Dimension,
    pub kappa: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub setting: Setting,
    pub schema: AppraisalSchema,
    pub per_dimension: Vec<DimensionKappa>,
    #[serde(rename = "macro")]
    pub macro_kappa: f64,
    pub n_items: usize,
}

impl AgreementReport {
    pub fn kappa(&self, dim: Dimension) -> Option<f64> {
        self.per_dimension
            .iter()
            .find(|d| d.dimension == dim)
            .map(|d| d.kappa)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("appraisal\tkappa\tdegenerate\n");
        for d in &self.per_dimension {
            out.push_str(&format!(
                "{}\t{:.4}\t{}\n",
                d.dimension, d.kappa, d.degenerate
            ));
        }
        out.push_str(&format!("macro\t{:.4}\tfalse\n", self.macro_kappa));
        out
    }
}

fn uniform_schema<'a>(
    vectors: impl IntoIterator<Item = &'a AppraisalVector>,
) -> Result<AppraisalSchema> {
    let mut schema = None;
    for v in vectors {
        match schema {
            None => schema = Some(v.schema()),
            Some(s) => v.expect_schema(s)?,
        }
    }
    schema.ok_or(Error::Empty)
}

/// Per-dimension κ between two annotators' judgments in one setting.
///
/// Judgments are aligned by instance id; if an annotator judged an instance
/// more than once, the last judgment counts.
pub fn agreement_report(
    ja: &[Judgment],
    jb: &[Judgment],
    setting: Setting,
) -> Result<AgreementReport> {
    for j in ja.iter().chain(jb) {
        if j.setting != setting {
            return Err(Error::SettingMismatch {
                instance: j.instance_id.clone(),
                expected: setting.to_string(),
                found: j.setting.to_string(),
            });
        }
    }
    let a = latest_by_instance(ja);
    let b = latest_by_instance(jb);
    let ids_a: BTreeSet<&str> = a.keys().copied().collect();
    let ids_b: BTreeSet<&str> = b.keys().copied().collect();
    if ids_a != ids_b {
        return Err(Error::InstanceSetsDiffer {
            only_a: ids_a.difference(&ids_b).map(|s| s.to_string()).collect(),
            only_b: ids_b.difference(&ids_a).map(|s| s.to_string()).collect(),
        });
    }
    let schema = uniform_schema(a.values().chain(b.values()).map(|j| &j.vector))?;
    let mut per_dimension = Vec::with_capacity(schema.len());
    for (d, &dim) in schema.dimensions().iter().enumerate() {
        let xs: Vec<bool> = a.values().map(|j| j.vector.values()[d]).collect();
        let ys: Vec<bool> = b.values().map(|j| j.vector.values()[d]).collect();
        let k = kappa_detail(&xs, &ys)?;
        per_dimension.push(DimensionKappa {
            dimension: dim,
            kappa: k.value,
            degenerate: k.degenerate,
        });
    }
    let macro_kappa =
        per_dimension.iter().map(|d| d.kappa).sum::<f64>() / per_dimension.len() as f64;
    Ok(AgreementReport {
        setting,
        schema,
        per_dimension,
        macro_kappa,
        n_items: a.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementDelta {
    pub per_dimension: Vec<(Dimension, f64)>,
    #[serde(rename = "macro")]
    pub macro_delta: f64,
}

/// κ(visible) − κ(hidden), dimension by dimension.
pub fn agreement_delta(
    visible: &AgreementReport,
    hidden: &AgreementReport,
) -> Result<AgreementDelta> {
    let dims_v: Vec<Dimension> = visible.per_dimension.iter().map(|d| d.dimension).collect();
    let dims_h: Vec<Dimension> = hidden.per_dimension.iter().map(|d| d.dimension).collect();
    if dims_v != dims_h {
        return Err(Error::DimensionMismatch(format!(
            "{dims_v:?} vs {dims_h:?}"
        )));
    }
    Ok(AgreementDelta {
        per_dimension: visible
            .per_dimension
            .iter()
            .zip(&hidden.per_dimension)
            .map(|(v, h)| (v.dimension, v.kappa - h.kappa))
            .collect(),
        macro_delta: visible.macro_kappa - hidden.macro_kappa,
    })
}

/// Side-by-side κ table: `appraisal, kappa_emovis, kappa_emohide, delta`,
/// closing with the macro row.
pub fn comparison_tsv(visible: &AgreementReport, hidden: &AgreementReport) -> Result<String> {
    let delta = agreement_delta(visible, hidden)?;
    let mut out = String::from("appraisal\tkappa_emovis\tkappa_emohide\tdelta\n");
    for ((v, h), (_, d)) in visible
        .per_dimension
        .iter()
        .zip(&hidden.per_dimension)
        .zip(&delta.per_dimension)
    {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:+.4}\n",
            v.dimension, v.kappa, h.kappa, d
        ));
    }
    out.push_str(&format!(
        "macro\t{:.4}\t{:.4}\t{:+.4}\n",
        visible.macro_kappa, hidden.macro_kappa, delta.macro_delta
    ));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Change {
    /// Disagreed with the emotion hidden, agreed with it visible.
    #[serde(rename = "+")]
    Gained,
    #[serde(rename = "-")]
    Lost,
    #[serde(rename = "0")]
    Unchanged,
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Change::Gained => "+",
            Change::Lost => "-",
            Change::Unchanged => "0",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementChange {
    pub instance_id: String,
    pub score: i32,
    pub changes: Vec<(Dimension, Change)>,
}

impl AgreementChange {
    /// Compact listing such as `+e +p +r +ci`.
    pub fn summary(&self) -> String {
        self.changes
            .iter()
            .filter(|(_, c)| *c != Change::Unchanged)
            .map(|(d, c)| format!("{c}{}", d.abbrev()))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// How agreement on one instance moved when the emotion was revealed.
pub fn instance_agreement_change(
    hide_a: &Judgment,
    hide_b: &Judgment,
    vis_a: &Judgment,
    vis_b: &Judgment,
) -> Result<AgreementChange> {
    let id = &hide_a.instance_id;
    for j in [hide_b, vis_a, vis_b] {
        if &j.instance_id != id {
            return Err(Error::InstanceMismatch(format!(
                "`{}` vs `{}`",
                id, j.instance_id
            )));
        }
    }
    let schema = uniform_schema([&hide_a.vector, &hide_b.vector, &vis_a.vector, &vis_b.vector])?;
    let mut score = 0;
    let changes = schema
        .dimensions()
        .iter()
        .enumerate()
        .map(|(d, &dim)| {
            let hide_agree = hide_a.vector.values()[d] == hide_b.vector.values()[d];
            let vis_agree = vis_a.vector.values()[d] == vis_b.vector.values()[d];
            let change = match (hide_agree, vis_agree) {
                (false, true) => Change::Gained,
                (true, false) => Change::Lost,
                _ => Change::Unchanged,
            };
            score += match change {
                Change::Gained => 1,
                Change::Lost => -1,
                Change::Unchanged => 0,
            };
            (dim, change)
        })
        .collect();
    Ok(AgreementChange {
        instance_id: id.clone(),
        score,
        changes,
    })
}

/// Change scores for every instance judged in all four judgment sets,
/// sorted by descending score then id.
pub fn agreement_changes(
    hide_a: &[Judgment],
    hide_b: &[Judgment],
    vis_a: &[Judgment],
    vis_b: &[Judgment],
) -> Result<Vec<AgreementChange>> {
    let ha = latest_by_instance(hide_a);
    let hb = latest_by_instance(hide_b);
    let va = latest_by_instance(vis_a);
    let vb = latest_by_instance(vis_b);
    let mut out = Vec::new();
    for (id, a) in &ha {
        if let (Some(b), Some(c), Some(d)) = (hb.get(id), va.get(id), vb.get(id)) {
            out.push(instance_agreement_change(a, b, c, d)?);
        }
    }
    out.sort_by(|x, y| {
        y.score
            .cmp(&x.score)
            .then_with(|| x.instance_id.cmp(&y.instance_id))
    });
    Ok(out)
}

/// Positive-judgment counts per emotion and dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub schema: AppraisalSchema,
    pub rows: Vec<(EmotionLabel, Vec<usize>)>,
    pub totals: Vec<usize>,
}

impl DistributionTable {
    pub fn count(&self, emotion: &EmotionLabel, dim: Dimension) -> Option<usize> {
        let d = self.schema.index_of(dim)?;
        self.rows
            .iter()
            .find(|(e, _)| e == emotion)
            .map(|(_, c)| c[d])
    }

    pub fn total(&self, dim: Dimension) -> Option<usize> {
        self.schema.index_of(dim).map(|d| self.totals[d])
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("emotion");
        for d in self.schema.dimensions() {
            out.push('\t');
            out.push_str(d.name());
        }
        out.push('\n');
        let mut push_row = |name: &str, counts: &[usize]| {
            out.push_str(name);
            for c in counts {
                out.push_str(&format!("\t{c}"));
            }
            out.push('\n');
        };
        for (e, counts) in &self.rows {
            push_row(e.as_str(), counts);
        }
        push_row("total", &self.totals);
        out
    }
}

pub fn distribution_table(labels: &[(EmotionLabel, AppraisalVector)]) -> Result<DistributionTable> {
    let schema = uniform_schema(labels.iter().map(|(_, v)| v))?;
    let mut rows: BTreeMap<EmotionLabel, Vec<usize>> = BTreeMap::new();
    for (e, v) in labels {
        let counts = rows
            .entry(e.clone())
            .or_insert_with(|| vec![0; schema.len()]);
        for (c, &b) in counts.iter_mut().zip(v.values()) {
            *c += usize::from(b);
        }
    }
    let mut totals = vec![0; schema.len()];
    for counts in rows.values() {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(DistributionTable {
        schema,
        rows: rows.into_iter().collect(),
        totals,
    })
}

/// Looks up each judged instance's emotion in the corpus.
pub fn judgments_with_emotions(
    judgments: &[Judgment],
    corpus: &Corpus,
) -> Result<Vec<(EmotionLabel, AppraisalVector)>> {
    let by_id: BTreeMap<&str, &EmotionLabel> = corpus
        .instances()
        .iter()
        .filter_map(|i| i.emotion.as_ref().map(|e| (i.id.as_str(), e)))
        .collect();
    latest_by_instance(judgments)
        .into_iter()
        .map(|(id, j)| {
            by_id
                .get(id)
                .map(|e| ((*e).clone(), j.vector.clone()))
                .ok_or_else(|| {
                    Error::InstanceMismatch(format!(
                        "`{id}` is not an emotion-labeled instance of `{}`",
                        corpus.name()
                    ))
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|&x| x != 0).collect()
    }

    fn judg(ann: &str, id: &str, setting: Setting, bits: &[u8]) -> Judgment {
        Judgment::new(
            ann,
            id,
            setting,
            AppraisalVector::from_bits(setting.expected_schema(), bits).unwrap(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn kappa_hand_cases() {
        assert_eq!(
            cohen_kappa(&b(&[1, 0, 1, 1]), &b(&[1, 0, 1, 1])).unwrap(),
            1.0
        );
        let k = kappa_detail(&b(&[1, 1, 0, 0]), &b(&[1, 0, 1, 0])).unwrap();
        assert_eq!(k.observed, 0.5);
        assert_eq!(k.expected, 0.5);
        assert_eq!(k.value, 0.0);
        let d = kappa_detail(&b(&[1, 1, 1]), &b(&[1, 1, 1])).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(d.degenerate);
    }

    #[test]
    fn kappa_errors() {
        assert!(matches!(cohen_kappa(&[], &[]), Err(Error::Empty)));
        assert!(matches!(
            cohen_kappa(&b(&[1]), &b(&[1, 0])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn kappa_total_disagreement_is_minus_one() {
        assert_eq!(
            cohen_kappa(&b(&[1, 0, 1, 0]), &b(&[0, 1, 0, 1])).unwrap(),
            -1.0
        );
    }

    #[test]
    fn identical_judgment_sets_agree_fully() {
        let a = vec![
            judg("a", "1", Setting::EmoVis, &[1, 0, 1, 0, 1, 0, 1]),
            judg("a", "2", Setting::EmoVis, &[0, 1, 1, 0, 0, 1, 0]),
            judg("a", "3", Setting::EmoVis, &[1, 1, 0, 1, 0, 0, 1]),
        ];
        let r = agreement_report(&a, &a, Setting::EmoVis).unwrap();
        assert_eq!(r.n_items, 3);
        assert!(r.per_dimension.iter().all(|d| d.kappa == 1.0));
        assert_eq!(r.macro_kappa, 1.0);
        assert!(agreement_delta(&r, &r)
            .unwrap()
            .per_dimension
            .iter()
            .all(|(_, d)| *d == 0.0));
    }

    #[test]
    fn report_requires_same_instances_and_setting() {
        let a = vec![
            judg("a", "1", Setting::EmoVis, &[0; 7]),
            judg("a", "2", Setting::EmoVis, &[0; 7]),
        ];
        let b2 = vec![
            judg("b", "1", Setting::EmoVis, &[0; 7]),
            judg("b", "3", Setting::EmoVis, &[0; 7]),
        ];
        match agreement_report(&a, &b2, Setting::EmoVis) {
            Err(Error::InstanceSetsDiffer { only_a, only_b }) => {
                assert_eq!(only_a, vec!["2"]);
                assert_eq!(only_b, vec!["3"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            agreement_report(&a, &a, Setting::EmoHide),
            Err(Error::SettingMismatch { .. })
        ));
    }

    #[test]
    fn resubmission_last_write_wins() {
        let a = vec![
            judg("a", "1", Setting::EmoHide, &[0; 7]),
            judg("a", "2", Setting::EmoHide, &[1; 7]),
            judg("a", "1", Setting::EmoHide, &[1; 7]),
        ];
        let b2 = vec![
            judg("b", "1", Setting::EmoHide, &[1; 7]),
            judg("b", "2", Setting::EmoHide, &[1; 7]),
        ];
        let r = agreement_report(&a, &b2, Setting::EmoHide).unwrap();
        assert_eq!(r.n_items, 2);
        assert_eq!(r.macro_kappa, 1.0);
    }

    fn report(vals: &[f64]) -> AgreementReport {
        let dims = AppraisalSchema::Split7.dimensions();
        AgreementReport {
            setting: Setting::EmoVis,
            schema: AppraisalSchema::Split7,
            per_dimension: dims
                .iter()
                .zip(vals)
                .map(|(&dimension, &kappa)| DimensionKappa {
                    dimension,
                    kappa,
                    degenerate: false,
                })
                .collect(),
            macro_kappa: vals.iter().sum::<f64>() / vals.len() as f64,
            n_items: 210,
        }
    }

    #[test]
    fn delta_examples() {
        let vis = report(&[0.55, 0.71, 0.44, 0.93, 0.80, 0.66, 0.65]);
        let hide = report(&[0.30, 0.43, 0.38, 0.87, 0.64, 0.71, 0.54]);
        let d = agreement_delta(&vis, &hide).unwrap();
        assert!((d.per_dimension[0].1 - 0.25).abs() < 1e-12);
        assert!((d.per_dimension[5].1 + 0.05).abs() < 1e-12);
        let tsv = comparison_tsv(&vis, &hide).unwrap();
        assert!(tsv.starts_with(
            "appraisal\tkappa_emovis\tkappa_emohide\tdelta\nattention\t0.5500\t0.3000\t+0.2500\n"
        ));

        let mut short = hide.clone();
        short.per_dimension.pop();
        assert!(matches!(
            agreement_delta(&vis, &short),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn change_score_abseiling_row() {
        // Gains on effort, pleasantness, responsibility and circumstance.
        let ha = judg("a", "x", Setting::EmoHide, &[1, 1, 1, 1, 1, 0, 1]);
        let hb = judg("b", "x", Setting::EmoHide, &[1, 1, 0, 0, 0, 0, 0]);
        let va = judg("a", "x", Setting::EmoVis, &[1, 1, 1, 0, 1, 0, 0]);
        let vb = judg("b", "x", Setting::EmoVis, &[1, 1, 1, 0, 1, 0, 0]);
        let c = instance_agreement_change(&ha, &hb, &va, &vb).unwrap();
        assert_eq!(c.score, 4);
        assert_eq!(c.summary(), "+e +p +r +ci");
    }

    #[test]
    fn change_score_mixed_and_zero() {
        let ha = judg("a", "x", Setting::EmoHide, &[1, 1, 0, 0, 1, 0, 1]);
        let hb = judg("b", "x", Setting::EmoHide, &[1, 1, 0, 0, 1, 0, 0]);
        let va = judg("a", "x", Setting::EmoVis, &[1, 1, 0, 0, 1, 0, 1]);
        let vb = judg("b", "x", Setting::EmoVis, &[0, 0, 0, 0, 0, 0, 1]);
        let c = instance_agreement_change(&ha, &hb, &va, &vb).unwrap();
        assert_eq!(c.score, -2);
        assert_eq!(c.summary(), "-a -ce -r +ci");

        let same = instance_agreement_change(&ha, &ha, &va, &va).unwrap();
        assert_eq!(same.score, 0);
        assert!(same.changes.iter().all(|(_, c)| *c == Change::Unchanged));

        let other = judg("b", "y", Setting::EmoVis, &[0; 7]);
        assert!(matches!(
            instance_agreement_change(&ha, &hb, &va, &other),
            Err(Error::InstanceMismatch(_))
        ));
    }

    #[test]
    fn distribution_single_joy() {
        let v = crate::schema::auto_label(&"joy".into()).unwrap();
        let t = distribution_table(&[("joy".into(), v)]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].1, vec![1, 1, 0, 1, 1, 0]);
        assert_eq!(t.totals, vec![1, 1, 0, 1, 1, 0]);
    }

    #[test]
    fn distribution_rejects_mixed_schemas() {
        let a = AppraisalVector::zeros(AppraisalSchema::Split7);
        let m = AppraisalVector::zeros(AppraisalSchema::Merged6);
        assert!(distribution_table(&[("joy".into(), a), ("fear".into(), m)]).is_err());
        assert!(matches!(distribution_table(&[]), Err(Error::Empty)));
    }

    #[test]
    fn judgment_schema_follows_setting() {
        let m6 = AppraisalVector::zeros(AppraisalSchema::Merged6);
        assert!(Judgment::new("a", "1", Setting::EmoVis, m6.clone(), 0).is_err());
        assert!(Judgment::new("a", "1", Setting::Auto, m6, 0).is_ok());
    }

    #[test]
    fn judgments_jsonl_round_trip() {
        let js = vec![
            judg("a", "1", Setting::EmoVis, &[1, 0, 1, 0, 1, 0, 1]),
            judg("b", "2", Setting::EmoHide, &[0; 7]),
        ];
        let mut buf = Vec::new();
        write_judgments(&mut buf, &js).unwrap();
        assert_eq!(read_judgments(&buf[..]).unwrap(), js);
    }

    proptest! {
        #[test]
        fn kappa_symmetric_and_bounded(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let (a, b): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let k1 = cohen_kappa(&a, &b).unwrap();
            let k2 = cohen_kappa(&b, &a).unwrap();
            prop_assert_eq!(k1, k2);
            prop_assert!((-1.0..=1.0).contains(&k1));
            prop_assert_eq!(k1 == 1.0, a == b);
        }

        #[test]
        fn distribution_totals_sum_rows(rows in proptest::collection::vec((0usize..4, proptest::collection::vec(any::<bool>(), 6)), 1..40)) {
            let names = ["anger", "fear", "joy", "shame"];
            let labels: Vec<_> = rows
                .into_iter()
                .map(|(e, v)| (EmotionLabel::new(names[e]), AppraisalVector::new(AppraisalSchema::Merged6, v).unwrap()))
                .collect();
            let t = distribution_table(&labels).unwrap();
            for d in 0..6 {
                let sum: usize = t.rows.iter().map(|(_, c)| c[d]).sum();
                prop_assert_eq!(sum, t.totals[d]);
                let direct = labels.iter().filter(|(_, v)| v.values()[d]).count();
                prop_assert_eq!(direct, t.totals[d]);
            }
        }

        #[test]
        fn change_score_bounded(bits in proptest::collection::vec(any::<bool>(), 28)) {
            let mk = |ann: &str, s: Setting, chunk: &[bool]| Judgment::new(ann, "i", s, AppraisalVector::new(AppraisalSchema::Split7, chunk.to_vec()).unwrap(), 0).unwrap();
            let c = instance_agreement_change(
                &mk("a", Setting::EmoHide, &bits[0..7]),
                &mk("b", Setting::EmoHide, &bits[7..14]),
                &mk("a", Setting::EmoVis, &bits[14..21]),
                &mk("b", Setting::EmoVis, &bits[21..28]),
            ).unwrap();
            prop_assert!(c.score.abs() <= 7);
            let hide_pattern: Vec<bool> = (0..7).map(|d| bits[d] == bits[7 + d]).collect();
            let vis_pattern: Vec<bool> = (0..7).map(|d| bits[14 + d] == bits[21 + d]).collect();
            if hide_pattern == vis_pattern {
                prop_assert_eq!(c.score, 0);
            }
        }
    }
}
