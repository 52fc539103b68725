//! Appraisal schemas, appraisal vectors and the rule-based
//! emotion-to-appraisal mapping.
//!
//! Human annotators answer seven yes/no questions ([`AppraisalSchema::Split7`]).
//! The emotion-derived labels only distinguish six dimensions
//! ([`AppraisalSchema::Merged6`]): responsibility and control collapse into
//! one, and circumstance is situational control.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EmotionLabel, Instance};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Attention,
    Certainty,
    Effort,
    Pleasantness,
    Responsibility,
    Control,
    Circumstance,
    ResponsibilityControl,
    SituationalControl,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Attention => "attention",
            Dimension::Certainty => "certainty",
            Dimension::Effort => "effort",
            Dimension::Pleasantness => "pleasantness",
            Dimension::Responsibility => "responsibility",
            Dimension::Control => "control",
            Dimension::Circumstance => "circumstance",
            Dimension::ResponsibilityControl => "responsibility_control",
            Dimension::SituationalControl => "situational_control",
        }
    }

    /// Short tag used in agreement-change listings (`+e -ce`).
    pub fn abbrev(self) -> &'static str {
        match self {
            Dimension::Attention => "a",
            Dimension::Certainty => "ce",
            Dimension::Effort => "e",
            Dimension::Pleasantness => "p",
            Dimension::Responsibility => "r",
            Dimension::Control => "co",
            Dimension::Circumstance => "ci",
            Dimension::ResponsibilityControl => "rc",
            Dimension::SituationalControl => "sc",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppraisalSchema {
    Split7,
    Merged6,
}

const SPLIT7: [Dimension; 7] = [
    Dimension::Attention,
    Dimension::Certainty,
    Dimension::Effort,
    Dimension::Pleasantness,
    Dimension::Responsibility,
    Dimension::Control,
    Dimension::Circumstance,
];

const MERGED6: [Dimension; 6] = [
    Dimension::Attention,
    Dimension::Certainty,
    Dimension::Effort,
    Dimension::Pleasantness,
    Dimension::ResponsibilityControl,
    Dimension::SituationalControl,
];

impl AppraisalSchema {
    /// Dimensions in annotation-question order.
    pub fn dimensions(self) -> &'static [Dimension] {
        match self {
            AppraisalSchema::Split7 => &SPLIT7,
            AppraisalSchema::Merged6 => &MERGED6,
        }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        self.dimensions().len()
    }

    pub fn index_of(self, dim: Dimension) -> Option<usize> {
        self.dimensions().iter().position(|&d| d == dim)
    }
}

impl fmt::Display for AppraisalSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AppraisalSchema::Split7 => "split7",
            AppraisalSchema::Merged6 => "merged6",
        })
    }
}

impl FromStr for AppraisalSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "split7" => Ok(AppraisalSchema::Split7),
            "merged6" => Ok(AppraisalSchema::Merged6),
            other => Err(Error::Config(format!("unknown appraisal schema `{other}`"))),
        }
    }
}

#[derive(Deserialize)]
struct RawVector {
    schema: AppraisalSchema,
    values: Vec<bool>,
}

/// Binary judgments, one per schema dimension in schema order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawVector")]
pub struct AppraisalVector {
    schema: AppraisalSchema,
    values: Vec<bool>,
}

impl TryFrom<RawVector> for AppraisalVector {
    type Error = Error;

    fn try_from(raw: RawVector) -> Result<Self> {
        AppraisalVector::new(raw.schema, raw.values)
    }
}

impl AppraisalVector {
    pub fn new(schema: AppraisalSchema, values: Vec<bool>) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(Error::Arity {
                schema,
                expected: schema.len(),
                found: values.len(),
            });
        }
        Ok(AppraisalVector { schema, values })
    }

    pub fn from_bits(schema: AppraisalSchema, bits: &[u8]) -> Result<Self> {
        Self::new(schema, bits.iter().map(|&b| b != 0).collect())
    }

    pub fn zeros(schema: AppraisalSchema) -> Self {
        AppraisalVector {
            schema,
            values: vec![false; schema.len()],
        }
    }

    pub fn schema(&self) -> AppraisalSchema {
        self.schema
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, dim: Dimension) -> Option<bool> {
        self.schema.index_of(dim).map(|i| self.values[i])
    }

    pub fn count_positive(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// `1`/`0` string in schema order, e.g. `110110`.
    pub fn bit_string(&self) -> String {
        self.values
            .iter()
            .map(|&v| if v { '1' } else { '0' })
            .collect()
    }

    pub fn expect_schema(&self, expected: AppraisalSchema) -> Result<()> {
        if self.schema == expected {
            Ok(())
        } else {
            Err(Error::SchemaMismatch {
                expected,
                found: self.schema,
            })
        }
    }
}

/// How responsibility and control combine into one merged dimension.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeOperator {
    #[default]
    Or,
    And,
}

impl FromStr for MergeOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "or" => Ok(MergeOperator::Or),
            "and" => Ok(MergeOperator::And),
            other => Err(Error::Config(format!("unknown merge operator `{other}`"))),
        }
    }
}

/// Converts a seven-dimension judgment to the six-dimension schema with
/// the default OR merge.
pub fn merge_schema(v: &AppraisalVector) -> Result<AppraisalVector> {
    merge_schema_with(v, MergeOperator::Or)
}

pub fn merge_schema_with(v: &AppraisalVector, op: MergeOperator) -> Result<AppraisalVector> {
    v.expect_schema(AppraisalSchema::Split7)?;
    let s = &v.values;
    let resp_control = match op {
        MergeOperator::Or => s[4] || s[5],
        MergeOperator::And => s[4] && s[5],
    };
    AppraisalVector::new(
        AppraisalSchema::Merged6,
        vec![s[0], s[1], s[2], s[3], resp_control, s[6]],
    )
}

const MAP_HEADER: [&str; 7] = [
    "emotion",
    "attention",
    "certainty",
    "effort",
    "pleasant",
    "resp_contr",
    "sit_control",
];

const STANDARD_MAP: &str = include_str!("../data/appraisal_map.tsv");

/// Emotion → six-dimension appraisal rules, read from a TSV fixture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmotionAppraisalMap {
    entries: Vec<(EmotionLabel, AppraisalVector)>,
}

impl EmotionAppraisalMap {
    /// The shipped discretization of Smith & Ellsworth's appraisal profiles.
    pub fn standard() -> Self {
        Self::from_tsv(STANDARD_MAP).expect("shipped appraisal map is valid")
    }

    pub fn from_tsv(data: &str) -> Result<Self> {
        let mut lines = data
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Mapping("empty file".into()))?
            .split('\t')
            .map(str::trim)
            .collect();
        if header != MAP_HEADER {
            return Err(Error::Mapping(format!(
                "header must be `{}`",
                MAP_HEADER.join("\\t")
            )));
        }
        let mut entries: Vec<(EmotionLabel, AppraisalVector)> = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != MAP_HEADER.len() {
                return Err(Error::Mapping(format!(
                    "row {}: expected {} columns, found {}",
                    i + 1,
                    MAP_HEADER.len(),
                    cols.len()
                )));
            }
            let label = EmotionLabel::new(cols[0]);
            if entries.iter().any(|(l, _)| *l == label) {
                return Err(Error::Mapping(format!(
                    "row {}: duplicate emotion `{label}`",
                    i + 1
                )));
            }
            let values = cols[1..]
                .iter()
                .map(|c| match *c {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::Mapping(format!(
                        "row {}: value `{other}` is not 0 or 1",
                        i + 1
                    ))),
                })
                .collect::<Result<Vec<bool>>>()?;
            entries.push((
                label,
                AppraisalVector::new(AppraisalSchema::Merged6, values)?,
            ));
        }
        if entries.is_empty() {
            return Err(Error::Mapping("no rows".into()));
        }
        Ok(EmotionAppraisalMap { entries })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = MAP_HEADER.join("\t");
        out.push('\n');
        for (label, v) in &self.entries {
            out.push_str(label.as_str());
            for &b in v.values() {
                out.push('\t');
                out.push(if b { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn entries(&self) -> &[(EmotionLabel, AppraisalVector)] {
        &self.entries
    }

    pub fn get(&self, emotion: &EmotionLabel) -> Option<&AppraisalVector> {
        self.entries
            .iter()
            .find(|(l, _)| l == emotion)
            .map(|(_, v)| v)
    }

    /// True when no two emotions share a vector, i.e. the emotion can be
    /// read back from a noiseless label.
    pub fn is_injective(&self) -> bool {
        self.entries
            .iter()
            .enumerate()
            .all(|(i, (_, a))| self.entries[i + 1..].iter().all(|(_, b)| a != b))
    }

    pub fn auto_label(&self, emotion: &EmotionLabel) -> Result<AppraisalVector> {
        self.get(emotion)
            .cloned()
            .ok_or_else(|| Error::NoAppraisalRule(emotion.to_string()))
    }
}

/// Appraisal vector for an emotion under the standard map.
pub fn auto_label(emotion: &EmotionLabel) -> Result<AppraisalVector> {
    EmotionAppraisalMap::standard().auto_label(emotion)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedInstance {
    pub id: String,
    pub emotion: Option<EmotionLabel>,
    pub reason: String,
}

/// Instances paired with their rule-derived appraisal vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub name: String,
    pub pairs: Vec<(Instance, AppraisalVector)>,
    pub skipped: Vec<SkippedInstance>,
}

pub fn label_corpus(corpus: &Corpus, map: &EmotionAppraisalMap) -> Result<LabeledCorpus> {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for inst in corpus.instances() {
        match &inst.emotion {
            None => skipped.push(SkippedInstance {
                id: inst.id.clone(),
                emotion: None,
                reason: "no emotion label".into(),
            }),
            Some(e) => match map.get(e) {
                Some(v) => pairs.push((inst.clone(), v.clone())),
                None => skipped.push(SkippedInstance {
                    id: inst.id.clone(),
                    emotion: Some(e.clone()),
                    reason: format!("no appraisal rule for `{e}`"),
                }),
            },
        }
    }
    if pairs.is_empty() {
        return Err(Error::NothingMappable(corpus.name().to_string()));
    }
    if !skipped.is_empty() {
        log::warn!(
            "{}: {} instance(s) without an appraisal rule",
            corpus.name(),
            skipped.len()
        );
    }
    Ok(LabeledCorpus {
        name: corpus.name().to_string(),
        pairs,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{read_corpus, CorpusFormat};
    use proptest::prelude::*;
    use std::io::Cursor;

    fn m6(bits: &[u8]) -> AppraisalVector {
        AppraisalVector::from_bits(AppraisalSchema::Merged6, bits).unwrap()
    }

    fn s7(bits: &[u8]) -> AppraisalVector {
        AppraisalVector::from_bits(AppraisalSchema::Split7, bits).unwrap()
    }

    #[test]
    fn schema_sizes() {
        assert_eq!(AppraisalSchema::Split7.len(), 7);
        assert_eq!(AppraisalSchema::Merged6.len(), 6);
        for s in [AppraisalSchema::Split7, AppraisalSchema::Merged6] {
            let mut names: Vec<_> = s.dimensions().iter().map(|d| d.name()).collect();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), s.len());
        }
    }

    #[test]
    fn joy_fear_surprise_rows() {
        assert_eq!(auto_label(&"joy".into()).unwrap(), m6(&[1, 1, 0, 1, 1, 0]));
        assert_eq!(auto_label(&"Fear".into()).unwrap(), m6(&[1, 0, 1, 0, 0, 1]));
        assert_eq!(
            auto_label(&"surprise".into()).unwrap(),
            m6(&[1, 0, 0, 1, 0, 1])
        );
    }

    #[test]
    fn boredom_has_no_rule() {
        let err = auto_label(&"boredom".into()).unwrap_err();
        assert!(err.to_string().contains("no appraisal rule"));
    }

    #[test]
    fn standard_map_has_eight_distinct_rows() {
        let map = EmotionAppraisalMap::standard();
        assert_eq!(map.entries().len(), 8);
        assert!(map.is_injective());
        assert_eq!(EmotionAppraisalMap::from_tsv(&map.to_tsv()).unwrap(), map);
    }

    #[test]
    fn map_rejects_bad_files() {
        assert!(EmotionAppraisalMap::from_tsv("emotion\tfoo\n").is_err());
        let bad_value = format!("{}\njoy\t1\t1\t0\t2\t1\t0\n", MAP_HEADER.join("\t"));
        assert!(EmotionAppraisalMap::from_tsv(&bad_value).is_err());
        let dup = format!(
            "{}\njoy\t1\t1\t0\t1\t1\t0\nJoy\t1\t1\t0\t1\t1\t0\n",
            MAP_HEADER.join("\t")
        );
        assert!(EmotionAppraisalMap::from_tsv(&dup).is_err());
    }

    #[test]
    fn merge_examples() {
        assert_eq!(
            merge_schema(&s7(&[1, 0, 1, 0, 1, 0, 0])).unwrap(),
            m6(&[1, 0, 1, 0, 1, 0])
        );
        assert_eq!(
            merge_schema(&AppraisalVector::zeros(AppraisalSchema::Split7)).unwrap(),
            AppraisalVector::zeros(AppraisalSchema::Merged6)
        );
        assert_eq!(
            merge_schema(&s7(&[0, 0, 0, 0, 0, 1, 1])).unwrap(),
            m6(&[0, 0, 0, 0, 1, 1])
        );
        assert_eq!(
            merge_schema_with(&s7(&[0, 0, 0, 0, 0, 1, 1]), MergeOperator::And).unwrap(),
            m6(&[0, 0, 0, 0, 0, 1])
        );
        assert!(matches!(
            merge_schema(&m6(&[0; 6])),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn vector_arity_checked() {
        assert!(matches!(
            AppraisalVector::from_bits(AppraisalSchema::Split7, &[1, 0]),
            Err(Error::Arity { .. })
        ));
        let bad = r#"{"schema":"merged6","values":[true]}"#;
        assert!(serde_json::from_str::<AppraisalVector>(bad).is_err());
    }

    #[test]
    fn label_corpus_collects_skips() {
        let data = "sentence,label\nsunny day,joy\nnothing,no emotion\nboo,surprise\n";
        let corpus = read_corpus(Cursor::new(data), "blogs", CorpusFormat::Blogs).unwrap();
        let labeled = label_corpus(&corpus, &EmotionAppraisalMap::standard()).unwrap();
        assert_eq!(labeled.pairs.len(), 2);
        assert_eq!(labeled.skipped.len(), 1);
        assert_eq!(labeled.skipped[0].id, "blogs-2");
        assert_eq!(labeled.pairs[1].1, m6(&[1, 0, 0, 1, 0, 1]));
    }

    #[test]
    fn label_corpus_without_mappable_rows_errors() {
        let data = "sentence,label\nnothing,no emotion\n";
        let corpus = read_corpus(Cursor::new(data), "blogs", CorpusFormat::Blogs).unwrap();
        assert!(matches!(
            label_corpus(&corpus, &EmotionAppraisalMap::standard()),
            Err(Error::NothingMappable(_))
        ));
    }

    proptest! {
        #[test]
        fn every_split_dimension_reaches_the_merge(bits in proptest::collection::vec(any::<bool>(), 7), flip in 0usize..7) {
            // Flipping any single input bit changes the OR-merged output
            // whenever the other merge partner is off.
            let mut v = bits.clone();
            if flip == 4 { v[5] = false; }
            if flip == 5 { v[4] = false; }
            let base = merge_schema(&AppraisalVector::new(AppraisalSchema::Split7, v.clone()).unwrap()).unwrap();
            v[flip] = !v[flip];
            let flipped = merge_schema(&AppraisalVector::new(AppraisalSchema::Split7, v).unwrap()).unwrap();
            prop_assert_ne!(base, flipped);
        }
    }
}
