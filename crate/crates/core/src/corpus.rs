//! Emotion corpora: loading, canonical export, emotion masking and
//! stratified sampling.
//!
//! Four on-disk formats are understood:
//!
//! * `isear_tsv`: `emotion<TAB>text`, header row optional (enISEAR, deISEAR, ISEAR)
//! * `tec`: `id<TAB>tweet<TAB>#hashtag` (the label column may be omitted, in
//!   which case the final hashtag of the tweet is the label)
//! * `blogs`: CSV with `sentence` and `label` columns
//! * `jsonl`: one `{id, text, emotion?, source?}` object per line, the
//!   canonical export format
//!
//! All text and labels are NFC-normalized at load.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// The placeholder enISEAR uses where the emotion word was.
pub const PLACEHOLDER: &str = "…";

/// The Ekman-style inventory shared by the event corpora, plus surprise.
pub const STANDARD_EMOTIONS: [&str; 8] = [
    "anger", "disgust", "fear", "guilt", "joy", "sadness", "shame", "surprise",
];

/// An emotion class name.
///
/// The name is kept verbatim (after NFC normalization and trimming) but
/// equality, hashing and ordering ignore case.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmotionLabel(String);

impl EmotionLabel {
    pub fn new(name: &str) -> Self {
        EmotionLabel(name.trim().nfc().collect())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Lowercased comparison key.
    pub fn key(&self) -> String {
        self.0.to_lowercase()
    }

    pub fn is_standard(&self) -> bool {
        let key = self.key();
        STANDARD_EMOTIONS.contains(&key.as_str())
    }
}

impl PartialEq for EmotionLabel {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for EmotionLabel {}

impl Hash for EmotionLabel {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for EmotionLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EmotionLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EmotionLabel {
    fn from(name: &str) -> Self {
        EmotionLabel::new(name)
    }
}

/// One event description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<EmotionLabel>,
    pub source: String,
    #[serde(default)]
    pub emotion_masked: bool,
}

/// An immutable, ordered collection of instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    instances: Vec<Instance>,
    inventory: BTreeSet<EmotionLabel>,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and non-empty text.
    pub fn new(name: impl Into<String>, instances: Vec<Instance>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(instances.len());
        for inst in &instances {
            if !seen.insert(inst.id.as_str()) {
                return Err(Error::DuplicateId(inst.id.clone()));
            }
            if inst.text.trim().is_empty() {
                return Err(Error::MalformedRow {
                    format: "corpus",
                    row: 0,
                    rule: format!("instance `{}` has empty text", inst.id),
                });
            }
        }
        let inventory = instances.iter().filter_map(|i| i.emotion.clone()).collect();
        Ok(Corpus {
            name: name.into(),
            instances,
            inventory,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn inventory(&self) -> &BTreeSet<EmotionLabel> {
        &self.inventory
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Number of instances per emotion; unlabeled instances are not counted.
    pub fn class_counts(&self) -> BTreeMap<EmotionLabel, usize> {
        let mut counts = BTreeMap::new();
        for inst in &self.instances {
            if let Some(e) = &inst.emotion {
                *counts.entry(e.clone()).or_insert(0) += 1;
            }
        }
        counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorpusFormat {
    IsearTsv,
    Tec,
    Blogs,
    Jsonl,
}

impl CorpusFormat {
    pub fn tag(self) -> &'static str {
        match self {
            CorpusFormat::IsearTsv => "isear_tsv",
            CorpusFormat::Tec => "tec",
            CorpusFormat::Blogs => "blogs",
            CorpusFormat::Jsonl => "jsonl",
        }
    }

    /// Guesses a format from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "tsv" => Some(CorpusFormat::IsearTsv),
            "jsonl" | "ndjson" => Some(CorpusFormat::Jsonl),
            "csv" => Some(CorpusFormat::Blogs),
            "tec" | "txt" => Some(CorpusFormat::Tec),
            _ => None,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "isear_tsv" | "iseart_tsv" | "tsv" => Ok(CorpusFormat::IsearTsv),
            "tec" => Ok(CorpusFormat::Tec),
            "blogs" => Ok(CorpusFormat::Blogs),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Loads a corpus from disk. The corpus is named after the file stem.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    read_corpus(BufReader::new(file), &name, format)
}

pub fn read_corpus<R: BufRead>(reader: R, name: &str, format: CorpusFormat) -> Result<Corpus> {
    let instances = match format {
        CorpusFormat::IsearTsv => read_isear_tsv(reader, name)?,
        CorpusFormat::Tec => read_tec(reader, name)?,
        CorpusFormat::Blogs => read_blogs(reader, name)?,
        CorpusFormat::Jsonl => read_jsonl(reader, name)?,
    };
    if instances.is_empty() {
        return Err(Error::NoInstances);
    }
    Corpus::new(name, instances)
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

fn parse_label(raw: &str) -> Option<EmotionLabel> {
    let raw = raw.trim();
    (!raw.is_empty()).then(|| EmotionLabel::new(raw))
}

fn text_lines<R: BufRead>(reader: R, format: &'static str) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedRow {
            format,
            row: idx + 1,
            rule: format!("unreadable line: {e}"),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        out.push((idx + 1, line.to_string()));
    }
    Ok(out)
}

fn read_isear_tsv<R: BufRead>(reader: R, name: &str) -> Result<Vec<Instance>> {
    const FMT: &str = "isear_tsv";
    let mut lines = text_lines(reader, FMT)?;
    if let Some((_, first)) = lines.first() {
        let mut cols = first.splitn(2, '\t');
        let a = cols.next().unwrap_or("").trim();
        let b = cols.next().unwrap_or("").trim();
        if a.eq_ignore_ascii_case("emotion") && b.eq_ignore_ascii_case("text") {
            lines.remove(0);
        }
    }
    let mut instances = Vec::with_capacity(lines.len());
    for (row, (_, line)) in lines.iter().enumerate() {
        let row = row + 1;
        let (emotion, text) = line.split_once('\t').ok_or_else(|| Error::MalformedRow {
            format: FMT,
            row,
            rule: "expected two tab-separated columns `emotion<TAB>text`".into(),
        })?;
        let text = nfc(text.trim());
        if text.is_empty() {
            return Err(Error::MalformedRow {
                format: FMT,
                row,
                rule: "empty text column".into(),
            });
        }
        instances.push(Instance {
            id: format!("{name}-{row}"),
            emotion_masked: has_placeholder(&text),
            text,
            emotion: parse_label(&nfc(emotion)),
            source: name.to_string(),
        });
    }
    Ok(instances)
}

fn read_tec<R: BufRead>(reader: R, name: &str) -> Result<Vec<Instance>> {
    const FMT: &str = "tec";
    let lines = text_lines(reader, FMT)?;
    let mut instances = Vec::with_capacity(lines.len());
    for (row, (_, line)) in lines.iter().enumerate() {
        let row = row + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(Error::MalformedRow {
                format: FMT,
                row,
                rule: format!(
                    "expected `id<TAB>tweet<TAB>#hashtag`, found {} columns",
                    cols.len()
                ),
            });
        }
        let id = cols[0].trim().trim_end_matches(':').trim();
        let text = nfc(cols[1].trim());
        if text.is_empty() {
            return Err(Error::MalformedRow {
                format: FMT,
                row,
                rule: "empty tweet column".into(),
            });
        }
        let label = match cols.get(2) {
            Some(raw) => {
                let tag = raw
                    .trim()
                    .trim_start_matches("::")
                    .trim()
                    .trim_start_matches('#');
                parse_label(&nfc(tag))
            }
            None => final_hashtag(&text).map(EmotionLabel::new),
        };
        let Some(label) = label else {
            return Err(Error::MalformedRow {
                format: FMT,
                row,
                rule: "no label column and no final hashtag".into(),
            });
        };
        let masked = has_placeholder(&text) || !contains_hashtag(&text, &label);
        instances.push(Instance {
            id: if id.is_empty() {
                format!("{name}-{row}")
            } else {
                id.to_string()
            },
            text,
            emotion: Some(label),
            source: name.to_string(),
            emotion_masked: masked,
        });
    }
    Ok(instances)
}

fn read_blogs<R: BufRead>(reader: R, name: &str) -> Result<Vec<Instance>> {
    const FMT: &str = "blogs";
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::MalformedRow {
            format: FMT,
            row: 0,
            rule: format!("unreadable header: {e}"),
        })?
        .clone();
    let col = |want: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(want))
            .ok_or_else(|| Error::MalformedRow {
                format: FMT,
                row: 0,
                rule: format!("header lacks a `{want}` column"),
            })
    };
    let sentence_col = col("sentence")?;
    let label_col = col("label")?;
    let mut instances = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::MalformedRow {
            format: FMT,
            row,
            rule: e.to_string(),
        })?;
        let text = nfc(record.get(sentence_col).unwrap_or("").trim());
        if text.is_empty() {
            return Err(Error::MalformedRow {
                format: FMT,
                row,
                rule: "empty sentence".into(),
            });
        }
        instances.push(Instance {
            id: format!("{name}-{row}"),
            emotion_masked: has_placeholder(&text),
            text,
            emotion: parse_label(&nfc(record.get(label_col).unwrap_or(""))),
            source: name.to_string(),
        });
    }
    Ok(instances)
}

#[derive(Deserialize)]
struct RawInstance {
    id: Option<String>,
    text: Option<String>,
    emotion: Option<String>,
    source: Option<String>,
    emotion_masked: Option<bool>,
}

fn read_jsonl<R: BufRead>(reader: R, name: &str) -> Result<Vec<Instance>> {
    const FMT: &str = "jsonl";
    let lines = text_lines(reader, FMT)?;
    let mut instances = Vec::with_capacity(lines.len());
    for (row, (_, line)) in lines.iter().enumerate() {
        let row = row + 1;
        let raw: RawInstance = serde_json::from_str(line).map_err(|e| Error::MalformedRow {
            format: FMT,
            row,
            rule: format!("invalid JSON object: {e}"),
        })?;
        let text = raw.text.map(|t| nfc(t.trim())).unwrap_or_default();
        if text.is_empty() {
            return Err(Error::MalformedRow {
                format: FMT,
                row,
                rule: "missing or empty field `text`".into(),
            });
        }
        instances.push(Instance {
            id: raw
                .id
                .map(|id| nfc(&id))
                .unwrap_or_else(|| format!("{name}-{row}")),
            emotion_masked: raw.emotion_masked.unwrap_or_else(|| has_placeholder(&text)),
            text,
            emotion: raw.emotion.as_deref().and_then(parse_label),
            source: raw.source.unwrap_or_else(|| name.to_string()),
        });
    }
    Ok(instances)
}

/// Writes a corpus in the given format. Formats without an id column
/// (TSV, blogs) regenerate ids on load.
pub fn write_corpus<W: Write>(mut w: W, corpus: &Corpus, format: CorpusFormat) -> Result<()> {
    let io = |e| Error::io("<corpus writer>", e);
    let check_line = |inst: &Instance| {
        if inst.text.contains('\n') {
            Err(Error::MalformedRow {
                format: format.tag(),
                row: 0,
                rule: format!("instance `{}` has a newline in its text", inst.id),
            })
        } else {
            Ok(())
        }
    };
    match format {
        CorpusFormat::Jsonl => {
            for inst in corpus.instances() {
                serde_json::to_writer(&mut w, inst)?;
                w.write_all(b"\n").map_err(io)?;
            }
        }
        CorpusFormat::IsearTsv => {
            writeln!(w, "emotion\ttext").map_err(io)?;
            for inst in corpus.instances() {
                check_line(inst)?;
                let emotion = inst.emotion.as_ref().map(|e| e.as_str()).unwrap_or("");
                writeln!(w, "{emotion}\t{}", inst.text).map_err(io)?;
            }
        }
        CorpusFormat::Tec => {
            for inst in corpus.instances() {
                check_line(inst)?;
                let emotion = inst.emotion.as_ref().map(|e| e.as_str()).unwrap_or("");
                writeln!(w, "{}\t{}\t#{emotion}", inst.id, inst.text).map_err(io)?;
            }
        }
        CorpusFormat::Blogs => {
            let mut csv_w = csv::Writer::from_writer(&mut w);
            let csv_err = |e: csv::Error| Error::Config(format!("csv write: {e}"));
            csv_w.write_record(["sentence", "label"]).map_err(csv_err)?;
            for inst in corpus.instances() {
                let emotion = inst.emotion.as_ref().map(|e| e.as_str()).unwrap_or("");
                csv_w
                    .write_record([inst.text.as_str(), emotion])
                    .map_err(csv_err)?;
            }
            csv_w.flush().map_err(io)?;
        }
    }
    Ok(())
}

pub fn has_placeholder(text: &str) -> bool {
    text.contains(PLACEHOLDER) || text.contains("...")
}

fn final_hashtag(text: &str) -> Option<&str> {
    let last = text.split_whitespace().last()?;
    let tag = last.strip_prefix('#')?;
    let tag = tag.trim_end_matches(|c: char| !c.is_alphanumeric());
    (!tag.is_empty()).then_some(tag)
}

fn hashtag_matches(token: &str, label: &EmotionLabel) -> bool {
    token
        .strip_prefix('#')
        .map(|t| t.trim_end_matches(|c: char| !c.is_alphanumeric()))
        .is_some_and(|t| t.to_lowercase() == label.key())
}

fn contains_hashtag(text: &str, label: &EmotionLabel) -> bool {
    text.split_whitespace().any(|t| hashtag_matches(t, label))
}

/// Surface forms that express each standard emotion, English and German.
fn surface_forms(label: &EmotionLabel) -> Vec<String> {
    let key = label.key();
    let extra: &[&str] = match key.as_str() {
        "anger" => &[
            "angry",
            "angered",
            "furious",
            "wut",
            "wütend",
            "ärger",
            "verärgert",
        ],
        "disgust" => &["disgusted", "disgusting", "ekel", "angeekelt", "ekelte"],
        "fear" => &[
            "afraid",
            "scared",
            "frightened",
            "fearful",
            "angst",
            "ängstlich",
        ],
        "guilt" => &["guilty", "schuld", "schuldig"],
        "joy" => &["happy", "joyful", "glad", "freude", "froh", "glücklich"],
        "sadness" => &["sad", "traurig", "traurigkeit"],
        "shame" => &["ashamed", "shameful", "scham", "beschämt", "schämte"],
        "surprise" => &["surprised", "überrascht", "überraschung"],
        _ => &[],
    };
    std::iter::once(key.clone())
        .chain(extra.iter().map(|s| s.to_string()))
        .collect()
}

/// Replaces whole-word emotion surface forms with the placeholder.
fn replace_emotion_words(text: &str, label: &EmotionLabel) -> Option<String> {
    let forms = surface_forms(label);
    let mut out = String::with_capacity(text.len());
    let mut replaced = false;
    let mut word = String::new();
    let mut flush = |word: &mut String, out: &mut String| {
        if !word.is_empty() {
            if forms.contains(&word.to_lowercase()) {
                out.push_str(PLACEHOLDER);
                replaced = true;
            } else {
                out.push_str(word);
            }
            word.clear();
        }
    };
    for c in text.chars() {
        if c.is_alphabetic() {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    replaced.then_some(out)
}

/// Hides the emotion in an instance's text.
///
/// Already-masked text is returned unchanged. Hashtags naming the label
/// are removed; otherwise whole-word emotion terms become `…`. An
/// unlabeled instance ending in a hashtag takes that hashtag as its label.
pub fn mask_emotion(instance: &Instance) -> Result<Instance> {
    let mut out = instance.clone();
    if instance.emotion_masked || has_placeholder(&instance.text) {
        out.emotion_masked = true;
        return Ok(out);
    }
    let label = match (&instance.emotion, final_hashtag(&instance.text)) {
        (Some(label), _) => label.clone(),
        (None, Some(tag)) => EmotionLabel::new(tag),
        (None, None) => return Err(Error::Unmaskable(instance.id.clone())),
    };
    if contains_hashtag(&instance.text, &label) {
        let kept: Vec<&str> = instance
            .text
            .split_whitespace()
            .filter(|t| !hashtag_matches(t, &label))
            .collect();
        if kept.is_empty() {
            return Err(Error::Unmaskable(instance.id.clone()));
        }
        out.text = kept.join(" ");
    } else if let Some(text) = replace_emotion_words(&instance.text, &label) {
        out.text = text;
    } else {
        return Err(Error::Unmaskable(instance.id.clone()));
    }
    out.emotion = Some(label);
    out.emotion_masked = true;
    Ok(out)
}

/// Draws `n` instances with per-emotion counts that differ by at most one.
///
/// Selected instances keep their load order. Unlabeled instances are never
/// drawn.
pub fn stratified_sample(corpus: &Corpus, n: usize, seed: u64) -> Result<Corpus> {
    let name = corpus.name().to_string();
    if n == 0 {
        return Corpus::new(name, Vec::new());
    }
    let mut by_class: BTreeMap<EmotionLabel, Vec<usize>> = BTreeMap::new();
    for (idx, inst) in corpus.instances().iter().enumerate() {
        if let Some(e) = &inst.emotion {
            by_class.entry(e.clone()).or_default().push(idx);
        }
    }
    if by_class.is_empty() {
        return Err(Error::Config(
            "stratified sampling needs emotion-labeled instances".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: Vec<EmotionLabel> = by_class.keys().cloned().collect();
    let base = n / classes.len();
    let remainder = n % classes.len();
    let mut bonus_order: Vec<usize> = (0..classes.len()).collect();
    bonus_order.shuffle(&mut rng);
    let mut quota = vec![base; classes.len()];
    for &c in bonus_order.iter().take(remainder) {
        quota[c] += 1;
    }

    let mut chosen = Vec::with_capacity(n);
    for (class_idx, class) in classes.iter().enumerate() {
        let members = by_class.get_mut(class).expect("class from keys");
        if members.len() < quota[class_idx] {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                available: members.len(),
                required: quota[class_idx],
            });
        }
        members.shuffle(&mut rng);
        chosen.extend_from_slice(&members[..quota[class_idx]]);
    }
    chosen.sort_unstable();
    let instances = chosen
        .into_iter()
        .map(|i| corpus.instances()[i].clone())
        .collect();
    Corpus::new(name, instances)
}
