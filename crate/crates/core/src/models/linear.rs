//! Reference text backend: hashed n-gram features with logistic heads
//! trained by mini-batch SGD, plus a majority-vote baseline backend.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{dot, NgramHasher, SparseVec};
use super::{
    load_model, save_model, AppraisalPredictor, EmotionPredictor, TextBackend, TrainConfig,
};
use crate::corpus::EmotionLabel;
use crate::error::{Error, Result};
use crate::schema::{AppraisalSchema, AppraisalVector};

const DEFAULT_LR: f64 = 1.0;

mod sparse_weights {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Sparse {
        len: usize,
        indices: Vec<u32>,
        values: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(w: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let (indices, values) = w
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .unzip();
        Sparse {
            len: w.len(),
            indices,
            values,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let sp = Sparse::deserialize(d)?;
        if sp.indices.len() != sp.values.len() {
            return Err(serde::de::Error::custom(
                "indices and values differ in length",
            ));
        }
        let mut w = vec![0.0; sp.len];
        for (i, v) in sp.indices.into_iter().zip(sp.values) {
            *w.get_mut(i as usize)
                .ok_or_else(|| serde::de::Error::custom("weight index out of range"))? = v;
        }
        Ok(w)
    }
}

/// One binary decision function over hashed features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BinaryHead {
    /// Every training label was the same.
    Constant { value: bool },
    Logistic {
        bias: f64,
        #[serde(with = "sparse_weights")]
        weights: Vec<f64>,
    },
}

impl BinaryHead {
    pub fn probability(&self, x: &[(u32, f64)]) -> f64 {
        match self {
            BinaryHead::Constant { value } => f64::from(u8::from(*value)),
            BinaryHead::Logistic { bias, weights } => sigmoid(bias + dot(weights, x)),
        }
    }

    pub fn decide(&self, x: &[(u32, f64)]) -> bool {
        self.probability(x) >= 0.5
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn log_loss(p: f64, y: bool) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

fn batch_orders(n: usize, config: &TrainConfig) -> Result<Vec<Vec<usize>>> {
    let shuffle = config.option("shuffle", true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    Ok((0..config.epochs)
        .map(|_| {
            if shuffle {
                order.shuffle(&mut rng);
            }
            order.clone()
        })
        .collect())
}

/// Trains one logistic head per target column. All heads see the same
/// batch sequence. Returns the heads and the mean training log-loss after
/// each epoch.
fn train_binary_heads(
    x: &[SparseVec],
    targets: &[Vec<bool>],
    buckets: usize,
    config: &TrainConfig,
) -> Result<(Vec<BinaryHead>, Vec<f64>)> {
    let lr: f64 = config.option("lr", DEFAULT_LR)?;
    let n = x.len();
    let n_heads = targets[0].len();
    let mut heads: Vec<BinaryHead> = (0..n_heads)
        .map(|h| {
            let pos = targets.iter().filter(|t| t[h]).count();
            if pos == 0 || pos == n {
                BinaryHead::Constant { value: pos == n }
            } else {
                let prior = pos as f64 / n as f64;
                BinaryHead::Logistic {
                    bias: (prior / (1.0 - prior)).ln(),
                    weights: vec![0.0; buckets],
                }
            }
        })
        .collect();

    let mut losses = Vec::with_capacity(config.epochs);
    let mut grads = Vec::with_capacity(config.batch_size);
    for order in batch_orders(n, config)? {
        for batch in order.chunks(config.batch_size) {
            let scale = lr / batch.len() as f64;
            for (h, head) in heads.iter_mut().enumerate() {
                let BinaryHead::Logistic { bias, weights } = head else {
                    continue;
                };
                grads.clear();
                grads.extend(batch.iter().map(|&i| {
                    sigmoid(*bias + dot(weights, &x[i])) - f64::from(u8::from(targets[i][h]))
                }));
                for (&i, &g) in batch.iter().zip(&grads) {
                    for &(f, v) in &x[i] {
                        weights[f as usize] -= scale * g * v;
                    }
                }
                *bias -= scale * grads.iter().sum::<f64>();
            }
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for (h, head) in heads.iter().enumerate() {
            if matches!(head, BinaryHead::Logistic { .. }) {
                for (xi, ti) in x.iter().zip(targets) {
                    total += log_loss(head.probability(xi), ti[h]);
                    count += 1;
                }
            }
        }
        losses.push(if count == 0 {
            0.0
        } else {
            total / count as f64
        });
    }
    Ok((heads, losses))
}

/// Per-dimension logistic heads over hashed n-grams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextAppraisalModel {
    pub backend: String,
    pub schema: AppraisalSchema,
    pub config: TrainConfig,
    pub hasher: NgramHasher,
    pub heads: Vec<BinaryHead>,
    /// Most frequent training value per dimension, used for empty text.
    pub fallback: Vec<bool>,
}

const TAM_KIND: &str = "text_appraisal";
const TEM_KIND: &str = "text_emotion";

impl TextAppraisalModel {
    pub fn predict(&self, text: &str) -> AppraisalVector {
        let values = if text.trim().is_empty() {
            self.fallback.clone()
        } else {
            let x = self.hasher.features(text);
            self.heads.iter().map(|h| h.decide(&x)).collect()
        };
        AppraisalVector::new(self.schema, values).expect("one head per dimension")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_model(path, TAM_KIND, self)
    }

    /// Loads a model, refusing one trained on a different schema.
    pub fn load(path: &Path, expected: AppraisalSchema) -> Result<Self> {
        let model: Self = load_model(path, TAM_KIND)?;
        if model.schema != expected {
            return Err(Error::SchemaMismatch {
                expected,
                found: model.schema,
            });
        }
        if model.heads.len() != model.schema.len() || model.fallback.len() != model.schema.len() {
            return Err(Error::Model("head count does not match schema".into()));
        }
        Ok(model)
    }
}

impl AppraisalPredictor for TextAppraisalModel {
    fn schema(&self) -> AppraisalSchema {
        self.schema
    }

    fn predict_appraisal(&self, text: &str) -> AppraisalVector {
        self.predict(text)
    }
}

fn majority_values(vectors: &[&AppraisalVector]) -> Vec<bool> {
    let dims = vectors[0].values().len();
    (0..dims)
        .map(|d| 2 * vectors.iter().filter(|v| v.values()[d]).count() > vectors.len())
        .collect()
}

fn check_uniform(vectors: &[&AppraisalVector]) -> Result<AppraisalSchema> {
    let schema = vectors.first().ok_or(Error::Empty)?.schema();
    for v in vectors {
        v.expect_schema(schema)?;
    }
    Ok(schema)
}

fn fit_text_appraisal(
    hasher: NgramHasher,
    data: &[(&str, &AppraisalVector)],
    config: &TrainConfig,
) -> Result<(TextAppraisalModel, Vec<f64>)> {
    config.validate()?;
    let vectors: Vec<&AppraisalVector> = data.iter().map(|(_, v)| *v).collect();
    let schema = check_uniform(&vectors)?;
    let x: Vec<SparseVec> = data.iter().map(|(t, _)| hasher.features(t)).collect();
    let targets: Vec<Vec<bool>> = vectors.iter().map(|v| v.values().to_vec()).collect();
    let (heads, losses) = train_binary_heads(&x, &targets, hasher.buckets(), config)?;
    Ok((
        TextAppraisalModel {
            backend: NgramLogisticBackend::ID.to_string(),
            schema,
            config: config.clone(),
            hasher,
            heads,
            fallback: majority_values(&vectors),
        },
        losses,
    ))
}

/// Trains the reference text → appraisal model.
pub fn train_text_appraisal(
    train: &[(String, AppraisalVector)],
    config: &TrainConfig,
) -> Result<TextAppraisalModel> {
    train_text_appraisal_traced(train, config).map(|(m, _)| m)
}

/// Like [`train_text_appraisal`], also returning the mean training
/// log-loss after every epoch.
pub fn train_text_appraisal_traced(
    train: &[(String, AppraisalVector)],
    config: &TrainConfig,
) -> Result<(TextAppraisalModel, Vec<f64>)> {
    let data: Vec<(&str, &AppraisalVector)> = train.iter().map(|(t, v)| (t.as_str(), v)).collect();
    fit_text_appraisal(NgramHasher::default(), &data, config)
}

/// Multinomial logistic regression over hashed n-grams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextEmotionModel {
    pub backend: String,
    pub config: TrainConfig,
    pub hasher: NgramHasher,
    pub classes: Vec<EmotionLabel>,
    pub biases: Vec<f64>,
    #[serde(with = "class_weights")]
    pub weights: Vec<Vec<f64>>,
    /// Most frequent training class, used for empty text.
    pub fallback: EmotionLabel,
}

mod class_weights {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row(#[serde(with = "super::sparse_weights")] Vec<f64>);

    pub fn serialize<S: Serializer>(w: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Row> = w.iter().map(|r| Row(r.clone())).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        Ok(Vec::<Row>::deserialize(d)?
            .into_iter()
            .map(|r| r.0)
            .collect())
    }
}

impl TextEmotionModel {
    pub fn probabilities(&self, text: &str) -> Vec<f64> {
        let x = self.hasher.features(text);
        let scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| b + dot(w, &x))
            .collect();
        softmax(&scores)
    }

    pub fn predict(&self, text: &str) -> EmotionLabel {
        if text.trim().is_empty() || self.classes.len() == 1 {
            return self.fallback.clone();
        }
        let p = self.probabilities(text);
        self.classes[argmax(&p)].clone()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_model(path, TEM_KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_model(path, TEM_KIND)
    }
}

impl EmotionPredictor for TextEmotionModel {
    fn predict_emotion(&self, text: &str) -> EmotionLabel {
        self.predict(text)
    }
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; the first wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn class_index(labels: &[&EmotionLabel]) -> (Vec<EmotionLabel>, Vec<usize>, EmotionLabel) {
    let mut counts: BTreeMap<&EmotionLabel, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let classes: Vec<EmotionLabel> = counts.keys().map(|l| (*l).clone()).collect();
    let ys = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label collected"))
        .collect();
    let mut majority = &classes[0];
    let mut best = 0;
    for (l, &c) in &counts {
        if c > best {
            best = c;
            majority = l;
        }
    }
    (classes.clone(), ys, majority.clone())
}

fn fit_text_emotion(
    hasher: NgramHasher,
    data: &[(&str, &EmotionLabel)],
    config: &TrainConfig,
) -> Result<TextEmotionModel> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty);
    }
    let lr: f64 = config.option("lr", DEFAULT_LR)?;
    let labels: Vec<&EmotionLabel> = data.iter().map(|(_, l)| *l).collect();
    let (classes, ys, fallback) = class_index(&labels);
    let k = classes.len();
    let mut biases = vec![0.0; k];
    let mut weights = vec![vec![0.0; hasher.buckets()]; k];
    if k == 1 {
        log::warn!("text → emotion training data has a single class; predicting it constantly");
    } else {
        let x: Vec<SparseVec> = data.iter().map(|(t, _)| hasher.features(t)).collect();
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(config.batch_size);
        for order in batch_orders(x.len(), config)? {
            for batch in order.chunks(config.batch_size) {
                let scale = lr / batch.len() as f64;
                grads.clear();
                for &i in batch {
                    let scores: Vec<f64> = weights
                        .iter()
                        .zip(&biases)
                        .map(|(w, b)| b + dot(w, &x[i]))
                        .collect();
                    let mut p = softmax(&scores);
                    p[ys[i]] -= 1.0;
                    grads.push(p);
                }
                for (&i, g) in batch.iter().zip(&grads) {
                    for (c, w) in weights.iter_mut().enumerate() {
                        for &(f, v) in &x[i] {
                            w[f as usize] -= scale * g[c] * v;
                        }
                    }
                }
                for (c, b) in biases.iter_mut().enumerate() {
                    *b -= scale * grads.iter().map(|g| g[c]).sum::<f64>();
                }
            }
        }
    }
    Ok(TextEmotionModel {
        backend: NgramLogisticBackend::ID.to_string(),
        config: config.clone(),
        hasher,
        classes,
        biases,
        weights,
        fallback,
    })
}

/// The reference backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct NgramLogisticBackend {
    pub hasher: NgramHasher,
}

impl NgramLogisticBackend {
    pub const ID: &'static str = "ngram-logreg";

    pub fn train_text_emotion(
        &self,
        data: &[(&str, &EmotionLabel)],
        config: &TrainConfig,
    ) -> Result<TextEmotionModel> {
        fit_text_emotion(self.hasher, data, config)
    }

    pub fn train_text_appraisal(
        &self,
        data: &[(&str, &AppraisalVector)],
        config: &TrainConfig,
    ) -> Result<TextAppraisalModel> {
        fit_text_appraisal(self.hasher, data, config).map(|(m, _)| m)
    }
}

impl TextBackend for NgramLogisticBackend {
    fn id(&self) -> &str {
        Self::ID
    }

    fn train_appraisal(
        &self,
        data: &[(&str, &AppraisalVector)],
        config: &TrainConfig,
    ) -> Result<Box<dyn AppraisalPredictor>> {
        Ok(Box::new(self.train_text_appraisal(data, config)?))
    }

    fn train_emotion(
        &self,
        data: &[(&str, &EmotionLabel)],
        config: &TrainConfig,
    ) -> Result<Box<dyn EmotionPredictor>> {
        Ok(Box::new(self.train_text_emotion(data, config)?))
    }
}

/// Ignores the text and predicts the training majority.
#[derive(Clone, Copy, Debug, Default)]
pub struct MajorityBackend;

struct ConstantAppraisal(AppraisalVector);

impl AppraisalPredictor for ConstantAppraisal {
    fn schema(&self) -> AppraisalSchema {
        self.0.schema()
    }

    fn predict_appraisal(&self, _text: &str) -> AppraisalVector {
        self.0.clone()
    }
}

struct ConstantEmotion(EmotionLabel);

impl EmotionPredictor for ConstantEmotion {
    fn predict_emotion(&self, _text: &str) -> EmotionLabel {
        self.0.clone()
    }
}

impl TextBackend for MajorityBackend {
    fn id(&self) -> &str {
        "majority"
    }

    fn train_appraisal(
        &self,
        data: &[(&str, &AppraisalVector)],
        _config: &TrainConfig,
    ) -> Result<Box<dyn AppraisalPredictor>> {
        let vectors: Vec<&AppraisalVector> = data.iter().map(|(_, v)| *v).collect();
        let schema = check_uniform(&vectors)?;
        Ok(Box::new(ConstantAppraisal(AppraisalVector::new(
            schema,
            majority_values(&vectors),
        )?)))
    }

    fn train_emotion(
        &self,
        data: &[(&str, &EmotionLabel)],
        _config: &TrainConfig,
    ) -> Result<Box<dyn EmotionPredictor>> {
        if data.is_empty() {
            return Err(Error::Empty);
        }
        let labels: Vec<&EmotionLabel> = data.iter().map(|(_, l)| *l).collect();
        Ok(Box::new(ConstantEmotion(class_index(&labels).2)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m6(bits: &[u8]) -> AppraisalVector {
        AppraisalVector::from_bits(AppraisalSchema::Merged6, bits).unwrap()
    }

    fn toy() -> Vec<(String, AppraisalVector)> {
        let joy = m6(&[1, 1, 0, 1, 1, 0]);
        let fear = m6(&[1, 0, 1, 0, 0, 1]);
        let sad = m6(&[0, 1, 0, 0, 0, 1]);
        let mut out = Vec::new();
        for i in 0..12 {
            out.push((
                format!("I felt … when I got a new job number {i}"),
                joy.clone(),
            ));
            out.push((
                format!("I felt … when a dog chased me at night {i}"),
                fear.clone(),
            ));
            out.push((
                format!("I felt … when my grandmother passed away {i}"),
                sad.clone(),
            ));
        }
        out
    }

    #[test]
    fn single_instance_is_memorized() {
        let v = m6(&[1, 0, 1, 0, 0, 1]);
        let model = train_text_appraisal(
            &[("I felt … in the dark.".into(), v.clone())],
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(model.predict("I felt … in the dark."), v);
        assert!(model
            .heads
            .iter()
            .all(|h| matches!(h, BinaryHead::Constant { .. })));
    }

    #[test]
    fn empty_training_set_errors() {
        assert!(matches!(
            train_text_appraisal(&[], &TrainConfig::default()),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn learns_separable_toy_data() {
        let data = toy();
        let model = train_text_appraisal(&data, &TrainConfig::default()).unwrap();
        assert_eq!(model.predict("I felt … when I got a new job."), data[0].1);
        assert_eq!(model.predict("a dog chased me"), data[1].1);
    }

    #[test]
    fn same_seed_same_weights() {
        let data = toy();
        let a = train_text_appraisal(&data, &TrainConfig::with_seed(3)).unwrap();
        let b = train_text_appraisal(&data, &TrainConfig::with_seed(3)).unwrap();
        assert_eq!(a, b);
        let c = train_text_appraisal(&data, &TrainConfig::with_seed(4)).unwrap();
        assert_ne!(a.heads, c.heads);
    }

    #[test]
    fn empty_text_uses_majority_fallback() {
        let data = toy();
        let model = train_text_appraisal(&data, &TrainConfig::default()).unwrap();
        // attention 24/36, certainty 24/36, effort 12/36, pleasant 12/36, rc 12/36, sc 24/36
        let expected = m6(&[1, 1, 0, 0, 0, 1]);
        assert_eq!(model.predict(""), expected);
        assert_eq!(model.predict("   \n"), expected);
    }

    #[test]
    fn loss_non_increasing_with_fixed_batch_order() {
        let data = toy();
        let config = TrainConfig {
            epochs: 8,
            ..Default::default()
        }
        .with_option("shuffle", false);
        let (_, losses) = train_text_appraisal_traced(&data, &config).unwrap();
        assert_eq!(losses.len(), 8);
        for w in losses.windows(2) {
            assert!(w[1] <= w[0], "{losses:?}");
        }
    }

    #[test]
    fn save_load_round_trip_and_schema_guard() {
        let model = train_text_appraisal(&toy(), &TrainConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tam.json");
        model.save(&path).unwrap();
        let loaded = TextAppraisalModel::load(&path, AppraisalSchema::Merged6).unwrap();
        assert_eq!(loaded, model);
        assert!(matches!(
            TextAppraisalModel::load(&path, AppraisalSchema::Split7),
            Err(Error::SchemaMismatch { .. })
        ));
        assert!(TextEmotionModel::load(&path).is_err());
    }

    #[test]
    fn text_emotion_learns_and_round_trips() {
        let data: Vec<(String, EmotionLabel)> = toy()
            .into_iter()
            .enumerate()
            .map(|(i, (t, _))| (t, EmotionLabel::new(["joy", "fear", "sadness"][i % 3])))
            .collect();
        let refs: Vec<(&str, &EmotionLabel)> = data.iter().map(|(t, l)| (t.as_str(), l)).collect();
        let model = NgramLogisticBackend::default()
            .train_text_emotion(&refs, &TrainConfig::default())
            .unwrap();
        assert_eq!(
            model.predict("my grandmother passed away"),
            EmotionLabel::new("sadness")
        );
        let p = model.probabilities("job");
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tem.json");
        model.save(&path).unwrap();
        assert_eq!(TextEmotionModel::load(&path).unwrap(), model);
    }

    #[test]
    fn majority_backend_is_constant() {
        let data = toy();
        let refs: Vec<(&str, &AppraisalVector)> =
            data.iter().map(|(t, v)| (t.as_str(), v)).collect();
        let m = MajorityBackend
            .train_appraisal(&refs, &TrainConfig::default())
            .unwrap();
        assert_eq!(m.predict_appraisal("anything"), m6(&[1, 1, 0, 0, 0, 1]));
        assert_eq!(
            m.predict_appraisal("I felt … when I got a new job"),
            m6(&[1, 1, 0, 0, 0, 1])
        );
    }
}
