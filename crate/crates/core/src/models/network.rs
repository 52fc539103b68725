//! Appraisal vector → emotion: one hidden ReLU layer, softmax output,
//! cross-entropy loss, Adam.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::{argmax, softmax};
use super::{load_model, save_model, TrainConfig};
use crate::corpus::EmotionLabel;
use crate::error::{Error, Result};
use crate::schema::{AppraisalSchema, AppraisalVector};

const KIND: &str = "appraisal_emotion";
const DEFAULT_LR: f64 = 0.01;
const DEFAULT_HIDDEN: usize = 64;
const DEFAULT_MIN_STEPS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppraisalEmotionModel {
    pub schema: AppraisalSchema,
    pub classes: Vec<EmotionLabel>,
    pub config: TrainConfig,
    /// `hidden × inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `classes × hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

struct Forward {
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

impl AppraisalEmotionModel {
    pub fn schema(&self) -> AppraisalSchema {
        self.schema
    }

    fn inputs(&self) -> usize {
        self.schema.len()
    }

    fn hidden_size(&self) -> usize {
        self.b1.len()
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let (n_in, n_h) = (self.inputs(), self.hidden_size());
        let hidden: Vec<f64> = (0..n_h)
            .map(|j| {
                let row = &self.w1[j * n_in..(j + 1) * n_in];
                let z = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                z.max(0.0)
            })
            .collect();
        let scores: Vec<f64> = (0..self.classes.len())
            .map(|k| {
                let row = &self.w2[k * n_h..(k + 1) * n_h];
                self.b2[k] + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>()
            })
            .collect();
        Forward {
            hidden,
            probs: softmax(&scores),
        }
    }

    /// Class probabilities in the order of [`Self::classes`].
    pub fn predict_proba(&self, vector: &AppraisalVector) -> Result<Vec<f64>> {
        vector.expect_schema(self.schema)?;
        Ok(self.forward(&encode(vector)).probs)
    }

    pub fn predict(&self, vector: &AppraisalVector) -> Result<EmotionLabel> {
        let p = self.predict_proba(vector)?;
        Ok(self.classes[argmax(&p)].clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_model(path, KIND, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: Self = load_model(path, KIND)?;
        let (n_in, n_h, k) = (m.schema.len(), m.b1.len(), m.classes.len());
        if k == 0 || m.w1.len() != n_h * n_in || m.w2.len() != k * n_h || m.b2.len() != k {
            return Err(Error::Model("layer shapes are inconsistent".into()));
        }
        Ok(m)
    }
}

fn encode(v: &AppraisalVector) -> Vec<f64> {
    v.values().iter().map(|&b| f64::from(u8::from(b))).collect()
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(lr: f64, n: usize) -> Self {
        Adam {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// `params` and `grads` are the concatenation of all parameter tensors.
    fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let mut offset = 0;
        for (p, g) in params.iter_mut().zip(grads) {
            for (i, (pi, &gi)) in p.iter_mut().zip(g.iter()).enumerate() {
                let m = &mut self.m[offset + i];
                let v = &mut self.v[offset + i];
                *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * gi;
                *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * gi * gi;
                *pi -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            }
            offset += p.len();
        }
    }
}

/// Trains the appraisal → emotion network.
///
/// Small training sets are run for extra epochs until at least
/// `aem_min_steps` optimizer steps have been taken. Options: `aem_lr`,
/// `aem_hidden`, `aem_min_steps`.
pub fn train_appraisal_emotion(
    train: &[(AppraisalVector, EmotionLabel)],
    config: &TrainConfig,
) -> Result<AppraisalEmotionModel> {
    config.validate()?;
    let schema = train.first().ok_or(Error::Empty)?.0.schema();
    for (v, _) in train {
        v.expect_schema(schema)?;
    }
    let lr: f64 = config.option("aem_lr", DEFAULT_LR)?;
    let n_h: usize = config.option("aem_hidden", DEFAULT_HIDDEN)?;
    let min_steps: usize = config.option("aem_min_steps", DEFAULT_MIN_STEPS)?;
    if n_h == 0 {
        return Err(Error::Config("aem_hidden must be ≥ 1".into()));
    }

    let mut index: BTreeMap<&EmotionLabel, usize> = BTreeMap::new();
    for (_, l) in train {
        index.entry(l).or_default();
    }
    let classes: Vec<EmotionLabel> = index.keys().map(|l| (*l).clone()).collect();
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let n_in = schema.len();
    let k = classes.len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lim1 = (6.0 / n_in as f64).sqrt();
    let lim2 = (6.0 / (n_h + k) as f64).sqrt();
    let mut model = AppraisalEmotionModel {
        schema,
        classes,
        config: config.clone(),
        w1: (0..n_h * n_in)
            .map(|_| rng.gen_range(-lim1..lim1))
            .collect(),
        b1: vec![0.0; n_h],
        w2: (0..k * n_h).map(|_| rng.gen_range(-lim2..lim2)).collect(),
        b2: vec![0.0; k],
    };
    if k == 1 {
        log::warn!(
            "appraisal → emotion training data has a single class `{}`; predicting it constantly",
            model.classes[0]
        );
        return Ok(model);
    }

    let xs: Vec<Vec<f64>> = train.iter().map(|(v, _)| encode(v)).collect();
    let ys: Vec<usize> = train.iter().map(|(_, l)| index[l]).collect();
    let batches_per_epoch = train.len().div_ceil(config.batch_size);
    let epochs = config.epochs.max(min_steps.div_ceil(batches_per_epoch));

    let n_params = model.w1.len() + model.b1.len() + model.w2.len() + model.b2.len();
    let mut adam = Adam::new(lr, n_params);
    let mut gw1 = vec![0.0; model.w1.len()];
    let mut gb1 = vec![0.0; n_h];
    let mut gw2 = vec![0.0; model.w2.len()];
    let mut gb2 = vec![0.0; k];
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            for g in [&mut gw1, &mut gb1, &mut gw2, &mut gb2] {
                g.fill(0.0);
            }
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let x = &xs[i];
                let f = model.forward(x);
                let mut delta2 = f.probs;
                delta2[ys[i]] -= 1.0;
                let mut delta1 = vec![0.0; n_h];
                for c in 0..k {
                    let d = delta2[c] * scale;
                    gb2[c] += d;
                    for j in 0..n_h {
                        gw2[c * n_h + j] += d * f.hidden[j];
                        delta1[j] += d * model.w2[c * n_h + j];
                    }
                }
                for j in 0..n_h {
                    if f.hidden[j] <= 0.0 {
                        continue;
                    }
                    gb1[j] += delta1[j];
                    for (a, &xa) in x.iter().enumerate() {
                        gw1[j * n_in + a] += delta1[j] * xa;
                    }
                }
            }
            adam.step(
                &mut [&mut model.w1, &mut model.b1, &mut model.w2, &mut model.b2],
                &[&gw1, &gb1, &gw2, &gb2],
            );
        }
    }
    Ok(model)
}
