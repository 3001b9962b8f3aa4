//! Windowed-token multilayer perceptron with per-slot trainable embeddings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::linear::softmax_in_place;
use crate::error::{Error, Result};
use crate::featurizer::{FeatureKind, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub embed_dim: usize,
    pub hidden_dims: Vec<usize>,
    /// Token window the features were extracted with (kept for reference).
    pub window: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            embed_dim: 16,
            hidden_dims: vec![64],
            window: 5,
            epochs: 8,
            lr: 0.01,
            batch_size: 32,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Layer {
    w: usize,
    b: usize,
    n_in: usize,
    n_out: usize,
}

/// Parameter layout. Embedding tables come first (one per categorical entry,
/// `cardinality x embed_dim`), then each dense layer's weights and biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpLayout {
    embed_dim: usize,
    kinds: Vec<FeatureKind>,
    cards: Vec<usize>,
    table: Vec<usize>,
    input_pos: Vec<usize>,
    input_dim: usize,
    layers: Vec<Layer>,
    n_params: usize,
    n_classes: usize,
}

impl MlpLayout {
    pub fn new(kinds: &[FeatureKind], cards: &[usize], embed_dim: usize, hidden: &[usize], n_classes: usize) -> Self {
        let mut n_params = 0;
        let mut table = Vec::new();
        let mut input_pos = Vec::new();
        let mut input_dim = 0;
        for (k, &c) in kinds.iter().zip(cards) {
            table.push(n_params);
            input_pos.push(input_dim);
            match k {
                FeatureKind::Categorical => {
                    n_params += c * embed_dim;
                    input_dim += embed_dim;
                }
                FeatureKind::Numeric => input_dim += 1,
            }
        }
        let mut layers = Vec::new();
        let mut n_in = input_dim;
        for &n_out in hidden.iter().chain(std::iter::once(&n_classes)) {
            let w = n_params;
            n_params += n_in * n_out;
            let b = n_params;
            n_params += n_out;
            layers.push(Layer { w, b, n_in, n_out });
            n_in = n_out;
        }
        MlpLayout {
            embed_dim,
            kinds: kinds.to_vec(),
            cards: cards.to_vec(),
            table,
            input_pos,
            input_dim,
            layers,
            n_params,
            n_classes,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn init(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.n_params];
        for (j, k) in self.kinds.iter().enumerate() {
            if *k == FeatureKind::Categorical {
                let start = self.table[j];
                for v in &mut p[start..start + self.cards[j] * self.embed_dim] {
                    *v = rng.gen_range(-0.1..0.1);
                }
            }
        }
        for l in &self.layers {
            let r = (6.0 / (l.n_in + l.n_out) as f64).sqrt();
            for v in &mut p[l.w..l.w + l.n_in * l.n_out] {
                *v = rng.gen_range(-r..r);
            }
        }
        p
    }

    fn slot(&self, j: usize, v: Value) -> usize {
        let c = match v {
            Value::Cat(c) => c as usize,
            Value::Num(x) => x as usize,
        };
        c.min(self.cards[j] - 1)
    }

    fn input(&self, params: &[f64], values: &[Value], scale: &[(f64, f64)]) -> Vec<f64> {
        let mut x = vec![0.0; self.input_dim];
        let e = self.embed_dim;
        for (j, v) in values.iter().enumerate() {
            let pos = self.input_pos[j];
            match self.kinds[j] {
                FeatureKind::Categorical => {
                    let start = self.table[j] + self.slot(j, *v) * e;
                    x[pos..pos + e].copy_from_slice(&params[start..start + e]);
                }
                FeatureKind::Numeric => x[pos] = (v.as_f64() - scale[j].0) / scale[j].1,
            }
        }
        x
    }

    /// Activations of every layer, input first; the last is the softmax output.
    fn forward(&self, params: &[f64], x: Vec<f64>) -> Vec<Vec<f64>> {
        let mut acts = vec![x];
        for (li, l) in self.layers.iter().enumerate() {
            let h = acts.last().unwrap();
            let mut z: Vec<f64> = (0..l.n_out)
                .map(|o| {
                    let row = &params[l.w + o * l.n_in..l.w + (o + 1) * l.n_in];
                    params[l.b + o] + row.iter().zip(h).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            if li + 1 == self.layers.len() {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Adds `weight * dLoss/dparams` for one example to `grad`; returns its loss.
    fn backward(&self, params: &[f64], values: &[Value], y: usize, scale: &[(f64, f64)], weight: f64, grad: &mut [f64]) -> f64 {
        let acts = self.forward(params, self.input(params, values, scale));
        let out = acts.last().unwrap();
        let loss = -out[y].max(1e-300).ln();
        let mut delta: Vec<f64> = out.iter().enumerate().map(|(c, p)| weight * (p - if c == y { 1.0 } else { 0.0 })).collect();
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let h = &acts[li];
            let mut back = vec![0.0; l.n_in];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                grad[l.b + o] += d;
                let base = l.w + o * l.n_in;
                for i in 0..l.n_in {
                    grad[base + i] += d * h[i];
                    back[i] += d * params[base + i];
                }
            }
            if li > 0 {
                for (b, a) in back.iter_mut().zip(h) {
                    if *a <= 0.0 {
                        *b = 0.0;
                    }
                }
            }
            delta = back;
        }
        let e = self.embed_dim;
        for (j, v) in values.iter().enumerate() {
            if self.kinds[j] == FeatureKind::Categorical {
                let start = self.table[j] + self.slot(j, *v) * e;
                let pos = self.input_pos[j];
                for t in 0..e {
                    grad[start + t] += delta[pos + t];
                }
            }
        }
        loss
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layout: MlpLayout,
    pub params: Vec<f64>,
    /// Per-entry `(mean, scale)` for numeric inputs.
    pub scale: Vec<(f64, f64)>,
    pub window: usize,
}

impl MlpModel {
    pub fn predict(&self, values: &[Value]) -> Vec<f64> {
        let x = self.layout.input(&self.params, values, &self.scale);
        self.layout.forward(&self.params, x).pop().unwrap()
    }

    /// Mean cross-entropy and its gradient over `rows`.
    pub fn loss_and_grad(&self, params: &[f64], rows: &[(&[Value], usize)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        let w = 1.0 / rows.len().max(1) as f64;
        let loss: f64 = rows
            .iter()
            .map(|(v, y)| self.layout.backward(params, v, *y, &self.scale, w, &mut grad))
            .sum();
        (loss * w, grad)
    }
}

fn numeric_scale(ds: &Dataset) -> Vec<(f64, f64)> {
    let n = ds.len().max(1) as f64;
    ds.schema
        .entries
        .iter()
        .enumerate()
        .map(|(j, e)| {
            if e.kind != FeatureKind::Numeric {
                return (0.0, 1.0);
            }
            let mean = ds.records.iter().map(|r| r.values[j].as_f64()).sum::<f64>() / n;
            let var = ds.records.iter().map(|r| (r.values[j].as_f64() - mean).powi(2)).sum::<f64>() / n;
            (mean, if var > 1e-12 { var.sqrt() } else { 1.0 })
        })
        .collect()
}

/// Untrained model with seeded initial parameters.
pub fn init_mlp(ds: &Dataset, params: &MlpParams) -> Result<MlpModel> {
    if params.embed_dim == 0 {
        return Err(Error::Config("embed_dim must be at least 1".into()));
    }
    let kinds: Vec<FeatureKind> = ds.schema.entries.iter().map(|e| e.kind).collect();
    let cards: Vec<usize> = ds.schema.entries.iter().map(|e| e.cardinality()).collect();
    let layout = MlpLayout::new(&kinds, &cards, params.embed_dim, &params.hidden_dims, ds.classes.len());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    Ok(MlpModel {
        params: layout.init(&mut rng),
        layout,
        scale: numeric_scale(ds),
        window: params.window,
    })
}

pub(crate) fn fit_mlp(ds: &Dataset, params: &MlpParams) -> Result<MlpModel> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let labels = ds.class_labels()?;
    let mut model = init_mlp(ds, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(1));
    let np = model.params.len();
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut m = vec![0.0; np];
    let mut v = vec![0.0; np];
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let bs = params.batch_size.max(1);
    let mut grad = vec![0.0; np];
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(bs) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let w = 1.0 / batch.len() as f64;
            for &i in batch {
                total += model
                    .layout
                    .backward(&model.params, &ds.records[i].values, labels[i], &model.scale, w, &mut grad);
            }
            t += 1;
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            for k in 0..np {
                let g = grad[k];
                if g == 0.0 && m[k] == 0.0 {
                    continue;
                }
                m[k] = b1 * m[k] + (1.0 - b1) * g;
                v[k] = b2 * v[k] + (1.0 - b2) * g * g;
                model.params[k] -= params.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        }
        log::debug!("mlp epoch {epoch}: loss {:.5}", total / ds.len() as f64);
    }
    Ok(model)
}
