use std::borrow::Cow;
use std::collections::BTreeSet;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Prediction, TypingError};
use crate::embeddings::{dot, VectorLookup};
use crate::graph::Iri;

// Batches are reduced in fixed-size chunks so the summation order, and
// therefore every bit of the result, does not depend on the thread count.
const REDUCE_CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub kernel_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub hidden_units: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            kernel_widths: vec![3, 4, 6],
            filters_per_width: 128,
            hidden_units: 125,
            batch_size: 32,
            epochs: 1000,
            learning_rate: 0.01,
            seed: 1,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self, dimension: usize) -> Result<(), TypingError> {
        let bad = |m: String| Err(TypingError::InvalidConfig(m));
        if self.kernel_widths.is_empty() {
            return bad("at least one kernel width is required".into());
        }
        if let Some(&w) = self.kernel_widths.iter().find(|&&w| w == 0 || w > dimension) {
            return bad(format!("kernel width {w} must be in 1..={dimension}"));
        }
        if self.filters_per_width == 0 || self.hidden_units == 0 || self.batch_size == 0 {
            return bad("filter, hidden unit and batch counts must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.kernel_widths.len() * self.filters_per_width
    }
}

/// Offsets of every parameter block inside the flat parameter vector.
///
/// Order: for each kernel width its `filters x width` weights then
/// `filters` biases; hidden weights (`hidden x features`, row per unit)
/// and biases; output weights (`classes x hidden`) and biases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub banks: Vec<BankLayout>,
    pub features: usize,
    pub hidden_units: usize,
    pub classes: usize,
    pub hidden_weights: usize,
    pub hidden_bias: usize,
    pub output_weights: usize,
    pub output_bias: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankLayout {
    pub width: usize,
    pub filters: usize,
    pub weights: usize,
    pub bias: usize,
}

impl ParamLayout {
    pub fn new(config: &CnnConfig, classes: usize) -> Self {
        let mut offset = 0;
        let mut banks = Vec::with_capacity(config.kernel_widths.len());
        for &width in &config.kernel_widths {
            let filters = config.filters_per_width;
            let weights = offset;
            let bias = weights + filters * width;
            offset = bias + filters;
            banks.push(BankLayout {
                width,
                filters,
                weights,
                bias,
            });
        }
        let features = config.feature_count();
        let hidden_units = config.hidden_units;
        let hidden_weights = offset;
        let hidden_bias = hidden_weights + hidden_units * features;
        let output_weights = hidden_bias + hidden_units;
        let output_bias = output_weights + classes * hidden_units;
        ParamLayout {
            banks,
            features,
            hidden_units,
            classes,
            hidden_weights,
            hidden_bias,
            output_weights,
            output_bias,
            total: output_bias + classes,
        }
    }
}

/// Read-only view of one convolution bank.
#[derive(Debug, Clone, Copy)]
pub struct ConvBank<'a> {
    pub width: usize,
    pub filters: usize,
    pub weights: &'a [f64],
    pub bias: &'a [f64],
}

impl ConvBank<'_> {
    pub fn weight(&self, filter: usize, tap: usize) -> f64 {
        self.weights[filter * self.width + tap]
    }
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Max-pooled ReLU activations, banks concatenated in config order.
    pub pooled: Vec<f64>,
    /// Position of the maximum for each pooled feature; `None` when every
    /// position was clamped to zero by the ReLU.
    pub argmax: Vec<Option<usize>>,
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    config: CnnConfig,
    dimension: usize,
    classes: Vec<Iri>,
    layout: ParamLayout,
    params: Vec<f64>,
    input_scale: f64,
}

impl CnnModel {
    /// A model with every weight and bias at zero. `classes` are sorted to
    /// fix the output positions.
    pub fn zeros(config: CnnConfig, dimension: usize, classes: impl IntoIterator<Item = Iri>) -> Result<Self, TypingError> {
        config.validate(dimension)?;
        let classes: Vec<Iri> = classes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if classes.is_empty() {
            return Err(TypingError::TooFewClasses(0));
        }
        let layout = ParamLayout::new(&config, classes.len());
        let params = vec![0.0; layout.total];
        Ok(CnnModel {
            config,
            dimension,
            classes,
            layout,
            params,
            input_scale: 1.0,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn initialized(
        config: CnnConfig,
        dimension: usize,
        classes: impl IntoIterator<Item = Iri>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, TypingError> {
        let mut model = Self::zeros(config, dimension, classes)?;
        let layout = model.layout.clone();
        let mut fill = |start: usize, len: usize, fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for p in &mut model.params[start..start + len] {
                *p = dist.sample(rng);
            }
        };
        for bank in &layout.banks {
            fill(bank.weights, bank.filters * bank.width, bank.width, bank.width * bank.filters);
        }
        fill(
            layout.hidden_weights,
            layout.hidden_units * layout.features,
            layout.features,
            layout.hidden_units,
        );
        fill(
            layout.output_weights,
            layout.classes * layout.hidden_units,
            layout.hidden_units,
            layout.classes,
        );
        Ok(model)
    }

    pub(crate) fn from_parts(
        config: CnnConfig,
        dimension: usize,
        classes: Vec<Iri>,
        params: Vec<f64>,
        input_scale: f64,
    ) -> Result<Self, TypingError> {
        let mut model = Self::zeros(config, dimension, classes.clone())?;
        if model.classes != classes {
            return Err(TypingError::Format("class index must be sorted and unique".into()));
        }
        if params.len() != model.layout.total {
            return Err(TypingError::Format(format!(
                "expected {} parameters, found {}",
                model.layout.total,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(TypingError::NonFinite("model parameters"));
        }
        model.params = params;
        model.set_input_scale(input_scale)?;
        Ok(model)
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Output position `i` scores `classes()[i]`.
    pub fn classes(&self) -> &[Iri] {
        &self.classes
    }

    pub fn class_position(&self, class: &Iri) -> Option<usize> {
        self.classes.binary_search(class).ok()
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Factor applied to every input vector before the convolution.
    pub fn input_scale(&self) -> f64 {
        self.input_scale
    }

    pub fn set_input_scale(&mut self, scale: f64) -> Result<(), TypingError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(TypingError::InvalidConfig(format!("input scale {scale} must be positive")));
        }
        self.input_scale = scale;
        Ok(())
    }

    fn scaled<'v>(&self, v: &'v [f64]) -> Cow<'v, [f64]> {
        if self.input_scale == 1.0 {
            Cow::Borrowed(v)
        } else {
            Cow::Owned(v.iter().map(|x| x * self.input_scale).collect())
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn conv_bank(&self, index: usize) -> ConvBank<'_> {
        let b = self.layout.banks[index];
        ConvBank {
            width: b.width,
            filters: b.filters,
            weights: &self.params[b.weights..b.bias],
            bias: &self.params[b.bias..b.bias + b.filters],
        }
    }

    /// Row `j` holds the incoming weights of hidden unit `j`.
    pub fn hidden_weights(&self, unit: usize) -> &[f64] {
        let f = self.layout.features;
        let start = self.layout.hidden_weights + unit * f;
        &self.params[start..start + f]
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.params[self.layout.hidden_bias..self.layout.hidden_bias + self.layout.hidden_units]
    }

    pub fn output_weights(&self, class: usize) -> &[f64] {
        let h = self.layout.hidden_units;
        let start = self.layout.output_weights + class * h;
        &self.params[start..start + h]
    }

    pub fn output_bias(&self) -> &[f64] {
        &self.params[self.layout.output_bias..self.layout.output_bias + self.layout.classes]
    }

    fn check_dimension(&self, v: &[f64]) -> Result<(), TypingError> {
        if v.len() != self.dimension {
            return Err(TypingError::DimensionMismatch {
                expected: self.dimension,
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn forward_trace(&self, v: &[f64]) -> Result<ForwardTrace, TypingError> {
        self.check_dimension(v)?;
        Ok(self.trace(&self.scaled(v)))
    }

    fn trace(&self, v: &[f64]) -> ForwardTrace {
        let features = self.layout.features;
        let mut pooled = Vec::with_capacity(features);
        let mut argmax = Vec::with_capacity(features);
        for b in 0..self.layout.banks.len() {
            let bank = self.conv_bank(b);
            let positions = v.len() + 1 - bank.width;
            for f in 0..bank.filters {
                let w = &bank.weights[f * bank.width..(f + 1) * bank.width];
                let mut best = 0.0;
                let mut at = None;
                for p in 0..positions {
                    let z = bank.bias[f] + dot(w, &v[p..p + bank.width]);
                    if z > best {
                        best = z;
                        at = Some(p);
                    }
                }
                pooled.push(best);
                argmax.push(at);
            }
        }

        let hb = self.hidden_bias();
        let hidden_pre: Vec<f64> = (0..self.layout.hidden_units)
            .map(|j| hb[j] + dot(self.hidden_weights(j), &pooled))
            .collect();
        let hidden: Vec<f64> = hidden_pre.iter().map(|&a| a.max(0.0)).collect();

        let ob = self.output_bias();
        let logits: Vec<f64> = (0..self.layout.classes)
            .map(|c| ob[c] + dot(self.output_weights(c), &hidden))
            .collect();
        let scores = logits.iter().map(|&o| crate::embeddings::sigmoid(o)).collect();
        ForwardTrace {
            pooled,
            argmax,
            hidden_pre,
            hidden,
            logits,
            scores,
        }
    }

    /// Per-class sigmoid scores, in [`classes`](Self::classes) order.
    pub fn forward(&self, v: &[f64]) -> Result<Vec<f64>, TypingError> {
        Ok(self.forward_trace(v)?.scores)
    }

    pub fn predict(&self, entity: Iri, v: &[f64]) -> Result<Prediction, TypingError> {
        let scores = self.forward(v)?;
        Ok(Prediction::new(entity, self.classes.iter().cloned().zip(scores)))
    }

    /// Mean over `batch` of the per-class averaged binary cross-entropy
    /// against one-hot targets. Each item is (vector, gold output position).
    pub fn loss(&self, batch: &[(&[f64], usize)]) -> Result<f64, TypingError> {
        Ok(self.loss_and_gradient(batch)?.0)
    }

    /// Loss as in [`loss`](Self::loss) and its gradient with respect to
    /// [`params`](Self::params).
    pub fn loss_and_gradient(&self, batch: &[(&[f64], usize)]) -> Result<(f64, Vec<f64>), TypingError> {
        if batch.is_empty() {
            return Err(TypingError::EmptyTrainingSet);
        }
        for (v, gold) in batch {
            self.check_dimension(v)?;
            if *gold >= self.layout.classes {
                return Err(TypingError::InvalidConfig(format!("gold position {gold} out of range")));
            }
        }
        let partials: Vec<(f64, Vec<f64>)> = batch
            .par_chunks(REDUCE_CHUNK)
            .map(|chunk| {
                let mut grad = vec![0.0; self.layout.total];
                let mut loss = 0.0;
                for (v, gold) in chunk {
                    loss += self.accumulate(v, *gold, &mut grad);
                }
                (loss, grad)
            })
            .collect();

        let scale = 1.0 / batch.len() as f64;
        let mut iter = partials.into_iter();
        let (mut loss, mut grad) = iter.next().expect("non-empty batch");
        for (l, g) in iter {
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((loss * scale, grad))
    }

    /// Adds the gradient of one example's loss to `grad`, returns the loss.
    fn accumulate(&self, v: &[f64], gold: usize, grad: &mut [f64]) -> f64 {
        let v = self.scaled(v);
        let t = self.trace(&v);
        let l = &self.layout;
        let per_class = 1.0 / l.classes as f64;

        let mut loss = 0.0;
        let mut d_logits = vec![0.0; l.classes];
        for c in 0..l.classes {
            let y = if c == gold { 1.0 } else { 0.0 };
            loss += crate::embeddings::softplus(t.logits[c]) - y * t.logits[c];
            d_logits[c] = (t.scores[c] - y) * per_class;
        }
        loss *= per_class;

        let mut d_hidden = vec![0.0; l.hidden_units];
        for c in 0..l.classes {
            let dc = d_logits[c];
            grad[l.output_bias + c] += dc;
            let row = l.output_weights + c * l.hidden_units;
            let w = self.output_weights(c);
            for j in 0..l.hidden_units {
                grad[row + j] += dc * t.hidden[j];
                d_hidden[j] += dc * w[j];
            }
        }

        let mut d_pooled = vec![0.0; l.features];
        for j in 0..l.hidden_units {
            if t.hidden_pre[j] <= 0.0 {
                continue;
            }
            let dj = d_hidden[j];
            grad[l.hidden_bias + j] += dj;
            let row = l.hidden_weights + j * l.features;
            let w = self.hidden_weights(j);
            for i in 0..l.features {
                grad[row + i] += dj * t.pooled[i];
                d_pooled[i] += dj * w[i];
            }
        }

        let mut feature = 0;
        for bank in &l.banks {
            for f in 0..bank.filters {
                if let Some(p) = t.argmax[feature] {
                    let df = d_pooled[feature];
                    grad[bank.bias + f] += df;
                    let row = bank.weights + f * bank.width;
                    for k in 0..bank.width {
                        grad[row + k] += df * v[p + k];
                    }
                }
                feature += 1;
            }
        }
        loss
    }

    /// One gradient step on `batch`; returns the batch loss before the step.
    pub fn sgd_step(&mut self, batch: &[(&[f64], usize)], learning_rate: f64) -> Result<f64, TypingError> {
        let (loss, grad) = self.loss_and_gradient(batch)?;
        for (p, g) in self.params.iter_mut().zip(&grad) {
            *p -= learning_rate * g;
        }
        Ok(loss)
    }
}

#[derive(Debug, Clone)]
pub struct CnnTraining {
    pub model: CnnModel,
    /// Training entities that had no vector, in input order.
    pub skipped: Vec<Iri>,
    /// Mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains a classifier on `(entity, gold class)` pairs with mini-batch SGD.
///
/// The output layer covers every class in `examples`. Entities without a
/// vector are skipped and reported. Inputs are rescaled so that training
/// vector components have unit root mean square; embedding vectors are
/// typically small enough that unscaled SGD never leaves the bias-only
/// solution.
pub fn cnn_train<L: VectorLookup + ?Sized>(
    examples: &[(Iri, Iri)],
    vectors: &L,
    config: &CnnConfig,
) -> Result<CnnTraining, TypingError> {
    if examples.is_empty() {
        return Err(TypingError::EmptyTrainingSet);
    }
    let dimension = vectors.dimension();
    config.validate(dimension)?;
    let classes: BTreeSet<Iri> = examples.iter().map(|(_, c)| c.clone()).collect();
    if classes.len() < 2 {
        return Err(TypingError::TooFewClasses(classes.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = CnnModel::initialized(config.clone(), dimension, classes, &mut rng)?;

    let mut skipped = Vec::new();
    let mut data: Vec<(Vec<f64>, usize)> = Vec::with_capacity(examples.len());
    for (entity, class) in examples {
        match vectors.get(entity.as_str()) {
            Some(v) => {
                let pos = model.class_position(class).expect("class index covers examples");
                data.push((v.into_owned(), pos));
            }
            None => skipped.push(entity.clone()),
        }
    }
    if data.is_empty() {
        return Err(TypingError::NoVectors(examples.len()));
    }
    let count = (data.len() * dimension) as f64;
    let rms = (data.iter().flat_map(|(v, _)| v.iter()).map(|x| x * x).sum::<f64>() / count).sqrt();
    if rms > 0.0 && rms.is_finite() {
        model.set_input_scale(1.0 / rms)?;
    }
    if !skipped.is_empty() {
        log::warn!("{} training entities have no vector and were skipped", skipped.len());
    }

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut batch: Vec<(&[f64], usize)> = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| (data[i].0.as_slice(), data[i].1)));
            total += model.sgd_step(&batch, config.learning_rate)?;
            batches += 1;
        }
        let mean = total / batches as f64;
        if !mean.is_finite() || !model.is_finite() {
            return Err(TypingError::NonFinite("classifier parameters"));
        }
        log::debug!("classifier epoch {}: loss {mean:.6}", epoch + 1);
        epoch_losses.push(mean);
    }
    Ok(CnnTraining {
        model,
        skipped,
        epoch_losses,
    })
}
