//! CBOW with negative sampling.
//!
//! The hidden vector of a position is the mean of its context tokens' input
//! vectors, where a token's input vector is itself the mean of one or more
//! rows of the input matrix ([`Composition`]). Plain word2vec uses one row
//! per token; FastText adds the token's n-gram bucket rows.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{sigmoid, softplus, Matrix, RowAccess, SharedMatrix};
use super::sampler::UnigramTable;
use super::{
    encode_corpus, ensure_finite, EmbeddingError, EmbeddingMatrix, ModelKind, TrainedEmbeddings,
    TrainingConfig, WordVectors,
};
use crate::corpus::{Sentence, Vocabulary};

/// Input-matrix rows that make up each token's input vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    rows: Vec<Vec<usize>>,
}

impl Composition {
    /// One row per token: row `i` for token `i`.
    pub fn words(vocab_size: usize) -> Self {
        Composition {
            rows: (0..vocab_size).map(|i| vec![i]).collect(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        assert!(rows.iter().all(|r| !r.is_empty()), "every token needs a row");
        Composition { rows }
    }

    pub fn rows_of(&self, token: usize) -> &[usize] {
        &self.rows[token]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// One training position: predict `center` from `context`, contrasted with
/// `negatives`. Negatives equal to the center are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CbowExample {
    pub center: usize,
    pub context: Vec<usize>,
    pub negatives: Vec<usize>,
}

/// Gradient of one example, kept in factored form: every touched output row
/// gets `coef * hidden`, every touched input row gets `weight * hidden_grad`.
#[derive(Debug, Clone, Default)]
pub struct SparseGradient {
    pub hidden: Vec<f64>,
    pub hidden_grad: Vec<f64>,
    pub output_rows: Vec<(usize, f64)>,
    pub input_rows: Vec<(usize, f64)>,
}

impl SparseGradient {
    /// Expands to full `(d_input, d_output)` matrices.
    pub fn to_dense(&self, input_rows: usize, output_rows: usize) -> (Matrix, Matrix) {
        let dim = self.hidden.len();
        let mut d_in = Matrix::zeros(input_rows, dim);
        let mut d_out = Matrix::zeros(output_rows, dim);
        for &(r, w) in &self.input_rows {
            for (g, h) in d_in.row_mut(r).iter_mut().zip(&self.hidden_grad) {
                *g += w * h;
            }
        }
        for &(r, c) in &self.output_rows {
            for (g, h) in d_out.row_mut(r).iter_mut().zip(&self.hidden) {
                *g += c * h;
            }
        }
        (d_in, d_out)
    }
}

/// Negative-sampling loss of one example and its exact gradient:
/// `-ln σ(u_center·h) - Σ ln σ(-u_neg·h)`.
pub fn cbow_loss_and_gradient<M: RowAccess>(
    input: &M,
    output: &M,
    composition: &Composition,
    example: &CbowExample,
) -> (f64, SparseGradient) {
    let dim = input.cols();
    let mut grad = SparseGradient {
        hidden: vec![0.0; dim],
        hidden_grad: vec![0.0; dim],
        output_rows: Vec::with_capacity(1 + example.negatives.len()),
        input_rows: Vec::new(),
    };
    let n_context = example.context.len() as f64;
    for &c in &example.context {
        let rows = composition.rows_of(c);
        let w = 1.0 / (n_context * rows.len() as f64);
        for &r in rows {
            input.axpy_row(r, w, &mut grad.hidden);
            grad.input_rows.push((r, w));
        }
    }

    let mut loss = 0.0;
    let targets = std::iter::once((example.center, true)).chain(
        example
            .negatives
            .iter()
            .filter(|&&n| n != example.center)
            .map(|&n| (n, false)),
    );
    for (row, positive) in targets {
        let score = output.dot_row(row, &grad.hidden);
        let g = if positive {
            loss += softplus(-score);
            sigmoid(score) - 1.0
        } else {
            loss += softplus(score);
            sigmoid(score)
        };
        output.axpy_row(row, g, &mut grad.hidden_grad);
        grad.output_rows.push((row, g));
    }
    (loss, grad)
}

/// Every position that has at least one in-vocabulary context token, with
/// empty negative lists. Window distances are measured in sentence
/// positions; tokens below `min_count` are skipped without closing the gap.
pub fn cbow_examples(
    corpus: &[Sentence],
    vocab: &Vocabulary,
    window: usize,
) -> Result<Vec<CbowExample>, EmbeddingError> {
    let encoded = encode_corpus(corpus, vocab)?;
    Ok(positions(&encoded, window)
        .into_iter()
        .map(|(center, context)| CbowExample {
            center,
            context,
            negatives: Vec::new(),
        })
        .collect())
}

pub(crate) fn positions(encoded: &[[Option<usize>; 3]], window: usize) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::with_capacity(encoded.len() * 3);
    for sentence in encoded {
        for (p, center) in sentence.iter().enumerate() {
            let Some(center) = *center else { continue };
            let context: Vec<usize> = sentence
                .iter()
                .enumerate()
                .filter(|&(q, _)| q != p && q.abs_diff(p) <= window)
                .filter_map(|(_, t)| *t)
                .collect();
            if !context.is_empty() {
                out.push((center, context));
            }
        }
    }
    out
}

/// Uniform in `[-0.5/dim, 0.5/dim]`.
pub(crate) fn init_rows(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let bound = 0.5 / dim as f64;
    let data = (0..rows * dim)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    Matrix::from_vec(rows, dim, data)
}

pub(crate) struct NegativeSamplingRun {
    pub input: Matrix,
    pub output: Matrix,
    pub epoch_losses: Vec<f64>,
}

/// SGD over all positions for `config.epochs` passes, learning rate decaying
/// linearly from the initial value to `1e-4` of it.
pub(crate) fn run_negative_sampling(
    examples: &[(usize, Vec<usize>)],
    vocab: &Vocabulary,
    composition: &Composition,
    input: Matrix,
    config: &TrainingConfig,
    rng: ChaCha8Rng,
) -> Result<NegativeSamplingRun, EmbeddingError> {
    if examples.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let input = SharedMatrix::from_matrix(&input);
    let output = SharedMatrix::from_matrix(&Matrix::zeros(vocab.len(), config.dimension));
    let table = UnigramTable::new(vocab.frequencies(), UnigramTable::DEFAULT_POWER);
    let total_steps = examples.len() * config.epochs;
    let progress = AtomicUsize::new(0);
    let mut rng = rng;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    let worker = |shard: &[(usize, Vec<usize>)], rng: &mut ChaCha8Rng| -> f64 {
        let mut loss = 0.0;
        let mut example = CbowExample {
            center: 0,
            context: Vec::new(),
            negatives: Vec::with_capacity(config.negative_samples),
        };
        for (center, context) in shard {
            let step = progress.fetch_add(1, Ordering::Relaxed);
            let lr = config.initial_learning_rate
                * (1.0 - step as f64 / total_steps as f64).max(1e-4);
            example.center = *center;
            example.context.clone_from(context);
            example.negatives.clear();
            example
                .negatives
                .extend((0..config.negative_samples).map(|_| table.sample(rng)));

            let (l, grad) = cbow_loss_and_gradient(&input, &output, composition, &example);
            loss += l;
            for &(row, coef) in &grad.output_rows {
                output.add_row(row, -lr * coef, &grad.hidden);
            }
            for &(row, weight) in &grad.input_rows {
                input.add_row(row, -lr * weight, &grad.hidden_grad);
            }
        }
        loss
    };

    for epoch in 0..config.epochs {
        let loss = if config.jobs == 1 {
            worker(examples, &mut rng)
        } else {
            let chunk = examples.len().div_ceil(config.jobs);
            std::thread::scope(|scope| {
                let handles: Vec<_> = examples
                    .chunks(chunk)
                    .enumerate()
                    .map(|(shard, part)| {
                        let worker = &worker;
                        let seed = config
                            .seed
                            .wrapping_add((epoch as u64 + 1) << 32)
                            .wrapping_add(shard as u64);
                        scope.spawn(move || worker(part, &mut ChaCha8Rng::seed_from_u64(seed)))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("training worker panicked")).sum()
            })
        };
        let mean = loss / examples.len() as f64;
        log::debug!("epoch {}: mean loss {mean:.6}", epoch + 1);
        if !mean.is_finite() {
            return Err(EmbeddingError::NonFinite("training loss"));
        }
        epoch_losses.push(mean);
    }

    let input = input.to_matrix();
    let output = output.to_matrix();
    ensure_finite(&input, "input vectors")?;
    ensure_finite(&output, "output vectors")?;
    Ok(NegativeSamplingRun {
        input,
        output,
        epoch_losses,
    })
}

/// Word2vec CBOW. The final vector of a token is its input vector.
pub fn train_cbow(
    corpus: &[Sentence],
    vocab: &Vocabulary,
    config: &TrainingConfig,
) -> Result<TrainedEmbeddings, EmbeddingError> {
    config.validate()?;
    let encoded = encode_corpus(corpus, vocab)?;
    let examples = positions(&encoded, config.window);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let input = init_rows(vocab.len(), config.dimension, &mut rng);
    let run = run_negative_sampling(
        &examples,
        vocab,
        &Composition::words(vocab.len()),
        input,
        config,
        rng,
    )?;
    let vectors = WordVectors::new(vocab.tokens().to_vec(), run.input.clone())?;
    Ok(TrainedEmbeddings {
        kind: ModelKind::Word2vec,
        matrix: EmbeddingMatrix {
            vocabulary: vocab.clone(),
            input_vectors: run.input,
            output_vectors: run.output,
        },
        vectors,
        ngrams: None,
        epoch_losses: run.epoch_losses,
    })
}
