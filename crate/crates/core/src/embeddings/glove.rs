//! GloVe: weighted least squares on log co-occurrence counts, optimised with
//! AdaGrad over shuffled nonzero entries.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cbow::init_rows;
use super::matrix::{Matrix, RowAccess, SharedMatrix};
use super::{
    ensure_finite, EmbeddingError, EmbeddingMatrix, ModelKind, TrainedEmbeddings, TrainingConfig,
    WordVectors,
};
use crate::corpus::{Sentence, Vocabulary};

/// Symmetric sparse co-occurrence weights keyed by `(row, col)` token ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CooccurrenceMatrix {
    size: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl CooccurrenceMatrix {
    /// Builds a matrix from raw entries. No symmetry or sign checks are made
    /// here; the trainer validates what it needs.
    pub fn from_entries(size: usize, entries: impl IntoIterator<Item = ((usize, usize), f64)>) -> Self {
        CooccurrenceMatrix {
            size,
            entries: entries.into_iter().collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries.get(&(row, col)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x))
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries
            .iter()
            .all(|(&(i, j), &x)| self.entries.get(&(j, i)) == Some(&x))
    }
}

/// Adds `1/d` to both `X[a][b]` and `X[b][a]` for every pair of
/// in-vocabulary tokens at distance `d <= window` within one sentence.
/// A token paired with itself therefore contributes `2/d` to its diagonal.
pub fn build_cooccurrence(corpus: &[Sentence], vocab: &Vocabulary, window: usize) -> CooccurrenceMatrix {
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for sentence in corpus {
        let ids = sentence.tokens().clone().map(|t| vocab.id(&t));
        for p in 0..ids.len() {
            let Some(a) = ids[p] else { continue };
            for q in p + 1..ids.len().min(p + window + 1) {
                let Some(b) = ids[q] else { continue };
                let w = 1.0 / (q - p) as f64;
                *entries.entry((a, b)).or_default() += w;
                *entries.entry((b, a)).or_default() += w;
            }
        }
    }
    CooccurrenceMatrix {
        size: vocab.len(),
        entries,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GloveConfig {
    pub x_max: f64,
    pub alpha: f64,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            x_max: 100.0,
            alpha: 0.75,
        }
    }
}

/// `f(x) = (x / x_max)^alpha` below `x_max`, else 1.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        1.0
    }
}

/// Word and context vectors with their biases (one-column matrices).
#[derive(Debug, Clone, PartialEq)]
pub struct GloveParams {
    pub word: Matrix,
    pub context: Matrix,
    pub word_bias: Matrix,
    pub context_bias: Matrix,
}

pub type GloveGradient = GloveParams;

impl GloveParams {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        GloveParams {
            word: Matrix::zeros(vocab_size, dim),
            context: Matrix::zeros(vocab_size, dim),
            word_bias: Matrix::zeros(vocab_size, 1),
            context_bias: Matrix::zeros(vocab_size, 1),
        }
    }
}

struct EntryTerms {
    loss: f64,
    /// `2 f(x) (w_i·w̃_j + b_i + b̃_j - ln x)`
    coef: f64,
}

fn entry_terms<M: RowAccess>(
    word: &M,
    context: &M,
    word_bias: &M,
    context_bias: &M,
    i: usize,
    j: usize,
    x: f64,
    cfg: &GloveConfig,
    word_row: &mut [f64],
) -> EntryTerms {
    word.read_row(i, word_row);
    let diff = context.dot_row(j, word_row)
        + word_bias.dot_row(i, &[1.0])
        + context_bias.dot_row(j, &[1.0])
        - x.ln();
    let f = glove_weight(x, cfg.x_max, cfg.alpha);
    EntryTerms {
        loss: f * diff * diff,
        coef: 2.0 * f * diff,
    }
}

/// `J = Σ f(X_ij)(w_i·w̃_j + b_i + b̃_j − ln X_ij)²` and its full gradient.
pub fn glove_loss_and_gradient(
    params: &GloveParams,
    cooc: &CooccurrenceMatrix,
    cfg: &GloveConfig,
) -> (f64, GloveGradient) {
    let dim = params.word.cols();
    let mut grad = GloveParams::zeros(params.word.rows(), dim);
    let mut buf = vec![0.0; dim];
    let mut loss = 0.0;
    for (i, j, x) in cooc.iter() {
        let t = entry_terms(
            &params.word,
            &params.context,
            &params.word_bias,
            &params.context_bias,
            i,
            j,
            x,
            cfg,
            &mut buf,
        );
        loss += t.loss;
        params.context.axpy_row(j, t.coef, grad.word.row_mut(i));
        params.word.axpy_row(i, t.coef, grad.context.row_mut(j));
        grad.word_bias.row_mut(i)[0] += t.coef;
        grad.context_bias.row_mut(j)[0] += t.coef;
    }
    (loss, grad)
}

struct AdaGradState {
    params: [SharedMatrix; 4],
    squares: [SharedMatrix; 4],
}

impl AdaGradState {
    fn step(&self, m: usize, r: usize, c: usize, g: f64, lr: f64) {
        self.squares[m].add(r, c, g * g);
        let acc = self.squares[m].get(r, c);
        self.params[m].add(r, c, -lr * g / acc.sqrt());
    }
}

pub fn train_glove(
    cooc: &CooccurrenceMatrix,
    vocab: &Vocabulary,
    config: &TrainingConfig,
    glove: &GloveConfig,
) -> Result<TrainedEmbeddings, EmbeddingError> {
    config.validate()?;
    if cooc.is_empty() {
        return Err(EmbeddingError::EmptyCooccurrence);
    }
    if cooc.size() != vocab.len() {
        return Err(EmbeddingError::InvalidConfig(format!(
            "co-occurrence matrix is {0}x{0} but vocabulary has {1} tokens",
            cooc.size(),
            vocab.len()
        )));
    }
    for (i, j, x) in cooc.iter() {
        if !(x > 0.0 && x.is_finite()) || i >= vocab.len() || j >= vocab.len() {
            return Err(EmbeddingError::NonPositiveCooccurrence {
                row: i,
                col: j,
                value: x,
            });
        }
    }
    let (n, dim) = (vocab.len(), config.dimension);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ones = |cols| {
        let mut m = Matrix::zeros(n, cols);
        m.as_mut_slice().fill(1.0);
        SharedMatrix::from_matrix(&m)
    };
    let state = AdaGradState {
        params: [
            SharedMatrix::from_matrix(&init_rows(n, dim, &mut rng)),
            SharedMatrix::from_matrix(&Matrix::zeros(n, dim)),
            SharedMatrix::from_matrix(&Matrix::zeros(n, 1)),
            SharedMatrix::from_matrix(&Matrix::zeros(n, 1)),
        ],
        squares: [ones(dim), ones(dim), ones(1), ones(1)],
    };

    let worker = |part: &[(usize, usize, f64)]| -> f64 {
        let mut word_row = vec![0.0; dim];
        let mut context_row = vec![0.0; dim];
        let mut loss = 0.0;
        let [w, wc, b, bc] = &state.params;
        let lr = config.initial_learning_rate;
        for &(i, j, x) in part {
            let t = entry_terms(w, wc, b, bc, i, j, x, glove, &mut word_row);
            wc.read_row(j, &mut context_row);
            loss += t.loss;
            for k in 0..dim {
                state.step(0, i, k, t.coef * context_row[k], lr);
                state.step(1, j, k, t.coef * word_row[k], lr);
            }
            state.step(2, i, 0, t.coef, lr);
            state.step(3, j, 0, t.coef, lr);
        }
        loss
    };

    let mut order: Vec<(usize, usize, f64)> = cooc.iter().collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let loss: f64 = if config.jobs == 1 {
            worker(&order)
        } else {
            let chunk = order.len().div_ceil(config.jobs);
            std::thread::scope(|scope| {
                let handles: Vec<_> = order
                    .chunks(chunk)
                    .map(|part| {
                        let worker = &worker;
                        scope.spawn(move || worker(part))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("training worker panicked")).sum()
            })
        };
        let mean = loss / order.len() as f64;
        log::debug!("glove epoch {}: mean loss {mean:.6}", epoch + 1);
        if !mean.is_finite() {
            return Err(EmbeddingError::NonFinite("training loss"));
        }
        epoch_losses.push(mean);
    }

    let word = state.params[0].to_matrix();
    let context = state.params[1].to_matrix();
    ensure_finite(&word, "word vectors")?;
    ensure_finite(&context, "context vectors")?;
    let mut summed = word.clone();
    for (s, c) in summed.as_mut_slice().iter_mut().zip(context.as_slice()) {
        *s += c;
    }
    Ok(TrainedEmbeddings {
        kind: ModelKind::Glove,
        matrix: EmbeddingMatrix {
            vocabulary: vocab.clone(),
            input_vectors: word,
            output_vectors: context,
        },
        vectors: WordVectors::new(vocab.tokens().to_vec(), summed)?,
        ngrams: None,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;

    fn s(a: &str, b: &str, c: &str) -> Sentence {
        Sentence::new(a, b, c)
    }

    #[test]
    fn single_sentence_weights() {
        let corpus = vec![s("a", "b", "c")];
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let id = |t| vocab.id(t).unwrap();
        let x = build_cooccurrence(&corpus, &vocab, 2);
        assert_eq!(x.get(id("a"), id("b")), 1.0);
        assert_eq!(x.get(id("b"), id("c")), 1.0);
        assert_eq!(x.get(id("a"), id("c")), 0.5);
        assert!(x.is_symmetric());

        let x = build_cooccurrence(&corpus, &vocab, 1);
        assert_eq!(x.get(id("a"), id("b")), 1.0);
        assert_eq!(x.get(id("b"), id("c")), 1.0);
        assert_eq!(x.get(id("a"), id("c")), 0.0);
        assert_eq!(x.len(), 4);
    }

    #[test]
    fn repeated_token_fills_diagonal() {
        let corpus = vec![s("a", "p", "a")];
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let a = vocab.id("a").unwrap();
        let x = build_cooccurrence(&corpus, &vocab, 2);
        assert_eq!(x.get(a, a), 1.0);
    }

    #[test]
    fn empty_corpus_gives_empty_matrix() {
        let vocab = build_vocabulary(&[], 1).unwrap();
        assert!(build_cooccurrence(&[], &vocab, 2).is_empty());
    }

    #[test]
    fn weighting_function() {
        assert_eq!(glove_weight(100.0, 100.0, 0.75), 1.0);
        assert_eq!(glove_weight(250.0, 100.0, 0.75), 1.0);
        assert!((glove_weight(50.0, 100.0, 0.75) - 0.5f64.powf(0.75)).abs() < 1e-15);
    }

    #[test]
    fn single_entry_converges_to_zero_residual() {
        let corpus = vec![s("a", "b", "c")];
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let (a, b) = (vocab.id("a").unwrap(), vocab.id("b").unwrap());
        let cooc = CooccurrenceMatrix::from_entries(vocab.len(), [((a, b), 1.0)]);
        let config = TrainingConfig {
            dimension: 4,
            epochs: 2000,
            initial_learning_rate: 0.1,
            ..TrainingConfig::for_model(ModelKind::Glove)
        };
        let trained = train_glove(&cooc, &vocab, &config, &GloveConfig::default()).unwrap();
        // One entry: the last epoch loss is f(1) * residual^2 before the final step.
        let last = *trained.epoch_losses.last().unwrap();
        let f = glove_weight(1.0, 100.0, 0.75);
        assert!((last / f).sqrt() < 1e-3, "residual {}", (last / f).sqrt());
    }

    #[test]
    fn rejects_invalid_matrices() {
        let vocab = build_vocabulary(&[s("a", "b", "c")], 1).unwrap();
        let config = TrainingConfig::for_model(ModelKind::Glove);
        let empty = CooccurrenceMatrix::from_entries(3, []);
        assert!(matches!(
            train_glove(&empty, &vocab, &config, &GloveConfig::default()),
            Err(EmbeddingError::EmptyCooccurrence)
        ));
        let negative = CooccurrenceMatrix::from_entries(3, [((0, 1), -1.0)]);
        assert!(matches!(
            train_glove(&negative, &vocab, &config, &GloveConfig::default()),
            Err(EmbeddingError::NonPositiveCooccurrence { .. })
        ));
        let zero = CooccurrenceMatrix::from_entries(3, [((0, 1), 0.0)]);
        assert!(train_glove(&zero, &vocab, &config, &GloveConfig::default()).is_err());
    }
}
