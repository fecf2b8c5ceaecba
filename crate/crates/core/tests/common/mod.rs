//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls the library's own loss or forward code.

#![allow(dead_code)]

pub mod fixtures;

use std::collections::BTreeMap;

use kgtype_core::corpus::{build_vocabulary, Sentence, Vocabulary};
use kgtype_core::embeddings::{
    bucket_of, build_cooccurrence, cbow_examples, cbow_loss_and_gradient, char_ngrams,
    glove_loss_and_gradient, CbowExample, Composition, CooccurrenceMatrix, GloveConfig, GloveParams,
    Matrix,
};
use kgtype_core::graph::Iri;
use kgtype_core::typing::{CnnConfig, CnnModel, ParamLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-6;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

/// Central-difference derivative of `f` at `params[i]`.
pub fn central_difference(params: &mut [f64], i: usize, eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = params[i];
    params[i] = orig + eps;
    let plus = f(params);
    params[i] = orig - eps;
    let minus = f(params);
    params[i] = orig;
    (plus - minus) / (2.0 * eps)
}

/// `|a - n| / max(|a|, |n|)`, with the denominator floored so that two
/// gradients that are both numerically zero compare as equal.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-7);
    (analytic - numeric).abs() / scale
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> (f64, usize) {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| relative_error(*a, *n))
        .enumerate()
        .fold((0.0, 0), |(best, at), (i, e)| if e > best { (e, i) } else { (best, at) })
}

pub fn numeric_gradient(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| central_difference(&mut p, i, FD_STEP, &f))
        .collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn log_sigmoid(x: f64) -> f64 {
    -(1.0 + (-x).exp()).ln()
}

/// Outcome of one finite-difference comparison.
#[derive(Debug, Clone, Copy)]
pub struct GradientCheck {
    pub parameters: usize,
    pub max_relative_error: f64,
    pub worst_parameter: usize,
}

impl GradientCheck {
    fn new(analytic: &[f64], numeric: &[f64]) -> Self {
        let (max_relative_error, worst_parameter) = max_relative_error(analytic, numeric);
        GradientCheck {
            parameters: analytic.len(),
            max_relative_error,
            worst_parameter,
        }
    }

    pub fn passed(&self) -> bool {
        self.parameters <= 50 && self.max_relative_error < GRADIENT_TOLERANCE
    }
}

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect())
}

// ---------------------------------------------------------------- CBOW ---

/// Ten three-token sentences over `tokens`, every token used.
pub fn tiny_corpus(tokens: &[&str]) -> Vec<Sentence> {
    let n = tokens.len();
    (0..10)
        .map(|i| Sentence::new(tokens[i % n], tokens[(i + 1) % n], tokens[(i + 3) % n]))
        .collect()
}

fn with_negatives(corpus: &[Sentence], vocab: &Vocabulary, k: usize, rng: &mut ChaCha8Rng) -> Vec<CbowExample> {
    let mut examples = cbow_examples(corpus, vocab, 2).unwrap();
    for ex in &mut examples {
        ex.negatives = (0..k).map(|_| rng.gen_range(0..vocab.len())).collect();
    }
    examples
}

/// Summed negative-sampling loss where token `t`'s input vector is the
/// mean of `rows[t]` in `input`.
fn negative_sampling_oracle(
    input: &[f64],
    output: &[f64],
    dim: usize,
    rows: &[Vec<usize>],
    examples: &[CbowExample],
) -> f64 {
    let token_vector = |t: usize| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for &r in &rows[t] {
            for k in 0..dim {
                v[k] += input[r * dim + k];
            }
        }
        v.iter().map(|x| x / rows[t].len() as f64).collect()
    };
    let dot_out = |row: usize, h: &[f64]| -> f64 { (0..dim).map(|k| output[row * dim + k] * h[k]).sum() };
    let mut loss = 0.0;
    for ex in examples {
        let mut h = vec![0.0; dim];
        for &c in &ex.context {
            let v = token_vector(c);
            for k in 0..dim {
                h[k] += v[k] / ex.context.len() as f64;
            }
        }
        loss -= log_sigmoid(dot_out(ex.center, &h));
        for &n in &ex.negatives {
            if n != ex.center {
                loss -= log_sigmoid(-dot_out(n, &h));
            }
        }
    }
    loss
}

fn check_negative_sampling(
    input: Matrix,
    output: Matrix,
    rows: Vec<Vec<usize>>,
    examples: &[CbowExample],
) -> GradientCheck {
    let composition = Composition::from_rows(rows.clone());
    let dim = input.cols();
    let mut d_in = vec![0.0; input.as_slice().len()];
    let mut d_out = vec![0.0; output.as_slice().len()];
    for ex in examples {
        let (_, g) = cbow_loss_and_gradient(&input, &output, &composition, ex);
        let (gi, go) = g.to_dense(input.rows(), output.rows());
        d_in.iter_mut().zip(gi.as_slice()).for_each(|(a, b)| *a += b);
        d_out.iter_mut().zip(go.as_slice()).for_each(|(a, b)| *a += b);
    }
    let analytic: Vec<f64> = d_in.into_iter().chain(d_out).collect();

    let split = input.as_slice().len();
    let params: Vec<f64> = input.as_slice().iter().chain(output.as_slice()).copied().collect();
    let numeric = numeric_gradient(&params, |p| {
        negative_sampling_oracle(&p[..split], &p[split..], dim, &rows, examples)
    });
    GradientCheck::new(&analytic, &numeric)
}

/// 5 tokens, dimension 5: 25 input and 25 output parameters.
pub fn cbow_gradient_check(seed: u64) -> GradientCheck {
    let corpus = tiny_corpus(&["t0", "t1", "t2", "t3", "t4"]);
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = with_negatives(&corpus, &vocab, 2, &mut rng);
    let dim = 5;
    let input = random_matrix(vocab.len(), dim, 0.5, &mut rng);
    let output = random_matrix(vocab.len(), dim, 0.5, &mut rng);
    let rows = (0..vocab.len()).map(|i| vec![i]).collect();
    check_negative_sampling(input, output, rows, &examples)
}

pub const FASTTEXT_BUCKETS: u32 = 4;

/// Token `t`'s rows: its word row, then one row per 3-gram bucket (after the
/// word rows, bucket ids compacted in ascending order).
pub fn fasttext_rows(vocab: &Vocabulary, bucket_count: u32) -> (Vec<Vec<usize>>, usize) {
    let per_token: Vec<Vec<u32>> = vocab
        .tokens()
        .iter()
        .map(|t| char_ngrams(t, 3, 3).iter().map(|g| bucket_of(g, bucket_count)).collect())
        .collect();
    let mut used: Vec<u32> = per_token.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let rows = per_token
        .iter()
        .enumerate()
        .map(|(id, bs)| {
            std::iter::once(id)
                .chain(bs.iter().map(|b| vocab.len() + used.binary_search(b).unwrap()))
                .collect()
        })
        .collect();
    (rows, vocab.len() + used.len())
}

/// 3 tokens with 3-grams hashed into 4 buckets, dimension 4.
pub fn fasttext_gradient_check(seed: u64) -> GradientCheck {
    let corpus = tiny_corpus(&["ab", "bc", "ca"]);
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = with_negatives(&corpus, &vocab, 2, &mut rng);
    let (rows, input_rows) = fasttext_rows(&vocab, FASTTEXT_BUCKETS);
    assert!(input_rows > vocab.len(), "fixture must exercise bucket rows");
    let dim = 4;
    let input = random_matrix(input_rows, dim, 0.5, &mut rng);
    let output = random_matrix(vocab.len(), dim, 0.5, &mut rng);
    check_negative_sampling(input, output, rows, &examples)
}

// --------------------------------------------------------------- GloVe ---

fn glove_oracle(p: &[f64], v: usize, dim: usize, entries: &[(usize, usize, f64)], cfg: &GloveConfig) -> f64 {
    let (w, rest) = p.split_at(v * dim);
    let (c, rest) = rest.split_at(v * dim);
    let (bw, bc) = rest.split_at(v);
    entries
        .iter()
        .map(|&(i, j, x)| {
            let f = if x < cfg.x_max { (x / cfg.x_max).powf(cfg.alpha) } else { 1.0 };
            let dot: f64 = (0..dim).map(|k| w[i * dim + k] * c[j * dim + k]).sum();
            let diff = dot + bw[i] + bc[j] - x.ln();
            f * diff * diff
        })
        .sum()
}

/// 5 tokens, dimension 4: 40 vector and 10 bias parameters.
pub fn glove_gradient_check(seed: u64) -> GradientCheck {
    let corpus = tiny_corpus(&["t0", "t1", "t2", "t3", "t4"]);
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let cooc = build_cooccurrence(&corpus, &vocab, 2);
    // A small x_max puts entries on both sides of the weighting threshold.
    let cfg = GloveConfig { x_max: 2.0, alpha: 0.75 };
    let v = vocab.len();
    let dim = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = GloveParams {
        word: random_matrix(v, dim, 0.5, &mut rng),
        context: random_matrix(v, dim, 0.5, &mut rng),
        word_bias: random_matrix(v, 1, 0.5, &mut rng),
        context_bias: random_matrix(v, 1, 0.5, &mut rng),
    };
    let (_, g) = glove_loss_and_gradient(&params, &cooc, &cfg);
    let flat = |p: &GloveParams| -> Vec<f64> {
        [&p.word, &p.context, &p.word_bias, &p.context_bias]
            .iter()
            .flat_map(|m| m.as_slice().iter().copied())
            .collect()
    };
    let entries: Vec<(usize, usize, f64)> = cooc.iter().collect();
    let numeric = numeric_gradient(&flat(&params), |p| glove_oracle(p, v, dim, &entries, &cfg));
    GradientCheck::new(&flat(&g), &numeric)
}

// ----------------------------------------------------------------- CNN ---

/// Straight-line loss over the flat parameter vector, written against the
/// documented layout rather than the model's own forward pass.
pub fn cnn_oracle_loss(layout: &ParamLayout, scale: f64, p: &[f64], batch: &[(Vec<f64>, usize)]) -> f64 {
    let mut total = 0.0;
    for (raw, gold) in batch {
        let v: Vec<f64> = raw.iter().map(|x| x * scale).collect();
        let mut pooled = Vec::new();
        for bank in &layout.banks {
            for f in 0..bank.filters {
                let mut best = 0.0f64;
                for pos in 0..=(v.len() - bank.width) {
                    let mut z = p[bank.bias + f];
                    for k in 0..bank.width {
                        z += p[bank.weights + f * bank.width + k] * v[pos + k];
                    }
                    best = best.max(z);
                }
                pooled.push(best);
            }
        }
        let mut hidden = vec![0.0; layout.hidden_units];
        for (j, h) in hidden.iter_mut().enumerate() {
            let mut a = p[layout.hidden_bias + j];
            for (i, x) in pooled.iter().enumerate() {
                a += p[layout.hidden_weights + j * layout.features + i] * x;
            }
            *h = a.max(0.0);
        }
        let mut loss = 0.0;
        for c in 0..layout.classes {
            let mut o = p[layout.output_bias + c];
            for (j, h) in hidden.iter().enumerate() {
                o += p[layout.output_weights + c * layout.hidden_units + j] * h;
            }
            let s = sigmoid(o);
            let y = if c == *gold { 1.0 } else { 0.0 };
            loss -= y * s.ln() + (1.0 - y) * (1.0 - s).ln();
        }
        total += loss / layout.classes as f64;
    }
    total / batch.len() as f64
}

/// 2 classes, 4 entities, dimension 8; kernel widths 2 and 3 with 2 filters
/// each and 3 hidden units (37 parameters).
pub fn cnn_gradient_check(seed: u64) -> GradientCheck {
    let config = CnnConfig {
        kernel_widths: vec![2, 3],
        filters_per_width: 2,
        hidden_units: 3,
        ..CnnConfig::default()
    };
    let classes = [Iri::new("http://ex/A").unwrap(), Iri::new("http://ex/B").unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = CnnModel::initialized(config, 8, classes, &mut rng).unwrap();
    for p in model.params_mut() {
        *p += rng.gen_range(-0.3..0.3);
    }
    let scale = 1.7;
    model.set_input_scale(scale).unwrap();

    let batch: Vec<(Vec<f64>, usize)> = (0..4)
        .map(|i| ((0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(), i % 2))
        .collect();
    let refs: Vec<(&[f64], usize)> = batch.iter().map(|(v, c)| (v.as_slice(), *c)).collect();
    let (loss, analytic) = model.loss_and_gradient(&refs).unwrap();
    let layout = model.layout().clone();
    assert!((cnn_oracle_loss(&layout, scale, model.params(), &batch) - loss).abs() < 1e-12);
    let numeric = numeric_gradient(model.params(), |p| cnn_oracle_loss(&layout, scale, p, &batch));
    GradientCheck::new(&analytic, &numeric)
}

// -------------------------------------------------------- co-occurrence ---

/// Enumerates every ordered position pair `(p, q)`, `p != q`, within the
/// window and adds `1/|p - q|` to `X[t_p][t_q]`.
pub fn cooccurrence_oracle(corpus: &[Sentence], vocab: &Vocabulary, window: usize) -> BTreeMap<(usize, usize), f64> {
    let mut x = BTreeMap::new();
    for s in corpus {
        let toks = s.tokens();
        for p in 0..toks.len() {
            for q in 0..toks.len() {
                let d = p.abs_diff(q);
                if d == 0 || d > window {
                    continue;
                }
                if let (Some(a), Some(b)) = (vocab.id(&toks[p]), vocab.id(&toks[q])) {
                    *x.entry((a, b)).or_insert(0.0) += 1.0 / d as f64;
                }
            }
        }
    }
    x
}

/// Random corpus with at most `max_tokens` tokens over a small alphabet.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_tokens: usize) -> Vec<Sentence> {
    let alphabet = rng.gen_range(1..=12);
    let sentences = rng.gen_range(0..=max_tokens / 3);
    (0..sentences)
        .map(|_| {
            let mut t = || format!("w{}", rng.gen_range(0..alphabet));
            Sentence::new(t(), t(), t())
        })
        .collect()
}

pub fn cooccurrence_matches(matrix: &CooccurrenceMatrix, oracle: &BTreeMap<(usize, usize), f64>) -> bool {
    let got: BTreeMap<(usize, usize), f64> = matrix.iter().map(|(i, j, x)| ((i, j), x)).collect();
    got.len() == oracle.len()
        && got.iter().all(|(k, v)| oracle.get(k).is_some_and(|o| o.to_bits() == v.to_bits()))
        && matrix.is_symmetric()
}

// ---------------------------------------------------- synthetic pipeline ---

/// The acceptance experiment: 10 classes of 50 entities, 3 predicates per
/// class, 10% noise, CBOW with 100 dimensions and window 2 for 30 epochs,
/// then the CNN with batch 32 for 300 epochs.
pub fn acceptance_config(work_dir: &std::path::Path, seed: u64) -> kgtype_core::pipeline::PipelineConfig {
    let mut config = kgtype_core::pipeline::PipelineConfig {
        synthetic: Some(kgtype_core::synth::SynthConfig::default()),
        work_dir: work_dir.to_path_buf(),
        seed,
        ..Default::default()
    };
    config.embedding.dimension = 100;
    config.embedding.window = 2;
    config.embedding.epochs = 30;
    config.classifier.batch_size = 32;
    config.classifier.epochs = 300;
    config
}

/// A scaled-down run that finishes in a few seconds.
pub fn small_config(work_dir: &std::path::Path, seed: u64) -> kgtype_core::pipeline::PipelineConfig {
    let mut config = kgtype_core::pipeline::PipelineConfig {
        synthetic: Some(kgtype_core::synth::SynthConfig {
            num_classes: 4,
            entities_per_class: 12,
            ..Default::default()
        }),
        work_dir: work_dir.to_path_buf(),
        seed,
        ..Default::default()
    };
    config.dataset.num_classes = 4;
    config.dataset.entities_per_class = 12;
    config.embedding.dimension = 16;
    config.embedding.epochs = 5;
    config.classifier.kernel_widths = vec![3, 4];
    config.classifier.filters_per_width = 8;
    config.classifier.hidden_units = 10;
    config.classifier.epochs = 15;
    config
}

fn read_tsv_pairs(path: &std::path::Path) -> Vec<(String, String)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut f = l.split('\t');
            (f.next().unwrap().to_string(), f.next().unwrap().to_string())
        })
        .collect()
}

/// Nearest-centroid baseline over the saved vectors: each class is the mean
/// of its training members, each test entity goes to the centroid with the
/// highest cosine over all classes. Entities without a vector count as
/// misses.
pub fn nearest_centroid_accuracy(vectors: &std::path::Path, train: &std::path::Path, test: &std::path::Path) -> f64 {
    let text = std::fs::read_to_string(vectors).unwrap();
    let table: BTreeMap<&str, Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut parts = l.split(' ');
            let token = parts.next().unwrap();
            (token, parts.map(|v| v.parse().unwrap()).collect())
        })
        .collect();
    let mut sums: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for (e, c) in read_tsv_pairs(train) {
        if let Some(v) = table.get(e.as_str()) {
            let entry = sums.entry(c).or_insert_with(|| (vec![0.0; v.len()], 0));
            entry.0.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            entry.1 += 1;
        }
    }
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    };
    let test = read_tsv_pairs(test);
    let correct = test
        .iter()
        .filter(|(e, c)| {
            let Some(v) = table.get(e.as_str()) else { return false };
            let best = sums
                .iter()
                .map(|(k, (s, n))| (k, cos(v, &s.iter().map(|x| x / *n as f64).collect::<Vec<_>>())))
                .fold(None, |best: Option<(&String, f64)>, (k, s)| match best {
                    Some((_, b)) if b >= s => best,
                    _ => Some((k, s)),
                });
            best.is_some_and(|(k, _)| k == c)
        })
        .count();
    correct as f64 / test.len() as f64
}

/// Files whose bytes must not change between identical runs.
pub const DETERMINISTIC_ARTIFACTS: [&str; 8] = [
    "train.tsv",
    "test.tsv",
    "corpus.txt",
    "vectors.txt",
    "model.bin",
    "predictions-cnn.tsv",
    "predictions-similarity.tsv",
    "metrics.json",
];

/// Names of the artifacts that differ between two run directories.
pub fn differing_artifacts(a: &std::path::Path, b: &std::path::Path) -> Vec<&'static str> {
    DETERMINISTIC_ARTIFACTS
        .iter()
        .copied()
        .filter(|f| std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok() || !a.join(f).exists())
        .collect()
}
