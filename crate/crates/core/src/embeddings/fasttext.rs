use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cbow::{init_rows, positions, run_negative_sampling, Composition};
use super::matrix::Matrix;
use super::{
    encode_corpus, EmbeddingError, EmbeddingMatrix, ModelKind, TrainedEmbeddings, TrainingConfig,
    VectorLookup, WordVectors,
};
use crate::corpus::{Sentence, Vocabulary};

pub const BOW: char = '<';
pub const EOW: char = '>';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub bucket_count: u32,
}

impl Default for NGramConfig {
    fn default() -> Self {
        NGramConfig {
            n_min: 3,
            n_max: 6,
            bucket_count: 2_000_000,
        }
    }
}

impl NGramConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.n_min < 1 || self.n_min > self.n_max || self.bucket_count < 1 {
            return Err(EmbeddingError::InvalidConfig(format!(
                "invalid n-gram settings n_min={} n_max={} buckets={}",
                self.n_min, self.n_max, self.bucket_count
            )));
        }
        Ok(())
    }
}

/// Character n-grams of `<token>` for every length in `n_min..=n_max`,
/// shortest first. Repeated n-grams are kept.
pub fn char_ngrams(token: &str, n_min: usize, n_max: usize) -> Vec<String> {
    let chars: Vec<char> = std::iter::once(BOW)
        .chain(token.chars())
        .chain(std::iter::once(EOW))
        .collect();
    let mut out = Vec::new();
    for n in n_min..=n_max.min(chars.len()) {
        for window in chars.windows(n) {
            out.push(window.iter().collect());
        }
    }
    out
}

/// 32-bit FNV-1a over the UTF-8 bytes.
pub fn fnv1a_32(s: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in s.bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

pub fn bucket_of(ngram: &str, bucket_count: u32) -> u32 {
    fnv1a_32(ngram) % bucket_count
}

/// Initial value of a bucket row. Buckets are initialised independently so
/// that rows never touched during training still have a defined vector.
fn bucket_init(seed: u64, bucket: u32, dim: usize) -> Vec<f64> {
    let mix = seed ^ (u64::from(bucket) + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    let bound = 0.5 / dim as f64;
    (0..dim).map(|_| rng.gen_range(-bound..=bound)).collect()
}

/// Hashed n-gram vectors. Only buckets reached by the training vocabulary
/// are stored; any other bucket keeps its seeded initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramTable {
    config: NGramConfig,
    seed: u64,
    index: BTreeMap<u32, usize>,
    vectors: Matrix,
}

impl NGramTable {
    pub fn from_parts(
        config: NGramConfig,
        seed: u64,
        buckets: Vec<u32>,
        vectors: Matrix,
    ) -> Result<Self, EmbeddingError> {
        config.validate()?;
        if buckets.len() != vectors.rows() {
            return Err(EmbeddingError::InvalidConfig(
                "bucket list and vector rows differ in length".into(),
            ));
        }
        let mut index = BTreeMap::new();
        for (i, b) in buckets.into_iter().enumerate() {
            if b >= config.bucket_count || index.insert(b, i).is_some() {
                return Err(EmbeddingError::InvalidConfig(format!("bad bucket id {b}")));
            }
        }
        Ok(NGramTable {
            config,
            seed,
            index,
            vectors,
        })
    }

    pub fn config(&self) -> &NGramConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dimension(&self) -> usize {
        self.vectors.cols()
    }

    /// Stored buckets in ascending order with their vectors.
    pub fn stored(&self) -> impl Iterator<Item = (u32, &[f64])> {
        self.index.iter().map(|(&b, &i)| (b, self.vectors.row(i)))
    }

    pub fn buckets_of(&self, token: &str) -> Vec<u32> {
        char_ngrams(token, self.config.n_min, self.config.n_max)
            .iter()
            .map(|g| bucket_of(g, self.config.bucket_count))
            .collect()
    }

    pub fn bucket_vector(&self, bucket: u32) -> Cow<'_, [f64]> {
        match self.index.get(&bucket) {
            Some(&i) => Cow::Borrowed(self.vectors.row(i)),
            None => Cow::Owned(bucket_init(self.seed, bucket, self.dimension())),
        }
    }

    /// Mean of the token's n-gram vectors; `None` if it has no n-grams.
    pub fn subword_vector(&self, token: &str) -> Option<Vec<f64>> {
        let buckets = self.buckets_of(token);
        if buckets.is_empty() {
            return None;
        }
        let mut out = vec![0.0; self.dimension()];
        for b in &buckets {
            for (o, v) in out.iter_mut().zip(self.bucket_vector(*b).iter()) {
                *o += v;
            }
        }
        let n = buckets.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        Some(out)
    }
}

/// Trained vocabulary vectors plus the n-gram table for unseen tokens.
#[derive(Debug, Clone)]
pub struct SubwordVectors {
    words: WordVectors,
    ngrams: NGramTable,
}

impl SubwordVectors {
    pub fn new(words: WordVectors, ngrams: NGramTable) -> Self {
        SubwordVectors { words, ngrams }
    }

    pub fn words(&self) -> &WordVectors {
        &self.words
    }

    pub fn ngrams(&self) -> &NGramTable {
        &self.ngrams
    }
}

impl VectorLookup for SubwordVectors {
    fn dimension(&self) -> usize {
        self.words.dimension()
    }

    fn get(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        self.words
            .get(token)
            .or_else(|| self.ngrams.subword_vector(token).map(Cow::Owned))
    }
}

/// FastText: the CBOW objective where each token's input vector is the mean
/// of its own word row and its n-gram bucket rows.
pub fn train_fasttext(
    corpus: &[Sentence],
    vocab: &Vocabulary,
    config: &TrainingConfig,
    ngram_config: &NGramConfig,
) -> Result<TrainedEmbeddings, EmbeddingError> {
    config.validate()?;
    ngram_config.validate()?;
    let encoded = encode_corpus(corpus, vocab)?;
    let examples = positions(&encoded, config.window);
    let n_words = vocab.len();
    let dim = config.dimension;

    let token_buckets: Vec<Vec<u32>> = vocab
        .tokens()
        .iter()
        .map(|t| {
            char_ngrams(t, ngram_config.n_min, ngram_config.n_max)
                .iter()
                .map(|g| bucket_of(g, ngram_config.bucket_count))
                .collect()
        })
        .collect();
    let used: Vec<u32> = token_buckets
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let compact: BTreeMap<u32, usize> = used.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let composition = Composition::from_rows(
        token_buckets
            .iter()
            .enumerate()
            .map(|(id, buckets)| {
                std::iter::once(id)
                    .chain(buckets.iter().map(|b| n_words + compact[b]))
                    .collect()
            })
            .collect(),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let words = init_rows(n_words, dim, &mut rng);
    let mut data = words.as_slice().to_vec();
    for &b in &used {
        data.extend(bucket_init(config.seed, b, dim));
    }
    let input = Matrix::from_vec(n_words + used.len(), dim, data);

    let run = run_negative_sampling(&examples, vocab, &composition, input, config, rng)?;

    let split = n_words * dim;
    let word_rows = Matrix::from_vec(n_words, dim, run.input.as_slice()[..split].to_vec());
    let bucket_rows = Matrix::from_vec(used.len(), dim, run.input.as_slice()[split..].to_vec());
    let mut composed = Matrix::zeros(n_words, dim);
    for id in 0..n_words {
        let rows = composition.rows_of(id);
        let out = composed.row_mut(id);
        for &r in rows {
            for (o, v) in out.iter_mut().zip(run.input.row(r)) {
                *o += v;
            }
        }
        let n = rows.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
    }

    let ngrams = NGramTable::from_parts(*ngram_config, config.seed, used, bucket_rows)?;
    Ok(TrainedEmbeddings {
        kind: ModelKind::Fasttext,
        matrix: EmbeddingMatrix {
            vocabulary: vocab.clone(),
            input_vectors: word_rows,
            output_vectors: run.output,
        },
        vectors: WordVectors::new(vocab.tokens().to_vec(), composed)?,
        ngrams: Some(ngrams),
        epoch_losses: run.epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;

    #[test]
    fn trigrams_with_boundaries() {
        assert_eq!(char_ngrams("abc", 3, 3), vec!["<ab", "abc", "bc>"]);
        assert_eq!(char_ngrams("ab", 3, 6), vec!["<ab", "ab>", "<ab>"]);
        assert!(char_ngrams("a", 4, 6).is_empty());
    }

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 32-bit test vectors.
        assert_eq!(fnv1a_32(""), 0x811c9dc5);
        assert_eq!(fnv1a_32("a"), 0xe40c292c);
        assert_eq!(fnv1a_32("foobar"), 0xbf9cf968);
    }

    #[test]
    fn bucket_init_is_stable() {
        assert_eq!(bucket_init(3, 17, 4), bucket_init(3, 17, 4));
        assert_ne!(bucket_init(3, 17, 4), bucket_init(3, 18, 4));
        assert!(bucket_init(3, 17, 4).iter().all(|v| v.abs() <= 0.125));
    }

    fn tiny() -> (Vec<Sentence>, Vocabulary) {
        let corpus: Vec<Sentence> = (0..20)
            .map(|i| Sentence::new(format!("ent{i}"), format!("rel{}", i % 2), format!("val{}", i % 4)))
            .collect();
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        (corpus, vocab)
    }

    #[test]
    fn oov_tokens_use_ngrams_only() {
        let (corpus, vocab) = tiny();
        let config = TrainingConfig {
            dimension: 6,
            epochs: 2,
            ..Default::default()
        };
        let ngram = NGramConfig {
            n_min: 3,
            n_max: 4,
            bucket_count: 1000,
        };
        let trained = train_fasttext(&corpus, &vocab, &config, &ngram).unwrap();
        let lookup = trained.lookup();
        assert!(lookup.vector_of("ent3").is_ok());
        let oov = lookup.vector_of("ent99").unwrap();
        let table = trained.ngrams.as_ref().unwrap();
        assert_eq!(oov.as_ref(), table.subword_vector("ent99").unwrap().as_slice());
        assert_eq!(trained.matrix.input_vectors.rows(), vocab.len());
        assert!(trained.vectors.vector_of("ent99").is_err());
    }

    #[test]
    fn composed_vector_is_mean_of_word_and_ngrams() {
        let (corpus, vocab) = tiny();
        let config = TrainingConfig {
            dimension: 4,
            epochs: 1,
            ..Default::default()
        };
        let ngram = NGramConfig {
            n_min: 3,
            n_max: 3,
            bucket_count: 50,
        };
        let trained = train_fasttext(&corpus, &vocab, &config, &ngram).unwrap();
        let table = trained.ngrams.as_ref().unwrap();
        let id = vocab.id("rel1").unwrap();
        let buckets = table.buckets_of("rel1");
        let mut expected = trained.matrix.input_vectors.row(id).to_vec();
        for b in &buckets {
            for (e, v) in expected.iter_mut().zip(table.bucket_vector(*b).iter()) {
                *e += v;
            }
        }
        expected.iter_mut().for_each(|e| *e /= (1 + buckets.len()) as f64);
        let got = trained.vectors.vector_of("rel1").unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }
    }
}
