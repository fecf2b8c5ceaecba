//! Token embeddings trained over the triple corpus.
//!
//! Three trainers share one output type: CBOW word2vec with negative
//! sampling, FastText (the same objective over word + character n-gram
//! rows), and GloVe over a distance-weighted co-occurrence matrix.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Sentence, Vocabulary};

mod cbow;
mod fasttext;
mod glove;
mod io;
mod matrix;
mod sampler;

pub use cbow::{
    cbow_examples, cbow_loss_and_gradient, train_cbow, CbowExample, Composition, SparseGradient,
};
pub use fasttext::{
    bucket_of, char_ngrams, fnv1a_32, train_fasttext, NGramConfig, NGramTable, SubwordVectors,
};
pub use glove::{
    build_cooccurrence, glove_loss_and_gradient, glove_weight, train_glove, CooccurrenceMatrix,
    GloveConfig, GloveGradient, GloveParams,
};
pub use io::{load_embeddings, load_ngrams, read_embeddings, save_embeddings, save_ngrams, write_embeddings};
pub use matrix::{dot, Matrix, RowAccess};
pub(crate) use matrix::{sigmoid, softplus};
pub use sampler::UnigramTable;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary does not match the corpus (token `{0}`)")]
    VocabularyMismatch(String),
    #[error("co-occurrence matrix is empty")]
    EmptyCooccurrence,
    #[error("co-occurrence entry ({row}, {col}) = {value} is not positive")]
    NonPositiveCooccurrence { row: usize, col: usize, value: f64 },
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("token `{0}` has no vector")]
    NotFound(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EmbeddingError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, EmbeddingError::NonFinite(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Word2vec,
    Fasttext,
    Glove,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Word2vec => "word2vec",
            ModelKind::Fasttext => "fasttext",
            ModelKind::Glove => "glove",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word2vec" | "cbow" => Ok(ModelKind::Word2vec),
            "fasttext" => Ok(ModelKind::Fasttext),
            "glove" => Ok(ModelKind::Glove),
            other => Err(format!("unknown embedding model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub dimension: usize,
    /// Context radius in tokens.
    pub window: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    /// Noise tokens per position (CBOW and FastText).
    pub negative_samples: usize,
    pub seed: u64,
    /// Worker threads. `1` is the deterministic mode; more threads apply
    /// unsynchronised updates and give nondeterministic results.
    pub jobs: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dimension: 100,
            window: 2,
            epochs: 5,
            initial_learning_rate: 0.025,
            negative_samples: 5,
            seed: 1,
            jobs: 1,
        }
    }
}

impl TrainingConfig {
    /// Defaults with the learning rate customary for `kind`.
    pub fn for_model(kind: ModelKind) -> Self {
        let initial_learning_rate = match kind {
            ModelKind::Word2vec | ModelKind::Fasttext => 0.025,
            ModelKind::Glove => 0.05,
        };
        TrainingConfig {
            initial_learning_rate,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.dimension < 1 {
            return bad("dimension must be at least 1");
        }
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.initial_learning_rate > 0.0 && self.initial_learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.jobs < 1 {
            return bad("jobs must be at least 1");
        }
        Ok(())
    }
}

/// Raw parameters of a trained model. Row `i` of each matrix belongs to
/// vocabulary id `i`.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub vocabulary: Vocabulary,
    pub input_vectors: Matrix,
    pub output_vectors: Matrix,
}

/// Result of any of the three trainers.
#[derive(Debug, Clone)]
pub struct TrainedEmbeddings {
    pub kind: ModelKind,
    pub matrix: EmbeddingMatrix,
    /// The vectors handed to downstream consumers.
    pub vectors: WordVectors,
    pub ngrams: Option<NGramTable>,
    /// Mean loss per epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainedEmbeddings {
    pub fn lookup(&self) -> Box<dyn VectorLookup + '_> {
        match &self.ngrams {
            Some(ngrams) => Box::new(SubwordVectors::new(self.vectors.clone(), ngrams.clone())),
            None => Box::new(&self.vectors),
        }
    }
}

/// Anything that maps a token to a fixed-length vector.
pub trait VectorLookup {
    fn dimension(&self) -> usize;

    fn get(&self, token: &str) -> Option<Cow<'_, [f64]>>;

    fn vector_of(&self, token: &str) -> Result<Cow<'_, [f64]>, EmbeddingError> {
        self.get(token)
            .ok_or_else(|| EmbeddingError::NotFound(token.to_string()))
    }
}

impl<T: VectorLookup + ?Sized> VectorLookup for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn get(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        (**self).get(token)
    }
}

impl<T: VectorLookup + ?Sized> VectorLookup for Box<T> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn get(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        (**self).get(token)
    }
}

/// Token strings with one final vector each; this is what gets persisted.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
}

impl WordVectors {
    pub fn new(tokens: Vec<String>, vectors: Matrix) -> Result<Self, EmbeddingError> {
        if tokens.len() != vectors.rows() {
            return Err(EmbeddingError::InvalidConfig(format!(
                "{} tokens but {} vector rows",
                tokens.len(),
                vectors.rows()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(EmbeddingError::InvalidConfig(format!("duplicate token `{t}`")));
            }
        }
        Ok(WordVectors {
            tokens,
            index,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn matrix(&self) -> &Matrix {
        &self.vectors
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

impl VectorLookup for WordVectors {
    fn dimension(&self) -> usize {
        self.vectors.cols()
    }

    fn get(&self, token: &str) -> Option<Cow<'_, [f64]>> {
        self.index
            .get(token)
            .map(|&i| Cow::Borrowed(self.vectors.row(i)))
    }
}

/// Maps corpus tokens to vocabulary ids (`None` below `min_count`). Fails
/// when the vocabulary holds tokens the corpus never mentions.
pub(crate) fn encode_corpus(
    corpus: &[Sentence],
    vocab: &Vocabulary,
) -> Result<Vec<[Option<usize>; 3]>, EmbeddingError> {
    if corpus.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let mut seen = vec![false; vocab.len()];
    let encoded: Vec<[Option<usize>; 3]> = corpus
        .iter()
        .map(|s| {
            let ids = s.tokens().clone().map(|t| vocab.id(&t));
            for id in ids.iter().flatten() {
                seen[*id] = true;
            }
            ids
        })
        .collect();
    if vocab.is_empty() {
        return Err(EmbeddingError::VocabularyMismatch(corpus[0].tokens()[0].clone()));
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let token = vocab.token(missing).unwrap_or_default().to_string();
        return Err(EmbeddingError::VocabularyMismatch(token));
    }
    Ok(encoded)
}

pub(crate) fn ensure_finite(m: &Matrix, what: &'static str) -> Result<(), EmbeddingError> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(EmbeddingError::NonFinite(what))
    }
}

/// Trains the requested model on `corpus`.
pub fn train(
    kind: ModelKind,
    corpus: &[Sentence],
    vocab: &Vocabulary,
    config: &TrainingConfig,
) -> Result<TrainedEmbeddings, EmbeddingError> {
    match kind {
        ModelKind::Word2vec => train_cbow(corpus, vocab, config),
        ModelKind::Fasttext => train_fasttext(corpus, vocab, config, &NGramConfig::default()),
        ModelKind::Glove => {
            config.validate()?;
            let cooc = build_cooccurrence(corpus, vocab, config.window);
            train_glove(&cooc, vocab, config, &GloveConfig::default())
        }
    }
}
