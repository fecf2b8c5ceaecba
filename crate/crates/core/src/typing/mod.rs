//! Fine-grained type assignment from entity vectors.
//!
//! Two methods share the [`Prediction`] output: a 1D convolutional
//! classifier that reads the embedding axis as a sequence, and cosine
//! similarity against mean class vectors restricted to the entity's branch
//! of the class hierarchy.

mod cnn;
mod persist;
mod similarity;

use std::cmp::Ordering;

use thiserror::Error;

use crate::embeddings::EmbeddingError;
use crate::graph::{HierarchyError, Iri};

pub use cnn::{
    cnn_train, BankLayout, ConvBank, CnnConfig, CnnModel, CnnTraining, ForwardTrace, ParamLayout,
};
pub use persist::{load_model, read_model, save_model, write_model, MODEL_MAGIC};
pub use similarity::{
    class_vector, class_vectors, cosine_similarity, fine_grained_candidates, similarity_rank,
    ClassVectors,
};

#[derive(Debug, Error)]
pub enum TypingError {
    #[error("invalid classifier configuration: {0}")]
    InvalidConfig(String),
    #[error("training split is empty")]
    EmptyTrainingSet,
    #[error("none of the {0} training entities has a vector")]
    NoVectors(usize),
    #[error("need at least 2 classes to train, found {0}")]
    TooFewClasses(usize),
    #[error("vector has {found} components, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {0} has no member with a vector")]
    NoMemberVectors(Iri),
    #[error("cosine similarity undefined: {0} has a zero vector")]
    ZeroNorm(String),
    #[error("no candidate classes for {0}")]
    NoCandidates(Iri),
    #[error("class {0} has no class vector")]
    MissingClassVector(Iri),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TypingError {
    pub fn is_numerical(&self) -> bool {
        match self {
            TypingError::NonFinite(_) => true,
            TypingError::Embedding(e) => e.is_numerical(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredClass {
    pub class: Iri,
    pub score: f64,
}

/// Scores for one entity, ranked by descending score with ties broken by
/// class IRI.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub entity: Iri,
    ranking: Vec<ScoredClass>,
}

impl Prediction {
    pub fn new(entity: Iri, scores: impl IntoIterator<Item = (Iri, f64)>) -> Self {
        let mut ranking: Vec<ScoredClass> = scores
            .into_iter()
            .map(|(class, score)| ScoredClass { class, score })
            .collect();
        ranking.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.class.cmp(&b.class))
        });
        Prediction { entity, ranking }
    }

    /// Keeps `ranking` in the given order, e.g. as read back from a file.
    pub fn ranked(entity: Iri, ranking: Vec<ScoredClass>) -> Self {
        Prediction { entity, ranking }
    }

    /// A prediction with no scored classes; always counted as wrong.
    pub fn empty(entity: Iri) -> Self {
        Prediction {
            entity,
            ranking: Vec::new(),
        }
    }

    pub fn ranking(&self) -> &[ScoredClass] {
        &self.ranking
    }

    pub fn top(&self) -> Option<&Iri> {
        self.ranking.first().map(|s| &s.class)
    }

    pub fn top_k(&self, k: usize) -> &[ScoredClass] {
        &self.ranking[..k.min(self.ranking.len())]
    }

    pub fn score_of(&self, class: &Iri) -> Option<f64> {
        self.ranking.iter().find(|s| &s.class == class).map(|s| s.score)
    }

    /// 1-based rank of `class`, if scored.
    pub fn rank_of(&self, class: &Iri) -> Option<usize> {
        self.ranking.iter().position(|s| &s.class == class).map(|p| p + 1)
    }
}
