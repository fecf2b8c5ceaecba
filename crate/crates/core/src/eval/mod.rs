//! Labelled datasets, splits and metrics.

mod dataset;
mod metrics;
mod tsv;

use thiserror::Error;

use crate::graph::{HierarchyError, Iri};

pub use dataset::{build_dataset, gold_label, split, LabeledDataset};
pub use metrics::{
    accuracy, coarse_grained_stats, evaluate, external_overlap, hits_at_k, CoarseStats, Metric,
    OverlapReport,
};
pub use tsv::{
    load_pairs, load_predictions, read_pairs, read_predictions, save_pairs, save_predictions,
    write_pairs, write_predictions,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least 2 classes with {needed} entities each, found {found}")]
    TooFewClasses { needed: usize, found: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("class {class} has {size} examples; at least 2 are needed to stratify")]
    ClassTooSmall { class: Iri, size: usize },
    #[error("no predictions to evaluate")]
    EmptyPredictions,
    #[error("entity {0} has no gold label")]
    MissingGold(Iri),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
