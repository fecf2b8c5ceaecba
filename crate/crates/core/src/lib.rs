//! Entity type prediction over knowledge graphs.
//!
//! Triples are read from N-Triples, rendered as three-token sentences and
//! embedded with CBOW, FastText or GloVe. Entities are then typed either by
//! a 1D convolutional classifier over their vectors or by cosine similarity
//! to mean class vectors within their branch of the class hierarchy.

pub mod corpus;
pub mod embeddings;
mod error;
pub mod eval;
pub mod graph;
pub mod pipeline;
pub mod synth;
pub mod typing;

pub use error::{Error, ErrorKind};
