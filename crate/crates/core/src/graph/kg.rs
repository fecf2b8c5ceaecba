use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::ntriples::{parse_ntriples, ParseError, ParseMode, ParseOutcome};
use super::term::{Iri, Object, Triple, RDFS_SUBCLASS_OF};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
}

/// In-memory graph: the raw triples plus the two indexes the typing
/// pipeline needs (type assertions and subclass edges).
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    triples: Vec<Triple>,
    type_assertions: BTreeMap<Iri, BTreeSet<Iri>>,
    subclass_edges: Vec<(Iri, Iri)>,
    seen_edges: HashSet<(Iri, Iri)>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut kg = Self::new();
        kg.extend(triples);
        kg
    }

    pub fn insert(&mut self, triple: Triple) {
        if let Object::Iri(object) = &triple.object {
            if triple.is_type_assertion() {
                self.type_assertions
                    .entry(triple.subject.clone())
                    .or_default()
                    .insert(object.clone());
            } else if triple.predicate.as_str() == RDFS_SUBCLASS_OF {
                let edge = (triple.subject.clone(), object.clone());
                if self.seen_edges.insert(edge.clone()) {
                    self.subclass_edges.push(edge);
                }
            }
        }
        self.triples.push(triple);
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn type_assertions(&self) -> &BTreeMap<Iri, BTreeSet<Iri>> {
        &self.type_assertions
    }

    pub fn types_of(&self, entity: &Iri) -> Option<&BTreeSet<Iri>> {
        self.type_assertions.get(entity)
    }

    /// Deduplicated `(child, parent)` pairs in first-seen file order.
    pub fn subclass_edges(&self) -> &[(Iri, Iri)] {
        &self.subclass_edges
    }

    /// Every IRI mentioned as a class: typed-object or subclass-edge endpoint.
    pub fn classes(&self) -> BTreeSet<Iri> {
        let mut classes: BTreeSet<Iri> =
            self.type_assertions.values().flatten().cloned().collect();
        for (child, parent) in &self.subclass_edges {
            classes.insert(child.clone());
            classes.insert(parent.clone());
        }
        classes
    }

    pub fn stats(&self) -> GraphStats {
        let mut entities = BTreeSet::new();
        for t in &self.triples {
            entities.insert(&t.subject);
            if let Object::Iri(o) = &t.object {
                entities.insert(o);
            }
        }
        GraphStats {
            triples: self.triples.len(),
            entities: entities.len(),
            typed_entities: self.type_assertions.len(),
            classes: self.classes().len(),
        }
    }
}

impl Extend<Triple> for KnowledgeGraph {
    fn extend<T: IntoIterator<Item = Triple>>(&mut self, iter: T) {
        for t in iter {
            self.insert(t);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub triples: usize,
    pub entities: usize,
    pub typed_entities: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub graph: KnowledgeGraph,
    pub skipped: Vec<(PathBuf, ParseError)>,
}

/// Parses every file (concurrently when more than one) and merges the
/// results in the order the paths were given.
pub fn ingest_files<P: AsRef<Path> + Sync>(
    paths: &[P],
    mode: ParseMode,
) -> Result<IngestReport, IngestError> {
    let parsed: Vec<Result<ParseOutcome, IngestError>> = paths
        .par_iter()
        .map(|p| {
            let path = p.as_ref();
            let file = File::open(path).map_err(|source| IngestError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            parse_ntriples(BufReader::new(file), mode).map_err(|source| IngestError::Parse {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect();

    let mut report = IngestReport::default();
    for (path, outcome) in paths.iter().zip(parsed) {
        let outcome = outcome?;
        report.graph.extend(outcome.triples);
        report.skipped.extend(
            outcome
                .skipped
                .into_iter()
                .map(|e| (path.as_ref().to_path_buf(), e)),
        );
    }
    Ok(report)
}
