//! N-Triples ingestion, the in-memory graph, and the class hierarchy.

mod hierarchy;
mod kg;
pub mod ntriples;
mod term;

pub use hierarchy::{default_roots, owl_thing, ClassHierarchy, HierarchyError};
pub use kg::{ingest_files, GraphStats, IngestError, IngestReport, KnowledgeGraph};
pub use ntriples::{parse_ntriples, parse_str, NTriplesReader, ParseError, ParseErrorKind, ParseMode, ParseOutcome};
pub use term::{Iri, IriError, Literal, Object, Triple, DBO_AGENT, OWL_THING, RDFS_SUBCLASS_OF, RDF_TYPE};
