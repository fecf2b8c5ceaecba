//! Synthetic knowledge graphs whose types are recoverable from structure.
//!
//! Classes sit two levels below a synthetic root (`root > group > class`),
//! and the root hangs under `owl:Thing`. Each class owns a set of predicates,
//! each with a small pool of object IRIs; every entity gets one triple per
//! predicate of its class with an object drawn from the pool. Noise triples
//! connect random entities to random predicate/object pairs from any class.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Iri, KnowledgeGraph, Object, Triple, OWL_THING, RDFS_SUBCLASS_OF, RDF_TYPE};

pub const SYNTH_NAMESPACE: &str = "http://example.org/synth/";
const OBJECTS_PER_PREDICATE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub entities_per_class: usize,
    pub predicates_per_class: usize,
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_classes: 10,
            entities_per_class: 50,
            predicates_per_class: 3,
            noise_fraction: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticKg {
    /// Characteristic, noise and `rdf:type` triples.
    pub data: Vec<Triple>,
    /// `rdfs:subClassOf` triples.
    pub ontology: Vec<Triple>,
    /// `(entity, class)` in entity order.
    pub gold: Vec<(Iri, Iri)>,
    pub noise_triples: usize,
}

impl SyntheticKg {
    pub fn graph(&self) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(self.ontology.iter().chain(&self.data).cloned())
    }

    pub fn root() -> Iri {
        ex("Entity")
    }

    /// Writes `kg.nt`, `ontology.nt` and `gold.tsv` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> std::io::Result<SynthPaths> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let paths = SynthPaths {
            data: dir.join("kg.nt"),
            ontology: dir.join("ontology.nt"),
            gold: dir.join("gold.tsv"),
        };
        write_triples(&self.data, &paths.data)?;
        write_triples(&self.ontology, &paths.ontology)?;
        let mut out = BufWriter::new(File::create(&paths.gold)?);
        for (e, c) in &self.gold {
            writeln!(out, "{}\t{}", e.as_str(), c.as_str())?;
        }
        out.flush()?;
        Ok(paths)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPaths {
    pub data: PathBuf,
    pub ontology: PathBuf,
    pub gold: PathBuf,
}

fn write_triples(triples: &[Triple], path: &Path) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in triples {
        writeln!(out, "{t}")?;
    }
    out.flush()
}

fn ex(local: &str) -> Iri {
    Iri::new(format!("{SYNTH_NAMESPACE}{local}")).expect("valid synthetic IRI")
}

pub fn generate_synthetic_kg(config: &SynthConfig) -> SyntheticKg {
    assert!(
        config.num_classes >= 1 && config.entities_per_class >= 1 && config.predicates_per_class >= 1,
        "synthetic counts must be at least 1"
    );
    assert!(
        (0.0..1.0).contains(&config.noise_fraction),
        "noise fraction must lie in [0, 1)"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rdf_type = Iri::new(RDF_TYPE).expect("constant IRI");
    let sub_class = Iri::new(RDFS_SUBCLASS_OF).expect("constant IRI");

    let groups = (config.num_classes as f64).sqrt().ceil() as usize;
    let root = SyntheticKg::root();
    let mut ontology = vec![Triple::new(
        root.clone(),
        sub_class.clone(),
        Object::Iri(Iri::new(OWL_THING).expect("constant IRI")),
    )];
    for g in 0..groups {
        ontology.push(Triple::new(
            ex(&format!("group/G{g}")),
            sub_class.clone(),
            Object::Iri(root.clone()),
        ));
    }
    let classes: Vec<Iri> = (0..config.num_classes)
        .map(|c| ex(&format!("class/C{c:03}")))
        .collect();
    for (c, class) in classes.iter().enumerate() {
        ontology.push(Triple::new(
            class.clone(),
            sub_class.clone(),
            Object::Iri(ex(&format!("group/G{}", c % groups))),
        ));
    }

    // signature[c][p] = (predicate, object pool)
    let signature: Vec<Vec<(Iri, Vec<Iri>)>> = (0..config.num_classes)
        .map(|c| {
            (0..config.predicates_per_class)
                .map(|p| {
                    let pool = (0..OBJECTS_PER_PREDICATE)
                        .map(|o| ex(&format!("value/V{c:03}_{p}_{o}")))
                        .collect();
                    (ex(&format!("property/P{c:03}_{p}")), pool)
                })
                .collect()
        })
        .collect();

    let total = config.num_classes * config.entities_per_class;
    let width = total.to_string().len().max(4);
    let mut ids: Vec<usize> = (0..total).collect();
    ids.shuffle(&mut rng);
    let mut members: Vec<(Iri, usize)> = ids
        .iter()
        .enumerate()
        .map(|(slot, &id)| (ex(&format!("entity/E{id:0width$}")), slot / config.entities_per_class))
        .collect();
    members.sort();

    let mut data = Vec::new();
    let mut gold = Vec::with_capacity(total);
    for (entity, c) in &members {
        for (predicate, pool) in &signature[*c] {
            let object = pool.choose(&mut rng).expect("non-empty pool").clone();
            data.push(Triple::new(entity.clone(), predicate.clone(), Object::Iri(object)));
        }
        data.push(Triple::new(entity.clone(), rdf_type.clone(), Object::Iri(classes[*c].clone())));
        gold.push((entity.clone(), classes[*c].clone()));
    }

    let characteristic = total * config.predicates_per_class;
    let noise_triples = (config.noise_fraction * characteristic as f64).round() as usize;
    for _ in 0..noise_triples {
        let (entity, _) = &members[rng.gen_range(0..members.len())];
        let sig = &signature[rng.gen_range(0..config.num_classes)];
        let (predicate, pool) = &sig[rng.gen_range(0..sig.len())];
        let object = pool.choose(&mut rng).expect("non-empty pool").clone();
        data.push(Triple::new(entity.clone(), predicate.clone(), Object::Iri(object)));
    }

    SyntheticKg {
        data,
        ontology,
        gold,
        noise_triples,
    }
}
