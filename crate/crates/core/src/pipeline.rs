//! End-to-end run: ingest, dataset, corpus, embeddings, classifier,
//! predictions and metrics.
//!
//! Every stage writes a plain-text (or, for the classifier, binary) artifact
//! into the work directory. With `resume` set, a stage whose artifact already
//! exists loads it instead of recomputing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{build_vocabulary, read_corpus, triples_to_corpus, write_corpus, Sentence};
use crate::embeddings::{
    self, load_embeddings, load_ngrams, save_embeddings, save_ngrams, ModelKind, SubwordVectors,
    TrainingConfig, VectorLookup, WordVectors,
};
use crate::error::{Error, ErrorKind};
use crate::eval::{self, build_dataset, load_pairs, save_pairs, save_predictions, LabeledDataset, Metric};
use crate::graph::{default_roots, ingest_files, ClassHierarchy, Iri, KnowledgeGraph, ParseMode};
use crate::synth::{generate_synthetic_kg, SynthConfig};
use crate::typing::{
    class_vectors, cnn_train, fine_grained_candidates, load_model, save_model, similarity_rank,
    CnnConfig, CnnModel, Prediction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Hierarchy,
    Dataset,
    Corpus,
    Embed,
    Train,
    Predict,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Ingest => "ingest",
            Stage::Hierarchy => "hierarchy",
            Stage::Dataset => "dataset",
            Stage::Corpus => "corpus",
            Stage::Embed => "embed",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Evaluate => "evaluate",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn kind(&self) -> ErrorKind {
        self.source.kind()
    }

    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<Error>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: e.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub num_classes: usize,
    pub entities_per_class: usize,
    pub train_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            num_classes: 10,
            entities_per_class: 50,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// N-Triples inputs (data and ontology). Ignored when `synthetic` is set.
    pub inputs: Vec<PathBuf>,
    /// Generate a synthetic graph into the work directory and use it as input.
    pub synthetic: Option<SynthConfig>,
    pub work_dir: PathBuf,
    pub lenient: bool,
    /// Hierarchy traversal stops; `owl:Thing` is always added.
    pub roots: Vec<String>,
    pub dataset: DatasetConfig,
    /// Drop `rdf:type` triples of dataset entities from the corpus.
    pub hold_out_type_triples: bool,
    pub min_count: u64,
    pub model: ModelKind,
    pub embedding: TrainingConfig,
    pub classifier: CnnConfig,
    /// Let similarity ranking also propose the coarse ancestor itself.
    pub include_coarse_candidate: bool,
    /// Global seed, copied into every seeded component.
    pub seed: u64,
    /// Reuse artifacts already present in the work directory.
    pub resume: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: Vec::new(),
            synthetic: None,
            work_dir: PathBuf::from("kgtype-run"),
            lenient: false,
            roots: default_roots().into_iter().map(Iri::into_string).collect(),
            dataset: DatasetConfig::default(),
            hold_out_type_triples: true,
            min_count: 1,
            model: ModelKind::Word2vec,
            embedding: TrainingConfig::default(),
            classifier: CnnConfig::default(),
            include_coarse_candidate: false,
            seed: 1,
            resume: false,
        }
    }
}

/// Locations of every artifact a run produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub train: PathBuf,
    pub test: PathBuf,
    pub corpus: PathBuf,
    pub vectors: PathBuf,
    pub ngrams: PathBuf,
    pub model: PathBuf,
    pub cnn_predictions: PathBuf,
    pub similarity_predictions: PathBuf,
    pub metrics: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path) -> Self {
        RunPaths {
            train: dir.join("train.tsv"),
            test: dir.join("test.tsv"),
            corpus: dir.join("corpus.txt"),
            vectors: dir.join("vectors.txt"),
            ngrams: dir.join("vectors.ngrams"),
            model: dir.join("model.bin"),
            cnn_predictions: dir.join("predictions-cnn.tsv"),
            similarity_predictions: dir.join("predictions-similarity.tsv"),
            metrics: dir.join("metrics.json"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineMetrics {
    pub model: ModelKind,
    pub classes: usize,
    pub train_entities: usize,
    pub test_entities: usize,
    pub dataset_shortfall: usize,
    pub test_without_vectors: usize,
    pub train_without_vectors: usize,
    /// Test entities whose gold class is not among the similarity candidates.
    pub gold_outside_candidates: usize,
    pub cnn: BTreeMap<String, f64>,
    pub similarity: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub paths: RunPaths,
    pub metrics: PipelineMetrics,
}

pub const REPORTED_METRICS: [Metric; 3] = [Metric::Accuracy, Metric::HitsAt(1), Metric::HitsAt(3)];

impl PipelineConfig {
    /// Copies the global seed into every component configuration.
    pub fn seeded(mut self) -> Self {
        self.embedding.seed = self.seed;
        self.classifier.seed = self.seed;
        if let Some(s) = &mut self.synthetic {
            s.seed = self.seed;
        }
        self
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let file = File::open(path.as_ref())?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }

    fn root_set(&self) -> Result<BTreeSet<Iri>, Error> {
        self.roots
            .iter()
            .map(|r| Iri::new(r.as_str()).map_err(|e| Error::Config(format!("root `{r}`: {e}"))))
            .collect()
    }
}

/// Word vectors plus, for FastText, the n-gram table used for unseen tokens.
pub enum LoadedVectors {
    Words(WordVectors),
    Subword(SubwordVectors),
}

impl LoadedVectors {
    pub fn load(vectors: &Path, ngrams: &Path, kind: ModelKind) -> Result<Self, Error> {
        let words = load_embeddings(vectors)?;
        Ok(match kind {
            ModelKind::Fasttext => LoadedVectors::Subword(SubwordVectors::new(words, load_ngrams(ngrams)?)),
            _ => LoadedVectors::Words(words),
        })
    }

    pub fn as_lookup(&self) -> &dyn VectorLookup {
        match self {
            LoadedVectors::Words(w) => w,
            LoadedVectors::Subword(s) => s,
        }
    }
}

fn run_ingest(config: &PipelineConfig) -> Result<KnowledgeGraph, Error> {
    let inputs = match &config.synthetic {
        Some(synth) => {
            let paths = generate_synthetic_kg(synth).write_to(config.work_dir.join("synthetic"))?;
            vec![paths.ontology, paths.data]
        }
        None => config.inputs.clone(),
    };
    if inputs.is_empty() {
        return Err(Error::Config("no input files".into()));
    }
    let mode = if config.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };
    let report = ingest_files(&inputs, mode)?;
    if !report.skipped.is_empty() {
        log::warn!("skipped {} malformed lines", report.skipped.len());
    }
    Ok(report.graph)
}

fn run_dataset(
    config: &PipelineConfig,
    paths: &RunPaths,
    kg: &KnowledgeGraph,
    hierarchy: &ClassHierarchy,
) -> Result<LabeledDataset, Error> {
    if config.resume && paths.train.exists() && paths.test.exists() {
        return Ok(LabeledDataset::from_splits(load_pairs(&paths.train)?, load_pairs(&paths.test)?));
    }
    let d = &config.dataset;
    let full = build_dataset(kg, hierarchy, d.num_classes, d.entities_per_class, config.seed)?;
    let ds = eval::split(&full, d.train_fraction, config.seed)?;
    save_pairs(&ds.train(), &paths.train)?;
    save_pairs(&ds.test(), &paths.test)?;
    Ok(ds)
}

fn run_corpus(
    config: &PipelineConfig,
    paths: &RunPaths,
    kg: &KnowledgeGraph,
    dataset: &LabeledDataset,
) -> Result<Vec<Sentence>, Error> {
    if config.resume && paths.corpus.exists() {
        return Ok(read_corpus(BufReader::new(File::open(&paths.corpus)?))?);
    }
    let held_out: BTreeSet<Iri> = if config.hold_out_type_triples {
        dataset.examples.iter().map(|(e, _)| e.clone()).collect()
    } else {
        BTreeSet::new()
    };
    let corpus = triples_to_corpus(kg, &held_out);
    log::info!(
        "corpus: {} sentences, {} literal triples skipped, {} type triples held out",
        corpus.sentences.len(),
        corpus.skipped_literals,
        corpus.held_out_types
    );
    let mut out = BufWriter::new(File::create(&paths.corpus)?);
    write_corpus(&corpus.sentences, &mut out)?;
    out.flush()?;
    Ok(corpus.sentences)
}

fn run_embed(config: &PipelineConfig, paths: &RunPaths, corpus: &[Sentence]) -> Result<LoadedVectors, Error> {
    let have_ngrams = config.model != ModelKind::Fasttext || paths.ngrams.exists();
    if config.resume && paths.vectors.exists() && have_ngrams {
        return LoadedVectors::load(&paths.vectors, &paths.ngrams, config.model);
    }
    let vocab = build_vocabulary(corpus, config.min_count)?;
    let trained = embeddings::train(config.model, corpus, &vocab, &config.embedding)?;
    save_embeddings(&trained.vectors, &paths.vectors)?;
    if let Some(ngrams) = &trained.ngrams {
        save_ngrams(ngrams, &paths.ngrams)?;
    }
    // Reload so a fresh run and a resumed run see exactly the same values.
    LoadedVectors::load(&paths.vectors, &paths.ngrams, config.model)
}

fn run_train(
    config: &PipelineConfig,
    paths: &RunPaths,
    dataset: &LabeledDataset,
    vectors: &dyn VectorLookup,
) -> Result<(CnnModel, usize), Error> {
    let train = dataset.train();
    let missing = train.iter().filter(|(e, _)| vectors.get(e.as_str()).is_none()).count();
    if config.resume && paths.model.exists() {
        return Ok((load_model(&paths.model)?, missing));
    }
    let trained = cnn_train(&train, vectors, &config.classifier)?;
    save_model(&trained.model, &paths.model)?;
    Ok((trained.model, trained.skipped.len()))
}

struct Predictions {
    cnn: Vec<Prediction>,
    similarity: Vec<Prediction>,
    without_vectors: usize,
    gold_outside: usize,
}

fn run_predict(
    config: &PipelineConfig,
    paths: &RunPaths,
    dataset: &LabeledDataset,
    hierarchy: &ClassHierarchy,
    vectors: &dyn VectorLookup,
    model: &CnnModel,
) -> Result<Predictions, Error> {
    let centroids = class_vectors(&dataset.train(), vectors);
    let known: BTreeSet<Iri> = centroids.vectors.keys().cloned().collect();
    let mut out = Predictions {
        cnn: Vec::new(),
        similarity: Vec::new(),
        without_vectors: 0,
        gold_outside: 0,
    };
    for (entity, gold) in dataset.test() {
        let candidates: BTreeSet<Iri> =
            fine_grained_candidates(&gold, hierarchy, config.include_coarse_candidate)?
                .intersection(&known)
                .cloned()
                .collect();
        if !candidates.contains(&gold) {
            out.gold_outside += 1;
        }
        let Some(v) = vectors.get(entity.as_str()) else {
            out.without_vectors += 1;
            out.cnn.push(Prediction::empty(entity.clone()));
            out.similarity.push(Prediction::empty(entity));
            continue;
        };
        out.cnn.push(model.predict(entity.clone(), &v)?);
        let sim = if candidates.is_empty() {
            Prediction::empty(entity)
        } else {
            similarity_rank(&entity, &candidates, &centroids.vectors, vectors)?
        };
        out.similarity.push(sim);
    }
    save_predictions(&out.cnn, None, &paths.cnn_predictions)?;
    save_predictions(&out.similarity, None, &paths.similarity_predictions)?;
    Ok(out)
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let config = config.clone().seeded();
    config.embedding.validate().at(Stage::Embed)?;
    config.classifier.validate(config.embedding.dimension).at(Stage::Train)?;
    std::fs::create_dir_all(&config.work_dir).at(Stage::Ingest)?;
    let paths = RunPaths::new(&config.work_dir);

    let kg = run_ingest(&config).at(Stage::Ingest)?;
    let stats = kg.stats();
    log::info!(
        "ingested {} triples, {} entities, {} classes",
        stats.triples,
        stats.entities,
        stats.classes
    );
    let roots = config.root_set().at(Stage::Hierarchy)?;
    let hierarchy = ClassHierarchy::build(&kg, &roots).at(Stage::Hierarchy)?;
    let dataset = run_dataset(&config, &paths, &kg, &hierarchy).at(Stage::Dataset)?;
    let corpus = run_corpus(&config, &paths, &kg, &dataset).at(Stage::Corpus)?;
    let vectors = run_embed(&config, &paths, &corpus).at(Stage::Embed)?;
    let lookup = vectors.as_lookup();
    let (model, train_missing) = run_train(&config, &paths, &dataset, lookup).at(Stage::Train)?;
    let preds = run_predict(&config, &paths, &dataset, &hierarchy, lookup, &model).at(Stage::Predict)?;

    let gold = dataset.test().into_iter().collect();
    let cnn = eval::evaluate(&preds.cnn, &gold, &REPORTED_METRICS).at(Stage::Evaluate)?;
    let similarity = eval::evaluate(&preds.similarity, &gold, &REPORTED_METRICS).at(Stage::Evaluate)?;
    let metrics = PipelineMetrics {
        model: config.model,
        classes: dataset.classes.len(),
        train_entities: dataset.train_ids.len(),
        test_entities: dataset.test_ids.len(),
        dataset_shortfall: dataset.shortfall,
        test_without_vectors: preds.without_vectors,
        train_without_vectors: train_missing,
        gold_outside_candidates: preds.gold_outside,
        cnn,
        similarity,
    };
    write_metrics(&metrics, &paths.metrics).at(Stage::Evaluate)?;
    Ok(PipelineReport { paths, metrics })
}

fn write_metrics(metrics: &PipelineMetrics, path: &Path) -> Result<(), Error> {
    let json = serde_json::to_string_pretty(metrics).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}
