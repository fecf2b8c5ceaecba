use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgtype_core::embeddings::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "kgtype", version, about = "Entity type prediction from knowledge graph embeddings")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every randomised component [default: 1].
    #[arg(long, global = true, env = "KGTYPE_SEED")]
    pub seed: Option<u64>,

    /// Abort on the first malformed N-Triples line (default).
    #[arg(long, global = true, env = "KGTYPE_STRICT", conflicts_with = "lenient")]
    pub strict: bool,

    /// Skip malformed N-Triples lines and report how many were dropped.
    #[arg(long, global = true, env = "KGTYPE_LENIENT")]
    pub lenient: bool,

    /// Worker threads. Embedding training is only reproducible with 1.
    #[arg(long, global = true, env = "KGTYPE_JOBS")]
    pub jobs: Option<usize>,

    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse N-Triples files and report graph statistics.
    Ingest(IngestArgs),
    /// Turn triples into the three-token sentence corpus.
    Corpus(CorpusArgs),
    /// Train word2vec, FastText or GloVe vectors on a corpus.
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Sample a labelled dataset and split it into train and test files.
    BuildDataset(BuildDatasetArgs),
    /// Train the CNN type classifier.
    TrainClassifier(TrainClassifierArgs),
    /// Rank candidate classes for entities.
    Predict(PredictArgs),
    /// Score a predictions file against gold labels.
    Evaluate(EvaluateArgs),
    /// Compare a dataset with type predictions produced by another system.
    CompareExternal(CompareExternalArgs),
    /// Write a synthetic knowledge graph with recoverable types.
    Synth(SynthArgs),
    /// Run every stage end to end.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Word2vec,
    Fasttext,
    Glove,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Word2vec => ModelKind::Word2vec,
            ModelArg::Fasttext => ModelKind::Fasttext,
            ModelArg::Glove => ModelKind::Glove,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Cnn,
    Similarity,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    /// Hierarchy roots; owl:Thing is always included.
    #[arg(long = "root", value_name = "IRI")]
    pub roots: Vec<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(required = true, value_name = "NT")]
    pub inputs: Vec<PathBuf>,

    /// Print triple, entity and class counts.
    #[arg(long)]
    pub stats: bool,

    /// Report how many entities of CLASS carry no finer type.
    #[arg(long = "coarse", value_name = "CLASS")]
    pub coarse: Vec<String>,

    #[command(flatten)]
    pub hierarchy: HierarchyArgs,

    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(required = true, value_name = "NT")]
    pub inputs: Vec<PathBuf>,

    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// Drop the rdf:type triples of the entities listed in these TSV files.
    #[arg(long = "hold-out-type-triples", value_name = "TSV")]
    pub hold_out: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbeddingArgs {
    #[arg(long, value_enum, default_value = "word2vec")]
    pub model: ModelArg,

    #[arg(long)]
    pub dim: Option<usize>,

    #[arg(long)]
    pub window: Option<usize>,

    #[arg(long)]
    pub epochs: Option<usize>,

    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,

    /// Negative samples per position (word2vec and FastText).
    #[arg(long)]
    pub negatives: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainEmbeddingsArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,

    /// Vector file to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    /// N-gram table for FastText (default: OUT with extension `ngrams`).
    #[arg(long, value_name = "FILE")]
    pub ngrams: Option<PathBuf>,

    #[arg(long, default_value_t = 1)]
    pub min_count: u64,

    #[command(flatten)]
    pub embedding: EmbeddingArgs,
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    #[arg(required = true, value_name = "NT")]
    pub inputs: Vec<PathBuf>,

    #[arg(long, default_value_t = 10)]
    pub classes: usize,

    #[arg(long = "per-class", default_value_t = 50)]
    pub per_class: usize,

    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,

    /// Directory for `train.tsv` and `test.tsv`.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    #[command(flatten)]
    pub hierarchy: HierarchyArgs,
}

#[derive(Debug, Args)]
pub struct VectorArgs {
    #[arg(long, value_name = "FILE")]
    pub vectors: PathBuf,

    /// FastText n-gram table, for entities missing from the vector file.
    #[arg(long, value_name = "FILE")]
    pub ngrams: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainClassifierArgs {
    #[command(flatten)]
    pub vectors: VectorArgs,

    /// Training pairs (entity, class).
    #[arg(long, value_name = "TSV")]
    pub dataset: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,

    #[arg(long, value_delimiter = ',')]
    pub kernel_widths: Option<Vec<usize>>,

    #[arg(long)]
    pub filters: Option<usize>,

    #[arg(long)]
    pub hidden: Option<usize>,

    #[arg(long)]
    pub batch: Option<usize>,

    #[arg(long)]
    pub epochs: Option<usize>,

    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_enum)]
    pub method: Method,

    #[command(flatten)]
    pub vectors: VectorArgs,

    /// Entity to type; repeatable.
    #[arg(long = "entity", value_name = "IRI")]
    pub entities: Vec<String>,

    /// Entities to type, one per line; a second column is read as a known
    /// type of the entity.
    #[arg(long, value_name = "TSV")]
    pub entities_file: Option<PathBuf>,

    /// Trained CNN (method cnn).
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,

    /// Training pairs whose means become class vectors (method similarity).
    #[arg(long, value_name = "TSV")]
    pub train: Option<PathBuf>,

    /// Ontology for the class hierarchy (method similarity).
    #[arg(long = "ontology", value_name = "NT")]
    pub ontology: Vec<PathBuf>,

    /// Known type for the `--entity` arguments; its coarse ancestor bounds
    /// the candidate classes (method similarity).
    #[arg(long, value_name = "IRI")]
    pub known_type: Option<String>,

    /// Also propose the coarse ancestor itself.
    #[arg(long)]
    pub include_coarse: bool,

    #[command(flatten)]
    pub hierarchy: HierarchyArgs,

    /// Ranked classes written per entity.
    #[arg(long)]
    pub top_k: Option<usize>,

    /// Output file (default: standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "TSV")]
    pub predictions: PathBuf,

    #[arg(long, value_name = "TSV")]
    pub gold: PathBuf,

    #[arg(long, value_delimiter = ',', default_value = "accuracy,hits@1,hits@3")]
    pub metrics: Vec<String>,

    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CompareExternalArgs {
    /// The other system's predictions: entity and class per line.
    #[arg(long, value_name = "TSV")]
    pub external: PathBuf,

    /// Our labelled entities: entity and class per line.
    #[arg(long, value_name = "TSV")]
    pub dataset: PathBuf,

    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,

    #[arg(long, default_value_t = 10)]
    pub classes: usize,

    #[arg(long = "per-class", default_value_t = 50)]
    pub per_class: usize,

    #[arg(long, default_value_t = 3)]
    pub predicates: usize,

    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// JSON configuration; flags below override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long = "input", value_name = "NT")]
    pub inputs: Vec<PathBuf>,

    /// Generate the default synthetic graph instead of reading inputs.
    #[arg(long)]
    pub synthetic: bool,

    #[arg(long, value_name = "DIR")]
    pub work_dir: Option<PathBuf>,

    /// Reuse artifacts already in the work directory.
    #[arg(long)]
    pub resume: bool,

    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,

    #[arg(long)]
    pub classes: Option<usize>,

    #[arg(long = "per-class")]
    pub per_class: Option<usize>,

    #[arg(long)]
    pub embedding_epochs: Option<usize>,

    #[arg(long)]
    pub classifier_epochs: Option<usize>,
}
