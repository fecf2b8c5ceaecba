use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;

use kgtype_core::corpus::{build_vocabulary, read_corpus, triples_to_corpus, write_corpus};
use kgtype_core::embeddings::{
    self, load_embeddings, load_ngrams, save_embeddings, save_ngrams, ModelKind, SubwordVectors, TrainingConfig,
    VectorLookup,
};
use kgtype_core::eval::{
    self, build_dataset, coarse_grained_stats, external_overlap, load_pairs, load_predictions, save_pairs,
    write_predictions, Metric,
};
use kgtype_core::graph::{default_roots, ingest_files, ClassHierarchy, Iri, KnowledgeGraph, ParseMode};
use kgtype_core::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use kgtype_core::synth::{generate_synthetic_kg, SynthConfig};
use kgtype_core::typing::{
    class_vectors, cnn_train, fine_grained_candidates, load_model, save_model, similarity_rank, CnnConfig, Prediction,
};
use kgtype_core::Error;

use crate::args::*;

/// Settings shared by every subcommand.
pub struct Context {
    pub seed: Option<u64>,
    /// `Some(true)` for `--lenient`, `Some(false)` for `--strict`.
    pub lenient: Option<bool>,
    pub jobs: Option<usize>,
}

impl Context {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    fn mode(&self) -> ParseMode {
        if self.lenient == Some(true) {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        }
    }
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Error {
    Error::Config(message.into())
}

fn parse_iri(s: &str) -> Result<Iri, Error> {
    let s = s.trim();
    let inner = s.strip_prefix('<').and_then(|x| x.strip_suffix('>')).unwrap_or(s);
    Iri::new(inner).map_err(|e| usage(format!("`{s}`: {e}")))
}

fn ingest(inputs: &[PathBuf], ctx: &Context) -> Result<KnowledgeGraph, Error> {
    let report = ingest_files(inputs, ctx.mode())?;
    if !report.skipped.is_empty() {
        log::warn!("skipped {} malformed lines", report.skipped.len());
        for (path, err) in report.skipped.iter().take(5) {
            log::warn!("  {}: {err}", path.display());
        }
    }
    Ok(report.graph)
}

fn hierarchy(kg: &KnowledgeGraph, args: &HierarchyArgs) -> Result<ClassHierarchy, Error> {
    let roots = if args.roots.is_empty() {
        default_roots()
    } else {
        args.roots.iter().map(|r| parse_iri(r)).collect::<Result<_, _>>()?
    };
    Ok(ClassHierarchy::build(kg, &roots)?)
}

fn load_vectors(args: &VectorArgs) -> Result<Box<dyn VectorLookup>, Error> {
    let words = load_embeddings(&args.vectors)?;
    Ok(match &args.ngrams {
        Some(path) => Box::new(SubwordVectors::new(words, load_ngrams(path)?)),
        None => Box::new(words),
    })
}

fn print_json(value: &serde_json::Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

pub fn ingest_cmd(args: &IngestArgs, ctx: &Context) -> Result<(), Error> {
    let kg = ingest(&args.inputs, ctx)?;
    let h = hierarchy(&kg, &args.hierarchy)?;
    let stats = kg.stats();
    let mut coarse = BTreeMap::new();
    for class in &args.coarse {
        let c = parse_iri(class)?;
        coarse.insert(c.clone(), coarse_grained_stats(&kg, &h, &c)?);
    }
    if args.json {
        let coarse: serde_json::Map<String, serde_json::Value> = coarse
            .iter()
            .map(|(c, s)| {
                let v = serde_json::json!({"total": s.total, "coarse_only": s.coarse_only, "percentage": s.percentage});
                (c.as_str().to_string(), v)
            })
            .collect();
        return print_json(&serde_json::json!({
            "triples": stats.triples,
            "entities": stats.entities,
            "typed_entities": stats.typed_entities,
            "classes": stats.classes,
            "hierarchy_classes": h.classes().len(),
            "coarse": coarse,
        }));
    }
    if args.stats || coarse.is_empty() {
        println!("triples\t{}", stats.triples);
        println!("entities\t{}", stats.entities);
        println!("typed_entities\t{}", stats.typed_entities);
        println!("classes\t{}", stats.classes);
        println!("hierarchy_classes\t{}", h.classes().len());
    }
    for (class, s) in coarse {
        println!("{}\t{}\t{}\t{:.2}%", class.as_str(), s.total, s.coarse_only, s.percentage);
    }
    Ok(())
}

pub fn corpus_cmd(args: &CorpusArgs, ctx: &Context) -> Result<(), Error> {
    let kg = ingest(&args.inputs, ctx)?;
    let mut held_out = BTreeSet::new();
    for path in &args.hold_out {
        held_out.extend(load_pairs(path)?.into_iter().map(|(e, _)| e));
    }
    let corpus = triples_to_corpus(&kg, &held_out);
    let mut out = BufWriter::new(File::create(&args.out)?);
    write_corpus(&corpus.sentences, &mut out)?;
    out.flush()?;
    eprintln!(
        "{} sentences written, {} literal triples skipped, {} type triples held out",
        corpus.sentences.len(),
        corpus.skipped_literals,
        corpus.held_out_types
    );
    Ok(())
}

pub fn train_embeddings_cmd(args: &TrainEmbeddingsArgs, ctx: &Context) -> Result<(), Error> {
    let corpus = read_corpus(BufReader::new(File::open(&args.corpus)?))?;
    let vocab = build_vocabulary(&corpus, args.min_count)?;
    let kind = ModelKind::from(args.embedding.model);
    let config = embedding_config(kind, &args.embedding, ctx);
    let trained = embeddings::train(kind, &corpus, &vocab, &config)?;
    save_embeddings(&trained.vectors, &args.out)?;
    if let Some(ngrams) = &trained.ngrams {
        let path = args.ngrams.clone().unwrap_or_else(|| args.out.with_extension("ngrams"));
        save_ngrams(ngrams, &path)?;
        eprintln!("n-gram table written to {}", path.display());
    }
    eprintln!(
        "{kind}: {} tokens, dimension {}, final epoch loss {:.6}",
        trained.vectors.len(),
        config.dimension,
        trained.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn embedding_config(kind: ModelKind, args: &EmbeddingArgs, ctx: &Context) -> TrainingConfig {
    let mut c = TrainingConfig::for_model(kind);
    c.seed = ctx.seed();
    if let Some(v) = args.dim {
        c.dimension = v;
    }
    if let Some(v) = args.window {
        c.window = v;
    }
    if let Some(v) = args.epochs {
        c.epochs = v;
    }
    if let Some(v) = args.learning_rate {
        c.initial_learning_rate = v;
    }
    if let Some(v) = args.negatives {
        c.negative_samples = v;
    }
    if let Some(v) = ctx.jobs {
        c.jobs = v;
    }
    c
}

pub fn build_dataset_cmd(args: &BuildDatasetArgs, ctx: &Context) -> Result<(), Error> {
    let kg = ingest(&args.inputs, ctx)?;
    let h = hierarchy(&kg, &args.hierarchy)?;
    let ds = build_dataset(&kg, &h, args.classes, args.per_class, ctx.seed())?;
    let ds = eval::split(&ds, args.train_fraction, ctx.seed())?;
    std::fs::create_dir_all(&args.out_dir)?;
    save_pairs(&ds.train(), args.out_dir.join("train.tsv"))?;
    save_pairs(&ds.test(), args.out_dir.join("test.tsv"))?;
    if ds.shortfall > 0 {
        log::warn!("only {} of {} classes have {} entities", ds.classes.len(), args.classes, args.per_class);
    }
    eprintln!(
        "{} classes, {} train and {} test entities written to {}",
        ds.classes.len(),
        ds.train_ids.len(),
        ds.test_ids.len(),
        args.out_dir.display()
    );
    Ok(())
}

pub fn train_classifier_cmd(args: &TrainClassifierArgs, ctx: &Context) -> Result<(), Error> {
    let vectors = load_vectors(&args.vectors)?;
    let examples = load_pairs(&args.dataset)?;
    let mut config = CnnConfig {
        seed: ctx.seed(),
        ..CnnConfig::default()
    };
    if let Some(v) = &args.kernel_widths {
        config.kernel_widths.clone_from(v);
    }
    if let Some(v) = args.filters {
        config.filters_per_width = v;
    }
    if let Some(v) = args.hidden {
        config.hidden_units = v;
    }
    if let Some(v) = args.batch {
        config.batch_size = v;
    }
    if let Some(v) = args.epochs {
        config.epochs = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    let trained = cnn_train(&examples, &vectors, &config)?;
    if !trained.skipped.is_empty() {
        log::warn!("{} training entities have no vector", trained.skipped.len());
    }
    save_model(&trained.model, &args.out)?;
    eprintln!(
        "{} classes, {} examples, final epoch loss {:.6}",
        trained.model.classes().len(),
        examples.len() - trained.skipped.len(),
        trained.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

/// `(entity, known type)` from `--entity` flags and the entities file.
fn prediction_targets(args: &PredictArgs) -> Result<Vec<(Iri, Option<Iri>)>, Error> {
    let known = args.known_type.as_deref().map(parse_iri).transpose()?;
    let mut out: Vec<(Iri, Option<Iri>)> = args
        .entities
        .iter()
        .map(|e| Ok((parse_iri(e)?, known.clone())))
        .collect::<Result<_, Error>>()?;
    if let Some(path) = &args.entities_file {
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let entity = fields.next().unwrap_or_default();
            let entity = parse_iri(entity).map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
            let t = match fields.next() {
                Some(t) if !t.trim().is_empty() => Some(parse_iri(t)?),
                _ => known.clone(),
            };
            out.push((entity, t));
        }
    }
    if out.is_empty() {
        return Err(usage("no entities given; use --entity or --entities-file"));
    }
    Ok(out)
}

pub fn predict_cmd(args: &PredictArgs, ctx: &Context) -> Result<(), Error> {
    let vectors = load_vectors(&args.vectors)?;
    let targets = prediction_targets(args)?;
    let mut predictions = Vec::with_capacity(targets.len());
    match args.method {
        Method::Cnn => {
            let path = args.model.as_ref().ok_or_else(|| usage("--method cnn needs --model"))?;
            let model = load_model(path)?;
            for (entity, _) in targets {
                predictions.push(match vectors.get(entity.as_str()) {
                    Some(v) => model.predict(entity, &v)?,
                    None => {
                        log::warn!("no vector for {}", entity.as_str());
                        Prediction::empty(entity)
                    }
                });
            }
        }
        Method::Similarity => {
            let train = args.train.as_ref().ok_or_else(|| usage("--method similarity needs --train"))?;
            if args.ontology.is_empty() {
                return Err(usage("--method similarity needs --ontology"));
            }
            let kg = ingest(&args.ontology, ctx)?;
            let h = hierarchy(&kg, &args.hierarchy)?;
            let centroids = class_vectors(&load_pairs(train)?, &vectors);
            let known: BTreeSet<Iri> = centroids.vectors.keys().cloned().collect();
            for (entity, t) in targets {
                let t = t.ok_or_else(|| {
                    usage(format!("no known type for {}; use --known-type", entity.as_str()))
                })?;
                let candidates: BTreeSet<Iri> = fine_grained_candidates(&t, &h, args.include_coarse)
                    .map_err(Error::from)?
                    .intersection(&known)
                    .cloned()
                    .collect();
                predictions.push(if candidates.is_empty() || vectors.get(entity.as_str()).is_none() {
                    log::warn!("no candidates or no vector for {}", entity.as_str());
                    Prediction::empty(entity)
                } else {
                    similarity_rank(&entity, &candidates, &centroids.vectors, &vectors)?
                });
            }
        }
    }
    match &args.out {
        Some(path) => write_predictions(&predictions, args.top_k, BufWriter::new(File::create(path)?))?,
        None => write_predictions(&predictions, args.top_k, io::stdout().lock())?,
    }
    Ok(())
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<(), Error> {
    let metrics: Vec<Metric> = args
        .metrics
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_, _>>()?;
    let predictions = load_predictions(&args.predictions)?;
    let gold: BTreeMap<Iri, Iri> = load_pairs(&args.gold)?.into_iter().collect();
    let scores = eval::evaluate(&predictions, &gold, &metrics)?;
    if args.json {
        return print_json(&serde_json::json!(scores));
    }
    for m in &metrics {
        let name = m.to_string();
        println!("{name}\t{:.6}", scores[&name]);
    }
    Ok(())
}

pub fn compare_external_cmd(args: &CompareExternalArgs) -> Result<(), Error> {
    let ours = load_pairs(&args.dataset)?;
    let mut external: BTreeMap<Iri, BTreeSet<Iri>> = BTreeMap::new();
    for (e, c) in load_pairs(&args.external)? {
        external.entry(e).or_default().insert(c);
    }
    let r = external_overlap(&ours, &external);
    if args.json {
        return print_json(&serde_json::json!({
            "our_entities": r.our_entities,
            "intersection": r.intersection,
            "intersection_percentage": r.intersection_percentage(),
            "matching_types": r.matching_types,
            "matching_percentage": r.matching_percentage(),
        }));
    }
    println!("our_entities\t{}", r.our_entities);
    println!("intersection\t{}\t{:.2}%", r.intersection, r.intersection_percentage());
    println!("matching_types\t{}\t{:.2}%", r.matching_types, r.matching_percentage());
    Ok(())
}

pub fn synth_cmd(args: &SynthArgs, ctx: &Context) -> Result<(), Error> {
    if args.classes == 0 || args.per_class == 0 || args.predicates == 0 {
        return Err(usage("--classes, --per-class and --predicates must be at least 1"));
    }
    if !(0.0..1.0).contains(&args.noise) {
        return Err(usage("--noise must lie in [0, 1)"));
    }
    let kg = generate_synthetic_kg(&SynthConfig {
        num_classes: args.classes,
        entities_per_class: args.per_class,
        predicates_per_class: args.predicates,
        noise_fraction: args.noise,
        seed: ctx.seed(),
    });
    let paths = kg.write_to(&args.out_dir)?;
    for p in [&paths.ontology, &paths.data, &paths.gold] {
        println!("{}", p.display());
    }
    eprintln!("{} entities, {} noise triples", kg.gold.len(), kg.noise_triples);
    Ok(())
}

pub fn pipeline_config(args: &PipelineArgs, ctx: &Context) -> Result<PipelineConfig, Error> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if !args.inputs.is_empty() {
        config.inputs.clone_from(&args.inputs);
    }
    if args.synthetic {
        config.synthetic.get_or_insert_with(SynthConfig::default);
    }
    if config.synthetic.is_none() && config.inputs.is_empty() {
        return Err(usage("no input: pass --input, --synthetic or a config naming inputs"));
    }
    if let Some(dir) = &args.work_dir {
        config.work_dir.clone_from(dir);
    }
    config.resume |= args.resume;
    if let Some(m) = args.model {
        config.model = m.into();
    }
    if let Some(n) = args.classes {
        config.dataset.num_classes = n;
    }
    if let Some(k) = args.per_class {
        config.dataset.entities_per_class = k;
    }
    if let Some(e) = args.embedding_epochs {
        config.embedding.epochs = e;
    }
    if let Some(e) = args.classifier_epochs {
        config.classifier.epochs = e;
    }
    if let Some(s) = ctx.seed {
        config.seed = s;
    }
    if let Some(l) = ctx.lenient {
        config.lenient = l;
    }
    if let Some(j) = ctx.jobs {
        config.embedding.jobs = j;
    }
    Ok(config)
}

pub fn pipeline_cmd(args: &PipelineArgs, ctx: &Context) -> Result<(), Failure> {
    let config = pipeline_config(args, ctx)?;
    let report = run_pipeline(&config)?;
    let json = serde_json::to_string_pretty(&report.metrics).map_err(|e| Error::Data(e.to_string()))?;
    println!("{json}");
    eprintln!("artifacts in {}", config.work_dir.display());
    Ok(())
}
