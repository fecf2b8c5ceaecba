//! Fixture-driven checks shared by the focused tests and the acceptance
//! runner. Each returns a one-line summary on success and a reason on
//! failure.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use kgtype_core::corpus::{build_vocabulary, Sentence};
use kgtype_core::embeddings::{
    load_ngrams, save_ngrams, train_fasttext, NGramConfig, TrainingConfig, VectorLookup,
};
use kgtype_core::eval::{accuracy, evaluate, hits_at_k, Metric};
use kgtype_core::graph::{
    default_roots, parse_ntriples, parse_str, ClassHierarchy, Iri, KnowledgeGraph, Literal, Object,
    ParseMode, Triple,
};
use kgtype_core::typing::{fine_grained_candidates, Prediction};

pub type Check = Result<String, String>;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn iri(s: &str) -> Iri {
    Iri::new(s).unwrap()
}

// -------------------------------------------------------------- parser ---

fn expected_positive() -> Vec<Triple> {
    let t = |s: &str, p: &str, o: Object| Triple::new(iri(s), iri(p), o);
    let o = |s: &str| Object::Iri(iri(s));
    let lit = |lexical: &str, language: Option<&str>, datatype: Option<&str>| {
        Object::Literal(Literal {
            lexical: lexical.into(),
            language: language.map(Into::into),
            datatype: datatype.map(iri),
        })
    };
    let (a, p) = ("http://ex.org/a", "http://ex.org/p");
    vec![
        t(
            "http://dbpedia.org/resource/Albert_Einstein",
            "http://www.w3.org/1999/02/22-rdf-syntax-ns#type",
            o("http://dbpedia.org/ontology/Scientist"),
        ),
        t(
            "http://dbpedia.org/resource/Ulm",
            "http://www.w3.org/2000/01/rdf-schema#label",
            lit("Ulm", None, None),
        ),
        t(a, p, lit("Ulm", Some("de"), None)),
        t(a, p, lit("Ulm", Some("en-GB"), None)),
        t(a, p, lit("1879", None, Some("http://www.w3.org/2001/XMLSchema#gYear"))),
        t(a, p, lit("say \"hi\"\\", None, None)),
        t(a, p, lit("", None, None)),
        t(a, p, o("http://ex.org/b")),
        t(a, p, o("http://ex.org/b")),
        t("urn:isbn:0451450523", p, o("mailto:a@ex.org")),
        t("http://ex.org/Zürich", p, lit("Straße", None, None)),
    ]
}

fn expected_escapes() -> Vec<Triple> {
    let t = |s: &str, lexical: &str| {
        Triple::new(iri(s), iri("http://ex.org/p"), Object::Literal(Literal::simple(lexical)))
    };
    vec![
        t("http://ex.org/a", "tab\there"),
        t("http://ex.org/a", "é\u{1F600}"),
        t("http://ex.org/café", "line\nbreak\r"),
    ]
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Positive fixtures parse to the expected triples and serialize back to
/// their whitespace-normalized form; negative fixtures fail at the line
/// and with the error kind named in their `# expect:` header, in strict
/// mode, and are skipped in lenient mode.
pub fn parser_conformance() -> Check {
    let dir = fixture_dir().join("ntriples");
    let mut positives = 0;
    for (file, expected) in [("positive.nt", expected_positive()), ("escapes.nt", expected_escapes())] {
        let parsed = parse_str(&read(&dir.join(file))?, ParseMode::Strict)
            .map_err(|e| format!("{file}: {e}"))?
            .triples;
        if parsed != expected {
            return Err(format!("{file}: parsed {parsed:?}"));
        }
        let serialized: String = parsed.iter().map(|t| format!("{t}\n")).collect();
        let reparsed = parse_str(&serialized, ParseMode::Strict).map_err(|e| format!("{file} reparse: {e}"))?;
        if reparsed.triples != parsed {
            return Err(format!("{file}: parse(serialize(x)) differs"));
        }
        positives += parsed.len();
    }
    let normalized = read(&dir.join("positive.normalized.nt"))?;
    let serialized: Vec<String> = expected_positive().iter().map(ToString::to_string).collect();
    if serialized != normalized.lines().collect::<Vec<_>>() {
        return Err("serialize(parse(x)) differs from the normalized fixture".into());
    }

    let mut negatives = 0;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir.join("negative"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = read(&path)?;
        let header = text.lines().next().unwrap_or_default();
        let mut expect = header.trim_start_matches("# expect:").split_whitespace();
        let line: usize = expect.next().and_then(|l| l.parse().ok()).ok_or(format!("{name}: bad header"))?;
        let kind = expect.next().ok_or(format!("{name}: bad header"))?;

        let err = match parse_ntriples(text.as_bytes(), ParseMode::Strict) {
            Ok(_) => return Err(format!("{name}: parsed without error")),
            Err(e) => e,
        };
        let width = text.lines().nth(line - 1).map_or(0, |l| l.chars().count());
        let got_kind = format!("{:?}", err.kind);
        if err.line != line || !got_kind.starts_with(kind) || err.column == 0 || err.column > width + 1 {
            return Err(format!("{name}: expected line {line} {kind}, got {err:?}"));
        }
        let lenient = parse_ntriples(text.as_bytes(), ParseMode::Lenient).map_err(|e| format!("{name}: {e}"))?;
        if lenient.skipped.len() != 1 || lenient.skipped[0].line != line {
            return Err(format!("{name}: lenient mode skipped {:?}", lenient.skipped));
        }
        negatives += 1;
    }
    Ok(format!("{positives} positive statements, {negatives} negative fixtures"))
}

// ------------------------------------------------------------- metrics ---

/// Ten predictions with hand-computed metrics: the gold class sits at rank
/// 1 four times, at ranks 2 and 3 twice each, and at rank 4 twice.
pub fn metric_fixture() -> (Vec<Prediction>, BTreeMap<Iri, Iri>) {
    let rows: [(&str, &[&str]); 10] = [
        ("A", &["A", "B", "C"]),
        ("A", &["B", "A", "C"]),
        ("B", &["B", "C", "A"]),
        ("C", &["A", "B", "C"]),
        ("D", &["A", "B", "C", "D"]),
        ("E", &["E"]),
        ("A", &["C", "B", "A"]),
        ("B", &["A", "C", "D", "B"]),
        ("C", &["C", "A"]),
        ("D", &["B", "D"]),
    ];
    let class = |c: &str| iri(&format!("http://ex.org/class/{c}"));
    let mut predictions = Vec::new();
    let mut gold = BTreeMap::new();
    for (i, (g, ranking)) in rows.iter().enumerate() {
        let entity = iri(&format!("http://ex.org/e{i}"));
        gold.insert(entity.clone(), class(g));
        let scores = ranking.iter().enumerate().map(|(r, c)| (class(c), 1.0 - r as f64 / 10.0));
        predictions.push(Prediction::new(entity, scores));
    }
    (predictions, gold)
}

pub fn metric_fixture_check() -> Check {
    let (predictions, gold) = metric_fixture();
    let acc = accuracy(&predictions, &gold).map_err(|e| e.to_string())?;
    let hits: Vec<f64> = (1..=5)
        .map(|k| hits_at_k(&predictions, &gold, k).unwrap())
        .collect();
    if acc != 0.4 || hits[0] != 0.4 || hits[1] != 0.6 || hits[2] != 0.8 || hits[3] != 1.0 || hits[4] != 1.0 {
        return Err(format!("accuracy {acc}, hits@1..5 {hits:?}"));
    }
    if hits[0] != acc || hits.windows(2).any(|w| w[0] > w[1]) {
        return Err("hits@1 != accuracy or hits not monotone".into());
    }
    let report = evaluate(&predictions, &gold, &[Metric::Accuracy, Metric::HitsAt(1), Metric::HitsAt(3)])
        .map_err(|e| e.to_string())?;
    let want: BTreeMap<String, f64> =
        [("accuracy", 0.4), ("hits@1", 0.4), ("hits@3", 0.8)].map(|(k, v)| (k.to_string(), v)).into();
    if report != want {
        return Err(format!("evaluate returned {report:?}"));
    }
    Ok(format!("accuracy {acc}, hits@1 {}, hits@3 {}", hits[0], hits[2]))
}

// ----------------------------------------------------------- hierarchy ---

pub fn dbo(local: &str) -> Iri {
    iri(&format!("http://dbpedia.org/ontology/{local}"))
}

pub fn toy_ontology() -> (KnowledgeGraph, ClassHierarchy) {
    let text = read(&fixture_dir().join("dbpedia_toy.nt")).unwrap();
    let kg = KnowledgeGraph::from_triples(parse_str(&text, ParseMode::Strict).unwrap().triples);
    let h = ClassHierarchy::build(&kg, &default_roots()).unwrap();
    (kg, h)
}

/// LawFirm's chain is LawFirm, Company, Organisation, Agent: the highest
/// class below the Agent root is Organisation, whose subclasses are the
/// fine-grained candidates.
pub fn lawfirm_check() -> Check {
    let (kg, h) = toy_ontology();
    let law = dbo("LawFirm");
    let expect = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_string()) };
    expect(h.parent(&law) == Some(&dbo("Company")), "parent(LawFirm) != Company")?;
    expect(h.parent(&dbo("Organisation")) == Some(&dbo("Agent")), "parent(Organisation) != Agent")?;
    expect(h.coarse_ancestor(&law).ok() == Some(&dbo("Organisation")), "coarse(LawFirm) != Organisation")?;
    expect(
        h.coarse_ancestor(&dbo("Organisation")).ok() == Some(&dbo("Organisation")),
        "coarse(Organisation) != Organisation",
    )?;
    expect(h.coarse_ancestor(&dbo("City")).ok() == Some(&dbo("Place")), "coarse(City) != Place")?;

    let fine = fine_grained_candidates(&law, &h, false).map_err(|e| e.to_string())?;
    expect(fine == BTreeSet::from([dbo("Company"), dbo("LawFirm")]), "candidates != {Company, LawFirm}")?;
    let with_coarse = fine_grained_candidates(&law, &h, true).map_err(|e| e.to_string())?;
    expect(with_coarse.len() == 3 && with_coarse.contains(&dbo("Organisation")), "include_coarse")?;

    let baker = iri("http://dbpedia.org/resource/Baker_McKenzie");
    let gold = kgtype_core::eval::gold_label(kg.types_of(&baker).unwrap(), &h);
    expect(gold == Some(law), "gold label of Baker_McKenzie != LawFirm")?;
    Ok("LawFirm -> Organisation, candidates {Company, LawFirm}".into())
}

// ---------------------------------------------------------- FastText OOV ---

fn fnv1a(bytes: &[u8]) -> u32 {
    bytes.iter().fold(0x811c_9dc5u32, |h, &b| (h ^ b as u32).wrapping_mul(16_777_619))
}

/// Every character n-gram of `<token>` with length in `lo..=hi`.
fn ngrams_of(token: &str, lo: usize, hi: usize) -> Vec<String> {
    let chars: Vec<char> = format!("<{token}>").chars().collect();
    let mut out = Vec::new();
    for n in lo..=hi {
        for start in 0..chars.len().saturating_sub(n - 1) {
            out.push(chars[start..start + n].iter().collect());
        }
    }
    out
}

/// Trains FastText on a small corpus, then recomputes the vector of an
/// unseen token from scratch and compares it with the library's lookup,
/// also after the n-gram table has been written and read back.
pub fn fasttext_oov_check() -> Check {
    let entities = ["Ulm", "Munich", "Berlin", "Hamburg", "Bremen"];
    let corpus: Vec<Sentence> = entities
        .iter()
        .flat_map(|e| {
            [
                Sentence::new(format!("http://ex.org/{e}"), "http://ex.org/country", "http://ex.org/Germany"),
                Sentence::new(format!("http://ex.org/{e}"), "http://ex.org/type", "http://ex.org/City"),
            ]
        })
        .collect();
    let vocab = build_vocabulary(&corpus, 1).map_err(|e| e.to_string())?;
    let config = TrainingConfig {
        dimension: 12,
        epochs: 3,
        ..TrainingConfig::default()
    };
    let ngram = NGramConfig {
        n_min: 3,
        n_max: 6,
        bucket_count: 50_000,
    };
    let trained = train_fasttext(&corpus, &vocab, &config, &ngram).map_err(|e| e.to_string())?;
    let table = trained.ngrams.as_ref().ok_or("no n-gram table")?;

    let oov = "http://ex.org/Ulmen";
    if vocab.id(oov).is_some() {
        return Err("probe token is in the vocabulary".into());
    }
    let buckets: Vec<u32> = ngrams_of(oov, 3, 6)
        .iter()
        .map(|g| fnv1a(g.as_bytes()) % ngram.bucket_count)
        .collect();
    let stored: BTreeSet<u32> = table.stored().map(|(b, _)| b).collect();
    let shared = buckets.iter().filter(|b| stored.contains(b)).count();
    if shared == 0 {
        return Err("probe shares no trained bucket".into());
    }
    let mut want = vec![0.0; config.dimension];
    for b in &buckets {
        for (w, v) in want.iter_mut().zip(table.bucket_vector(*b).iter()) {
            *w += v;
        }
    }
    want.iter_mut().for_each(|w| *w /= buckets.len() as f64);

    let got = trained.lookup().get(oov).ok_or("no vector for unseen token")?.into_owned();
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()));
    if !close(&got, &want) {
        return Err(format!("lookup {got:?} != recomputed {want:?}"));
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("vectors.ngrams");
    save_ngrams(table, &path).map_err(|e| e.to_string())?;
    let reloaded = load_ngrams(&path).map_err(|e| e.to_string())?;
    let again = reloaded.subword_vector(oov).ok_or("reloaded table has no vector")?;
    if !close(&again, &want) {
        return Err("vector differs after reloading the n-gram table".into());
    }
    Ok(format!("{} n-grams, {shared} of them trained", buckets.len()))
}
