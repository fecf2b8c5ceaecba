//! Triples as three-token sentences, and the training vocabulary.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::graph::{Iri, KnowledgeGraph, Object};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("corpus line {line}: expected 3 tokens, found {found}")]
    Malformed { line: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One triple rendered as `[subject, predicate, object]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence([String; 3]);

impl Sentence {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: impl Into<String>) -> Self {
        Sentence([subject.into(), predicate.into(), object.into()])
    }

    pub fn tokens(&self) -> &[String; 3] {
        &self.0
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub skipped_literals: usize,
    /// `rdf:type` triples dropped because their subject was held out.
    pub held_out_types: usize,
}

/// One sentence per IRI-object triple, in graph order.
///
/// `rdf:type` triples whose subject is in `held_out` are dropped so that
/// evaluation entities do not see their own label during embedding training.
pub fn triples_to_corpus(kg: &KnowledgeGraph, held_out: &BTreeSet<Iri>) -> Corpus {
    let mut corpus = Corpus::default();
    for t in kg.triples() {
        let Object::Iri(object) = &t.object else {
            corpus.skipped_literals += 1;
            continue;
        };
        if t.is_type_assertion() && held_out.contains(&t.subject) {
            corpus.held_out_types += 1;
            continue;
        }
        corpus.sentences.push(Sentence::new(
            t.subject.as_str(),
            t.predicate.as_str(),
            object.as_str(),
        ));
    }
    corpus
}

pub fn write_corpus<W: Write>(sentences: &[Sentence], mut out: W) -> std::io::Result<()> {
    for s in sentences {
        writeln!(out, "{s}")?;
    }
    out.flush()
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [s, p, o] => sentences.push(Sentence::new(*s, *p, *o)),
            _ => {
                return Err(CorpusError::Malformed {
                    line: i + 1,
                    found: tokens.len(),
                })
            }
        }
    }
    Ok(sentences)
}

/// Dense token ids, assigned by descending frequency with lexicographic
/// tie-break.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
    frequency: Vec<u64>,
    total_tokens: u64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn frequency(&self, id: usize) -> u64 {
        self.frequency[id]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequency
    }

    /// Token count of the whole corpus, including tokens below `min_count`.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Token count restricted to the vocabulary.
    pub fn retained_tokens(&self) -> u64 {
        self.frequency.iter().sum()
    }
}

pub fn build_vocabulary(corpus: &[Sentence], min_count: u64) -> Result<Vocabulary, CorpusError> {
    if min_count < 1 {
        return Err(CorpusError::InvalidMinCount);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut total = 0u64;
    for s in corpus {
        for t in s.tokens() {
            *counts.entry(t.as_str()).or_default() += 1;
            total += 1;
        }
    }
    let mut entries: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut vocab = Vocabulary {
        total_tokens: total,
        ..Default::default()
    };
    for (id, (token, count)) in entries.into_iter().enumerate() {
        vocab.token_to_id.insert(token.to_string(), id);
        vocab.id_to_token.push(token.to_string());
        vocab.frequency.push(count);
    }
    Ok(vocab)
}
