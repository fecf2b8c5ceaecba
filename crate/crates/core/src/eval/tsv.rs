//! Tab-separated `entity<TAB>class` files. Prediction files add a score
//! column and list each entity's classes on consecutive lines in rank order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::EvalError;
use crate::graph::Iri;
use crate::typing::{Prediction, ScoredClass};

fn format_error(line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Format {
        line,
        message: message.into(),
    }
}

fn parse_iri(field: &str, line: usize) -> Result<Iri, EvalError> {
    let field = field.trim();
    let inner = field
        .strip_prefix('<')
        .and_then(|f| f.strip_suffix('>'))
        .unwrap_or(field);
    Iri::new(inner).map_err(|e| format_error(line, e.to_string()))
}

/// Yields `(line number, fields)` for every non-blank, non-comment line.
fn records<R: BufRead>(input: R) -> impl Iterator<Item = Result<(usize, Vec<String>), EvalError>> {
    input.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) if l.trim().is_empty() || l.starts_with('#') => None,
        Ok(l) => Some(Ok((i + 1, l.split('\t').map(str::to_string).collect()))),
    })
}

/// Reads `entity<TAB>class` lines. A third column, if present, is ignored.
pub fn read_pairs<R: BufRead>(input: R) -> Result<Vec<(Iri, Iri)>, EvalError> {
    let mut out = Vec::new();
    for rec in records(input) {
        let (line, fields) = rec?;
        if !(2..=3).contains(&fields.len()) {
            return Err(format_error(line, format!("expected 2 columns, found {}", fields.len())));
        }
        out.push((parse_iri(&fields[0], line)?, parse_iri(&fields[1], line)?));
    }
    Ok(out)
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<(Iri, Iri)>, EvalError> {
    read_pairs(BufReader::new(File::open(path)?))
}

pub fn write_pairs<W: Write>(pairs: &[(Iri, Iri)], mut out: W) -> Result<(), EvalError> {
    for (e, c) in pairs {
        writeln!(out, "{}\t{}", e.as_str(), c.as_str())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_pairs(pairs: &[(Iri, Iri)], path: impl AsRef<Path>) -> Result<(), EvalError> {
    write_pairs(pairs, BufWriter::new(File::create(path)?))
}

pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<Prediction>, EvalError> {
    let mut out: Vec<(Iri, Vec<ScoredClass>)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for rec in records(input) {
        let (line, fields) = rec?;
        if fields.len() != 3 {
            return Err(format_error(
                line,
                format!("expected entity, class and score, found {} columns", fields.len()),
            ));
        }
        let entity = parse_iri(&fields[0], line)?;
        let class = parse_iri(&fields[1], line)?;
        let score: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| format_error(line, format!("bad score `{}`", fields[2])))?;
        match out.last_mut() {
            Some((e, ranking)) if *e == entity => ranking.push(ScoredClass { class, score }),
            _ => {
                if !seen.insert(entity.clone()) {
                    return Err(format_error(line, format!("lines for {entity} are not contiguous")));
                }
                out.push((entity, vec![ScoredClass { class, score }]));
            }
        }
    }
    Ok(out.into_iter().map(|(e, r)| Prediction::ranked(e, r)).collect())
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>, EvalError> {
    read_predictions(BufReader::new(File::open(path)?))
}

/// Writes up to `top_k` ranked classes per entity (all when `None`).
pub fn write_predictions<W: Write>(
    predictions: &[Prediction],
    top_k: Option<usize>,
    mut out: W,
) -> Result<(), EvalError> {
    for p in predictions {
        let ranked = match top_k {
            Some(k) => p.top_k(k),
            None => p.ranking(),
        };
        for s in ranked {
            writeln!(out, "{}\t{}\t{}", p.entity.as_str(), s.class.as_str(), s.score)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_predictions(
    predictions: &[Prediction],
    top_k: Option<usize>,
    path: impl AsRef<Path>,
) -> Result<(), EvalError> {
    write_predictions(predictions, top_k, BufWriter::new(File::create(path)?))
}
