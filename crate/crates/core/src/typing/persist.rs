//! Model file: a magic line, one JSON header line with the configuration
//! and class index, then the flat parameter vector as little-endian f64.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CnnConfig, CnnModel, TypingError};
use crate::graph::Iri;

pub const MODEL_MAGIC: &str = "kgtype-cnn 1";

#[derive(Serialize, Deserialize)]
struct Header {
    config: CnnConfig,
    dimension: usize,
    input_scale: f64,
    classes: Vec<String>,
    parameters: usize,
}

pub fn write_model<W: Write>(model: &CnnModel, mut out: W) -> Result<(), TypingError> {
    if !model.is_finite() {
        return Err(TypingError::NonFinite("model parameters"));
    }
    let header = Header {
        config: model.config().clone(),
        dimension: model.dimension(),
        input_scale: model.input_scale(),
        classes: model.classes().iter().map(|c| c.as_str().to_string()).collect(),
        parameters: model.params().len(),
    };
    writeln!(out, "{MODEL_MAGIC}")?;
    let json = serde_json::to_string(&header).map_err(|e| TypingError::Format(e.to_string()))?;
    writeln!(out, "{json}")?;
    for p in model.params() {
        out.write_all(&p.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_model(model: &CnnModel, path: impl AsRef<Path>) -> Result<(), TypingError> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn read_model<R: BufRead>(mut input: R) -> Result<CnnModel, TypingError> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    if line.trim_end() != MODEL_MAGIC {
        return Err(TypingError::Format(format!(
            "expected `{MODEL_MAGIC}` header, found `{}`",
            line.trim_end()
        )));
    }
    line.clear();
    input.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| TypingError::Format(format!("bad header: {e}")))?;
    let classes = header
        .classes
        .into_iter()
        .map(Iri::new)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| TypingError::Format(e.to_string()))?;

    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != header.parameters * 8 {
        return Err(TypingError::Format(format!(
            "header declares {} parameters, body holds {} bytes",
            header.parameters,
            bytes.len()
        )));
    }
    let params = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    CnnModel::from_parts(header.config, header.dimension, classes, params, header.input_scale)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel, TypingError> {
    read_model(BufReader::new(File::open(path)?))
}
