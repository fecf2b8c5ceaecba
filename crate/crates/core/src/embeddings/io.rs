//! Text vector format: a `<count> <dimension>` header, then one line per
//! token with `dimension` space-separated decimals. Values are written in
//! shortest round-trip form, so reading back is exact.
//!
//! FastText n-gram tables use a sibling file with header
//! `<rows> <dimension> <n_min> <n_max> <bucket_count> <seed>` followed by
//! `<bucket> <values...>` lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::fasttext::{NGramConfig, NGramTable};
use super::matrix::Matrix;
use super::{EmbeddingError, WordVectors};

fn format_error(line: usize, message: impl Into<String>) -> EmbeddingError {
    EmbeddingError::Format {
        line,
        message: message.into(),
    }
}

fn write_row<W: Write>(out: &mut W, label: &str, row: &[f64]) -> std::io::Result<()> {
    out.write_all(label.as_bytes())?;
    for v in row {
        write!(out, " {v}")?;
    }
    out.write_all(b"\n")
}

pub fn write_embeddings<W: Write>(vectors: &WordVectors, mut out: W) -> Result<(), EmbeddingError> {
    if !vectors.matrix().is_finite() {
        return Err(EmbeddingError::NonFinite("vectors to save"));
    }
    writeln!(out, "{} {}", vectors.len(), vectors.matrix().cols())?;
    for (token, row) in vectors.tokens().iter().zip(vectors.matrix().iter_rows()) {
        write_row(&mut out, token, row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_embeddings(vectors: &WordVectors, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    write_embeddings(vectors, BufWriter::new(File::create(path)?))
}

fn parse_header(line: &str, fields: usize) -> Result<Vec<u64>, EmbeddingError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != fields {
        return Err(format_error(1, format!("expected {fields} header fields, found {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| p.parse::<u64>().map_err(|_| format_error(1, format!("bad header field `{p}`"))))
        .collect()
}

fn parse_values(parts: &[&str], dim: usize, line: usize) -> Result<Vec<f64>, EmbeddingError> {
    if parts.len() != dim {
        return Err(format_error(line, format!("expected {dim} values, found {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| {
            let v: f64 = p
                .parse()
                .map_err(|_| format_error(line, format!("bad number `{p}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format_error(line, "non-finite value"))
            }
        })
        .collect()
}

pub fn read_embeddings<R: BufRead>(input: R) -> Result<WordVectors, EmbeddingError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| format_error(1, "missing header"))??;
    let h = parse_header(&header, 2)?;
    let (count, dim) = (h[0] as usize, h[1] as usize);
    if dim == 0 {
        return Err(format_error(1, "dimension must be positive"));
    }
    let mut tokens = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if tokens.len() == count {
            return Err(format_error(line_no, format!("more than {count} rows")));
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let (token, values) = parts.split_first().expect("non-empty line");
        data.extend(parse_values(values, dim, line_no)?);
        tokens.push(token.to_string());
    }
    if tokens.len() != count {
        return Err(format_error(
            tokens.len() + 2,
            format!("header declares {count} rows, found {}", tokens.len()),
        ));
    }
    WordVectors::new(tokens, Matrix::from_vec(count, dim, data))
        .map_err(|e| format_error(0, e.to_string()))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<WordVectors, EmbeddingError> {
    read_embeddings(BufReader::new(File::open(path)?))
}

pub fn save_ngrams(table: &NGramTable, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    let mut out = BufWriter::new(File::create(path)?);
    let cfg = table.config();
    let rows: Vec<(u32, &[f64])> = table.stored().collect();
    writeln!(
        out,
        "{} {} {} {} {} {}",
        rows.len(),
        table.dimension(),
        cfg.n_min,
        cfg.n_max,
        cfg.bucket_count,
        table.seed()
    )?;
    for (bucket, row) in rows {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite("n-gram vectors to save"));
        }
        write_row(&mut out, &bucket.to_string(), row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_ngrams(path: impl AsRef<Path>) -> Result<NGramTable, EmbeddingError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines.next().ok_or_else(|| format_error(1, "missing header"))??;
    let h = parse_header(&header, 6)?;
    let (count, dim) = (h[0] as usize, h[1] as usize);
    let config = NGramConfig {
        n_min: h[2] as usize,
        n_max: h[3] as usize,
        bucket_count: u32::try_from(h[4]).map_err(|_| format_error(1, "bucket count too large"))?,
    };
    let mut buckets = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let (bucket, values) = parts.split_first().expect("non-empty line");
        buckets.push(
            bucket
                .parse::<u32>()
                .map_err(|_| format_error(line_no, format!("bad bucket `{bucket}`")))?,
        );
        data.extend(parse_values(values, dim, line_no)?);
    }
    if buckets.len() != count {
        return Err(format_error(
            buckets.len() + 2,
            format!("header declares {count} rows, found {}", buckets.len()),
        ));
    }
    NGramTable::from_parts(config, h[5], buckets, Matrix::from_vec(count, dim, data))
}
