use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, ProbabilitySet};
use crate::error::{Error, Result};

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::io(path, source)
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    d: usize,
    n: usize,
    source_tag: String,
}

fn blob_path(sidecar: &Path) -> PathBuf {
    sidecar.with_extension("bin")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => io(path, source),
            other => Error::Parse(format!("{}: {other:?}", path.display())),
        }
    } else {
        Error::Parse(format!("{}: {e}", path.display()))
    }
}

/// Load embeddings from a `.csv` with a header row, or from a `.json`
/// sidecar `{d, n, source_tag}` next to a `.bin` of little-endian f32 rows.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_embeddings_csv(path),
        _ => read_embeddings_bin(path),
    }
}

fn read_embeddings_bin(path: &Path) -> Result<EmbeddingSet> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    let meta: Sidecar = serde_json::from_str(&text)?;
    let blob_file = blob_path(path);
    let blob = fs::read(&blob_file).map_err(|e| io(&blob_file, e))?;
    let expected = meta.n * meta.d * 4;
    if blob.len() != expected {
        return Err(Error::Parse(format!(
            "{}: {} bytes, sidecar promises {expected}",
            blob_file.display(),
            blob.len()
        )));
    }
    let values: Vec<f64> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let vectors = Array2::from_shape_vec((meta.n, meta.d), values)
        .map_err(|e| Error::Parse(e.to_string()))?;
    EmbeddingSet::new(vectors, meta.source_tag)
}

fn read_embeddings_csv(path: &Path) -> Result<EmbeddingSet> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let d = reader.headers().map_err(|e| csv_err(path, e))?.len();
    let mut values = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        for field in record.iter() {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{}: bad value {field:?}", path.display())))?,
            );
        }
        n += 1;
    }
    let vectors =
        Array2::from_shape_vec((n, d), values).map_err(|e| Error::Parse(e.to_string()))?;
    let tag = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    EmbeddingSet::new(vectors, tag)
}

/// Write a `.json` sidecar and its `.bin` blob (values narrowed to f32).
pub fn write_embeddings_bin(set: &EmbeddingSet, sidecar: &Path) -> Result<()> {
    let meta = Sidecar {
        d: set.dim(),
        n: set.n(),
        source_tag: set.source_tag().to_string(),
    };
    fs::write(sidecar, serde_json::to_string_pretty(&meta)?).map_err(|e| io(sidecar, e))?;
    let blob: Vec<u8> = set
        .vectors()
        .iter()
        .flat_map(|v| (*v as f32).to_le_bytes())
        .collect();
    let blob_file = blob_path(sidecar);
    fs::write(&blob_file, blob).map_err(|e| io(&blob_file, e))
}

pub fn write_embeddings_csv(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record((0..set.dim()).map(|i| format!("e{i}")))
        .map_err(|e| csv_err(path, e))?;
    for row in set.vectors().rows() {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// CSV with a header row; first column is the sample id.
pub fn read_probabilities(path: &Path) -> Result<ProbabilitySet> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let k = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .len()
        .checked_sub(1)
        .filter(|k| *k > 0)
        .ok_or_else(|| Error::Parse(format!("{}: need an id column and classes", path.display())))?;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let mut fields = record.iter();
        ids.push(fields.next().unwrap_or_default().to_string());
        for field in fields {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{}: bad value {field:?}", path.display())))?,
            );
        }
    }
    let rows = Array2::from_shape_vec((ids.len(), k), values)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    ProbabilitySet::new(ids, rows)
}

pub fn write_probabilities(set: &ProbabilitySet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = std::iter::once("id".to_string()).chain((0..set.classes()).map(|i| format!("p{i}")));
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for (id, row) in set.ids().iter().zip(set.rows().rows()) {
        let fields = std::iter::once(id.clone()).chain(row.iter().map(|v| v.to_string()));
        w.write_record(fields).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}
