use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::ToyDenoiser;
use crate::error::{Error, Result};

const MAGIC: &str = "tunecap-weights";
const VERSION: u32 = 1;

/// A named tensor; values are stored as little-endian f32 on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    meta: BTreeMap<String, serde_json::Value>,
    tensors: Vec<TensorEntry>,
}

/// Layout: u64 LE header length, JSON header, then the f32 blob.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, serde_json::Value>,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn tensor(&self, name: &str) -> Result<&NamedTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Parse(format!("checkpoint has no tensor {name:?}")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offset = 0;
        let mut entries = Vec::with_capacity(self.tensors.len());
        for t in &self.tensors {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::invalid(format!("tensor {:?} shape/data mismatch", t.name)));
            }
            entries.push(TensorEntry {
                name: t.name.clone(),
                shape: t.shape.clone(),
                offset,
            });
            offset += t.data.len();
        }
        let header = serde_json::to_vec(&Header {
            format: MAGIC.into(),
            version: VERSION,
            meta: self.meta.clone(),
            tensors: entries,
        })?;
        let mut out = Vec::with_capacity(8 + header.len() + offset * 4);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let malformed = |m: &str| Error::Parse(format!("malformed checkpoint: {m}"));
        let len_bytes: [u8; 8] = bytes
            .get(..8)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| malformed("missing header length"))?;
        let header_len = usize::try_from(u64::from_le_bytes(len_bytes))
            .map_err(|_| malformed("header length overflow"))?;
        let header_end = 8usize
            .checked_add(header_len)
            .filter(|e| *e <= bytes.len())
            .ok_or_else(|| malformed("truncated header"))?;
        let header: Header = serde_json::from_slice(&bytes[8..header_end])?;
        if header.format != MAGIC || header.version != VERSION {
            return Err(malformed("unknown format or version"));
        }
        let blob = &bytes[header_end..];
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in header.tensors {
            let n: usize = e.shape.iter().product();
            let range = e.offset * 4..(e.offset + n) * 4;
            let raw = blob
                .get(range)
                .ok_or_else(|| malformed(&format!("tensor {:?} out of bounds", e.name)))?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            tensors.push(NamedTensor {
                name: e.name,
                shape: e.shape,
                data,
            });
        }
        Ok(Self {
            meta: header.meta,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

fn matrix(t: &NamedTensor) -> Result<Array2<f64>> {
    match t.shape[..] {
        [r, c] => Array2::from_shape_vec((r, c), t.data.clone())
            .map_err(|e| Error::Parse(e.to_string())),
        _ => Err(Error::Parse(format!("tensor {:?} is not a matrix", t.name))),
    }
}

fn meta_usize(meta: &BTreeMap<String, serde_json::Value>, key: &str) -> Result<usize> {
    meta.get(key)
        .and_then(|v| v.as_u64())
        .map(|v| v as usize)
        .ok_or_else(|| Error::Parse(format!("checkpoint meta lacks {key:?}")))
}

impl ToyDenoiser {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mat = |name: &str, m: &Array2<f64>| NamedTensor {
            name: name.into(),
            shape: vec![m.nrows(), m.ncols()],
            data: m.iter().copied().collect(),
        };
        let vec = |name: &str, v: &Array1<f64>| NamedTensor {
            name: name.into(),
            shape: vec![v.len()],
            data: v.to_vec(),
        };
        let (rows, cols) = self.latent_shape();
        let meta = BTreeMap::from([
            ("model".to_string(), "toy_denoiser".into()),
            ("latent_rows".to_string(), rows.into()),
            ("latent_cols".to_string(), cols.into()),
            ("cond_width".to_string(), self.cond_width().into()),
        ]);
        Checkpoint {
            meta,
            tensors: vec![
                mat("w1", &self.w1),
                vec("b1", &self.b1),
                mat("w2", &self.w2),
                vec("b2", &self.b2),
            ],
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let shape = (meta_usize(&ck.meta, "latent_rows")?, meta_usize(&ck.meta, "latent_cols")?);
        let cond_width = meta_usize(&ck.meta, "cond_width")?;
        let w1 = matrix(ck.tensor("w1")?)?;
        let mut model = ToyDenoiser::random(&mut rand::rng(), shape, cond_width, w1.ncols());
        let expected = model.param_count();
        let params: Vec<f64> = ["w1", "b1", "w2", "b2"]
            .iter()
            .map(|n| ck.tensor(n).map(|t| t.data.clone()))
            .collect::<Result<Vec<_>>>()?
            .concat();
        if params.len() != expected || w1.nrows() != model.w1.nrows() {
            return Err(Error::Parse("checkpoint tensors do not fit the declared model".into()));
        }
        model.set_params(&params)?;
        Ok(model)
    }
}
