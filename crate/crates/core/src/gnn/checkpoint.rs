//! Parameter checkpoints: a flat little-endian `f64` blob plus a JSON
//! sidecar naming each tensor and its shape.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Architecture, ParamSet};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    architecture: Architecture,
    learning_rate: f64,
    steps: u64,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: [usize; 2],
    /// Offset into the blob, in doubles.
    offset: usize,
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `path` (binary) and `path` with a `.json` extension (sidecar).
pub fn save_checkpoint(params: &ParamSet, path: &Path) -> Result<()> {
    let mut blob = Vec::with_capacity(params.flat_len() * 8);
    let mut tensors = Vec::new();
    let mut offset = 0;
    for (name, w) in params.tensor_names().into_iter().zip(&params.weights) {
        tensors.push(TensorEntry {
            name,
            shape: [w.nrows(), w.ncols()],
            offset,
        });
        // row-major regardless of the array's memory layout
        for v in w.iter() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        offset += w.len();
    }
    let sidecar = Sidecar {
        architecture: params.arch,
        learning_rate: params.learning_rate,
        steps: params.steps,
        tensors,
    };
    fs::write(path, blob).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::parse("checkpoint sidecar", e))?;
    fs::write(&side, text).map_err(|e| Error::io(side, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ParamSet> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::parse(side.display().to_string(), e))?;
    let blob = fs::read(path).map_err(|e| Error::io(path, e))?;
    if blob.len() % 8 != 0 {
        return Err(Error::parse(path.display().to_string(), "blob length not a multiple of 8"));
    }
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mut weights = Vec::with_capacity(sidecar.tensors.len());
    for t in &sidecar.tensors {
        let len = t.shape[0] * t.shape[1];
        let slice = values
            .get(t.offset..t.offset + len)
            .ok_or_else(|| Error::parse(path.display().to_string(), format!("tensor {} out of bounds", t.name)))?;
        let w = Array2::from_shape_vec((t.shape[0], t.shape[1]), slice.to_vec())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        weights.push(w);
    }
    let mut p = ParamSet::from_weights(sidecar.architecture, weights, sidecar.learning_rate)?;
    p.steps = sidecar.steps;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.bin");
        let mut p = ParamSet::init_gcn(5, 3, 4, 0.05, 42);
        p.steps = 17;
        save_checkpoint(&p, &path).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), (15 + 12) * 8);
        let q = load_checkpoint(&path).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn truncated_blob_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.bin");
        save_checkpoint(&ParamSet::init_sgc(3, 2, 2, 0.1, 1), &path).unwrap();
        fs::write(&path, [0u8; 16]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
