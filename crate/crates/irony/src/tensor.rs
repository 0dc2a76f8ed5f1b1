//! Single-file tensor package: an 8-byte little-endian length prefix, a JSON
//! manifest (tensor directory, config fields, optional vocab list), then one
//! contiguous blob of little-endian f32 values in row-major order.
//!
//! Writes are deterministic: fixed tensor order, fixed manifest field order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub offset: u64,
    pub len: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab: Option<Vec<String>>,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug)]
pub struct Package {
    pub manifest: Manifest,
    tensors: HashMap<String, (Vec<usize>, Vec<f64>)>,
}

impl Package {
    /// Takes a tensor out of the package, checking its shape.
    pub fn take(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let (got_shape, data) = self
            .tensors
            .remove(name)
            .ok_or_else(|| Error::Tensor(format!("missing tensor `{name}`")))?;
        if got_shape != shape {
            return Err(Error::Tensor(format!(
                "tensor `{name}` has shape {got_shape:?}, expected {shape:?}"
            )));
        }
        Ok(data)
    }
}

/// Writes a package. Tensors are laid out in the order given; f64 values are
/// stored as f32.
pub fn write_package(
    path: &Path,
    format: &str,
    config: serde_json::Value,
    vocab: Option<Vec<String>>,
    tensors: &[(&str, Vec<usize>, &[f64])],
) -> Result<()> {
    let mut entries = Vec::with_capacity(tensors.len());
    let mut blob: Vec<u8> = Vec::new();
    for (name, shape, data) in tensors {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::Tensor(format!(
                "tensor `{name}`: shape {shape:?} does not match {} values",
                data.len()
            )));
        }
        let offset = blob.len() as u64;
        for v in data.iter() {
            blob.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        entries.push(TensorEntry {
            name: name.to_string(),
            shape: shape.clone(),
            dtype: "f32".into(),
            offset,
            len: (data.len() * 4) as u64,
        });
    }
    let manifest = Manifest {
        format: format.to_string(),
        config,
        vocab,
        tensors: entries,
    };
    let manifest_bytes = serde_json::to_vec(&manifest)
        .map_err(|e| Error::Tensor(format!("manifest encode: {e}")))?;

    let mut out = Vec::with_capacity(8 + manifest_bytes.len() + blob.len());
    out.extend_from_slice(&(manifest_bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(&manifest_bytes);
    out.extend_from_slice(&blob);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_package(path: &Path) -> Result<Package> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 {
        return Err(Error::Tensor(
            "truncated package: missing length prefix".into(),
        ));
    }
    let manifest_len = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let blob_start = 8 + manifest_len;
    if bytes.len() < blob_start {
        return Err(Error::Tensor(
            "truncated package: manifest cut short".into(),
        ));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[8..blob_start])
        .map_err(|e| Error::Tensor(format!("corrupt manifest: {e}")))?;
    let blob = &bytes[blob_start..];

    let mut tensors = HashMap::new();
    for entry in &manifest.tensors {
        if entry.dtype != "f32" {
            return Err(Error::Tensor(format!(
                "tensor `{}`: unsupported dtype `{}`",
                entry.name, entry.dtype
            )));
        }
        let count: usize = entry.shape.iter().product();
        if entry.len as usize != count * 4 {
            return Err(Error::Tensor(format!(
                "tensor `{}`: byte length {} does not match shape {:?}",
                entry.name, entry.len, entry.shape
            )));
        }
        let start = entry.offset as usize;
        let end = start + entry.len as usize;
        if end > blob.len() {
            return Err(Error::Tensor(format!(
                "tensor `{}`: corrupt payload (blob has {} bytes, need {end})",
                entry.name,
                blob.len()
            )));
        }
        let data: Vec<f64> = blob[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        tensors.insert(entry.name.clone(), (entry.shape.clone(), data));
    }
    Ok(Package { manifest, tensors })
}
