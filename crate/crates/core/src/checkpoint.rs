//! On-disk model format: `manifest.json` plus one flat little-endian array per tensor.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dictionary;
use crate::error::{KgeError, Result};
use crate::models::{Model, ModelConfig, Tensor};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F64,
    F32,
}

impl Precision {
    fn extension(self) -> &'static str {
        match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub model: ModelConfig,
    pub seed: u64,
    pub entity_hash: String,
    pub relation_hash: String,
    pub precision: Precision,
    pub tensors: Vec<TensorEntry>,
}

impl Manifest {
    /// Fails if `dict` is not the dictionary the model was trained with.
    pub fn check_dictionary(&self, dict: &Dictionary) -> Result<()> {
        if self.entity_hash != dict.entity_hash() || self.relation_hash != dict.relation_hash() {
            return Err(KgeError::Checkpoint(
                "dictionary does not match the one recorded in the checkpoint".into(),
            ));
        }
        Ok(())
    }
}

fn write_array(path: &Path, data: &[f64], precision: Precision) -> Result<()> {
    let bytes: Vec<u8> = match precision {
        Precision::F64 => data.iter().flat_map(|v| v.to_le_bytes()).collect(),
        Precision::F32 => data
            .iter()
            .flat_map(|&v| (v as f32).to_le_bytes())
            .collect(),
    };
    std::fs::write(path, bytes).map_err(|e| KgeError::io(path, e))
}

fn read_array(path: &Path, len: usize) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| KgeError::io(path, e))?;
    if bytes.len() != len * 8 {
        return Err(KgeError::Checkpoint(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            len * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn write_model(
    model: &Model,
    hashes: (String, String),
    seed: u64,
    dir: &Path,
    precision: Precision,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| KgeError::io(dir, e))?;
    let mut tensors = Vec::new();
    for t in model.tensors() {
        let file = format!("{}.{}", t.name, precision.extension());
        write_array(&dir.join(&file), &t.data, precision)?;
        tensors.push(TensorEntry {
            name: t.name.clone(),
            rows: t.rows,
            cols: t.cols,
            file,
        });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        model: model.config().clone(),
        seed,
        entity_hash: hashes.0,
        relation_hash: hashes.1,
        precision,
        tensors,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
    std::fs::write(&path, text).map_err(|e| KgeError::io(&path, e))?;
    Ok(manifest)
}

/// Saves a bit-exact checkpoint of `model` into `dir`.
pub fn save_checkpoint(
    model: &Model,
    dict: &Dictionary,
    seed: u64,
    dir: &Path,
) -> Result<Manifest> {
    write_model(model, dict_hashes(dict), seed, dir, Precision::F64)
}

fn dict_hashes(dict: &Dictionary) -> (String, String) {
    (dict.entity_hash(), dict.relation_hash())
}

/// Writes the parameters for downstream tools, optionally narrowed to f32.
/// Only f64 exports can be loaded back.
pub fn export_embeddings(
    model: &Model,
    dict: &Dictionary,
    seed: u64,
    dir: &Path,
    precision: Precision,
) -> Result<Manifest> {
    write_model(model, dict_hashes(dict), seed, dir, precision)
}

/// Re-exports a saved checkpoint from `src` into `dst` at the given precision,
/// keeping its seed and dictionary hashes.
pub fn export_checkpoint(src: &Path, dst: &Path, precision: Precision) -> Result<Manifest> {
    let (model, manifest) = load_checkpoint(src)?;
    write_model(
        &model,
        (manifest.entity_hash, manifest.relation_hash),
        manifest.seed,
        dst,
        precision,
    )
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| KgeError::io(&path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| KgeError::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(dir: &Path) -> Result<(Model, Manifest)> {
    let manifest = read_manifest(dir)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(KgeError::Checkpoint(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }
    if manifest.precision != Precision::F64 {
        return Err(KgeError::Checkpoint(
            "only f64 checkpoints can be loaded".into(),
        ));
    }
    let tensors = manifest
        .tensors
        .iter()
        .map(|e| {
            let mut t = Tensor::zeros(&e.name, e.rows, e.cols);
            t.data = read_array(&dir.join(&e.file), e.rows * e.cols)?;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let model = Model::from_tensors(manifest.model.clone(), tensors)?;
    Ok((model, manifest))
}
