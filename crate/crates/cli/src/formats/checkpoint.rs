//! Model checkpoints: `meta.json` describing the architecture and the
//! ordered parameter manifest, plus `weights.bin` holding every tensor as
//! 32-bit little-endian reals in manifest order.

use std::fs;
use std::path::Path;

use puzzle_cm_core::net::{ModelConfig, ModelParams, PairNetConfig, PairNetParams};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

const FORMAT_VERSION: &str = "e2v1";

/// Which network a checkpoint holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointKind {
    Embedding,
    PairProxy,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    format_version: String,
    /// "edge2vec" (default) or "e2e_proxy".
    #[serde(default = "default_model")]
    model: String,
    piece_size: usize,
    channels_in: usize,
    conv_channels: [usize; 4],
    #[serde(default)]
    embedding_dim: usize,
    #[serde(default)]
    groups: usize,
    #[serde(default)]
    twin_mode: bool,
    parameter_manifest: Vec<(String, Vec<usize>)>,
}

fn default_model() -> String {
    "edge2vec".into()
}

fn write_weights(path: &Path, data: &[f32]) -> CliResult<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn read_weights(path: &Path, expect: usize) -> CliResult<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() != expect * 4 {
        return Err(CliError::Data(format!(
            "weights.bin holds {} bytes, manifest needs {}",
            bytes.len(),
            expect * 4
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn check_meta(meta: &Meta, manifest: &[(String, Vec<usize>)]) -> CliResult<()> {
    if meta.format_version != FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "unsupported checkpoint version {:?} (expected {FORMAT_VERSION:?})",
            meta.format_version
        )));
    }
    if meta.parameter_manifest != manifest {
        return Err(CliError::Data(
            "checkpoint manifest does not match the declared architecture".into(),
        ));
    }
    Ok(())
}

fn manifest_of(layout: &puzzle_cm_core::net::ParamLayout) -> Vec<(String, Vec<usize>)> {
    layout
        .tensors
        .iter()
        .map(|t| (t.name.clone(), t.shape.clone()))
        .collect()
}

pub fn save_checkpoint(params: &ModelParams<f32>, dir: impl AsRef<Path>) -> CliResult<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let cfg = params.config();
    let meta = Meta {
        format_version: FORMAT_VERSION.into(),
        model: "edge2vec".into(),
        piece_size: cfg.piece_size,
        channels_in: cfg.channels_in,
        conv_channels: cfg.conv_channels,
        embedding_dim: cfg.embedding_dim,
        groups: cfg.groups,
        twin_mode: cfg.twin,
        parameter_manifest: manifest_of(params.layout()),
    };
    let meta_path = dir.join("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| CliError::io(&meta_path, e))?;
    write_weights(&dir.join("weights.bin"), &params.data)
}

pub fn load_checkpoint(dir: impl AsRef<Path>) -> CliResult<ModelParams<f32>> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let raw = fs::read_to_string(&meta_path).map_err(|e| CliError::io(&meta_path, e))?;
    let meta: Meta = serde_json::from_str(&raw)?;
    if meta.model != "edge2vec" {
        return Err(CliError::Data(format!(
            "checkpoint holds a {:?} model, expected an embedding network",
            meta.model
        )));
    }
    let cfg = ModelConfig {
        piece_size: meta.piece_size,
        channels_in: meta.channels_in,
        conv_channels: meta.conv_channels,
        embedding_dim: meta.embedding_dim,
        groups: meta.groups,
        twin: meta.twin_mode,
    };
    let layout = cfg.layout();
    check_meta(&meta, &manifest_of(&layout))?;
    let data = read_weights(&dir.join("weights.bin"), layout.total)?;
    Ok(ModelParams::from_flat(cfg, data)?)
}

pub fn save_pair_checkpoint(params: &PairNetParams<f32>, dir: impl AsRef<Path>) -> CliResult<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let cfg = params.config();
    let meta = Meta {
        format_version: FORMAT_VERSION.into(),
        model: "e2e_proxy".into(),
        piece_size: cfg.piece_size,
        channels_in: cfg.channels_in,
        conv_channels: cfg.conv_channels,
        embedding_dim: 0,
        groups: 0,
        twin_mode: false,
        parameter_manifest: manifest_of(params.layout()),
    };
    let meta_path = dir.join("meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .map_err(|e| CliError::io(&meta_path, e))?;
    write_weights(&dir.join("weights.bin"), &params.data)
}

pub fn load_pair_checkpoint(dir: impl AsRef<Path>) -> CliResult<PairNetParams<f32>> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let raw = fs::read_to_string(&meta_path).map_err(|e| CliError::io(&meta_path, e))?;
    let meta: Meta = serde_json::from_str(&raw)?;
    if meta.model != "e2e_proxy" {
        return Err(CliError::Data(format!(
            "checkpoint holds a {:?} model, expected the pair proxy",
            meta.model
        )));
    }
    let cfg = PairNetConfig {
        piece_size: meta.piece_size,
        channels_in: meta.channels_in,
        conv_channels: meta.conv_channels,
    };
    let layout = cfg.layout();
    check_meta(&meta, &manifest_of(&layout))?;
    let data = read_weights(&dir.join("weights.bin"), layout.total)?;
    Ok(PairNetParams::from_flat(cfg, data)?)
}

/// Reads just the model discriminator of a checkpoint directory.
pub fn peek_checkpoint_kind(dir: impl AsRef<Path>) -> CliResult<CheckpointKind> {
    let meta_path = dir.as_ref().join("meta.json");
    let raw = fs::read_to_string(&meta_path).map_err(|e| CliError::io(&meta_path, e))?;
    let meta: Meta = serde_json::from_str(&raw)?;
    match meta.model.as_str() {
        "edge2vec" => Ok(CheckpointKind::Embedding),
        "e2e_proxy" => Ok(CheckpointKind::PairProxy),
        other => Err(CliError::Data(format!("unknown checkpoint model {other:?}"))),
    }
}
