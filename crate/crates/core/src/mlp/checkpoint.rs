//! Checkpoint file: one line of compact JSON header, a `\n`, then the raw
//! little-endian `f32` blob. The blob holds, for every layer in order, the
//! row-major weights followed by the bias; that sequence is written three
//! times (parameters, first moments, second moments).

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::network::{Dense, Mlp};
use super::{MlpArchitecture, TrainConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "specfuse-mlp";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub architecture: MlpArchitecture,
    pub step: u64,
    pub config: TrainConfig,
    pub dtype: String,
    pub byte_order: String,
    pub parameter_count: usize,
}

fn push_layers(out: &mut Vec<u8>, layers: &[Dense<f32>]) {
    for l in layers {
        for v in l.weights.iter().chain(l.bias.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn save_checkpoint(model: &Mlp<f32>, cfg: &TrainConfig, path: &Path) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: 1,
        architecture: model.architecture().clone(),
        step: model.step,
        config: cfg.clone(),
        dtype: "f32".into(),
        byte_order: "little-endian".into(),
        parameter_count: model.parameter_count(),
    };
    let mut bytes = serde_json::to_vec(&header).expect("header serializes");
    bytes.push(b'\n');
    push_layers(&mut bytes, &model.layers);
    push_layers(&mut bytes, &model.first_moments);
    push_layers(&mut bytes, &model.second_moments);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(Mlp<f32>, CheckpointHeader)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let split = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::format(path, "header", "missing header line"))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[..split]).map_err(|e| Error::format(path, "header", e.to_string()))?;
    if header.format != CHECKPOINT_FORMAT || header.version != 1 {
        return Err(Error::format(path, "format", format!("unsupported {} v{}", header.format, header.version)));
    }
    if header.dtype != "f32" || header.byte_order != "little-endian" {
        return Err(Error::format(path, "dtype", "only little-endian f32 checkpoints are supported"));
    }
    header.architecture.validate()?;
    let mut model = Mlp::<f32>::zeros(&header.architecture)?;
    if header.parameter_count != model.parameter_count() {
        return Err(Error::format(path, "parameter_count", "does not match the architecture"));
    }
    let blob = &bytes[split + 1..];
    let expected = 3 * 4 * model.parameter_count();
    if blob.len() != expected {
        return Err(Error::format(
            path,
            "payload",
            format!("payload length mismatch: expected {expected} bytes, found {}", blob.len()),
        ));
    }
    let mut values = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let mut fill = |layers: &mut Vec<Dense<f32>>| {
        for l in layers.iter_mut() {
            let (o, i) = l.weights.dim();
            l.weights = Array2::from_shape_fn((o, i), |_| values.next().expect("length checked"));
            l.bias = Array1::from_shape_fn(o, |_| values.next().expect("length checked"));
        }
    };
    fill(&mut model.layers);
    fill(&mut model.first_moments);
    fill(&mut model.second_moments);
    model.step = header.step;
    Ok((model, header))
}
