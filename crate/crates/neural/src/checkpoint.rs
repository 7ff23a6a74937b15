//! Checkpoint files: a magic line, one line of JSON metadata (configs,
//! vocabulary, tensor names and shapes), then every tensor as little-endian
//! f64 in metadata order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{CnmlModel, EncoderParams, ModelConfig};
use crate::tensor::Mat;
use crate::vocab::Vocab;

const MAGIC: &str = "CNMLCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Serialize, Deserialize)]
struct TensorMeta {
    encoder: usize,
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    version: u32,
    model: ModelConfig,
    vocab: Vocab,
    log_tau: f64,
    /// Anything the caller wants recorded (training config, step, metrics).
    extra: serde_json::Value,
    tensors: Vec<TensorMeta>,
}

/// Writes to a temporary sibling and renames it into place.
pub fn save_checkpoint(path: &Path, model: &CnmlModel, extra: &serde_json::Value) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io { path: path.to_path_buf(), source };
    let mut tensors = Vec::new();
    let mut data = Vec::new();
    for (k, e) in model.encoders.iter().enumerate() {
        for (name, t) in e.names.iter().zip(&e.tensors) {
            tensors.push(TensorMeta { encoder: k, name: name.clone(), rows: t.rows, cols: t.cols });
            data.extend(t.data.iter().flat_map(|x| x.to_le_bytes()));
        }
    }
    let meta = Meta {
        version: VERSION,
        model: model.config.clone(),
        vocab: model.vocab.clone(),
        log_tau: model.log_tau,
        extra: extra.clone(),
        tensors,
    };
    let json = serde_json::to_string(&meta).expect("metadata serializes");
    let tmp = path.with_extension("tmp");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        writeln!(f, "{MAGIC} {VERSION}").map_err(io)?;
        writeln!(f, "{json}").map_err(io)?;
        f.write_all(&data).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

/// Returns the model and the caller-supplied metadata.
pub fn load_checkpoint(path: &Path) -> Result<(CnmlModel, serde_json::Value), CheckpointError> {
    let io = |source| CheckpointError::Io { path: path.to_path_buf(), source };
    let bad = |message: String| CheckpointError::Format { path: path.to_path_buf(), message };
    let mut r = BufReader::new(fs::File::open(path).map_err(io)?);
    let mut header = String::new();
    r.read_line(&mut header).map_err(io)?;
    match header.trim_end().split_once(' ') {
        Some((MAGIC, v)) if v == VERSION.to_string() => {}
        Some((MAGIC, v)) => return Err(bad(format!("unsupported checkpoint version {v}"))),
        _ => return Err(bad("not a checkpoint file".into())),
    }
    let mut line = String::new();
    r.read_line(&mut line).map_err(io)?;
    let meta: Meta = serde_json::from_str(&line).map_err(|e| bad(format!("metadata: {e}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    let want: usize = meta.tensors.iter().map(|t| t.rows * t.cols * 8).sum();
    if bytes.len() != want {
        return Err(bad(format!("expected {want} bytes of tensor data, found {}", bytes.len())));
    }
    let n_enc = if meta.model.siamese { 1 } else { 2 };
    let mut encoders: Vec<EncoderParams> = (0..n_enc)
        .map(|_| EncoderParams {
            config: meta.model.encoder.clone(),
            vocab_size: meta.vocab.len(),
            names: vec![],
            tensors: vec![],
        })
        .collect();
    let mut off = 0;
    for t in &meta.tensors {
        let n = t.rows * t.cols;
        let data = bytes[off..off + 8 * n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        off += 8 * n;
        let e = encoders.get_mut(t.encoder).ok_or_else(|| bad(format!("encoder index {} out of range", t.encoder)))?;
        e.names.push(t.name.clone());
        e.tensors.push(Mat::from_vec(t.rows, t.cols, data));
    }
    let model = CnmlModel { config: meta.model, vocab: meta.vocab, encoders, log_tau: meta.log_tau };
    for e in &model.encoders {
        for t in &e.tensors {
            if !t.is_finite() {
                return Err(bad("non-finite parameter".into()));
            }
        }
        if e.index_of("proj").is_none() || e.index_of("embed").is_none() {
            return Err(bad("missing embedding or projection tensor".into()));
        }
    }
    Ok((model, meta.extra))
}
