//! Minibatch maximum-likelihood training with Adam, validation-based model
//! selection, and the binary checkpoint format.
//!
//! Checkpoint layout (little-endian):
//!
//! ```text
//! b"PGC1" | u32 header length | JSON header | f64 parameters
//! ```
//!
//! The header records the format version, dataset meta, model configuration
//! and the region trees, so models with data-dependent structure reload
//! exactly.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PgcError, Result};
use crate::graphdata::{DatasetMeta, GraphInstance};
use crate::pgcmodel::{ModelConfig, PgcModel};
use crate::regiongraph::RegionNode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.05,
            beta1: 0.9,
            beta2: 0.82,
            epsilon: 1e-8,
            batch_size: 256,
            epochs: 40,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(PgcError::Config("alpha must be positive".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(PgcError::Config(format!("{name} must lie in [0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(PgcError::Config("epsilon must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(PgcError::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &TrainConfig) {
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.alpha * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

const CHUNK: usize = 32;

/// Mean negative log-likelihood.
pub fn nll(model: &PgcModel, batch: &[GraphInstance]) -> Result<f64> {
    if batch.is_empty() {
        return Err(PgcError::invalid("nll of an empty batch"));
    }
    let sums: Vec<f64> = batch
        .par_chunks(CHUNK)
        .map(|chunk| chunk.iter().map(|g| model.logp(g)).sum::<Result<f64>>())
        .collect::<Result<_>>()?;
    Ok(-sums.iter().sum::<f64>() / batch.len() as f64)
}

/// Mean negative log-likelihood and its gradient with respect to
/// `model.params()`. Chunks are evaluated in parallel and reduced in order.
pub fn nll_with_grad(model: &PgcModel, batch: &[GraphInstance]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(PgcError::invalid("nll of an empty batch"));
    }
    let len = model.num_params();
    let scale = -1.0 / batch.len() as f64;
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut buf = vec![0.0; len];
            let mut total = 0.0;
            for g in chunk {
                total += model.logp_with_grad(g, scale, &mut buf)?;
            }
            Ok((total, buf))
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut log_grad = vec![0.0; len];
    for (t, buf) in &parts {
        total += t;
        for (a, b) in log_grad.iter_mut().zip(buf) {
            *a += b;
        }
    }
    let value = -total / batch.len() as f64;
    if !value.is_finite() {
        return Err(PgcError::Numeric(format!("non-finite nll {value}")));
    }
    Ok((value, model.raw_gradient(&log_grad)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nll: f64,
    /// `NaN` when there is no validation set.
    pub valid_nll: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: PgcModel,
    pub best_epoch: usize,
    /// Epoch 0 is the initial model.
    pub trace: Vec<EpochRecord>,
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Trains `model` and returns the checkpoint with the lowest validation NLL
/// (training NLL when `valid` is empty).
pub fn train(model: &PgcModel, train_set: &[GraphInstance], valid: &[GraphInstance], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(model, train_set, valid, cfg, |_| {})
}

/// [`train`] with a callback after every epoch (epoch 0 included).
pub fn train_with(
    model: &PgcModel,
    train_set: &[GraphInstance],
    valid: &[GraphInstance],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(PgcError::invalid("training set is empty"));
    }
    let mut current = model.clone();
    let evaluate = |m: &PgcModel| -> Result<EpochRecord> {
        Ok(EpochRecord {
            epoch: 0,
            train_nll: nll(m, train_set)?,
            valid_nll: if valid.is_empty() { f64::NAN } else { nll(m, valid)? },
        })
    };
    let score = |r: &EpochRecord| if valid.is_empty() { r.train_nll } else { r.valid_nll };
    let first = evaluate(&current)?;
    on_epoch(&first);
    let mut trace = vec![first];
    let mut best = current.clone();
    let mut best_epoch = 0;
    let mut best_score = score(&first);
    let mut params = current.params();
    let mut state = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed(cfg.seed, epoch)));
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<GraphInstance> = idx.iter().map(|&i| train_set[i].clone()).collect();
            let (_, grad) = nll_with_grad(&current, &batch)?;
            adam_step(&mut params, &grad, &mut state, cfg);
            current.set_params(&params)?;
        }
        let mut record = evaluate(&current)?;
        record.epoch = epoch;
        on_epoch(&record);
        if score(&record) < best_score {
            best_score = score(&record);
            best = current.clone();
            best_epoch = epoch;
        }
        trace.push(record);
    }
    Ok(TrainOutcome { best, best_epoch, trace })
}

/// Writes the trace as `epoch,train_nll,valid_nll` CSV.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &[EpochRecord]) -> std::io::Result<()> {
    writeln!(w, "epoch,train_nll,valid_nll")?;
    for r in trace {
        writeln!(w, "{},{},{}", r.epoch, r.train_nll, r.valid_nll)?;
    }
    Ok(())
}

pub const MAGIC: &[u8; 4] = b"PGC1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    meta: DatasetMeta,
    config: ModelConfig,
    node_trees: Vec<RegionNode>,
    edge_trees: Vec<RegionNode>,
    param_count: usize,
}

pub fn model_to_bytes(model: &PgcModel) -> Result<Vec<u8>> {
    let (node_trees, edge_trees) = model.region_trees();
    let params = model.params();
    let header = Header {
        version: FORMAT_VERSION,
        meta: model.meta().clone(),
        config: model.config().clone(),
        node_trees: node_trees.to_vec(),
        edge_trees: edge_trees.to_vec(),
        param_count: params.len(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(8 + json.len() + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<PgcModel> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(PgcError::Format("not a model file (bad magic)".into()));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = bytes
        .get(8..8 + header_len)
        .ok_or_else(|| PgcError::Format("truncated header".into()))?;
    let header: Header =
        serde_json::from_slice(body).map_err(|e| PgcError::Format(format!("bad header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(PgcError::Format(format!(
            "format version {} is not supported (expected {FORMAT_VERSION})",
            header.version
        )));
    }
    let raw = &bytes[8 + header_len..];
    if raw.len() != 8 * header.param_count {
        return Err(PgcError::Format(format!(
            "expected {} parameter bytes, found {}",
            8 * header.param_count,
            raw.len()
        )));
    }
    let params: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut model = PgcModel::from_structure(&header.meta, &header.config, header.node_trees, header.edge_trees)?;
    if model.num_params() != params.len() {
        return Err(PgcError::Format(format!(
            "structure has {} parameters, file stores {}",
            model.num_params(),
            params.len()
        )));
    }
    model.set_params(&params)?;
    Ok(model)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| PgcError::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| PgcError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        PgcError::io(path, e)
    })
}

pub fn save_model(model: &PgcModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &model_to_bytes(model)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PgcModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| PgcError::io(path, e))?;
    model_from_bytes(&bytes)
}

/// Loads a model and checks that it was trained for `meta`.
pub fn load_model_for(path: impl AsRef<Path>, meta: &DatasetMeta) -> Result<PgcModel> {
    let model = load_model(path)?;
    let stored = model.meta();
    if (stored.m, stored.n_x, stored.n_a) != (meta.m, meta.n_x, meta.n_a) {
        return Err(PgcError::DimensionMismatch(format!(
            "model was built for (m, n_x, n_a) = ({}, {}, {}), data has ({}, {}, {})",
            stored.m, stored.n_x, stored.n_a, meta.m, meta.n_x, meta.n_a
        )));
    }
    Ok(model)
}
