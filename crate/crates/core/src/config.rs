//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! mode = pipgc
//! ordering = bft
//! rg_node = bt
//! rg_edge = bt
//! dataset = train.jsonl
//! meta = meta.json
//! out_dir = runs/toy
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{PgcError, Result};
use crate::ordering::OrderingKind;
use crate::pgcmodel::{Mode, ModelConfig, DEFAULT_FACTORIAL_CAP};
use crate::regiongraph::{RegionGraphKind, RegionGraphSpec, DEFAULT_SMOOTHING};
use crate::training::TrainConfig;

pub const KEYS: &[&str] = &[
    "mode",
    "ordering",
    "rg_node",
    "rg_edge",
    "n_layers_node",
    "n_layers_edge",
    "n_s",
    "n_i",
    "n_r",
    "n_c",
    "alpha",
    "beta1",
    "beta2",
    "epsilon",
    "batch_size",
    "epochs",
    "seed",
    "dataset",
    "meta",
    "out_dir",
    "split",
    "factorial_cap",
    "max_width",
    "smoothing",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub dataset: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
}

impl RunConfig {
    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| PgcError::Config("config key `dataset` is missing".into()))
    }

    pub fn meta(&self) -> Result<&Path> {
        self.meta
            .as_deref()
            .ok_or_else(|| PgcError::Config("config key `meta` is missing".into()))
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| PgcError::Config(format!("config key `{key}`: cannot parse {raw:?}: {e}")))
}

fn parse_split(raw: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|p| parse_value::<f64>("split", p.trim()))
        .collect::<Result<_>>()?;
    let split: [f64; 3] = parts
        .try_into()
        .map_err(|_| PgcError::Config(format!("config key `split`: expected three fractions, got {raw:?}")))?;
    if split.iter().any(|f| !(0.0..=1.0).contains(f)) || (split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(PgcError::Config(format!(
            "config key `split`: fractions {raw:?} must lie in [0, 1] and sum to 1"
        )));
    }
    Ok(split)
}

/// Parses config text; relative paths are joined onto `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig> {
    let mut entries = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| PgcError::Config(format!("line {}: expected `key = value`, got {line:?}", lineno + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(PgcError::Config(format!(
                "line {}: unknown key `{key}` (known keys: {})",
                lineno + 1,
                KEYS.join(", ")
            )));
        }
        if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(PgcError::Config(format!("line {}: key `{key}` is set twice", lineno + 1)));
        }
    }
    let get = |k: &str| entries.get(k).map(String::as_str);
    fn or<T: FromStr>(key: &str, raw: Option<&str>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        raw.map_or(Ok(default), |r| parse_value(key, r))
    }

    let mode: Mode = or("mode", get("mode"), Mode::PiPgc)?;
    let ordering = match get("ordering") {
        Some(raw) => Some(parse_value::<OrderingKind>("ordering", raw)?),
        None => (mode == Mode::PiPgc).then_some(OrderingKind::Bft),
    };
    let seed: u64 = or("seed", get("seed"), 0)?;
    let n_r: usize = or("n_r", get("n_r"), 1)?;
    let smoothing: f64 = or("smoothing", get("smoothing"), DEFAULT_SMOOTHING)?;
    let rg = |kind_key: &str, layer_key: &str, default_layers: usize, salt: u64| -> Result<RegionGraphSpec> {
        Ok(RegionGraphSpec {
            kind: or(kind_key, get(kind_key), RegionGraphKind::Bt)?,
            n_layers: or(layer_key, get(layer_key), default_layers)?,
            n_repetitions: n_r,
            seed: seed ^ salt,
            smoothing,
        })
    };
    let model = ModelConfig {
        mode,
        ordering: if mode == Mode::PiPgc { ordering } else { None },
        node_rg: rg("rg_node", "n_layers_node", 2, 0x6e6f)?,
        edge_rg: rg("rg_edge", "n_layers_edge", 4, 0x6564)?,
        n_s: or("n_s", get("n_s"), 16)?,
        n_i: or("n_i", get("n_i"), 16)?,
        n_c: or("n_c", get("n_c"), 16)?,
        factorial_cap: or("factorial_cap", get("factorial_cap"), DEFAULT_FACTORIAL_CAP)?,
        max_width: or("max_width", get("max_width"), 4096)?,
        seed,
    };
    let defaults = TrainConfig::default();
    let train = TrainConfig {
        alpha: or("alpha", get("alpha"), defaults.alpha)?,
        beta1: or("beta1", get("beta1"), defaults.beta1)?,
        beta2: or("beta2", get("beta2"), defaults.beta2)?,
        epsilon: or("epsilon", get("epsilon"), defaults.epsilon)?,
        batch_size: or("batch_size", get("batch_size"), defaults.batch_size)?,
        epochs: or("epochs", get("epochs"), defaults.epochs)?,
        seed,
    };
    train.validate()?;
    let path = |k: &str| get(k).map(|p| base.join(p));
    Ok(RunConfig {
        model,
        train,
        dataset: path("dataset"),
        meta: path("meta"),
        out_dir: path("out_dir").unwrap_or_else(|| base.join("out")),
        split: get("split").map_or(Ok([0.8, 0.1, 0.1]), parse_split)?,
    })
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PgcError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}
