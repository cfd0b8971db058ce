//! Probabilistic graph circuits.
//!
//! A model combines a cardinality distribution `p(N)` over `{1..m}` with a
//! distribution over the padded `m`-slot frame: node-circuit outputs and
//! edge-circuit outputs (both of width `n_c`) are multiplied unit by unit and
//! mixed by one root sum. Graphs with `n < m` nodes marginalize the unused
//! slots. Four modes differ in how node order is treated:
//!
//! * `spgc` scores the graph in the order given;
//! * `pipgc` sorts the graph into a canonical order first;
//! * `nfactpgc` averages over all `n!` orders;
//! * `ipgc` replaces the circuits by a mixture of i.i.d. node and edge
//!   categoricals, which is order-free by construction.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{compile, Circuit, CompileOptions, ForwardCache, INIT_HALF_WIDTH};
use crate::error::{PgcError, Result};
use crate::graphdata::{
    all_permutations, num_edges, pad, permute_unchecked, tri_index_unchecked, tri_pair, DatasetMeta,
    GraphInstance, Permutation,
};
use crate::numeric::{log_softmax, log_sum_exp, sample_log_weights};
use crate::ordering::{canonicalize, OrderingKind};
use crate::regiongraph::{
    build_bt, build_hclt, build_lt, build_rt, build_rt_sync, RegionGraphKind, RegionGraphSpec, RegionNode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "ipgc")]
    IPgc,
    #[serde(rename = "pipgc")]
    PiPgc,
    #[serde(rename = "spgc")]
    SPgc,
    #[serde(rename = "nfactpgc")]
    FactorialPgc,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::IPgc, Mode::PiPgc, Mode::SPgc, Mode::FactorialPgc];

    pub fn name(self) -> &'static str {
        match self {
            Mode::IPgc => "ipgc",
            Mode::PiPgc => "pipgc",
            Mode::SPgc => "spgc",
            Mode::FactorialPgc => "nfactpgc",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = PgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ipgc" | "i_pgc" => Ok(Mode::IPgc),
            "pipgc" | "pi_pgc" => Ok(Mode::PiPgc),
            "spgc" | "s_pgc" => Ok(Mode::SPgc),
            "nfactpgc" | "factorial_pgc" => Ok(Mode::FactorialPgc),
            other => Err(PgcError::Config(format!(
                "unknown mode '{other}', expected one of ipgc|pipgc|spgc|nfactpgc"
            ))),
        }
    }
}

pub const DEFAULT_FACTORIAL_CAP: usize = 6;

/// Reference hyperparameter grid, quoted in configuration errors.
pub const GRID_HINT: &str = "reference grid: n_layers_node in {1,2,3}, n_layers_edge in {3,4,5}, \
n_s in {16,32,64} (hclt: {64,128,256,512}), n_i in {16,32}, n_r in {16,32,64}, \
n_c in {1,4,16,64,256,512}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: Mode,
    /// Canonical ordering (pipgc only).
    pub ordering: Option<OrderingKind>,
    pub node_rg: RegionGraphSpec,
    pub edge_rg: RegionGraphSpec,
    pub n_s: usize,
    pub n_i: usize,
    pub n_c: usize,
    pub factorial_cap: usize,
    /// Cap on Kronecker layer widths.
    pub max_width: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Small balanced-tree configuration, convenient for tests and toys.
    pub fn small(mode: Mode) -> Self {
        ModelConfig {
            mode,
            ordering: (mode == Mode::PiPgc).then_some(OrderingKind::Bft),
            node_rg: RegionGraphSpec::new(RegionGraphKind::Bt, 2),
            edge_rg: RegionGraphSpec::new(RegionGraphKind::Bt, 3),
            n_s: 4,
            n_i: 4,
            n_c: 4,
            factorial_cap: DEFAULT_FACTORIAL_CAP,
            max_width: 4096,
            seed: 0,
        }
    }

    pub fn with_region_graphs(mut self, node: RegionGraphKind, edge: RegionGraphKind) -> Self {
        self.node_rg.kind = node;
        self.edge_rg.kind = edge;
        self
    }

    pub fn validate(&self, meta: &DatasetMeta) -> Result<()> {
        let bad = |msg: String| Err(PgcError::Config(format!("{msg}; {GRID_HINT}")));
        if self.n_c == 0 {
            return bad("n_c must be at least 1".into());
        }
        if self.mode != Mode::IPgc && (self.n_s == 0 || self.n_i == 0) {
            return bad("n_s and n_i must be at least 1".into());
        }
        if self.mode == Mode::PiPgc && self.ordering.is_none() {
            return Err(PgcError::Config(
                "mode pipgc needs an ordering (random|bft|dft|rcm)".into(),
            ));
        }
        if self.mode == Mode::FactorialPgc && meta.m > self.factorial_cap {
            return Err(PgcError::Config(format!(
                "mode nfactpgc sums over n! orders and is capped at m <= {}, got m = {}",
                self.factorial_cap, meta.m
            )));
        }
        if self.mode != Mode::IPgc {
            self.node_rg.validate()?;
            self.edge_rg.validate()?;
            let sync = [self.node_rg.kind, self.edge_rg.kind]
                .iter()
                .filter(|&&k| k == RegionGraphKind::RtS)
                .count();
            if sync == 1 {
                return Err(PgcError::Config(
                    "rt_s synchronizes node and edge trees, so both must use rt_s".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Body {
    Circuits {
        node: Circuit,
        edge: Option<Circuit>,
        node_roots: Vec<RegionNode>,
        edge_roots: Vec<RegionNode>,
    },
    Iid {
        /// Raw `n_c × n_x` node logits and their row-wise log-softmax.
        node_raw: Vec<f64>,
        node_log: Vec<f64>,
        edge_raw: Vec<f64>,
        edge_log: Vec<f64>,
    },
}

/// Which variables a query observes, in the model's frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub n: usize,
    /// Length `m`; `None` marginalizes.
    pub nodes: Vec<Option<usize>>,
    /// Length `m(m-1)/2`, flat lower-triangle order.
    pub edges: Vec<Option<usize>>,
}

impl QuerySpec {
    /// Everything marginalized for a graph of `n` nodes.
    pub fn marginal(meta: &DatasetMeta, n: usize) -> Self {
        QuerySpec {
            n,
            nodes: vec![None; meta.m],
            edges: vec![None; meta.num_edges()],
        }
    }

    /// Everything observed.
    pub fn evidence(meta: &DatasetMeta, g: &GraphInstance) -> Result<Self> {
        let p = pad(g, meta)?;
        Ok(QuerySpec {
            n: g.n(),
            nodes: p.node_values(),
            edges: p.edge_values(),
        })
    }

    /// Marginalizes node `v` and all its incident edges.
    pub fn marginalize_node(&mut self, v: usize) {
        self.nodes[v] = None;
        for u in 0..self.n {
            if u != v {
                self.edges[tri_index_unchecked(u.max(v), u.min(v))] = None;
            }
        }
    }

    pub fn validate(&self, meta: &DatasetMeta) -> Result<()> {
        if self.n == 0 || self.n > meta.m {
            return Err(PgcError::invalid(format!("query n = {} outside 1..={}", self.n, meta.m)));
        }
        if self.nodes.len() != meta.m || self.edges.len() != meta.num_edges() {
            return Err(PgcError::DimensionMismatch(format!(
                "query has {} node and {} edge entries, meta needs {} and {}",
                self.nodes.len(),
                self.edges.len(),
                meta.m,
                meta.num_edges()
            )));
        }
        for (i, v) in self.nodes.iter().enumerate() {
            match v {
                Some(_) if i >= self.n => {
                    return Err(PgcError::invalid(format!(
                        "node {i} is padding for n = {} and must be marginalized",
                        self.n
                    )))
                }
                Some(c) if *c >= meta.n_x => {
                    return Err(PgcError::LabelOutOfRange(format!("node {i} label {c}, n_x = {}", meta.n_x)))
                }
                _ => {}
            }
        }
        for (k, v) in self.edges.iter().enumerate() {
            let (i, j) = tri_pair(k);
            match v {
                Some(_) if i >= self.n => {
                    return Err(PgcError::invalid(format!(
                        "edge ({i}, {j}) touches padding for n = {} and must be marginalized",
                        self.n
                    )))
                }
                Some(c) if *c >= meta.n_a => {
                    return Err(PgcError::LabelOutOfRange(format!(
                        "edge ({i}, {j}) label {c}, n_a = {}",
                        meta.n_a
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Parses `{"n": 3, "nodes": {"0": 1, "2": "marg"}, "edges": {"1,0": 2}}`.
    /// Edge keys are `"i,j"` pairs or flat indices; unlisted entries are
    /// marginalized.
    pub fn from_json(text: &str, meta: &DatasetMeta) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let obj = v
            .as_object()
            .ok_or_else(|| PgcError::invalid("query spec must be a JSON object"))?;
        let n = obj
            .get("n")
            .and_then(|n| n.as_u64())
            .ok_or_else(|| PgcError::invalid("query spec needs an integer field 'n'"))? as usize;
        let mut spec = QuerySpec::marginal(meta, n.min(meta.m).max(1));
        spec.n = n;
        let entry = |key: &str, val: &serde_json::Value| -> Result<Option<usize>> {
            if let Some(c) = val.as_u64() {
                return Ok(Some(c as usize));
            }
            match val.as_str() {
                Some("marg") | Some("?") => Ok(None),
                _ => Err(PgcError::invalid(format!(
                    "query entry '{key}' must be a category or \"marg\", got {val}"
                ))),
            }
        };
        if let Some(nodes) = obj.get("nodes") {
            let nodes = nodes
                .as_object()
                .ok_or_else(|| PgcError::invalid("'nodes' must be an object"))?;
            for (key, val) in nodes {
                let i: usize = key
                    .trim()
                    .parse()
                    .map_err(|_| PgcError::invalid(format!("node key '{key}' is not an index")))?;
                if i >= meta.m {
                    return Err(PgcError::invalid(format!("node {i} outside m = {}", meta.m)));
                }
                spec.nodes[i] = entry(key, val)?;
            }
        }
        if let Some(edges) = obj.get("edges") {
            let edges = edges
                .as_object()
                .ok_or_else(|| PgcError::invalid("'edges' must be an object"))?;
            for (key, val) in edges {
                let k = parse_edge_key(key, meta)?;
                spec.edges[k] = entry(key, val)?;
            }
        }
        spec.validate(meta)?;
        Ok(spec)
    }
}

fn parse_edge_key(key: &str, meta: &DatasetMeta) -> Result<usize> {
    let bad = || PgcError::invalid(format!("edge key '{key}' is neither \"i,j\" nor a flat index"));
    let k = if let Some((a, b)) = key.split_once(',') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a == b {
            return Err(bad());
        }
        tri_index_unchecked(a.max(b), a.min(b))
    } else {
        key.trim().parse().map_err(|_| bad())?
    };
    if k >= meta.num_edges() {
        return Err(PgcError::invalid(format!("edge key '{key}' outside m = {}", meta.m)));
    }
    Ok(k)
}

/// Result of evaluating the frame distribution on one assignment.
struct Frame {
    value: f64,
    terms: Vec<f64>,
    node: Option<ForwardCache>,
    edge: Option<ForwardCache>,
}

#[derive(Debug, Clone)]
pub struct PgcModel {
    meta: DatasetMeta,
    config: ModelConfig,
    cardinality_logits: Vec<f64>,
    log_cardinality: Vec<f64>,
    coupling: Vec<f64>,
    log_coupling: Vec<f64>,
    body: Body,
    notes: Vec<String>,
}

/// `ln((1/k) Σ exp(v_i))` with a fixed summation order.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    log_sum_exp(values) - (values.len() as f64).ln()
}

pub(crate) fn instance_seed(seed: u64, g: &GraphInstance) -> u64 {
    // FNV-1a over the labels
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for &x in g.node_labels().iter().chain(g.edge_labels()) {
        h ^= x as u64 + 1;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= (g.n() as u64) << 32;
    h
}

type Rows = Vec<Vec<Option<usize>>>;

/// Frame together with its observed node and edge slots.
type FrameEvidence<'a> = (&'a Frame, &'a [Option<usize>], &'a [Option<usize>]);

fn padded_rows(data: &[GraphInstance], meta: &DatasetMeta) -> Result<(Rows, Rows)> {
    let mut nodes = Vec::with_capacity(data.len());
    let mut edges = Vec::with_capacity(data.len());
    for g in data {
        let p = pad(g, meta)?;
        nodes.push(p.node_values());
        edges.push(p.edge_values());
    }
    Ok((nodes, edges))
}

fn build_trees(
    spec: &RegionGraphSpec,
    vars: &[usize],
    rows: &[Vec<Option<usize>>],
    cards: &[usize],
    notes: &mut Vec<String>,
    label: &str,
) -> Result<Vec<RegionNode>> {
    Ok(match spec.kind {
        RegionGraphKind::Bt => vec![build_bt(vars, spec.n_layers)?],
        RegionGraphKind::Lt => vec![build_lt(vars, spec.n_layers)?],
        RegionGraphKind::Rt => build_rt(vars, spec.n_layers, spec.n_repetitions, spec.seed)?,
        RegionGraphKind::Hclt => {
            let out = build_hclt(rows, vars, cards, spec.smoothing)?;
            if out.fell_back {
                notes.push(format!("{label} circuit: no data for hclt, used a linear tree instead"));
            }
            vec![out.root]
        }
        RegionGraphKind::RtS => unreachable!("rt_s is built jointly"),
    })
}

impl PgcModel {
    /// Builds a model with freshly initialized parameters. `data` is only
    /// read by hclt region graphs (canonicalized first in pipgc mode).
    pub fn new(meta: &DatasetMeta, config: &ModelConfig, data: &[GraphInstance]) -> Result<Self> {
        meta.validate()?;
        config.validate(meta)?;
        let mut notes = Vec::new();
        let (node_roots, edge_roots) = if config.mode == Mode::IPgc {
            (Vec::new(), Vec::new())
        } else {
            let node_vars: Vec<usize> = (0..meta.m).collect();
            let edge_vars: Vec<usize> = (0..meta.num_edges()).collect();
            if config.node_rg.kind == RegionGraphKind::RtS {
                build_rt_sync(
                    &node_vars,
                    &edge_vars,
                    meta,
                    config.node_rg.n_layers,
                    config.edge_rg.n_layers,
                    config.node_rg.n_repetitions,
                    config.node_rg.seed,
                )?
            } else {
                let needs_data = [config.node_rg.kind, config.edge_rg.kind].contains(&RegionGraphKind::Hclt);
                let (node_rows, edge_rows) = if needs_data {
                    let prepared: Vec<GraphInstance> = match (config.mode, config.ordering) {
                        (Mode::PiPgc, Some(kind)) => data
                            .iter()
                            .map(|g| canonicalize(g, kind, instance_seed(config.seed, g)))
                            .collect(),
                        _ => data.to_vec(),
                    };
                    padded_rows(&prepared, meta)?
                } else {
                    (Vec::new(), Vec::new())
                };
                let nodes = build_trees(&config.node_rg, &node_vars, &node_rows, &vec![meta.n_x; meta.m], &mut notes, "node")?;
                let edges = if edge_vars.is_empty() {
                    Vec::new()
                } else {
                    build_trees(&config.edge_rg, &edge_vars, &edge_rows, &vec![meta.n_a; edge_vars.len()], &mut notes, "edge")?
                };
                (nodes, edges)
            }
        };
        let mut model = PgcModel::from_structure(meta, config, node_roots, edge_roots)?;
        model.notes = notes;
        Ok(model)
    }

    /// Compiles a model from given region trees; parameters are initialized
    /// from `config.seed`.
    pub fn from_structure(
        meta: &DatasetMeta,
        config: &ModelConfig,
        node_roots: Vec<RegionNode>,
        edge_roots: Vec<RegionNode>,
    ) -> Result<Self> {
        config.validate(meta)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n_c = config.n_c;
        let body = if config.mode == Mode::IPgc {
            let mut draw = |len: usize| -> Vec<f64> {
                (0..len).map(|_| rng.gen_range(-INIT_HALF_WIDTH..=INIT_HALF_WIDTH)).collect()
            };
            let node_raw = draw(n_c * meta.n_x);
            let edge_raw = draw(n_c * meta.n_a);
            Body::Iid {
                node_log: rows_log_softmax(&node_raw, meta.n_x),
                edge_log: rows_log_softmax(&edge_raw, meta.n_a),
                node_raw,
                edge_raw,
            }
        } else {
            let opts = |spec: &RegionGraphSpec| {
                let n_i = if spec.kind == RegionGraphKind::Hclt { config.n_s } else { config.n_i };
                CompileOptions {
                    n_s: config.n_s,
                    n_i,
                    n_out: n_c,
                    max_width: config.max_width,
                }
            };
            let node = compile(&node_roots, &vec![meta.n_x; meta.m], &opts(&config.node_rg), &mut rng)?;
            let edge = if meta.num_edges() == 0 {
                None
            } else {
                Some(compile(&edge_roots, &vec![meta.n_a; meta.num_edges()], &opts(&config.edge_rg), &mut rng)?)
            };
            Body::Circuits {
                node,
                edge,
                node_roots,
                edge_roots,
            }
        };
        let coupling: Vec<f64> = (0..n_c)
            .map(|_| rng.gen_range(-INIT_HALF_WIDTH..=INIT_HALF_WIDTH))
            .collect();
        Ok(PgcModel {
            meta: meta.clone(),
            config: config.clone(),
            cardinality_logits: vec![0.0; meta.m],
            log_cardinality: log_softmax(&vec![0.0; meta.m]),
            log_coupling: log_softmax(&coupling),
            coupling,
            body,
            notes: Vec::new(),
        })
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Messages about structure decisions taken at construction (for
    /// example an hclt fallback).
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn node_circuit(&self) -> Option<&Circuit> {
        match &self.body {
            Body::Circuits { node, .. } => Some(node),
            Body::Iid { .. } => None,
        }
    }

    pub fn edge_circuit(&self) -> Option<&Circuit> {
        match &self.body {
            Body::Circuits { edge, .. } => edge.as_ref(),
            Body::Iid { .. } => None,
        }
    }

    /// Region trees of the node and edge circuits (empty for ipgc).
    pub fn region_trees(&self) -> (&[RegionNode], &[RegionNode]) {
        match &self.body {
            Body::Circuits {
                node_roots, edge_roots, ..
            } => (node_roots, edge_roots),
            Body::Iid { .. } => (&[], &[]),
        }
    }

    /// `ln p(n)` for `n = 1..m`.
    pub fn log_cardinality(&self) -> &[f64] {
        &self.log_cardinality
    }

    pub fn cardinality_logits(&self) -> &[f64] {
        &self.cardinality_logits
    }

    /// Normalized log coupling (or mixture) weights.
    pub fn coupling_log_weights(&self) -> &[f64] {
        &self.log_coupling
    }

    /// Flat parameter vector: cardinality logits, coupling, then the node and
    /// edge circuits (or the node and edge tables in ipgc mode).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(&self.cardinality_logits);
        out.extend_from_slice(&self.coupling);
        match &self.body {
            Body::Circuits { node, edge, .. } => {
                out.extend_from_slice(node.params());
                if let Some(e) = edge {
                    out.extend_from_slice(e.params());
                }
            }
            Body::Iid { node_raw, edge_raw, .. } => {
                out.extend_from_slice(node_raw);
                out.extend_from_slice(edge_raw);
            }
        }
        out
    }

    fn body_len(&self) -> (usize, usize) {
        match &self.body {
            Body::Circuits { node, edge, .. } => {
                (node.parameter_count(), edge.as_ref().map_or(0, Circuit::parameter_count))
            }
            Body::Iid { node_raw, edge_raw, .. } => (node_raw.len(), edge_raw.len()),
        }
    }

    pub fn num_params(&self) -> usize {
        let (a, b) = self.body_len();
        self.meta.m + self.config.n_c + a + b
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(PgcError::DimensionMismatch(format!(
                "model has {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let m = self.meta.m;
        let n_c = self.config.n_c;
        let (n_node, _) = self.body_len();
        self.cardinality_logits.copy_from_slice(&params[..m]);
        self.log_cardinality = log_softmax(&self.cardinality_logits);
        self.coupling.copy_from_slice(&params[m..m + n_c]);
        self.log_coupling = log_softmax(&self.coupling);
        let rest = &params[m + n_c..];
        let (n_x, n_a) = (self.meta.n_x, self.meta.n_a);
        match &mut self.body {
            Body::Circuits { node, edge, .. } => {
                node.set_params(&rest[..n_node])?;
                if let Some(e) = edge {
                    e.set_params(&rest[n_node..])?;
                }
            }
            Body::Iid {
                node_raw,
                node_log,
                edge_raw,
                edge_log,
            } => {
                node_raw.copy_from_slice(&rest[..n_node]);
                edge_raw.copy_from_slice(&rest[n_node..]);
                *node_log = rows_log_softmax(node_raw, n_x);
                *edge_log = rows_log_softmax(edge_raw, n_a);
            }
        }
        Ok(())
    }

    fn eval_frame(&self, nodes: &[Option<usize>], edges: &[Option<usize>]) -> Result<Frame> {
        let n_c = self.config.n_c;
        let mut terms = self.log_coupling.clone();
        let (node_cache, edge_cache) = match &self.body {
            Body::Circuits { node, edge, .. } => {
                let nc = node.forward(nodes)?;
                for (t, v) in terms.iter_mut().zip(node.root_values(&nc)) {
                    *t += v;
                }
                let ec = match edge {
                    Some(e) => {
                        let ec = e.forward(edges)?;
                        for (t, v) in terms.iter_mut().zip(e.root_values(&ec)) {
                            *t += v;
                        }
                        Some(ec)
                    }
                    None => None,
                };
                (Some(nc), ec)
            }
            Body::Iid { node_log, edge_log, .. } => {
                let (node_counts, edge_counts) = self.label_counts(nodes, edges)?;
                let (n_x, n_a) = (self.meta.n_x, self.meta.n_a);
                for (c, t) in terms.iter_mut().enumerate().take(n_c) {
                    *t += dot_counts(&node_counts, &node_log[c * n_x..(c + 1) * n_x])
                        + dot_counts(&edge_counts, &edge_log[c * n_a..(c + 1) * n_a]);
                }
                (None, None)
            }
        };
        let value = log_sum_exp(&terms);
        Ok(Frame {
            value,
            terms,
            node: node_cache,
            edge: edge_cache,
        })
    }

    fn label_counts(&self, nodes: &[Option<usize>], edges: &[Option<usize>]) -> Result<(Vec<u32>, Vec<u32>)> {
        let mut node_counts = vec![0u32; self.meta.n_x];
        for &x in nodes.iter().flatten() {
            *node_counts
                .get_mut(x)
                .ok_or_else(|| PgcError::LabelOutOfRange(format!("node label {x}, n_x = {}", self.meta.n_x)))? += 1;
        }
        let mut edge_counts = vec![0u32; self.meta.n_a];
        for &a in edges.iter().flatten() {
            *edge_counts
                .get_mut(a)
                .ok_or_else(|| PgcError::LabelOutOfRange(format!("edge label {a}, n_a = {}", self.meta.n_a)))? += 1;
        }
        Ok((node_counts, edge_counts))
    }

    /// Adds `scale · ∂value/∂θ` for the normalized log-parameters into `buf`
    /// (laid out like `params()`).
    fn frame_backward(
        &self,
        frame: &Frame,
        nodes: &[Option<usize>],
        edges: &[Option<usize>],
        scale: f64,
        buf: &mut [f64],
    ) -> Result<()> {
        if frame.value == f64::NEG_INFINITY {
            return Ok(());
        }
        let m = self.meta.m;
        let n_c = self.config.n_c;
        let r: Vec<f64> = frame.terms.iter().map(|t| scale * (t - frame.value).exp()).collect();
        for (b, rc) in buf[m..m + n_c].iter_mut().zip(&r) {
            *b += rc;
        }
        let (n_node, _) = self.body_len();
        let rest = &mut buf[m + n_c..];
        let (node_buf, edge_buf) = rest.split_at_mut(n_node);
        match &self.body {
            Body::Circuits { node, edge, .. } => {
                node.backward(frame.node.as_ref().expect("node cache"), &r, node_buf)?;
                if let (Some(e), Some(ec)) = (edge, frame.edge.as_ref()) {
                    e.backward(ec, &r, edge_buf)?;
                }
            }
            Body::Iid { .. } => {
                let (node_counts, edge_counts) = self.label_counts(nodes, edges)?;
                let (n_x, n_a) = (self.meta.n_x, self.meta.n_a);
                for (c, rc) in r.iter().enumerate() {
                    for (x, &k) in node_counts.iter().enumerate() {
                        node_buf[c * n_x + x] += rc * k as f64;
                    }
                    for (a, &k) in edge_counts.iter().enumerate() {
                        edge_buf[c * n_a + a] += rc * k as f64;
                    }
                }
            }
        }
        Ok(())
    }

    /// Converts a gradient with respect to all normalized log-parameters into
    /// the gradient with respect to the raw parameters of `params()`.
    pub fn raw_gradient(&self, log_grad: &[f64]) -> Vec<f64> {
        let m = self.meta.m;
        let n_c = self.config.n_c;
        let mut out = vec![0.0; log_grad.len()];
        softmax_chain(&log_grad[..m], &self.log_cardinality, &mut out[..m]);
        softmax_chain(&log_grad[m..m + n_c], &self.log_coupling, &mut out[m..m + n_c]);
        let (n_node, _) = self.body_len();
        let (g_node, g_edge) = log_grad[m + n_c..].split_at(n_node);
        let (o_node, o_edge) = out[m + n_c..].split_at_mut(n_node);
        match &self.body {
            Body::Circuits { node, edge, .. } => {
                node.raw_gradient_into(g_node, o_node);
                if let Some(e) = edge {
                    e.raw_gradient_into(g_edge, o_edge);
                }
            }
            Body::Iid { node_log, edge_log, .. } => {
                for (rows, (g, o), k) in [
                    (node_log, (g_node, o_node), self.meta.n_x),
                    (edge_log, (g_edge, &mut *o_edge), self.meta.n_a),
                ] {
                    for ((gr, or), lr) in g.chunks(k).zip(o.chunks_mut(k)).zip(rows.chunks(k)) {
                        softmax_chain(gr, lr, or);
                    }
                }
            }
        }
        out
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.meta.m {
            return Err(PgcError::invalid(format!("n = {n} outside 1..={}", self.meta.m)));
        }
        if self.config.mode == Mode::FactorialPgc && n > self.config.factorial_cap {
            return Err(PgcError::invalid(format!(
                "nfactpgc is capped at n <= {}, got {n}",
                self.config.factorial_cap
            )));
        }
        Ok(())
    }

    /// `ln p(G^n | n)` of the padded instance, in the order given.
    pub fn logp_joint_fixed(&self, g: &GraphInstance) -> Result<f64> {
        let p = pad(g, &self.meta)?;
        Ok(self.eval_frame(&p.node_values(), &p.edge_values())?.value)
    }

    /// The canonical form of `g` used by pipgc (identity for other modes).
    pub fn canonical_form(&self, g: &GraphInstance) -> GraphInstance {
        match (self.config.mode, self.config.ordering) {
            (Mode::PiPgc, Some(kind)) => canonicalize(g, kind, instance_seed(self.config.seed, g)),
            _ => g.clone(),
        }
    }

    /// Frame log-values of `πg` for every `π ∈ S_n`, in lexicographic order.
    pub fn permuted_frame_values(&self, g: &GraphInstance) -> Result<Vec<f64>> {
        all_permutations(g.n())
            .map(|p| self.logp_joint_fixed(&permute_unchecked(g, &p)))
            .collect()
    }

    /// `ln p(G)` under the model's mode.
    pub fn logp(&self, g: &GraphInstance) -> Result<f64> {
        self.logp_accumulate(g, None)
    }

    /// `ln p(G)` while adding `scale · ∂ ln p(G)/∂θ` (normalized
    /// log-parameter space, see [`PgcModel::raw_gradient`]) into `buf`.
    pub fn logp_with_grad(&self, g: &GraphInstance, scale: f64, buf: &mut [f64]) -> Result<f64> {
        if buf.len() != self.num_params() {
            return Err(PgcError::DimensionMismatch("gradient buffer size".into()));
        }
        self.logp_accumulate(g, Some((scale, buf)))
    }

    fn logp_accumulate(&self, g: &GraphInstance, mut grad: Option<(f64, &mut [f64])>) -> Result<f64> {
        g.validate(&self.meta)?;
        let n = g.n();
        self.check_n(n)?;
        let log_pn = self.log_cardinality[n - 1];
        if let Some((scale, buf)) = grad.as_mut() {
            buf[n - 1] += *scale;
        }
        let frame_value = match self.config.mode {
            Mode::SPgc | Mode::IPgc | Mode::PiPgc => {
                let g = self.canonical_form(g);
                let p = pad(&g, &self.meta)?;
                let (nodes, edges) = (p.node_values(), p.edge_values());
                let frame = self.eval_frame(&nodes, &edges)?;
                if let Some((scale, buf)) = grad {
                    self.frame_backward(&frame, &nodes, &edges, scale, buf)?;
                }
                frame.value
            }
            Mode::FactorialPgc => {
                let mut frames = Vec::new();
                let mut values = Vec::new();
                for p in all_permutations(n) {
                    let padded = pad(&permute_unchecked(g, &p), &self.meta)?;
                    let (nodes, edges) = (padded.node_values(), padded.edge_values());
                    let frame = self.eval_frame(&nodes, &edges)?;
                    values.push(frame.value);
                    if grad.is_some() {
                        frames.push((frame, nodes, edges));
                    }
                }
                let total = log_mean_exp(&values);
                if let Some((scale, buf)) = grad {
                    let lse = log_sum_exp(&values);
                    for (frame, nodes, edges) in &frames {
                        let w = (frame.value - lse).exp();
                        self.frame_backward(frame, nodes, edges, scale * w, buf)?;
                    }
                }
                total
            }
        };
        Ok(frame_value + log_pn)
    }

    /// Log-probability of the evidence/marginal event described by `q`, in
    /// the model frame (pipgc queries are read in canonical order), plus
    /// `ln p(n)`.
    pub fn query(&self, q: &QuerySpec) -> Result<f64> {
        q.validate(&self.meta)?;
        self.check_n(q.n)?;
        let log_pn = self.log_cardinality[q.n - 1];
        let value = match self.config.mode {
            Mode::FactorialPgc => {
                let values = all_permutations(q.n)
                    .map(|p| {
                        let (nodes, edges) = permute_frame(&q.nodes, &q.edges, q.n, &p);
                        Ok(self.eval_frame(&nodes, &edges)?.value)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                log_mean_exp(&values)
            }
            _ => self.eval_frame(&q.nodes, &q.edges)?.value,
        };
        Ok(value + log_pn)
    }

    /// One unconditional sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GraphInstance> {
        let n = 1 + sample_log_weights(&self.log_cardinality, rng);
        let c = sample_log_weights(&self.log_coupling, rng);
        let (nodes, edges) = self.sample_frame(c, None, rng)?;
        let h = read_off(&nodes, &edges, n)?;
        Ok(match self.config.mode {
            Mode::FactorialPgc => permute_unchecked(&h, &Permutation::random(n, rng)),
            _ => h,
        })
    }

    /// Samples all frame variables under component `c`, conditioned on the
    /// evidence inside `frame` when given.
    fn sample_frame<R: Rng + ?Sized>(
        &self,
        c: usize,
        frame: Option<FrameEvidence<'_>>,
        rng: &mut R,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        match &self.body {
            Body::Circuits { node, edge, .. } => {
                let nodes = node.sample(c, frame.and_then(|f| f.0.node.as_ref()), rng)?;
                let edges = match edge {
                    Some(e) => e.sample(c, frame.and_then(|f| f.0.edge.as_ref()), rng)?,
                    None => Vec::new(),
                };
                Ok((nodes, edges))
            }
            Body::Iid { node_log, edge_log, .. } => {
                let (n_x, n_a) = (self.meta.n_x, self.meta.n_a);
                let row_x = &node_log[c * n_x..(c + 1) * n_x];
                let row_a = &edge_log[c * n_a..(c + 1) * n_a];
                let observed_nodes = frame.map(|f| f.1);
                let observed_edges = frame.map(|f| f.2);
                let nodes = (0..self.meta.m)
                    .map(|i| {
                        observed_nodes
                            .and_then(|o| o[i])
                            .unwrap_or_else(|| sample_log_weights(row_x, rng))
                    })
                    .collect();
                let edges = (0..self.meta.num_edges())
                    .map(|k| {
                        observed_edges
                            .and_then(|o| o[k])
                            .unwrap_or_else(|| sample_log_weights(row_a, rng))
                    })
                    .collect();
                Ok((nodes, edges))
            }
        }
    }

    /// Prepares conditional sampling around a known subgraph occupying node
    /// slots `[0, k)` (canonicalized first in pipgc mode). `None` means no
    /// evidence.
    pub fn conditional_sampler(&self, evidence: Option<&GraphInstance>) -> Result<ConditionalSampler<'_>> {
        let evidence = match evidence {
            Some(g) => {
                g.validate(&self.meta)?;
                Some(self.canonical_form(g))
            }
            None => None,
        };
        let k = evidence.as_ref().map_or(0, GraphInstance::n);
        let spec = |n: usize| -> QuerySpec {
            let mut q = QuerySpec::marginal(&self.meta, n);
            if let Some(g) = &evidence {
                for (i, &x) in g.node_labels().iter().enumerate() {
                    q.nodes[i] = Some(x);
                }
                for (e, &a) in g.edge_labels().iter().enumerate() {
                    q.edges[e] = Some(a);
                }
            }
            q
        };
        let mut candidates = Vec::new();
        for n in k.max(1)..=self.meta.m {
            if self.config.mode == Mode::FactorialPgc && n > self.config.factorial_cap {
                continue;
            }
            let q = spec(n);
            let (log_weight, perms) = match self.config.mode {
                Mode::FactorialPgc => {
                    let perms: Vec<Permutation> = all_permutations(n).collect();
                    let values = perms
                        .iter()
                        .map(|p| {
                            let (nodes, edges) = permute_frame(&q.nodes, &q.edges, n, p);
                            Ok(self.eval_frame(&nodes, &edges)?.value)
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    (log_mean_exp(&values), Some((perms, values)))
                }
                _ => (self.eval_frame(&q.nodes, &q.edges)?.value, None),
            };
            candidates.push(Candidate {
                n,
                log_weight: log_weight + self.log_cardinality[n - 1],
                perms,
                spec: q,
            });
        }
        if candidates.is_empty() {
            return Err(PgcError::invalid("no admissible node count for this evidence"));
        }
        let weights: Vec<f64> = candidates.iter().map(|c| c.log_weight).collect();
        if log_sum_exp(&weights) == f64::NEG_INFINITY {
            return Err(PgcError::Numeric("evidence has zero probability under the model".into()));
        }
        Ok(ConditionalSampler {
            model: self,
            evidence,
            candidates,
            weights,
        })
    }

    /// One sample conditioned on a known subgraph in slots `[0, k)`.
    pub fn sample_conditional<R: Rng + ?Sized>(
        &self,
        evidence: Option<&GraphInstance>,
        rng: &mut R,
    ) -> Result<GraphInstance> {
        self.conditional_sampler(evidence)?.sample(rng)
    }
}

struct Candidate {
    n: usize,
    log_weight: f64,
    perms: Option<(Vec<Permutation>, Vec<f64>)>,
    spec: QuerySpec,
}

/// Precomputed posterior over node counts (and, for nfactpgc, orders) for
/// repeated conditional sampling.
pub struct ConditionalSampler<'a> {
    model: &'a PgcModel,
    evidence: Option<GraphInstance>,
    candidates: Vec<Candidate>,
    weights: Vec<f64>,
}

impl ConditionalSampler<'_> {
    /// The evidence as placed in slots `[0, k)`.
    pub fn evidence(&self) -> Option<&GraphInstance> {
        self.evidence.as_ref()
    }

    /// Posterior `ln p(n | evidence)` as `(n, value)` pairs.
    pub fn node_count_posterior(&self) -> Vec<(usize, f64)> {
        let z = log_sum_exp(&self.weights);
        self.candidates.iter().map(|c| (c.n, c.log_weight - z)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GraphInstance> {
        let model = self.model;
        let cand = &self.candidates[sample_log_weights(&self.weights, rng)];
        let n = cand.n;
        let (perm, nodes, edges) = match &cand.perms {
            Some((perms, values)) => {
                let p = &perms[sample_log_weights(values, rng)];
                let (nodes, edges) = permute_frame(&cand.spec.nodes, &cand.spec.edges, n, p);
                (Some(p), nodes, edges)
            }
            None => (None, cand.spec.nodes.clone(), cand.spec.edges.clone()),
        };
        let frame = model.eval_frame(&nodes, &edges)?;
        let c = sample_log_weights(&frame.terms, rng);
        let (sn, se) = model.sample_frame(c, Some((&frame, &nodes, &edges)), rng)?;
        let h = read_off(&sn, &se, n)?;
        Ok(match perm {
            Some(p) => permute_unchecked(&h, &p.inverse()),
            None => h,
        })
    }
}

/// Frame arrays of `πg` given those of `g`: slot `i < n` of the result
/// holds slot `π(i)` of the input.
fn permute_frame(
    nodes: &[Option<usize>],
    edges: &[Option<usize>],
    n: usize,
    p: &Permutation,
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut out_nodes = nodes.to_vec();
    let mut out_edges = edges.to_vec();
    for i in 0..n {
        out_nodes[i] = nodes[p.apply(i)];
        for j in 0..i {
            let (a, b) = (p.apply(i), p.apply(j));
            out_edges[tri_index_unchecked(i, j)] = edges[tri_index_unchecked(a.max(b), a.min(b))];
        }
    }
    (out_nodes, out_edges)
}

fn read_off(nodes: &[usize], edges: &[usize], n: usize) -> Result<GraphInstance> {
    GraphInstance::new(nodes[..n].to_vec(), edges[..num_edges(n)].to_vec())
}

fn rows_log_softmax(raw: &[f64], k: usize) -> Vec<f64> {
    raw.chunks(k).flat_map(log_softmax).collect()
}

fn dot_counts(counts: &[u32], logs: &[f64]) -> f64 {
    counts
        .iter()
        .zip(logs)
        .filter(|(&k, _)| k > 0)
        .map(|(&k, &l)| k as f64 * l)
        .sum()
}

/// `out_k = g_k - softmax_k · Σ g` for one log-softmax row.
fn softmax_chain(g: &[f64], log_p: &[f64], out: &mut [f64]) {
    let total: f64 = g.iter().sum();
    for k in 0..g.len() {
        out[k] = g[k] - log_p[k].exp() * total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphdata::permute;

    fn tiny() -> DatasetMeta {
        DatasetMeta::new(3, 2, 2).unwrap()
    }

    fn g3() -> GraphInstance {
        GraphInstance::from_edges(vec![0, 1, 1], &[(1, 0, 1), (2, 1, 1)]).unwrap()
    }

    #[test]
    fn constructor_examples() {
        let m = PgcModel::new(&tiny(), &ModelConfig::small(Mode::SPgc), &[]).unwrap();
        assert!(m.node_circuit().unwrap().check_structure().is_empty());
        assert!(m.edge_circuit().unwrap().check_structure().is_empty());

        let big = DatasetMeta::new(9, 4, 4).unwrap();
        assert!(matches!(
            PgcModel::new(&big, &ModelConfig::small(Mode::FactorialPgc), &[]),
            Err(PgcError::Config(_))
        ));
        let mut cfg = ModelConfig::small(Mode::PiPgc);
        cfg.ordering = None;
        assert!(PgcModel::new(&tiny(), &cfg, &[]).is_err());
        let mut cfg = ModelConfig::small(Mode::SPgc);
        cfg.n_c = 0;
        let err = PgcModel::new(&tiny(), &cfg, &[]).unwrap_err().to_string();
        assert!(err.contains("reference grid"));
    }

    #[test]
    fn hclt_without_data_falls_back() {
        let cfg = ModelConfig::small(Mode::SPgc).with_region_graphs(RegionGraphKind::Hclt, RegionGraphKind::Hclt);
        let m = PgcModel::new(&tiny(), &cfg, &[]).unwrap();
        assert_eq!(m.notes().len(), 2);
        let m = PgcModel::new(&tiny(), &cfg, &[g3(), g3()]).unwrap();
        assert!(m.notes().is_empty());
    }

    #[test]
    fn joint_fixed_examples() {
        let mut cfg = ModelConfig::small(Mode::SPgc);
        cfg.n_c = 1;
        let m = PgcModel::new(&tiny(), &cfg, &[]).unwrap();
        let g = g3();
        let p = pad(&g, &tiny()).unwrap();
        let node = m.node_circuit().unwrap().evaluate(&p.node_values()).unwrap()[0];
        let edge = m.edge_circuit().unwrap().evaluate(&p.edge_values()).unwrap()[0];
        assert!((m.logp_joint_fixed(&g).unwrap() - (node + edge)).abs() < 1e-12);

        let all_marg = QuerySpec::marginal(&tiny(), 2);
        assert_eq!(m.query(&all_marg).unwrap(), m.log_cardinality()[1]);
    }

    #[test]
    fn one_node_model_by_hand() {
        let meta = DatasetMeta::new(1, 2, 2).unwrap();
        let mut cfg = ModelConfig::small(Mode::SPgc);
        cfg.n_c = 1;
        cfg.n_i = 1;
        cfg.n_s = 1;
        let mut m = PgcModel::new(&meta, &cfg, &[]).unwrap();
        assert!(m.edge_circuit().is_none());
        // cardinality, coupling, input row [ln .2, ln .8], root weight
        m.set_params(&[0.0, 0.0, 0.2f64.ln(), 0.8f64.ln(), 0.0]).unwrap();
        let g = GraphInstance::edgeless(vec![1]).unwrap();
        assert!((m.logp(&g).unwrap() - 0.8f64.ln()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(m.sample(&mut rng).unwrap().n(), 1);
        }
    }

    #[test]
    fn ipgc_component_by_hand() {
        let meta = DatasetMeta::new(4, 3, 2).unwrap();
        let mut cfg = ModelConfig::small(Mode::IPgc);
        cfg.n_c = 1;
        let mut m = PgcModel::new(&meta, &cfg, &[]).unwrap();
        let zeros = vec![0.0; m.num_params()];
        m.set_params(&zeros).unwrap();
        let g = GraphInstance::from_edges(vec![0, 2], &[(1, 0, 1)]).unwrap();
        let expected = 2.0 * (1.0f64 / 3.0).ln() + 0.5f64.ln();
        assert!((m.logp_joint_fixed(&g).unwrap() - expected).abs() < 1e-12);
        let single = GraphInstance::edgeless(vec![1]).unwrap();
        assert!((m.logp_joint_fixed(&single).unwrap() - (1.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn factorial_matches_explicit_average() {
        let meta = DatasetMeta::new(4, 2, 3).unwrap();
        let f = PgcModel::new(&meta, &ModelConfig::small(Mode::FactorialPgc), &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = f.params();
        p.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        let mut f = f;
        f.set_params(&p).unwrap();
        let mut s_cfg = ModelConfig::small(Mode::SPgc);
        s_cfg.factorial_cap = 6;
        let mut s = PgcModel::new(&meta, &s_cfg, &[]).unwrap();
        s.set_params(&p).unwrap();
        let one = GraphInstance::edgeless(vec![1]).unwrap();
        assert_eq!(f.logp(&one).unwrap(), s.logp(&one).unwrap());

        let g = GraphInstance::from_edges(vec![0, 1, 1, 0], &[(1, 0, 1), (3, 1, 2), (2, 0, 1)]).unwrap();
        let values: Vec<f64> = all_permutations(4)
            .map(|p| s.logp_joint_fixed(&permute(&g, &p).unwrap()).unwrap())
            .collect();
        let expected = log_sum_exp(&values) - 24f64.ln() + f.log_cardinality()[3];
        assert!((f.logp(&g).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn query_everything_observed_is_logp() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for mode in Mode::ALL {
            let mut m = PgcModel::new(&tiny(), &ModelConfig::small(mode), &[]).unwrap();
            let p: Vec<f64> = (0..m.num_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            m.set_params(&p).unwrap();
            let g = m.canonical_form(&g3());
            let q = QuerySpec::evidence(&tiny(), &g).unwrap();
            let direct = match mode {
                Mode::FactorialPgc => m.logp(&g).unwrap(),
                _ => m.logp_joint_fixed(&g).unwrap() + m.log_cardinality()[2],
            };
            assert_eq!(m.query(&q).unwrap(), direct, "{mode}");
        }
    }

    #[test]
    fn query_spec_validation_and_json() {
        let meta = tiny();
        let q = QuerySpec::from_json(r#"{"n":2,"nodes":{"0":1,"1":"marg"},"edges":{"1,0":1}}"#, &meta).unwrap();
        assert_eq!(q.nodes, vec![Some(1), None, None]);
        assert_eq!(q.edges, vec![Some(1), None, None]);
        assert!(QuerySpec::from_json(r#"{"n":2,"nodes":{"2":1}}"#, &meta).is_err());
        assert!(QuerySpec::from_json(r#"{"n":2,"edges":{"2,1":1}}"#, &meta).is_err());
        assert!(QuerySpec::from_json(r#"{"n":2,"nodes":{"0":5}}"#, &meta).is_err());
        assert!(QuerySpec::from_json(r#"{"nodes":{}}"#, &meta).is_err());
        let mut q = QuerySpec::evidence(&meta, &g3()).unwrap();
        q.marginalize_node(1);
        assert_eq!(q.nodes, vec![Some(0), None, Some(1)]);
        assert_eq!(q.edges, vec![None, Some(0), None]);
    }

    #[test]
    fn cardinality_examples() {
        let meta = DatasetMeta::new(4, 2, 2).unwrap();
        let m = PgcModel::new(&meta, &ModelConfig::small(Mode::SPgc), &[]).unwrap();
        for &v in m.log_cardinality() {
            assert!((v - 0.25f64.ln()).abs() < 1e-15);
        }
        assert!(log_sum_exp(m.log_cardinality()).abs() < 1e-15);
    }

    #[test]
    fn full_evidence_is_returned_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for mode in Mode::ALL {
            let m = PgcModel::new(&tiny(), &ModelConfig::small(mode), &[]).unwrap();
            let g = m.canonical_form(&g3());
            for _ in 0..20 {
                assert_eq!(m.sample_conditional(Some(&g), &mut rng).unwrap(), g);
            }
        }
    }

    #[test]
    fn permute_frame_matches_permute() {
        let meta = DatasetMeta::new(5, 3, 3).unwrap();
        let g = GraphInstance::from_edges(vec![0, 1, 2, 1], &[(1, 0, 1), (3, 1, 2), (2, 0, 1)]).unwrap();
        let q = QuerySpec::evidence(&meta, &g).unwrap();
        for p in all_permutations(4) {
            let (nodes, edges) = permute_frame(&q.nodes, &q.edges, 4, &p);
            let expected = QuerySpec::evidence(&meta, &permute(&g, &p).unwrap()).unwrap();
            assert_eq!(nodes, expected.nodes);
            assert_eq!(edges, expected.edges);
        }
    }
}
