//! Generation metrics, the anomaly-detection experiment and ordering
//! diagnostics.

use std::collections::{HashSet, VecDeque};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PgcError, Result};
use crate::graphdata::{permute, GraphInstance, Permutation, NO_EDGE};
use crate::ordering::{canonicalize, OrderingKind};
use crate::pgcmodel::{instance_seed, PgcModel};

/// Maximum valence per node category and bond order per edge category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValencyTable {
    pub max_valence: Vec<u32>,
    pub bond_order: Vec<u32>,
}

impl ValencyTable {
    pub fn new(max_valence: Vec<u32>, bond_order: Vec<u32>) -> Result<Self> {
        let vt = ValencyTable { max_valence, bond_order };
        vt.validate()?;
        Ok(vt)
    }

    /// C, N, O, F with no-edge, single, double and triple bonds.
    pub fn qm9() -> Self {
        ValencyTable {
            max_valence: vec![4, 3, 2, 1],
            bond_order: vec![0, 1, 2, 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.bond_order.first() {
            Some(0) => Ok(()),
            Some(b) => Err(PgcError::invalid(format!(
                "valency table: bond order of the no-edge category must be 0, got {b}"
            ))),
            None => Err(PgcError::invalid("valency table: no edge categories")),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PgcError::io(path, e))?;
        let vt: ValencyTable = serde_json::from_str(&text).map_err(|e| PgcError::Record {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        vt.validate()?;
        Ok(vt)
    }
}

/// Valence rule at every node plus connectivity.
pub fn is_valid(g: &GraphInstance, vt: &ValencyTable) -> Result<bool> {
    let n = g.n();
    let mut load = vec![0u32; n];
    for (i, j, a) in g.edge_list() {
        let order = *vt
            .bond_order
            .get(a)
            .ok_or_else(|| PgcError::LabelOutOfRange(format!("edge category {a} is not in the valency table")))?;
        load[i] += order;
        load[j] += order;
    }
    for (i, &x) in g.node_labels().iter().enumerate() {
        let cap = *vt
            .max_valence
            .get(x)
            .ok_or_else(|| PgcError::LabelOutOfRange(format!("node category {x} is not in the valency table")))?;
        if load[i] > cap {
            return Ok(false);
        }
    }
    Ok(is_connected(g))
}

fn label_matrix(g: &GraphInstance) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut a = vec![vec![NO_EDGE; n]; n];
    for (i, j, c) in g.edge_list() {
        a[i][j] = c;
        a[j][i] = c;
    }
    a
}

pub fn is_connected(g: &GraphInstance) -> bool {
    let adj = g.adjacency();
    let mut seen = vec![false; g.n()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == g.n()
}

/// Color refinement: stable node colors that depend only on the labeled
/// structure, never on node indices.
fn refined_colors(g: &GraphInstance, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut colors: Vec<usize> = g.node_labels().to_vec();
    let mut classes = HashSet::<usize>::from_iter(colors.iter().copied()).len();
    loop {
        let signatures: Vec<(usize, Vec<(usize, usize)>)> = (0..g.n())
            .map(|i| {
                let mut nb: Vec<(usize, usize)> = adj[i]
                    .iter()
                    .enumerate()
                    .filter(|&(j, &a)| j != i && a != NO_EDGE)
                    .map(|(j, &a)| (a, colors[j]))
                    .collect();
                nb.sort_unstable();
                (colors[i], nb)
            })
            .collect();
        let mut distinct = signatures.clone();
        distinct.sort();
        distinct.dedup();
        colors = signatures
            .iter()
            .map(|s| distinct.binary_search(s).expect("present"))
            .collect();
        if distinct.len() == classes {
            return colors;
        }
        classes = distinct.len();
    }
}

fn serialize_from(g: &GraphInstance, adj: &[Vec<usize>], colors: &[usize], start: usize) -> Vec<u8> {
    let n = g.n();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    let mut root = Some(start);
    while let Some(r) = root {
        seen[r] = true;
        queue.push_back(r);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = (0..n).filter(|&v| !seen[v] && adj[u][v] != NO_EDGE).collect();
            next.sort_by_key(|&v| (adj[u][v], colors[v], v));
            for v in next {
                seen[v] = true;
                queue.push_back(v);
            }
        }
        root = (0..n).filter(|&v| !seen[v]).min_by_key(|&v| (colors[v], v));
    }
    let mut bytes = Vec::with_capacity(2 + n + n * (n - 1) / 2);
    bytes.extend_from_slice(&(n as u16).to_be_bytes());
    bytes.extend(order.iter().map(|&u| g.node_labels()[u] as u8));
    for i in 1..n {
        for j in 0..i {
            bytes.push(adj[order[i]][order[j]] as u8);
        }
    }
    bytes
}

/// Traversal certificate: the smallest breadth-first serialization over all
/// start nodes. Equal for isomorphic graphs unless two structurally
/// indistinguishable nodes are not automorphic.
pub fn certificate(g: &GraphInstance) -> Vec<u8> {
    let adj = label_matrix(g);
    let colors = refined_colors(g, &adj);
    (0..g.n())
        .map(|s| serialize_from(g, &adj, &colors, s))
        .min()
        .expect("graphs have at least one node")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Percent of all samples.
    pub valid: f64,
    /// Percent of valid samples.
    pub unique: f64,
    /// Percent of valid and unique samples.
    pub novel: f64,
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

pub fn metrics_suite(samples: &[GraphInstance], train: &[GraphInstance], vt: &ValencyTable) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(PgcError::invalid("no samples to evaluate"));
    }
    let validity: Vec<bool> = samples.par_iter().map(|g| is_valid(g, vt)).collect::<Result<_>>()?;
    let valid: Vec<&GraphInstance> = samples.iter().zip(&validity).filter(|(_, &v)| v).map(|(g, _)| g).collect();
    let unique: HashSet<Vec<u8>> = valid.par_iter().map(|g| certificate(g)).collect::<Vec<_>>().into_iter().collect();
    let known: HashSet<Vec<u8>> = train.par_iter().map(certificate).collect::<Vec<_>>().into_iter().collect();
    let novel = unique.iter().filter(|c| !known.contains(*c)).count();
    Ok(Metrics {
        valid: percent(valid.len(), samples.len()),
        unique: percent(unique.len(), valid.len()),
        novel: percent(novel, unique.len()),
    })
}

/// Probability that a positive outscores a negative, ties counting one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(PgcError::invalid("auc needs at least one score in each class"));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(PgcError::Numeric("NaN score".into()));
    }
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        rank_sum += avg_rank * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let (p, q) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyOutcome {
    pub auc: f64,
    pub in_scores: Vec<f64>,
    pub out_scores: Vec<f64>,
    /// Indices of the in-distribution graphs that were permuted.
    pub permuted: Vec<usize>,
}

/// Scores both sets under `model` after permuting
/// `floor(permute_frac * |in_set|)` in-distribution graphs.
pub fn anomaly_experiment(
    model: &PgcModel,
    in_set: &[GraphInstance],
    out_set: &[GraphInstance],
    permute_frac: f64,
    seed: u64,
) -> Result<AnomalyOutcome> {
    if in_set.is_empty() || out_set.is_empty() {
        return Err(PgcError::invalid("anomaly experiment needs nonempty in and out sets"));
    }
    if !(0.0..=1.0).contains(&permute_frac) {
        return Err(PgcError::invalid(format!("permute fraction {permute_frac} is outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = (permute_frac * in_set.len() as f64).floor() as usize;
    let mut idx: Vec<usize> = (0..in_set.len()).collect();
    idx.shuffle(&mut rng);
    let mut permuted: Vec<usize> = idx[..count].to_vec();
    permuted.sort_unstable();
    let mut scored = in_set.to_vec();
    for &i in &permuted {
        let p = Permutation::random(scored[i].n(), &mut rng);
        scored[i] = permute(&scored[i], &p)?;
    }
    let in_scores: Vec<f64> = scored.par_iter().map(|g| model.logp(g)).collect::<Result<_>>()?;
    let out_scores: Vec<f64> = out_set.par_iter().map(|g| model.logp(g)).collect::<Result<_>>()?;
    Ok(AnomalyOutcome {
        auc: auc(&in_scores, &out_scores)?,
        in_scores,
        out_scores,
        permuted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub in_count: usize,
    pub out_count: usize,
}

/// Shared equal-width bins over the finite scores of both sets. Scores of
/// `-inf` fall in the lowest bin.
pub fn score_histogram(in_scores: &[f64], out_scores: &[f64], bins: usize) -> Vec<HistogramBin> {
    let finite = || in_scores.iter().chain(out_scores).copied().filter(|s| s.is_finite());
    let lo = finite().fold(f64::INFINITY, f64::min);
    let hi = finite().fold(f64::NEG_INFINITY, f64::max);
    if bins == 0 || !lo.is_finite() {
        return Vec::new();
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            in_count: 0,
            out_count: 0,
        })
        .collect();
    let slot = |s: f64| {
        if s.is_finite() {
            (((s - lo) / width) as usize).min(bins - 1)
        } else {
            0
        }
    };
    for &s in in_scores {
        out[slot(s)].in_count += 1;
    }
    for &s in out_scores {
        out[slot(s)].out_count += 1;
    }
    out
}

pub fn write_histogram_csv<W: Write>(mut w: W, bins: &[HistogramBin]) -> std::io::Result<()> {
    writeln!(w, "lo,hi,in_count,out_count")?;
    for b in bins {
        writeln!(w, "{},{},{},{}", b.lo, b.hi, b.in_count, b.out_count)?;
    }
    Ok(())
}

/// Mean edge-presence indicator per node pair after ordering each graph.
/// Random orderings are seeded per graph from `seed`.
pub fn adjacency_heatmap(data: &[GraphInstance], kind: OrderingKind, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if data.is_empty() {
        return Err(PgcError::invalid("heatmap of an empty dataset"));
    }
    let mut h = vec![vec![0.0; m]; m];
    for g in data {
        if g.n() > m {
            return Err(PgcError::invalid(format!("graph with {} nodes exceeds m = {m}", g.n())));
        }
        let ordered = canonicalize(g, kind, instance_seed(seed, g));
        for (i, j, _) in ordered.edge_list() {
            h[i][j] += 1.0;
            h[j][i] += 1.0;
        }
    }
    let count = data.len() as f64;
    for row in &mut h {
        for v in row.iter_mut() {
            *v /= count;
        }
    }
    Ok(h)
}

/// `Σ |i-j| h_ij / Σ h_ij`, or 0 for an all-zero matrix.
pub fn bandwidth_weighted_mean(h: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, row) in h.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            num += i.abs_diff(j) as f64 * v;
            den += v;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn write_matrix_csv<W: Write>(mut w: W, h: &[Vec<f64>]) -> std::io::Result<()> {
    for row in h {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
