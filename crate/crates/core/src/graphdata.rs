//! Attributed graphs, their fixed-size padded view, node permutations and
//! the JSON-lines dataset format.
//!
//! Edges of an undirected graph are stored as the row-flattened lower
//! triangle: pair `(i, j)` with `i > j` lives at [`tri_index`]`(i, j)`.
//! Edge category `0` is the mandatory "no edge" category.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PgcError, Result};

/// Category of the "no edge" entry of the adjacency tensor.
pub const NO_EDGE: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// Maximum node count.
    pub m: usize,
    /// Node category count.
    pub n_x: usize,
    /// Edge category count, including the no-edge category.
    pub n_a: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_names: Option<Vec<String>>,
}

impl DatasetMeta {
    pub fn new(m: usize, n_x: usize, n_a: usize) -> Result<Self> {
        let meta = DatasetMeta {
            m,
            n_x,
            n_a,
            atom_names: None,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(PgcError::invalid("meta: m must be at least 1"));
        }
        if self.n_x == 0 {
            return Err(PgcError::invalid("meta: n_x must be at least 1"));
        }
        if self.n_a < 2 {
            return Err(PgcError::invalid(
                "meta: n_a must be at least 2 (the no-edge category is mandatory)",
            ));
        }
        if let Some(names) = &self.atom_names {
            if names.len() != self.n_x {
                return Err(PgcError::invalid(format!(
                    "meta: {} atom names for n_x = {}",
                    names.len(),
                    self.n_x
                )));
            }
        }
        Ok(())
    }

    /// Number of edge variables of the padded view, `m(m-1)/2`.
    pub fn num_edges(&self) -> usize {
        num_edges(self.m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PgcError::io(path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&text).map_err(|e| PgcError::Record {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        meta.validate()?;
        Ok(meta)
    }
}

/// Number of lower-triangular pairs among `n` nodes.
pub fn num_edges(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Flat position of the pair `(i, j)`, `i > j`, in the row-flattened lower
/// triangle: `i(i-1)/2 + j`.
pub fn tri_index(i: usize, j: usize) -> Result<usize> {
    if i <= j {
        return Err(PgcError::invalid(format!(
            "tri_index requires i > j, got ({i}, {j})"
        )));
    }
    Ok(tri_index_unchecked(i, j))
}

#[inline]
pub(crate) fn tri_index_unchecked(i: usize, j: usize) -> usize {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

/// Position of the unordered pair `{a, b}`, `a != b`.
#[inline]
pub(crate) fn pair_index(a: usize, b: usize) -> usize {
    if a > b {
        tri_index_unchecked(a, b)
    } else {
        tri_index_unchecked(b, a)
    }
}

/// Inverse of [`tri_index`].
pub fn tri_pair(k: usize) -> (usize, usize) {
    // largest i with i(i-1)/2 <= k
    let mut i = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).floor() as usize;
    while i * (i - 1) / 2 > k {
        i -= 1;
    }
    while (i + 1) * i / 2 <= k {
        i += 1;
    }
    (i, k - i * (i - 1) / 2)
}

/// A variable-size attributed graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphInstance {
    node_labels: Vec<usize>,
    edge_labels: Vec<usize>,
}

impl GraphInstance {
    pub fn new(node_labels: Vec<usize>, edge_labels: Vec<usize>) -> Result<Self> {
        let n = node_labels.len();
        if n == 0 {
            return Err(PgcError::invalid("a graph needs at least one node"));
        }
        if edge_labels.len() != num_edges(n) {
            return Err(PgcError::invalid(format!(
                "{n} nodes need {} edge labels, got {}",
                num_edges(n),
                edge_labels.len()
            )));
        }
        Ok(GraphInstance {
            node_labels,
            edge_labels,
        })
    }

    /// Builds a graph from node labels and a sparse list of `(i, j, label)`
    /// edges; unlisted pairs get [`NO_EDGE`].
    pub fn from_edges(node_labels: Vec<usize>, edges: &[(usize, usize, usize)]) -> Result<Self> {
        let n = node_labels.len();
        let mut edge_labels = vec![NO_EDGE; num_edges(n)];
        for &(i, j, c) in edges {
            if i == j || i >= n || j >= n {
                return Err(PgcError::invalid(format!(
                    "edge ({i}, {j}) is not a pair of distinct nodes of a {n}-node graph"
                )));
            }
            edge_labels[pair_index(i, j)] = c;
        }
        GraphInstance::new(node_labels, edge_labels)
    }

    /// A graph with no edges.
    pub fn edgeless(node_labels: Vec<usize>) -> Result<Self> {
        let e = num_edges(node_labels.len());
        GraphInstance::new(node_labels, vec![NO_EDGE; e])
    }

    pub fn n(&self) -> usize {
        self.node_labels.len()
    }

    pub fn node_labels(&self) -> &[usize] {
        &self.node_labels
    }

    pub fn edge_labels(&self) -> &[usize] {
        &self.edge_labels
    }

    /// Label between two distinct nodes, in either index order.
    pub fn edge(&self, a: usize, b: usize) -> usize {
        self.edge_labels[pair_index(a, b)]
    }

    /// Neighbor lists (nodes joined by a non-[`NO_EDGE`] label), ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut adj = vec![Vec::new(); n];
        for i in 1..n {
            for j in 0..i {
                if self.edge_labels[tri_index_unchecked(i, j)] != NO_EDGE {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Sparse `(i, j, label)` list with `i > j`, in flat order.
    pub fn edge_list(&self) -> Vec<(usize, usize, usize)> {
        self.edge_labels
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != NO_EDGE)
            .map(|(k, &c)| {
                let (i, j) = tri_pair(k);
                (i, j, c)
            })
            .collect()
    }

    pub fn validate(&self, meta: &DatasetMeta) -> Result<()> {
        if self.n() > meta.m {
            return Err(PgcError::invalid(format!(
                "graph has {} nodes, more than m = {}",
                self.n(),
                meta.m
            )));
        }
        if let Some((i, &c)) = self
            .node_labels
            .iter()
            .enumerate()
            .find(|(_, &c)| c >= meta.n_x)
        {
            return Err(PgcError::LabelOutOfRange(format!(
                "node {i} has label {c}, n_x = {}",
                meta.n_x
            )));
        }
        if let Some((k, &c)) = self
            .edge_labels
            .iter()
            .enumerate()
            .find(|(_, &c)| c >= meta.n_a)
        {
            let (i, j) = tri_pair(k);
            return Err(PgcError::LabelOutOfRange(format!(
                "edge ({i}, {j}) has label {c}, n_a = {}",
                meta.n_a
            )));
        }
        Ok(())
    }
}

/// Fixed-size one-hot view of a graph with `m` node slots. Masked entries
/// are marginalized, never treated as data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedGraph {
    pub m: usize,
    pub n_x: usize,
    pub n_a: usize,
    /// `m × n_x`, row-major.
    pub node_onehot: Vec<u8>,
    /// `m(m-1)/2 × n_a`, row-major.
    pub edge_onehot: Vec<u8>,
    pub node_mask: Vec<bool>,
    pub edge_mask: Vec<bool>,
}

impl PaddedGraph {
    /// Category of node slot `i`, or `None` when masked.
    pub fn node_value(&self, i: usize) -> Option<usize> {
        if self.node_mask[i] {
            return None;
        }
        self.node_onehot[i * self.n_x..(i + 1) * self.n_x]
            .iter()
            .position(|&b| b == 1)
    }

    pub fn edge_value(&self, k: usize) -> Option<usize> {
        if self.edge_mask[k] {
            return None;
        }
        self.edge_onehot[k * self.n_a..(k + 1) * self.n_a]
            .iter()
            .position(|&b| b == 1)
    }

    pub fn node_values(&self) -> Vec<Option<usize>> {
        (0..self.m).map(|i| self.node_value(i)).collect()
    }

    pub fn edge_values(&self) -> Vec<Option<usize>> {
        (0..num_edges(self.m)).map(|k| self.edge_value(k)).collect()
    }

    /// Number of leading unmasked node slots.
    pub fn n(&self) -> usize {
        self.node_mask.iter().take_while(|&&masked| !masked).count()
    }

    /// Reads the unmasked variables back into a graph.
    pub fn to_instance(&self) -> Result<GraphInstance> {
        let n = self.n();
        let nodes = (0..n)
            .map(|i| {
                self.node_value(i)
                    .ok_or_else(|| PgcError::invalid(format!("node slot {i} has no category")))
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = (0..num_edges(n))
            .map(|k| {
                self.edge_value(k)
                    .ok_or_else(|| PgcError::invalid(format!("edge slot {k} has no category")))
            })
            .collect::<Result<Vec<_>>>()?;
        GraphInstance::new(nodes, edges)
    }
}

/// Marginalization padding: the first `g.n()` slots hold the graph, the rest
/// (and every edge touching them) are masked.
pub fn pad(g: &GraphInstance, meta: &DatasetMeta) -> Result<PaddedGraph> {
    g.validate(meta)?;
    let m = meta.m;
    let n = g.n();
    let e = meta.num_edges();
    let mut node_onehot = vec![0u8; m * meta.n_x];
    let mut edge_onehot = vec![0u8; e * meta.n_a];
    let mut node_mask = vec![true; m];
    let mut edge_mask = vec![true; e];
    for (i, &c) in g.node_labels().iter().enumerate() {
        node_onehot[i * meta.n_x + c] = 1;
        node_mask[i] = false;
    }
    // Real edges occupy exactly the prefix [0, n(n-1)/2) of the flat order.
    for (k, &c) in g.edge_labels().iter().enumerate() {
        edge_onehot[k * meta.n_a + c] = 1;
        edge_mask[k] = false;
    }
    debug_assert_eq!(edge_mask.iter().filter(|&&b| !b).count(), num_edges(n));
    Ok(PaddedGraph {
        m,
        n_x: meta.n_x,
        n_a: meta.n_a,
        node_onehot,
        edge_onehot,
        node_mask,
        edge_mask,
    })
}

/// A bijection on `[0, n)`. Position `i` of a permuted graph holds node
/// `mapping[i]` of the original.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &v in &mapping {
            if v >= n || seen[v] {
                return Err(PgcError::invalid(format!(
                    "{mapping:?} is not a permutation of 0..{n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    /// Uniform draw by Fisher-Yates.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Permutation { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &v) in self.mapping.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { mapping: inv }
    }
}

/// All `n!` permutations of `[0, n)` in lexicographic order.
pub fn all_permutations(n: usize) -> impl Iterator<Item = Permutation> {
    (0..n).permutations(n).map(|mapping| Permutation { mapping })
}

/// Reorders nodes so that new node `i` is old node `p(i)`; the label of new
/// pair `(i, j)` is the old label of `(p(i), p(j))`.
pub fn permute(g: &GraphInstance, p: &Permutation) -> Result<GraphInstance> {
    if p.len() != g.n() {
        return Err(PgcError::invalid(format!(
            "permutation of size {} applied to a {}-node graph",
            p.len(),
            g.n()
        )));
    }
    Ok(permute_unchecked(g, p))
}

pub(crate) fn permute_unchecked(g: &GraphInstance, p: &Permutation) -> GraphInstance {
    let n = g.n();
    let nodes = p.mapping.iter().map(|&v| g.node_labels[v]).collect();
    let mut edges = Vec::with_capacity(num_edges(n));
    for i in 1..n {
        for j in 0..i {
            edges.push(g.edge(p.mapping[i], p.mapping[j]));
        }
    }
    GraphInstance {
        node_labels: nodes,
        edge_labels: edges,
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphRecord {
    nodes: Vec<usize>,
    #[serde(default)]
    edges: Vec<[usize; 3]>,
}

fn record_to_graph(rec: GraphRecord) -> std::result::Result<GraphInstance, String> {
    let n = rec.nodes.len();
    if n == 0 {
        return Err("record has no nodes".into());
    }
    let mut edge_labels = vec![NO_EDGE; num_edges(n)];
    let mut seen = HashSet::new();
    for [i, j, c] in rec.edges {
        if i <= j {
            return Err(format!("edge [{i},{j},{c}] must have i > j"));
        }
        if i >= n {
            return Err(format!("edge [{i},{j},{c}] refers to node {i} of a {n}-node graph"));
        }
        if c == NO_EDGE {
            return Err(format!("edge [{i},{j},{c}] uses the implicit no-edge category"));
        }
        if !seen.insert((i, j)) {
            return Err(format!("edge ({i},{j}) listed twice"));
        }
        edge_labels[tri_index_unchecked(i, j)] = c;
    }
    GraphInstance::new(rec.nodes, edge_labels).map_err(|e| e.to_string())
}

/// Parses one JSON-lines record.
pub fn parse_record(line: &str) -> Result<GraphInstance> {
    let rec: GraphRecord = serde_json::from_str(line)?;
    record_to_graph(rec).map_err(PgcError::InvalidArgument)
}

/// Serializes a graph as one JSON-lines record (no trailing newline).
pub fn to_record(g: &GraphInstance) -> String {
    let rec = GraphRecord {
        nodes: g.node_labels.clone(),
        edges: g.edge_list().into_iter().map(|(i, j, c)| [i, j, c]).collect(),
    };
    serde_json::to_string(&rec).expect("graph records always serialize")
}

/// Reads a JSON-lines file without category validation. Blank lines are
/// skipped.
pub fn read_graphs(path: impl AsRef<Path>) -> Result<Vec<GraphInstance>> {
    read_graphs_with(path.as_ref(), |_| Ok(()))
}

/// Reads and validates a JSON-lines dataset against `meta`; errors carry the
/// 1-based line number.
pub fn load_dataset(path: impl AsRef<Path>, meta: &DatasetMeta) -> Result<Vec<GraphInstance>> {
    read_graphs_with(path.as_ref(), |g| g.validate(meta))
}

fn read_graphs_with(
    path: &Path,
    check: impl Fn(&GraphInstance) -> Result<()>,
) -> Result<Vec<GraphInstance>> {
    let file = File::open(path).map_err(|e| PgcError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PgcError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record_err = |msg: String| PgcError::Record {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let rec: GraphRecord =
            serde_json::from_str(&line).map_err(|e| record_err(e.to_string()))?;
        let g = record_to_graph(rec).map_err(record_err)?;
        check(&g).map_err(|e| record_err(e.to_string()))?;
        out.push(g);
    }
    Ok(out)
}

/// Writes graphs as JSON lines.
pub fn write_graphs<W: Write>(mut w: W, graphs: &[GraphInstance]) -> std::io::Result<()> {
    for g in graphs {
        writeln!(w, "{}", to_record(g))?;
    }
    Ok(())
}

/// Seeded random partition into train/valid/test. Train and valid sizes are
/// rounded; test receives the remainder.
pub fn split_dataset<T: Clone>(
    data: &[T],
    ratios: [f64; 3],
    seed: u64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(PgcError::invalid(format!(
            "split ratios {ratios:?} must be nonnegative and sum to 1"
        )));
    }
    let total = data.len();
    let mut idx: Vec<usize> = (0..total).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratios[0] * total as f64).round() as usize).min(total);
    let n_valid = ((ratios[1] * total as f64).round() as usize).min(total - n_train);
    let pick = |range: &[usize]| range.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    Ok((
        pick(&idx[..n_train]),
        pick(&idx[n_train..n_train + n_valid]),
        pick(&idx[n_train + n_valid..]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(m: usize, n_x: usize, n_a: usize) -> DatasetMeta {
        DatasetMeta::new(m, n_x, n_a).unwrap()
    }

    #[test]
    fn tri_index_examples() {
        assert_eq!(tri_index(1, 0).unwrap(), 0);
        assert_eq!(tri_index(2, 1).unwrap(), 2);
        assert_eq!(tri_index(3, 1).unwrap(), 4);
        assert!(tri_index(1, 1).is_err());
        assert!(tri_index(0, 2).is_err());
    }

    #[test]
    fn tri_index_is_a_bijection() {
        for m in 1..=16 {
            let mut seen = vec![false; num_edges(m)];
            for i in 0..m {
                for j in 0..i {
                    let k = tri_index(i, j).unwrap();
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(tri_pair(k), (i, j));
                }
            }
            assert!(seen.into_iter().all(|b| b));
        }
    }

    #[test]
    fn pad_full_graph_has_no_masks() {
        let g = GraphInstance::from_edges(vec![0, 1, 1], &[(1, 0, 1)]).unwrap();
        let p = pad(&g, &meta(3, 2, 2)).unwrap();
        assert!(p.node_mask.iter().all(|&b| !b));
        assert!(p.edge_mask.iter().all(|&b| !b));
    }

    #[test]
    fn pad_single_node() {
        let g = GraphInstance::edgeless(vec![0]).unwrap();
        let p = pad(&g, &meta(3, 2, 2)).unwrap();
        assert_eq!(p.node_mask, vec![false, true, true]);
        assert_eq!(p.edge_mask, vec![true, true, true]);
        assert_eq!(&p.node_onehot[..2], &[1, 0]);
        assert!(p.node_onehot[2..].iter().all(|&b| b == 0));
        assert!(p.edge_onehot.iter().all(|&b| b == 0));
    }

    #[test]
    fn pad_two_of_three() {
        let g = GraphInstance::edgeless(vec![1, 0]).unwrap();
        let p = pad(&g, &meta(3, 2, 2)).unwrap();
        assert_eq!(p.edge_mask, vec![false, true, true]);
        // explicit no-edge category is data
        assert_eq!(p.edge_value(0), Some(NO_EDGE));
    }

    #[test]
    fn pad_rejects_out_of_range_labels() {
        let m = meta(3, 2, 2);
        assert!(pad(&GraphInstance::edgeless(vec![2]).unwrap(), &m).is_err());
        let g = GraphInstance::from_edges(vec![0, 0], &[(1, 0, 2)]).unwrap();
        assert!(pad(&g, &m).is_err());
        assert!(pad(&GraphInstance::edgeless(vec![0; 4]).unwrap(), &m).is_err());
    }

    #[test]
    fn permute_examples() {
        let g = GraphInstance::from_edges(vec![0, 1, 0], &[(1, 0, 2)]).unwrap();
        assert_eq!(permute(&g, &Permutation::identity(3)).unwrap(), g);
        let swapped = permute(&g, &Permutation::new(vec![1, 0, 2]).unwrap()).unwrap();
        assert_eq!(swapped.edge(1, 0), 2);
        assert_eq!(swapped.edge(2, 0), 0);
        assert_eq!(swapped.edge(2, 1), 0);
        assert_eq!(swapped.node_labels(), &[1, 0, 0]);

        let single = GraphInstance::edgeless(vec![1]).unwrap();
        assert_eq!(permute(&single, &Permutation::identity(1)).unwrap(), single);
        assert!(permute(&g, &Permutation::identity(2)).is_err());
    }

    #[test]
    fn permutation_rejects_non_bijection() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
    }

    #[test]
    fn permute_inverse_roundtrip_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=5 {
            let nodes = (0..n).map(|i| i % 3).collect();
            let edges: Vec<usize> = (0..num_edges(n)).map(|k| (k * 7 + n) % 4).collect();
            let g = GraphInstance::new(nodes, edges).unwrap();
            for p in all_permutations(n) {
                let back = permute(&permute(&g, &p).unwrap(), &p.inverse()).unwrap();
                assert_eq!(back, g);
            }
            let _ = Permutation::random(n, &mut rng);
        }
    }

    #[test]
    fn record_roundtrip_and_errors() {
        let g = parse_record(r#"{"nodes":[0],"edges":[]}"#).unwrap();
        assert_eq!(g.n(), 1);
        let g = parse_record(r#"{"nodes":[0,1,2],"edges":[[2,0,1],[1,0,3]]}"#).unwrap();
        assert_eq!(parse_record(&to_record(&g)).unwrap(), g);
        assert!(parse_record(r#"{"nodes":[0,1],"edges":[[0,1,1]]}"#).is_err());
        assert!(parse_record(r#"{"nodes":[0,1],"edges":[[1,0,0]]}"#).is_err());
        assert!(parse_record(r#"{"nodes":[],"edges":[]}"#).is_err());
    }

    #[test]
    fn load_dataset_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let m = meta(3, 2, 2);

        let empty = dir.path().join("empty.jsonl");
        std::fs::write(&empty, "").unwrap();
        assert!(load_dataset(&empty, &m).unwrap().is_empty());

        let one = dir.path().join("one.jsonl");
        std::fs::write(&one, "{\"nodes\":[0],\"edges\":[]}\n").unwrap();
        let data = load_dataset(&one, &m).unwrap();
        assert_eq!(data, vec![GraphInstance::edgeless(vec![0]).unwrap()]);

        let bad = dir.path().join("bad.jsonl");
        std::fs::write(&bad, "{\"nodes\":[0],\"edges\":[]}\n{\"nodes\":[2],\"edges\":[]}\n")
            .unwrap();
        match load_dataset(&bad, &m) {
            Err(PgcError::Record { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected record error, got {other:?}"),
        }
    }

    #[test]
    fn split_examples() {
        let data: Vec<usize> = (0..10).collect();
        let (a, b, c) = split_dataset(&data, [0.8, 0.1, 0.1], 3).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        let again = split_dataset(&data, [0.8, 0.1, 0.1], 3).unwrap();
        assert_eq!((a.clone(), b.clone(), c.clone()), again);
        let mut all: Vec<usize> = a.into_iter().chain(b).chain(c).collect();
        all.sort();
        assert_eq!(all, data);

        let (a, b, c) = split_dataset::<usize>(&[], [0.8, 0.1, 0.1], 3).unwrap();
        assert!(a.is_empty() && b.is_empty() && c.is_empty());
        assert!(split_dataset(&data, [0.8, 0.1, 0.2], 3).is_err());
    }

    proptest::proptest! {
        #[test]
        fn pad_roundtrip_and_mask_closure(
            m in 1usize..7,
            n_x in 1usize..4,
            n_a in 2usize..5,
            seed in 0u64..1000,
        ) {
            use rand::Rng;
            let meta = meta(m, n_x, n_a);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=m);
            let nodes = (0..n).map(|_| rng.gen_range(0..n_x)).collect();
            let edges = (0..num_edges(n)).map(|_| rng.gen_range(0..n_a)).collect();
            let g = GraphInstance::new(nodes, edges).unwrap();
            let p = pad(&g, &meta).unwrap();
            proptest::prop_assert_eq!(p.to_instance().unwrap(), g);
            for i in 0..m {
                let row = &p.node_onehot[i * n_x..(i + 1) * n_x];
                let ones = row.iter().filter(|&&b| b == 1).count();
                proptest::prop_assert_eq!(ones, if p.node_mask[i] { 0 } else { 1 });
                for j in 0..i {
                    let k = tri_index(i, j).unwrap();
                    if p.node_mask[i] || p.node_mask[j] {
                        proptest::prop_assert!(p.edge_mask[k]);
                    }
                    let row = &p.edge_onehot[k * n_a..(k + 1) * n_a];
                    let ones = row.iter().filter(|&&b| b == 1).count();
                    proptest::prop_assert_eq!(ones, if p.edge_mask[k] { 0 } else { 1 });
                }
            }
        }
    }
}
