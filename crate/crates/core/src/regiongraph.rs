//! Region graphs: hierarchical scope partitions that fix the layer structure
//! of a compiled circuit.
//!
//! A region node covers a set of variables; its children are partitions. A
//! partition splits its parent's scope into pairwise-disjoint child regions.
//! Every builder bottoms out in singleton leaf regions, so a region whose
//! depth budget is exhausted gets one fully factorized partition.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PgcError, Result};
use crate::graphdata::{num_edges, tri_pair, DatasetMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Region,
    Partition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionNode {
    /// Sorted variable indices.
    pub scope: Vec<usize>,
    pub kind: NodeKind,
    pub children: Vec<RegionNode>,
}

impl RegionNode {
    pub fn leaf(var: usize) -> Self {
        RegionNode {
            scope: vec![var],
            kind: NodeKind::Region,
            children: Vec::new(),
        }
    }

    /// A region over the union of its partitions' scopes.
    pub fn region(partitions: Vec<RegionNode>) -> Self {
        let scope = partitions.first().map(|p| p.scope.clone()).unwrap_or_default();
        RegionNode {
            scope,
            kind: NodeKind::Region,
            children: partitions,
        }
    }

    pub fn partition(regions: Vec<RegionNode>) -> Self {
        let mut scope: Vec<usize> = regions.iter().flat_map(|r| r.scope.iter().copied()).collect();
        scope.sort_unstable();
        RegionNode {
            scope,
            kind: NodeKind::Partition,
            children: regions,
        }
    }

    /// A region split into singletons in one step.
    pub fn factorized(vars: &[usize]) -> Self {
        match vars {
            [v] => RegionNode::leaf(*v),
            _ => RegionNode::region(vec![RegionNode::partition(
                vars.iter().map(|&v| RegionNode::leaf(v)).collect(),
            )]),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::Region && self.children.is_empty()
    }

    /// Number of partition levels on the deepest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let below = self.children.iter().map(RegionNode::depth).max().unwrap_or(0);
        match self.kind {
            NodeKind::Partition => below + 1,
            NodeKind::Region => below,
        }
    }

    /// Variables of the leaf regions, left to right.
    pub fn leaf_vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        if self.is_leaf() {
            out.extend_from_slice(&self.scope);
        }
        for c in &self.children {
            c.collect_leaves(out);
        }
    }

    /// Checks the disjoint-cover property at every partition, the alternation
    /// of region and partition nodes, and that leaves are singletons.
    pub fn validate(&self) -> Result<()> {
        if self.scope.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PgcError::Structure(format!(
                "scope {:?} is not a sorted set",
                self.scope
            )));
        }
        match self.kind {
            NodeKind::Region => {
                if self.children.is_empty() {
                    if self.scope.len() != 1 {
                        return Err(PgcError::Structure(format!(
                            "leaf region {:?} is not a singleton",
                            self.scope
                        )));
                    }
                    return Ok(());
                }
                for p in &self.children {
                    if p.kind != NodeKind::Partition {
                        return Err(PgcError::Structure(format!(
                            "region {:?} has a region child",
                            self.scope
                        )));
                    }
                    if p.scope != self.scope {
                        return Err(PgcError::Structure(format!(
                            "partition {:?} under region {:?} covers a different scope",
                            p.scope, self.scope
                        )));
                    }
                    p.validate()?;
                }
            }
            NodeKind::Partition => {
                if self.children.len() < 2 {
                    return Err(PgcError::Structure(format!(
                        "partition {:?} has fewer than two children",
                        self.scope
                    )));
                }
                let mut union: Vec<usize> = Vec::new();
                for r in &self.children {
                    if r.kind != NodeKind::Region {
                        return Err(PgcError::Structure(format!(
                            "partition {:?} has a partition child",
                            self.scope
                        )));
                    }
                    union.extend_from_slice(&r.scope);
                    r.validate()?;
                }
                union.sort_unstable();
                if union.windows(2).any(|w| w[0] == w[1]) {
                    return Err(PgcError::Structure(format!(
                        "partition {:?} has overlapping children",
                        self.scope
                    )));
                }
                if union != self.scope {
                    return Err(PgcError::Structure(format!(
                        "children of partition {:?} do not cover it",
                        self.scope
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionGraphKind {
    Bt,
    Lt,
    Rt,
    RtS,
    Hclt,
}

impl RegionGraphKind {
    pub const ALL: [RegionGraphKind; 5] = [
        RegionGraphKind::Bt,
        RegionGraphKind::Lt,
        RegionGraphKind::Rt,
        RegionGraphKind::RtS,
        RegionGraphKind::Hclt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegionGraphKind::Bt => "bt",
            RegionGraphKind::Lt => "lt",
            RegionGraphKind::Rt => "rt",
            RegionGraphKind::RtS => "rt_s",
            RegionGraphKind::Hclt => "hclt",
        }
    }
}

impl fmt::Display for RegionGraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionGraphKind {
    type Err = PgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bt" => Ok(RegionGraphKind::Bt),
            "lt" => Ok(RegionGraphKind::Lt),
            "rt" => Ok(RegionGraphKind::Rt),
            "rt_s" | "rt-s" | "rts" => Ok(RegionGraphKind::RtS),
            "hclt" => Ok(RegionGraphKind::Hclt),
            other => Err(PgcError::Config(format!(
                "unknown region graph '{other}', expected one of bt|lt|rt|rt_s|hclt"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGraphSpec {
    pub kind: RegionGraphKind,
    /// Depth budget: number of partition levels before scopes are fully
    /// factorized.
    pub n_layers: usize,
    /// Repetitions (rt and rt_s only).
    pub n_repetitions: usize,
    pub seed: u64,
    /// Laplace pseudo-count for mutual information (hclt only).
    pub smoothing: f64,
}

impl RegionGraphSpec {
    pub fn new(kind: RegionGraphKind, n_layers: usize) -> Self {
        RegionGraphSpec {
            kind,
            n_layers,
            n_repetitions: 1,
            seed: 0,
            smoothing: DEFAULT_SMOOTHING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.kind, RegionGraphKind::Rt | RegionGraphKind::RtS) && self.n_repetitions == 0
        {
            return Err(PgcError::Config(
                "n_repetitions must be at least 1 for rt and rt_s".into(),
            ));
        }
        if !(self.smoothing >= 0.0) {
            return Err(PgcError::Config("smoothing must be nonnegative".into()));
        }
        Ok(())
    }
}

pub const DEFAULT_SMOOTHING: f64 = 0.1;

fn nonempty(vars: &[usize]) -> Result<()> {
    if vars.is_empty() {
        Err(PgcError::invalid("region graph over an empty variable set"))
    } else {
        Ok(())
    }
}

/// Balanced binary splits; the left half takes `⌈k/2⌉` variables.
pub fn build_bt(vars: &[usize], n_layers: usize) -> Result<RegionNode> {
    nonempty(vars)?;
    Ok(bt(vars, n_layers))
}

fn bt(vars: &[usize], budget: usize) -> RegionNode {
    if vars.len() == 1 {
        return RegionNode::leaf(vars[0]);
    }
    if budget == 0 {
        return RegionNode::factorized(vars);
    }
    let mid = vars.len().div_ceil(2);
    RegionNode::region(vec![RegionNode::partition(vec![
        bt(&vars[..mid], budget - 1),
        bt(&vars[mid..], budget - 1),
    ])])
}

/// Chain splits `{v0} | {v1, ...}`.
pub fn build_lt(vars: &[usize], n_layers: usize) -> Result<RegionNode> {
    nonempty(vars)?;
    Ok(lt(vars, n_layers))
}

fn lt(vars: &[usize], budget: usize) -> RegionNode {
    if vars.len() == 1 {
        return RegionNode::leaf(vars[0]);
    }
    if budget == 0 {
        return RegionNode::factorized(vars);
    }
    RegionNode::region(vec![RegionNode::partition(vec![
        RegionNode::leaf(vars[0]),
        lt(&vars[1..], budget - 1),
    ])])
}

/// One balanced binary tree per repetition, each over an independent seeded
/// shuffle of `vars`.
pub fn build_rt(vars: &[usize], n_layers: usize, n_repetitions: usize, seed: u64) -> Result<Vec<RegionNode>> {
    nonempty(vars)?;
    if n_repetitions == 0 {
        return Err(PgcError::invalid("n_repetitions must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_repetitions)
        .map(|_| {
            let mut order = vars.to_vec();
            order.shuffle(&mut rng);
            bt(&order, n_layers)
        })
        .collect())
}

/// Edge variables ordered by the ranks their endpoints take under the node
/// order `sigma`: key (rank of the later endpoint, rank of the earlier one).
pub fn synced_edge_order(sigma: &[usize], edge_vars: &[usize]) -> Vec<usize> {
    let mut rank = vec![0usize; sigma.len()];
    for (r, &v) in sigma.iter().enumerate() {
        rank[v] = r;
    }
    let mut edges = edge_vars.to_vec();
    edges.sort_by_key(|&e| {
        let (i, j) = tri_pair(e);
        let (a, b) = (rank[i], rank[j]);
        (a.max(b), a.min(b))
    });
    edges
}

/// Randomized trees whose node and edge shuffles are tied: repetition `r`
/// draws one node permutation and derives the edge order from it.
#[allow(clippy::too_many_arguments)]
pub fn build_rt_sync(
    node_vars: &[usize],
    edge_vars: &[usize],
    meta: &DatasetMeta,
    n_layers_node: usize,
    n_layers_edge: usize,
    n_repetitions: usize,
    seed: u64,
) -> Result<(Vec<RegionNode>, Vec<RegionNode>)> {
    if node_vars.len() != meta.m || edge_vars.len() != num_edges(meta.m) {
        return Err(PgcError::invalid(format!(
            "rt_s needs {} node and {} edge variables, got {} and {}",
            meta.m,
            num_edges(meta.m),
            node_vars.len(),
            edge_vars.len()
        )));
    }
    if n_repetitions == 0 {
        return Err(PgcError::invalid("n_repetitions must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(n_repetitions);
    let mut edges = Vec::with_capacity(n_repetitions);
    for _ in 0..n_repetitions {
        let mut sigma = node_vars.to_vec();
        sigma.shuffle(&mut rng);
        nodes.push(bt(&sigma, n_layers_node));
        if !edge_vars.is_empty() {
            edges.push(bt(&synced_edge_order(&sigma, edge_vars), n_layers_edge));
        }
    }
    Ok((nodes, edges))
}

/// Empirical mutual information (nats) between variables `a` and `b`, over
/// rows where both are observed, with `smoothing` added to every joint cell.
/// Returns 0 when fewer than two rows observe both.
pub fn mutual_information(
    data: &[Vec<Option<usize>>],
    cards: &[usize],
    a: usize,
    b: usize,
    smoothing: f64,
) -> Result<f64> {
    if a == b {
        return Err(PgcError::invalid("mutual information needs two distinct variables"));
    }
    if !(smoothing >= 0.0) {
        return Err(PgcError::invalid("smoothing must be nonnegative"));
    }
    let (ka, kb) = (cards[a], cards[b]);
    let mut joint = vec![0.0f64; ka * kb];
    let mut co_observed = 0usize;
    for row in data {
        if let (Some(x), Some(y)) = (row[a], row[b]) {
            joint[x * kb + y] += 1.0;
            co_observed += 1;
        }
    }
    if co_observed < 2 {
        return Ok(0.0);
    }
    joint.iter_mut().for_each(|c| *c += smoothing);
    let total: f64 = joint.iter().sum();
    let mut pa = vec![0.0; ka];
    let mut pb = vec![0.0; kb];
    for x in 0..ka {
        for y in 0..kb {
            let p = joint[x * kb + y] / total;
            pa[x] += p;
            pb[y] += p;
        }
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let p = joint[x * kb + y] / total;
            if p > 0.0 {
                mi += p * (p / (pa[x] * pb[y])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Result of Chow-Liu structure learning.
#[derive(Debug, Clone)]
pub struct HcltOutcome {
    pub root: RegionNode,
    /// Spanning tree edges `(a, b)` in variable ids, `a < b`.
    pub tree_edges: Vec<(usize, usize)>,
    pub tree_weight: f64,
    /// True when there was no data and the linear tree was used instead.
    pub fell_back: bool,
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Pairwise MI over `vars` (by position), row-major upper triangle.
pub fn mi_matrix(
    data: &[Vec<Option<usize>>],
    vars: &[usize],
    cards: &[usize],
    smoothing: f64,
) -> Result<Vec<Vec<f64>>> {
    let k = vars.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|p| ((p + 1)..k).map(move |q| (p, q)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(p, q)| mutual_information(data, cards, vars[p], vars[q], smoothing))
        .collect::<Result<_>>()?;
    let mut mi = vec![vec![0.0; k]; k];
    for (&(p, q), v) in pairs.iter().zip(values) {
        mi[p][q] = v;
        mi[q][p] = v;
    }
    Ok(mi)
}

/// Maximum-weight spanning tree by Kruskal. Weights are compared on a 1e-12
/// grid so that mathematically equal weights tie; ties go to the
/// lexicographically smaller position pair.
pub fn max_spanning_tree(weights: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let k = weights.len();
    let mut pairs: Vec<(i64, usize, usize)> = (0..k)
        .flat_map(|p| ((p + 1)..k).map(move |q| (p, q)))
        .map(|(p, q)| (-(weights[p][q] * 1e12).round() as i64, p, q))
        .collect();
    pairs.sort_unstable();
    let mut ds = DisjointSet((0..k).collect());
    let mut tree = Vec::with_capacity(k.saturating_sub(1));
    for (_, p, q) in pairs {
        if ds.union(p, q) {
            tree.push((p, q));
            if tree.len() + 1 == k {
                break;
            }
        }
    }
    tree
}

/// Chow-Liu tree over `vars`, rooted at the lowest-index variable, turned
/// into a region tree: each tree node `v` becomes a region over its subtree,
/// partitioned into `{v}` and the regions of its children.
pub fn build_hclt(
    data: &[Vec<Option<usize>>],
    vars: &[usize],
    cards: &[usize],
    smoothing: f64,
) -> Result<HcltOutcome> {
    nonempty(vars)?;
    if data.is_empty() {
        return Ok(HcltOutcome {
            root: lt(vars, usize::MAX),
            tree_edges: Vec::new(),
            tree_weight: 0.0,
            fell_back: true,
        });
    }
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    let mi = mi_matrix(data, &sorted, cards, smoothing)?;
    let tree = max_spanning_tree(&mi);
    let tree_weight = tree.iter().map(|&(p, q)| mi[p][q]).sum();

    let k = sorted.len();
    let mut adj = vec![Vec::new(); k];
    for &(p, q) in &tree {
        adj[p].push(q);
        adj[q].push(p);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let root = hclt_region(0, usize::MAX, &adj, &sorted);
    Ok(HcltOutcome {
        root,
        tree_edges: tree.iter().map(|&(p, q)| (sorted[p], sorted[q])).collect(),
        tree_weight,
        fell_back: false,
    })
}

fn hclt_region(v: usize, parent: usize, adj: &[Vec<usize>], vars: &[usize]) -> RegionNode {
    let children: Vec<RegionNode> = adj[v]
        .iter()
        .filter(|&&c| c != parent)
        .map(|&c| hclt_region(c, v, adj, vars))
        .collect();
    if children.is_empty() {
        return RegionNode::leaf(vars[v]);
    }
    let mut parts = vec![RegionNode::leaf(vars[v])];
    parts.extend(children);
    RegionNode::region(vec![RegionNode::partition(parts)])
}
