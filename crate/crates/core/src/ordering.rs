//! Node orderings used to sort graphs before they enter an order-sensitive
//! model.
//!
//! Traversal rules are fixed so that orderings are reproducible: the start
//! node is the lowest-index node among those of minimum degree, expansion
//! visits neighbors in ascending index (Cuthill-McKee: ascending degree, then
//! index), and a disconnected remainder restarts at its lowest-index node.
//! Node and edge labels never take part in tie-breaking.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PgcError, Result};
use crate::graphdata::{permute_unchecked, GraphInstance, Permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingKind {
    Random,
    Bft,
    Dft,
    Rcm,
}

impl OrderingKind {
    pub const ALL: [OrderingKind; 4] = [
        OrderingKind::Random,
        OrderingKind::Bft,
        OrderingKind::Dft,
        OrderingKind::Rcm,
    ];

    pub fn is_deterministic(self) -> bool {
        !matches!(self, OrderingKind::Random)
    }

    pub fn name(self) -> &'static str {
        match self {
            OrderingKind::Random => "random",
            OrderingKind::Bft => "bft",
            OrderingKind::Dft => "dft",
            OrderingKind::Rcm => "rcm",
        }
    }
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingKind {
    type Err = PgcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(OrderingKind::Random),
            "bft" => Ok(OrderingKind::Bft),
            "dft" => Ok(OrderingKind::Dft),
            "rcm" => Ok(OrderingKind::Rcm),
            "mca" => Err(PgcError::Config(
                "ordering 'mca' needs an external chemistry canonicalizer and is not supported; \
                 use one of random|bft|dft|rcm"
                    .into(),
            )),
            other => Err(PgcError::Config(format!(
                "unknown ordering '{other}', expected one of random|bft|dft|rcm"
            ))),
        }
    }
}

fn start_node(adj: &[Vec<usize>]) -> usize {
    (0..adj.len())
        .min_by_key(|&v| (adj[v].len(), v))
        .expect("graphs have at least one node")
}

/// Breadth-first traversal order.
pub fn order_bft(g: &GraphInstance) -> Permutation {
    let adj = g.adjacency();
    traverse_breadth_first(&adj, |_, nbrs| nbrs.to_vec())
}

/// Cuthill-McKee order, reversed.
pub fn order_rcm(g: &GraphInstance) -> Permutation {
    let adj = g.adjacency();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let cm = traverse_breadth_first(&adj, |_, nbrs| {
        let mut sorted = nbrs.to_vec();
        sorted.sort_by_key(|&v| (degree[v], v));
        sorted
    });
    let mut mapping = cm.mapping().to_vec();
    mapping.reverse();
    Permutation::new(mapping).expect("reversal of a permutation")
}

fn traverse_breadth_first(
    adj: &[Vec<usize>],
    expand: impl Fn(usize, &[usize]) -> Vec<usize>,
) -> Permutation {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut start = start_node(adj);
    loop {
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for v in expand(u, &adj[u]) {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match visited.iter().position(|&b| !b) {
            Some(next) => start = next,
            None => break,
        }
    }
    Permutation::new(order).expect("traversal visits every node once")
}

/// Depth-first (preorder) traversal order.
pub fn order_dft(g: &GraphInstance) -> Permutation {
    let adj = g.adjacency();
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut start = start_node(&adj);
    loop {
        // (node, next neighbor position)
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        order.push(start);
        while let Some((u, pos)) = stack.last_mut() {
            let u = *u;
            if let Some(&v) = adj[u][*pos..].iter().find(|&&v| !visited[v]) {
                *pos = adj[u].iter().position(|&w| w == v).unwrap() + 1;
                visited[v] = true;
                order.push(v);
                stack.push((v, 0));
            } else {
                stack.pop();
            }
        }
        match visited.iter().position(|&b| !b) {
            Some(next) => start = next,
            None => break,
        }
    }
    Permutation::new(order).expect("traversal visits every node once")
}

/// Uniform random order (Fisher-Yates) from `seed`.
pub fn order_random(g: &GraphInstance, seed: u64) -> Permutation {
    Permutation::random(g.n(), &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn order(g: &GraphInstance, kind: OrderingKind, seed: u64) -> Permutation {
    match kind {
        OrderingKind::Random => order_random(g, seed),
        OrderingKind::Bft => order_bft(g),
        OrderingKind::Dft => order_dft(g),
        OrderingKind::Rcm => order_rcm(g),
    }
}

/// Sorts `g` into the order produced by `kind`.
pub fn canonicalize(g: &GraphInstance, kind: OrderingKind, seed: u64) -> GraphInstance {
    permute_unchecked(g, &order(g, kind, seed))
}

/// Largest `|i - j|` over present edges; 0 for edgeless graphs.
pub fn bandwidth(g: &GraphInstance) -> usize {
    g.edge_list()
        .into_iter()
        .map(|(i, j, _)| i - j)
        .max()
        .unwrap_or(0)
}
