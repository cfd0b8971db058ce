//! Seeded synthetic graph families for toy runs and experiments.
//!
//! Every generator lists nodes in the order they were attached, so the
//! output has a consistent (breadth-first-like) layout that an
//! order-sensitive model can pick up.

use rand::Rng;

use crate::error::{PgcError, Result};
use crate::evalmetrics::ValencyTable;
use crate::graphdata::GraphInstance;

/// Path `0 - 1 - ... - (n-1)` with uniform node labels and bond category 1.
pub fn chain<R: Rng + ?Sized>(n: usize, n_x: usize, rng: &mut R) -> Result<GraphInstance> {
    let nodes = (0..n).map(|_| rng.gen_range(0..n_x)).collect();
    let edges: Vec<(usize, usize, usize)> = (1..n).map(|i| (i, i - 1, 1)).collect();
    GraphInstance::from_edges(nodes, &edges)
}

/// Random recursive tree: node `i` attaches to a uniform earlier node with a
/// uniform bond category in `1..n_a`.
pub fn random_tree<R: Rng + ?Sized>(n: usize, n_x: usize, n_a: usize, rng: &mut R) -> Result<GraphInstance> {
    if n_a < 2 {
        return Err(PgcError::invalid("trees need at least one bond category"));
    }
    let nodes = (0..n).map(|_| rng.gen_range(0..n_x)).collect();
    let edges: Vec<(usize, usize, usize)> = (1..n)
        .map(|i| (i, rng.gen_range(0..i), rng.gen_range(1..n_a)))
        .collect();
    GraphInstance::from_edges(nodes, &edges)
}

/// Molecule-like tree that respects `vt`: each new atom bonds to an earlier
/// atom with spare valence, preferring single bonds. Stops early if no atom
/// has spare valence left.
pub fn molecule<R: Rng + ?Sized>(n: usize, vt: &ValencyTable, rng: &mut R) -> Result<GraphInstance> {
    let n_x = vt.max_valence.len();
    if n_x == 0 || n == 0 {
        return Err(PgcError::invalid("molecule needs at least one atom type and one atom"));
    }
    let pick_atom = |rng: &mut R| -> usize {
        if rng.gen_bool(0.6) {
            0
        } else {
            rng.gen_range(0..n_x)
        }
    };
    let mut labels = vec![pick_atom(rng)];
    let mut spare = vec![vt.max_valence[labels[0]]];
    let mut edges = Vec::new();
    for i in 1..n {
        let open: Vec<usize> = (0..i).filter(|&j| spare[j] > 0).collect();
        if open.is_empty() {
            break;
        }
        let parent = open[rng.gen_range(0..open.len())];
        let mut atom = pick_atom(rng);
        if vt.max_valence[atom] == 0 {
            match (0..n_x).find(|&a| vt.max_valence[a] > 0) {
                Some(a) => atom = a,
                None => break,
            }
        }
        let room = spare[parent].min(vt.max_valence[atom]);
        let fits: Vec<usize> = (1..vt.bond_order.len())
            .filter(|&b| vt.bond_order[b] >= 1 && vt.bond_order[b] <= room)
            .collect();
        if fits.is_empty() {
            break;
        }
        let bond = if fits.len() > 1 && rng.gen_bool(0.25) {
            fits[rng.gen_range(1..fits.len())]
        } else {
            fits[0]
        };
        labels.push(atom);
        spare.push(vt.max_valence[atom] - vt.bond_order[bond]);
        spare[parent] -= vt.bond_order[bond];
        edges.push((i, parent, bond));
    }
    GraphInstance::from_edges(labels, &edges)
}

/// `count` graphs with node counts uniform in `sizes`, each drawn by `gen`.
pub fn family<R, F>(count: usize, sizes: std::ops::RangeInclusive<usize>, rng: &mut R, mut gen: F) -> Result<Vec<GraphInstance>>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &mut R) -> Result<GraphInstance>,
{
    (0..count)
        .map(|_| {
            let n = rng.gen_range(sizes.clone());
            gen(n, rng)
        })
        .collect()
}
