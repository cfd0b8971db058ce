//! Exhaustive ground truth for tiny configurations.
//!
//! Everything here enumerates labeled graphs or completions explicitly and is
//! exponential in the graph size; a hard cap keeps it away from realistic
//! dataset sizes.

use std::collections::BTreeSet;

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{PgcError, Result};
use crate::graphdata::{all_permutations, num_edges, permute, tri_pair, DatasetMeta, GraphInstance};
use crate::numeric::log_sum_exp;
use crate::pgcmodel::{log_mean_exp, Mode, PgcModel, QuerySpec};

pub const DEFAULT_CAP: u128 = 1_000_000;

/// `Σ_{n=1..m} n_x^n · n_a^{n(n-1)/2}`, saturating at `u128::MAX`.
pub fn graph_count(meta: &DatasetMeta) -> u128 {
    (1..=meta.m)
        .map(|n| {
            let nodes = (meta.n_x as u128).checked_pow(n as u32);
            let edges = (meta.n_a as u128).checked_pow(num_edges(n) as u32);
            nodes.zip(edges).and_then(|(a, b)| a.checked_mul(b)).unwrap_or(u128::MAX)
        })
        .fold(0u128, |acc, c| acc.saturating_add(c))
}

/// Every labeled graph with `1 <= n <= m`, ordered by size, then node labels,
/// then edge labels.
pub fn enumerate_graphs(meta: &DatasetMeta, cap: u128) -> Result<Vec<GraphInstance>> {
    let count = graph_count(meta);
    if count > cap {
        return Err(PgcError::CapExceeded { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    for n in 1..=meta.m {
        let node_choices: Vec<Vec<usize>> = labelings(n, meta.n_x);
        let edge_choices: Vec<Vec<usize>> = labelings(num_edges(n), meta.n_a);
        for nodes in &node_choices {
            for edges in &edge_choices {
                out.push(GraphInstance::new(nodes.clone(), edges.clone())?);
            }
        }
    }
    Ok(out)
}

fn labelings(len: usize, k: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![Vec::new()];
    }
    (0..len).map(|_| 0..k).multi_cartesian_product().collect()
}

/// Log-probability of `g` read as an ordered graph in the model's own frame:
/// `logp` for spgc, ipgc and nfactpgc; for pipgc the frame value without
/// re-canonicalization, which is the distribution its samples follow.
pub fn frame_logp(model: &PgcModel, g: &GraphInstance) -> Result<f64> {
    match model.mode() {
        Mode::PiPgc => Ok(model.logp_joint_fixed(g)? + model.log_cardinality()[g.n() - 1]),
        _ => model.logp(g),
    }
}

/// Total probability the model assigns to the graph space. For pipgc the sum
/// runs over the distinct canonical forms reached from the labeled space,
/// one term per form.
pub fn total_mass(model: &PgcModel) -> Result<f64> {
    total_mass_capped(model, DEFAULT_CAP)
}

pub fn total_mass_capped(model: &PgcModel, cap: u128) -> Result<f64> {
    let graphs = enumerate_graphs(model.meta(), cap)?;
    let graphs = if model.mode() == Mode::PiPgc {
        let forms: BTreeSet<GraphInstance> = graphs.iter().map(|g| model.canonical_form(g)).collect();
        forms.into_iter().collect()
    } else {
        graphs
    };
    sum_exp(&graphs, |g| model.logp(g))
}

/// `Σ exp(frame_logp)` over all labeled graphs; 1 for every mode.
pub fn frame_mass(model: &PgcModel, cap: u128) -> Result<f64> {
    let graphs = enumerate_graphs(model.meta(), cap)?;
    sum_exp(&graphs, |g| frame_logp(model, g))
}

fn sum_exp(graphs: &[GraphInstance], f: impl Fn(&GraphInstance) -> Result<f64> + Sync) -> Result<f64> {
    let terms: Vec<f64> = graphs.par_iter().map(|g| f(g).map(f64::exp)).collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// Query value by explicit summation of `exp(frame_logp)` over every
/// completion of the marginalized real variables.
pub fn oracle_query(model: &PgcModel, q: &QuerySpec) -> Result<f64> {
    let meta = model.meta();
    q.validate(meta)?;
    let n = q.n;
    let free_nodes: Vec<usize> = (0..n).filter(|&i| q.nodes[i].is_none()).collect();
    let free_edges: Vec<usize> = (0..num_edges(n)).filter(|&k| q.edges[k].is_none()).collect();
    let count = (meta.n_x as u128)
        .checked_pow(free_nodes.len() as u32)
        .zip((meta.n_a as u128).checked_pow(free_edges.len() as u32))
        .and_then(|(a, b)| a.checked_mul(b))
        .unwrap_or(u128::MAX);
    if count > DEFAULT_CAP {
        return Err(PgcError::CapExceeded { count, cap: DEFAULT_CAP });
    }
    let node_fill = labelings(free_nodes.len(), meta.n_x);
    let edge_fill = labelings(free_edges.len(), meta.n_a);
    let mut graphs = Vec::with_capacity(count as usize);
    for nf in &node_fill {
        for ef in &edge_fill {
            let mut nodes: Vec<usize> = q.nodes[..n].iter().map(|v| v.unwrap_or(0)).collect();
            let mut edges: Vec<usize> = q.edges[..num_edges(n)].iter().map(|v| v.unwrap_or(0)).collect();
            for (&i, &x) in free_nodes.iter().zip(nf) {
                nodes[i] = x;
            }
            for (&k, &a) in free_edges.iter().zip(ef) {
                edges[k] = a;
            }
            graphs.push(GraphInstance::new(nodes, edges)?);
        }
    }
    let terms: Vec<f64> = graphs
        .par_iter()
        .map(|g| frame_logp(model, g))
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(&terms))
}

/// `ln((1/n!) Σ_π exp(logp_joint_fixed(πg)))`, permutations in lexicographic
/// order.
pub fn oracle_perm_average(model: &PgcModel, g: &GraphInstance) -> Result<f64> {
    if g.n() > 6 {
        return Err(PgcError::invalid(format!(
            "permutation average is limited to n <= 6, got {}",
            g.n()
        )));
    }
    let values = all_permutations(g.n())
        .map(|p| model.logp_joint_fixed(&permute(g, &p)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_mean_exp(&values))
}

/// Exact distribution of conditional samples: every completion of the
/// evidence (in slots `[0, k)`, already in the model frame) with its
/// normalized probability.
pub fn oracle_conditional(
    model: &PgcModel,
    evidence: Option<&GraphInstance>,
    cap: u128,
) -> Result<Vec<(GraphInstance, f64)>> {
    let graphs = enumerate_graphs(model.meta(), cap)?;
    let consistent: Vec<GraphInstance> = graphs
        .into_iter()
        .filter(|g| match evidence {
            None => true,
            Some(e) => {
                g.n() >= e.n()
                    && g.node_labels()[..e.n()] == *e.node_labels()
                    && (0..num_edges(e.n())).all(|k| {
                        let (i, j) = tri_pair(k);
                        g.edge(i, j) == e.edge_labels()[k]
                    })
            }
        })
        .collect();
    let logs: Vec<f64> = consistent
        .par_iter()
        .map(|g| frame_logp(model, g))
        .collect::<Result<_>>()?;
    let z = log_sum_exp(&logs);
    Ok(consistent
        .into_iter()
        .zip(logs)
        .map(|(g, l)| (g, (l - z).exp()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgcmodel::ModelConfig;
    use std::collections::HashSet;

    #[test]
    fn enumeration_counts() {
        let m1 = DatasetMeta::new(1, 2, 2).unwrap();
        assert_eq!(enumerate_graphs(&m1, DEFAULT_CAP).unwrap().len(), 2);
        let m2 = DatasetMeta::new(2, 2, 2).unwrap();
        assert_eq!(enumerate_graphs(&m2, DEFAULT_CAP).unwrap().len(), 10);
        let m3 = DatasetMeta::new(3, 2, 2).unwrap();
        let all = enumerate_graphs(&m3, DEFAULT_CAP).unwrap();
        assert_eq!(all.len(), 74);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 74);
        let m4 = DatasetMeta::new(4, 3, 3).unwrap();
        assert_eq!(graph_count(&m4), 3 + 9 * 3 + 27 * 27 + 81 * 729);
    }

    #[test]
    fn cap_is_enforced() {
        let qm9 = DatasetMeta::new(9, 4, 4).unwrap();
        assert!(matches!(
            enumerate_graphs(&qm9, DEFAULT_CAP),
            Err(PgcError::CapExceeded { .. })
        ));
        let huge = DatasetMeta::new(40, 9, 4).unwrap();
        assert_eq!(graph_count(&huge), u128::MAX);
    }

    #[test]
    fn oracle_examples() {
        let meta = DatasetMeta::new(3, 2, 2).unwrap();
        let model = PgcModel::new(&meta, &ModelConfig::small(Mode::SPgc), &[]).unwrap();
        let g = GraphInstance::from_edges(vec![1, 0], &[(1, 0, 1)]).unwrap();
        let full = QuerySpec::evidence(&meta, &g).unwrap();
        let expected = model.logp_joint_fixed(&g).unwrap() + model.log_cardinality()[1];
        assert!((oracle_query(&model, &full).unwrap() - expected).abs() < 1e-12);
        let none = QuerySpec::marginal(&meta, 3);
        assert!((oracle_query(&model, &none).unwrap() - model.log_cardinality()[2]).abs() < 1e-9);

        let one = GraphInstance::edgeless(vec![1]).unwrap();
        assert_eq!(oracle_perm_average(&model, &one).unwrap(), model.logp_joint_fixed(&one).unwrap());
        let ipgc = PgcModel::new(&meta, &ModelConfig::small(Mode::IPgc), &[]).unwrap();
        let g3 = GraphInstance::from_edges(vec![1, 0, 0], &[(1, 0, 1)]).unwrap();
        assert!((oracle_perm_average(&ipgc, &g3).unwrap() - ipgc.logp_joint_fixed(&g3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn perm_average_matches_factorial_bit_for_bit() {
        let meta = DatasetMeta::new(3, 2, 2).unwrap();
        let mut model = PgcModel::new(&meta, &ModelConfig::small(Mode::FactorialPgc), &[]).unwrap();
        let p: Vec<f64> = (0..model.num_params()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        model.set_params(&p).unwrap();
        for g in enumerate_graphs(&meta, DEFAULT_CAP).unwrap() {
            let avg = oracle_perm_average(&model, &g).unwrap();
            assert_eq!(model.logp(&g).unwrap(), avg + model.log_cardinality()[g.n() - 1]);
        }
    }

    #[test]
    fn untrained_models_are_normalized() {
        let meta = DatasetMeta::new(3, 2, 2).unwrap();
        for mode in [Mode::SPgc, Mode::IPgc, Mode::FactorialPgc] {
            let model = PgcModel::new(&meta, &ModelConfig::small(mode), &[]).unwrap();
            assert!((total_mass(&model).unwrap() - 1.0).abs() < 1e-6, "{mode}");
        }
        let pi = PgcModel::new(&meta, &ModelConfig::small(Mode::PiPgc), &[]).unwrap();
        assert!(total_mass(&pi).unwrap() <= 1.0 + 1e-6);
        assert!((frame_mass(&pi, DEFAULT_CAP).unwrap() - 1.0).abs() < 1e-9);
    }
}
