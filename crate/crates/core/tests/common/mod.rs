#![allow(dead_code)]

use std::collections::HashMap;

use pgc::graphdata::{num_edges, DatasetMeta, GraphInstance};
use pgc::pgcmodel::{Mode, ModelConfig, PgcModel};
use pgc::regiongraph::RegionGraphKind;
use rand::Rng;

pub const RG_KINDS: [RegionGraphKind; 5] = [
    RegionGraphKind::Bt,
    RegionGraphKind::Lt,
    RegionGraphKind::Rt,
    RegionGraphKind::RtS,
    RegionGraphKind::Hclt,
];

pub fn random_graph<R: Rng>(meta: &DatasetMeta, n: usize, rng: &mut R) -> GraphInstance {
    let nodes = (0..n).map(|_| rng.gen_range(0..meta.n_x)).collect();
    let edges = (0..num_edges(n)).map(|_| rng.gen_range(0..meta.n_a)).collect();
    GraphInstance::new(nodes, edges).unwrap()
}

pub fn random_dataset<R: Rng>(meta: &DatasetMeta, count: usize, rng: &mut R) -> Vec<GraphInstance> {
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=meta.m);
            random_graph(meta, n, rng)
        })
        .collect()
}

/// Small model of the given mode and region graph, with parameters spread
/// over `U(-spread, spread)` so that it is far from uniform.
pub fn random_model<R: Rng>(
    meta: &DatasetMeta,
    mode: Mode,
    rg: RegionGraphKind,
    spread: f64,
    rng: &mut R,
) -> PgcModel {
    let mut cfg = ModelConfig::small(mode).with_region_graphs(rg, rg);
    cfg.seed = rng.gen();
    cfg.n_s = rng.gen_range(1..=3);
    cfg.n_i = rng.gen_range(1..=3);
    cfg.n_c = rng.gen_range(1..=3);
    cfg.node_rg.n_layers = rng.gen_range(0..=2);
    cfg.edge_rg.n_layers = rng.gen_range(0..=3);
    cfg.node_rg.n_repetitions = rng.gen_range(1..=2);
    cfg.node_rg.seed = rng.gen();
    cfg.edge_rg.n_repetitions = rng.gen_range(1..=2);
    cfg.edge_rg.seed = rng.gen();
    let data = random_dataset(meta, 20, rng);
    let mut model = PgcModel::new(meta, &cfg, &data).unwrap();
    let params: Vec<f64> = (0..model.num_params()).map(|_| rng.gen_range(-spread..spread)).collect();
    model.set_params(&params).unwrap();
    model
}

pub fn total_variation(counts: &HashMap<GraphInstance, usize>, exact: &[(GraphInstance, f64)], total: usize) -> f64 {
    let mut tv = 0.0;
    let mut covered = 0usize;
    for (g, p) in exact {
        let c = counts.get(g).copied().unwrap_or(0);
        covered += c;
        tv += (c as f64 / total as f64 - p).abs();
    }
    // samples outside the enumerated support
    tv += (total - covered) as f64 / total as f64;
    0.5 * tv
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    // central differences cannot resolve gradients below ~1e-9
    if diff <= 1e-9 {
        return 0.0;
    }
    diff / a.abs().max(b.abs())
}
