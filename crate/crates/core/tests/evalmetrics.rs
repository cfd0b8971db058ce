mod common;

use common::random_graph;
use itertools::Itertools;
use pgc::evalmetrics::{
    adjacency_heatmap, anomaly_experiment, auc, bandwidth_weighted_mean, certificate, is_valid, metrics_suite,
    ValencyTable,
};
use pgc::graphdata::{all_permutations, permute, DatasetMeta, GraphInstance};
use pgc::ordering::OrderingKind;
use pgc::pgcmodel::{Mode, ModelConfig, PgcModel};
use pgc::synthetic;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn g(nodes: Vec<usize>, edges: &[(usize, usize, usize)]) -> GraphInstance {
    GraphInstance::from_edges(nodes, edges).unwrap()
}

#[test]
fn validity_is_permutation_invariant() {
    let vt = ValencyTable::qm9();
    let meta = DatasetMeta::new(5, 4, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=5 {
        for _ in 0..12 {
            let x = if rng.gen_bool(0.5) {
                random_graph(&meta, n, &mut rng)
            } else {
                synthetic::molecule(n, &vt, &mut rng).unwrap()
            };
            let expected = is_valid(&x, &vt).unwrap();
            for p in all_permutations(x.n()) {
                assert_eq!(is_valid(&permute(&x, &p).unwrap(), &vt).unwrap(), expected);
            }
        }
    }
}

/// Graphs whose automorphism group is trivial.
fn asymmetric_corpus() -> Vec<GraphInstance> {
    vec![
        g(vec![0, 1, 2, 3], &[(1, 0, 1), (2, 1, 2), (3, 2, 1)]),
        g(vec![0, 0, 1, 2], &[(1, 0, 1), (2, 0, 1), (3, 0, 2), (2, 1, 1)]),
        g(vec![0, 0, 0, 0], &[(1, 0, 1), (2, 1, 2), (3, 2, 3)]),
        g(vec![0, 0, 0, 1], &[(1, 0, 1), (2, 0, 2), (3, 0, 1)]),
        g(vec![2, 0, 1, 0], &[(1, 0, 1), (3, 1, 1)]),
    ]
}

fn has_trivial_automorphisms(x: &GraphInstance) -> bool {
    all_permutations(x.n()).filter(|p| permute(x, p).unwrap() == *x).count() == 1
}

#[test]
fn certificates_are_stable_under_every_relabeling() {
    for x in asymmetric_corpus() {
        assert!(has_trivial_automorphisms(&x));
        let c = certificate(&x);
        for p in all_permutations(4) {
            assert_eq!(certificate(&permute(&x, &p).unwrap()), c);
        }
    }
    let certs: Vec<Vec<u8>> = asymmetric_corpus().iter().map(certificate).collect();
    assert!(certs.iter().all_unique());
}

#[test]
fn certificates_of_small_graphs_separate_isomorphism_classes() {
    let meta = DatasetMeta::new(4, 2, 2).unwrap();
    let graphs = pgc::oracle::enumerate_graphs(&meta, 1_000_000).unwrap();
    for x in &graphs {
        let c = certificate(x);
        for p in all_permutations(x.n()) {
            assert_eq!(certificate(&permute(x, &p).unwrap()), c, "{x:?}");
        }
    }
    let classes = |key: &dyn Fn(&GraphInstance) -> Vec<u8>| graphs.iter().map(key).unique().count();
    let canonical = |x: &GraphInstance| {
        all_permutations(x.n())
            .map(|p| {
                let y = permute(x, &p).unwrap();
                [y.node_labels(), y.edge_labels()].concat().iter().map(|&v| v as u8).collect::<Vec<u8>>()
            })
            .min()
            .unwrap()
    };
    assert_eq!(classes(&|x| certificate(x)), classes(&canonical));
}

#[test]
fn metrics_match_the_hand_count_on_a_fixture() {
    let vt = ValencyTable::qm9();
    let water = g(vec![2], &[]);
    let co2 = g(vec![0, 2, 2], &[(1, 0, 2), (2, 0, 2)]);
    let hcn = g(vec![0, 1], &[(1, 0, 3)]);
    let ethanol = g(vec![0, 0, 2], &[(1, 0, 1), (2, 1, 1)]);
    let ethanol_relabeled = g(vec![2, 0, 0], &[(1, 0, 1), (2, 1, 1)]);
    let methylamine = g(vec![1, 0], &[(1, 0, 1)]);
    let fluoro = g(vec![0, 3, 3], &[(1, 0, 1), (2, 0, 1)]);
    let overfull_o = g(vec![2, 0, 0], &[(1, 0, 2), (2, 0, 1)]);
    let triple_f = g(vec![3, 0], &[(1, 0, 3)]);
    let split = g(vec![0, 0], &[]);
    let split3 = g(vec![0, 1, 2], &[(1, 0, 1)]);
    let pentavalent_c = g(vec![0, 1, 1], &[(1, 0, 3), (2, 0, 2)]);
    let train = vec![water.clone(), hcn.clone(), methylamine.clone()];
    let samples = vec![
        water.clone(),
        co2.clone(),
        hcn.clone(),
        ethanol.clone(),
        ethanol_relabeled,
        methylamine.clone(),
        fluoro.clone(),
        co2.clone(),
        water,
        fluoro,
        overfull_o,
        triple_f,
        split.clone(),
        split3,
        pentavalent_c,
        split,
        hcn,
        methylamine,
        co2,
        ethanol,
    ];
    assert_eq!(samples.len(), 20);
    // valid: 14 of 20; distinct among them: water, co2, hcn, ethanol,
    // methylamine, fluoro = 6; not in training: co2, ethanol, fluoro = 3
    let m = metrics_suite(&samples, &train, &vt).unwrap();
    assert_eq!(m.valid, 100.0 * 14.0 / 20.0);
    assert_eq!(m.unique, 100.0 * 6.0 / 14.0);
    assert_eq!(m.novel, 100.0 * 3.0 / 6.0);
    let replay = metrics_suite(&train, &train, &vt).unwrap();
    assert_eq!(replay.novel, 0.0);
}

proptest! {
    #[test]
    fn auc_is_antisymmetric(
        pos in prop::collection::vec(-4i32..4, 1..12),
        neg in prop::collection::vec(-4i32..4, 1..12),
    ) {
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        let a = auc(&pos, &neg).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(a + auc(&neg, &pos).unwrap(), 1.0);
        let pairs: f64 = pos
            .iter()
            .flat_map(|p| neg.iter().map(move |q| if p > q { 1.0 } else if p == q { 0.5 } else { 0.0 }))
            .sum();
        prop_assert_eq!(a, pairs / (pos.len() * neg.len()) as f64);
    }

    #[test]
    fn metric_percentages_are_bounded(seed in any::<u64>()) {
        let meta = DatasetMeta::new(4, 4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<GraphInstance> = (0..15).map(|_| {
            let n = rng.gen_range(1..=4);
            random_graph(&meta, n, &mut rng)
        }).collect();
        let m = metrics_suite(&samples, &samples[..5], &ValencyTable::qm9()).unwrap();
        for v in [m.valid, m.unique, m.novel] {
            prop_assert!((0.0..=100.0).contains(&v));
        }
    }
}

#[test]
fn invariant_model_ignores_the_permuted_fraction() {
    let meta = DatasetMeta::new(5, 2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut model = PgcModel::new(&meta, &ModelConfig::small(Mode::IPgc), &[]).unwrap();
    let p: Vec<f64> = (0..model.num_params()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    model.set_params(&p).unwrap();
    let inside = synthetic::family(40, 1..=4, &mut rng, |n, r| synthetic::random_tree(n, 2, 2, r)).unwrap();
    let outside = synthetic::family(40, 5..=5, &mut rng, |n, r| synthetic::chain(n, 2, r)).unwrap();
    let a = anomaly_experiment(&model, &inside, &outside, 0.0, 3).unwrap();
    let b = anomaly_experiment(&model, &inside, &outside, 1.0, 3).unwrap();
    assert!(a.permuted.is_empty());
    assert_eq!(b.permuted.len(), 40);
    assert_eq!(a.auc, b.auc);
    let c = anomaly_experiment(&model, &inside, &outside, 0.2, 3).unwrap();
    assert_eq!(c.permuted.len(), 8);
    assert!(anomaly_experiment(&model, &[], &outside, 0.2, 3).is_err());
    assert!(anomaly_experiment(&model, &inside, &outside, 1.5, 3).is_err());
}

#[test]
fn separating_model_scores_auc_one() {
    let meta = DatasetMeta::new(3, 2, 2).unwrap();
    let mut model = PgcModel::new(&meta, &ModelConfig::small(Mode::SPgc), &[]).unwrap();
    let mut p = vec![0.0; model.num_params()];
    p[..3].copy_from_slice(&[5.0, 0.0, -5.0]);
    model.set_params(&p).unwrap();
    let inside = vec![g(vec![0], &[]), g(vec![1], &[])];
    let outside = vec![g(vec![0, 0, 1], &[(1, 0, 1)])];
    assert_eq!(anomaly_experiment(&model, &inside, &outside, 0.0, 0).unwrap().auc, 1.0);
}

#[test]
fn traversal_orderings_pull_chains_toward_the_diagonal() {
    let m = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let chains = synthetic::family(300, 3..=8, &mut rng, |n, r| synthetic::chain(n, 3, r)).unwrap();
    let shuffled: Vec<GraphInstance> = chains
        .iter()
        .map(|c| permute(c, &pgc::graphdata::Permutation::random(c.n(), &mut rng)).unwrap())
        .collect();
    let score = |kind| bandwidth_weighted_mean(&adjacency_heatmap(&shuffled, kind, m, 4).unwrap());
    let random = score(OrderingKind::Random);
    for kind in [OrderingKind::Bft, OrderingKind::Rcm, OrderingKind::Dft] {
        assert!(score(kind) < random, "{kind}: {} vs {random}", score(kind));
    }
    assert_eq!(score(OrderingKind::Bft), 1.0);
}
