mod common;

use common::{random_dataset, random_graph, random_model, relative_error, RG_KINDS};
use pgc::graphdata::{DatasetMeta, GraphInstance};
use pgc::pgcmodel::{Mode, ModelConfig, PgcModel};
use pgc::regiongraph::RegionGraphKind;
use pgc::synthetic;
use pgc::training::{
    adam_step, load_model, load_model_for, model_from_bytes, model_to_bytes, nll, nll_with_grad, save_model, train,
    AdamState, TrainConfig,
};
use pgc::PgcError;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn meta() -> DatasetMeta {
    DatasetMeta::new(4, 2, 3).unwrap()
}

#[test]
fn nll_gradient_matches_finite_differences() {
    let h = 1e-4;
    let meta = meta();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst: f64 = 0.0;
    for mode in Mode::ALL {
        if mode == Mode::FactorialPgc {
            continue;
        }
        for &rg in &RG_KINDS {
            let mut model = random_model(&meta, mode, rg, 1.0, &mut rng);
            let batch = random_dataset(&meta, 6, &mut rng);
            let (_, grad) = nll_with_grad(&model, &batch).unwrap();
            let base = model.params();
            for _ in 0..20 {
                let i = rng.gen_range(0..base.len());
                let mut p = base.clone();
                p[i] = base[i] + h;
                model.set_params(&p).unwrap();
                let up = nll(&model, &batch).unwrap();
                p[i] = base[i] - h;
                model.set_params(&p).unwrap();
                let down = nll(&model, &batch).unwrap();
                worst = worst.max(relative_error(grad[i], (up - down) / (2.0 * h)));
            }
            model.set_params(&base).unwrap();
        }
    }
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

#[test]
fn gradient_reduction_does_not_depend_on_thread_count() {
    let meta = meta();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = random_model(&meta, Mode::SPgc, RegionGraphKind::Bt, 1.0, &mut rng);
    let batch = random_dataset(&meta, 300, &mut rng);
    let many = nll_with_grad(&model, &batch).unwrap();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| nll_with_grad(&model, &batch).unwrap());
    assert_eq!(many, one);
}

fn reference_adam(params: &[f64], grads: &[Vec<f64>], cfg: &TrainConfig) -> Vec<f64> {
    let mut theta = params.to_vec();
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    for (t, g) in grads.iter().enumerate() {
        let t = (t + 1) as f64;
        for i in 0..theta.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i].powi(2);
            let m_hat = m[i] / (1.0 - cfg.beta1.powf(t));
            let v_hat = v[i] / (1.0 - cfg.beta2.powf(t));
            theta[i] -= cfg.alpha * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    theta
}

proptest! {
    #[test]
    fn adam_matches_the_reference_recurrences(
        params in prop::collection::vec(-5.0f64..5.0, 1..8),
        steps in 1usize..20,
        seed in any::<u64>(),
    ) {
        let cfg = TrainConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grads: Vec<Vec<f64>> = (0..steps)
            .map(|_| params.iter().map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let expected = reference_adam(&params, &grads, &cfg);
        let mut p = params.clone();
        let mut state = AdamState::new(p.len());
        for g in &grads {
            adam_step(&mut p, g, &mut state, &cfg);
        }
        for (a, b) in p.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }
}

fn chains(count: usize, sizes: std::ops::RangeInclusive<usize>, seed: u64) -> Vec<GraphInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synthetic::family(count, sizes, &mut rng, |n, r| synthetic::chain(n, 2, r)).unwrap()
}

fn quick_config() -> TrainConfig {
    TrainConfig {
        batch_size: 32,
        epochs: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn training_reduces_nll_and_selects_by_validation() {
    let meta = meta();
    let data = chains(200, 1..=4, 3);
    let valid = chains(40, 1..=4, 4);
    for mode in [Mode::SPgc, Mode::PiPgc, Mode::IPgc] {
        let model = PgcModel::new(&meta, &ModelConfig::small(mode), &data).unwrap();
        let out = train(&model, &data, &valid, &quick_config()).unwrap();
        assert_eq!(out.trace.len(), 6);
        let first = out.trace[0];
        let last = out.trace[5];
        assert!(last.train_nll < first.train_nll, "{mode}: {first:?} -> {last:?}");
        let best = out.trace[out.best_epoch].valid_nll;
        assert!(out.trace.iter().all(|r| r.valid_nll >= best));
        assert_eq!(nll(&out.best, &valid).unwrap(), best);
    }
}

#[test]
fn cardinality_concentrates_on_the_only_size() {
    let meta = meta();
    let data = chains(100, 2..=2, 5);
    let model = PgcModel::new(&meta, &ModelConfig::small(Mode::SPgc), &data).unwrap();
    let out = train(&model, &data, &[], &quick_config()).unwrap();
    let lc = out.best.log_cardinality();
    let argmax = (0..lc.len()).max_by(|&a, &b| lc[a].total_cmp(&lc[b])).unwrap();
    assert_eq!(argmax + 1, 2);
}

#[test]
fn seeded_training_is_reproducible() {
    let meta = meta();
    let data = chains(120, 1..=4, 6);
    let model = PgcModel::new(&meta, &ModelConfig::small(Mode::PiPgc), &data).unwrap();
    let a = train(&model, &data, &data[..20], &quick_config()).unwrap();
    let b = train(&model, &data, &data[..20], &quick_config()).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.best.params(), b.best.params());
    assert!(train(&model, &[], &data, &quick_config()).is_err());
}

#[test]
fn checkpoints_round_trip_bit_exactly() {
    let meta = meta();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dir = tempfile::tempdir().unwrap();
    for mode in Mode::ALL {
        for &rg in &RG_KINDS {
            let model = random_model(&meta, mode, rg, 2.0, &mut rng);
            let path = dir.path().join("m.pgc");
            save_model(&model, &path).unwrap();
            let back = load_model(&path).unwrap();
            assert_eq!(back.params(), model.params());
            assert_eq!(back.config(), model.config());
            for _ in 0..10 {
                let n = rng.gen_range(1..=meta.m);
                let g = random_graph(&meta, n, &mut rng);
                assert_eq!(back.logp(&g).unwrap(), model.logp(&g).unwrap());
            }
        }
    }
}

#[test]
fn checkpoint_errors_are_explicit() {
    let meta = meta();
    let model = PgcModel::new(&meta, &ModelConfig::small(Mode::SPgc), &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.pgc");
    save_model(&model, &path).unwrap();
    let other = DatasetMeta::new(5, 2, 3).unwrap();
    assert!(matches!(load_model_for(&path, &other), Err(PgcError::DimensionMismatch(_))));
    assert!(load_model_for(&path, &meta).is_ok());

    let bytes = model_to_bytes(&model).unwrap();
    let mut bumped = bytes.clone();
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let header = String::from_utf8(bytes[8..8 + header_len].to_vec()).unwrap();
    let patched = header.replacen("\"version\":1", "\"version\":9", 1);
    assert_ne!(patched, header);
    bumped.splice(8..8 + header_len, patched.into_bytes());
    let err = model_from_bytes(&bumped).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");
    assert!(load_model(dir.path().join("missing.pgc")).is_err());
}
