use std::path::Path;

use pgc::config::load_config;
use pgc::evalmetrics::{
    adjacency_heatmap, anomaly_experiment, metrics_suite, score_histogram, write_histogram_csv, write_matrix_csv,
    ValencyTable,
};
use pgc::graphdata::{load_dataset, read_graphs, split_dataset, write_graphs, DatasetMeta, GraphInstance};
use pgc::ordering::OrderingKind;
use pgc::pgcmodel::{Mode, PgcModel, QuerySpec};
use pgc::training::{load_model, save_model, train_with, write_atomic, write_trace_csv};
use pgc::{oracle, PgcError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

/// Writes atomically to `out` when given, otherwise prints to stdout.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

fn jsonl(graphs: &[GraphInstance]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_graphs(&mut buf, graphs).expect("writing to memory");
    buf
}

pub fn train(config: &Path, out: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let meta = DatasetMeta::load(cfg.meta()?)?;
    let data = load_dataset(cfg.dataset()?, &meta)?;
    if data.is_empty() {
        return Err(PgcError::InvalidArgument(format!("dataset {} has no records", cfg.dataset()?.display())));
    }
    let out_dir = out.unwrap_or(&cfg.out_dir);
    std::fs::create_dir_all(out_dir).map_err(|e| PgcError::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let (train_set, valid, test) = split_dataset(&data, cfg.split, cfg.train.seed)?;
    let model = PgcModel::new(&meta, &cfg.model, &train_set)?;
    for note in model.notes() {
        eprintln!("note: {note}");
    }
    eprintln!(
        "training {} on {} graphs ({} validation, {} test), {} parameters",
        cfg.model.mode,
        train_set.len(),
        valid.len(),
        test.len(),
        model.num_params()
    );
    let outcome = train_with(&model, &train_set, &valid, &cfg.train, |r| {
        eprintln!("epoch {:>3}  train nll {:.6}  valid nll {:.6}", r.epoch, r.train_nll, r.valid_nll);
    })?;
    let mut trace = Vec::new();
    write_trace_csv(&mut trace, &outcome.trace).expect("writing to memory");
    write_atomic(&out_dir.join("trace.csv"), &trace)?;
    write_atomic(&out_dir.join("test.jsonl"), &jsonl(&test))?;
    save_model(&outcome.best, out_dir.join("model.pgc"))?;
    let best = outcome.trace[outcome.best_epoch];
    let report = json!({
        "model": out_dir.join("model.pgc"),
        "best_epoch": outcome.best_epoch,
        "train_nll": best.train_nll,
        "valid_nll": if best.valid_nll.is_nan() { None } else { Some(best.valid_nll) },
    });
    println!("{report}");
    Ok(())
}

pub fn sample(model: &Path, count: usize, seed: u64, scaffold: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let model = load_model(model)?;
    let evidence = match scaffold {
        Some(path) => {
            let graphs = load_dataset(path, model.meta())?;
            Some(
                graphs
                    .into_iter()
                    .next()
                    .ok_or_else(|| PgcError::InvalidArgument(format!("scaffold file {} has no records", path.display())))?,
            )
        }
        None => None,
    };
    let sampler = model.conditional_sampler(evidence.as_ref())?;
    let graphs: Vec<GraphInstance> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            sampler.sample(&mut rng)
        })
        .collect::<Result<_>>()?;
    emit(out, &jsonl(&graphs))
}

pub fn eval(samples: &Path, train: &Path, valency: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let vt = match valency {
        Some(path) => ValencyTable::load(path)?,
        None => ValencyTable::qm9(),
    };
    let samples = read_graphs(samples)?;
    let train = read_graphs(train)?;
    let m = metrics_suite(&samples, &train, &vt)?;
    let report = json!({
        "valid": m.valid,
        "unique": m.unique,
        "novel": m.novel,
        "fcd": "n/a",
        "nspdk": "n/a",
    });
    emit(out, format!("{report}\n").as_bytes())
}

pub fn query(model: &Path, spec: &str) -> Result<()> {
    let model = load_model(model)?;
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).map_err(|e| PgcError::Io {
            path: spec.into(),
            source: e,
        })?
    };
    let q = QuerySpec::from_json(&text, model.meta())?;
    let logp = model.query(&q)?;
    println!("{}", json!({ "log_prob": logp }));
    Ok(())
}

pub fn anomaly(
    model: &Path,
    inliers: &Path,
    outliers: &Path,
    frac: f64,
    seed: u64,
    bins: usize,
    out: Option<&Path>,
) -> Result<()> {
    let model = load_model(model)?;
    let inside = load_dataset(inliers, model.meta())?;
    let outside = load_dataset(outliers, model.meta())?;
    let res = anomaly_experiment(&model, &inside, &outside, frac, seed)?;
    if let Some(path) = out {
        let mut csv = Vec::new();
        write_histogram_csv(&mut csv, &score_histogram(&res.in_scores, &res.out_scores, bins)).expect("writing to memory");
        write_atomic(path, &csv)?;
    }
    let report = json!({
        "auc": res.auc,
        "permuted": res.permuted.len(),
        "inliers": inside.len(),
        "outliers": outside.len(),
    });
    println!("{report}");
    Ok(())
}

fn random_spec(model: &PgcModel, rng: &mut ChaCha8Rng) -> QuerySpec {
    let meta = model.meta();
    let n = rng.gen_range(1..=meta.m);
    let mut q = QuerySpec::marginal(meta, n);
    for slot in q.nodes.iter_mut().take(n) {
        if rng.gen_bool(0.5) {
            *slot = Some(rng.gen_range(0..meta.n_x));
        }
    }
    for slot in q.edges.iter_mut().take(n * (n - 1) / 2) {
        if rng.gen_bool(0.5) {
            *slot = Some(rng.gen_range(0..meta.n_a));
        }
    }
    q
}

pub fn check(config: &Path, seed: u64, out: Option<&Path>) -> Result<()> {
    const TOL: f64 = 1e-6;
    let cfg = load_config(config)?;
    let meta = DatasetMeta::load(cfg.meta()?)?;
    let data = match &cfg.dataset {
        Some(path) => load_dataset(path, &meta)?,
        None => Vec::new(),
    };
    let count = oracle::graph_count(&meta);
    if count > oracle::DEFAULT_CAP {
        return Err(PgcError::CapExceeded {
            count,
            cap: oracle::DEFAULT_CAP,
        });
    }
    let mut model = PgcModel::new(&meta, &cfg.model, &data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<f64> = (0..model.num_params()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    model.set_params(&params)?;

    let frame_mass = oracle::frame_mass(&model, oracle::DEFAULT_CAP)?;
    let total_mass = oracle::total_mass(&model)?;
    let mut query_error: f64 = 0.0;
    for _ in 0..50 {
        let q = random_spec(&model, &mut rng);
        query_error = query_error.max((model.query(&q)? - oracle::oracle_query(&model, &q)?).abs());
    }
    let perm_error = if model.mode() == Mode::FactorialPgc {
        let mut worst: f64 = 0.0;
        for g in oracle::enumerate_graphs(&meta, oracle::DEFAULT_CAP)?.iter().step_by(7) {
            let avg = oracle::oracle_perm_average(&model, g)? + model.log_cardinality()[g.n() - 1];
            worst = worst.max((model.logp(g)? - avg).abs());
        }
        Some(worst)
    } else {
        None
    };
    let mass_ok = if model.mode() == Mode::PiPgc {
        total_mass <= 1.0 + TOL && (frame_mass - 1.0).abs() <= TOL
    } else {
        (total_mass - 1.0).abs() <= TOL
    };
    let pass = mass_ok && query_error <= TOL && perm_error.is_none_or(|e| e <= TOL);
    let report = json!({
        "mode": model.mode().name(),
        "graphs": count as u64,
        "parameters": model.num_params(),
        "total_mass": total_mass,
        "frame_mass": frame_mass,
        "query_max_abs_error": query_error,
        "perm_average_max_abs_error": perm_error,
        "tolerance": TOL,
        "pass": pass,
    });
    emit(out, format!("{report}\n").as_bytes())?;
    if pass {
        Ok(())
    } else {
        Err(PgcError::Numeric("oracle check failed, see report".into()))
    }
}

pub fn heatmap(data: &Path, ordering: OrderingKind, m: Option<usize>, seed: u64, out: Option<&Path>) -> Result<()> {
    let graphs = read_graphs(data)?;
    let m = m.unwrap_or_else(|| graphs.iter().map(GraphInstance::n).max().unwrap_or(0));
    let h = adjacency_heatmap(&graphs, ordering, m, seed)?;
    let mut csv = Vec::new();
    write_matrix_csv(&mut csv, &h).expect("writing to memory");
    emit(out, &csv)
}
