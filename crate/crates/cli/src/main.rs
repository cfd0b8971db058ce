use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pgc::ordering::OrderingKind;
use pgc::PgcError;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "pgc", version, about = "Train, sample and query probabilistic graph circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model from a config file; writes model.pgc and trace.csv.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw graphs as JSON lines, optionally around a scaffold.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON-lines file whose first record is the known subgraph.
        #[arg(long)]
        scaffold: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validity, uniqueness and novelty of sampled graphs as JSON.
    Eval {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        train: PathBuf,
        /// JSON valency table; defaults to C, N, O, F.
        #[arg(long)]
        valency: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact log-probability of a (partially) observed graph.
    Query {
        #[arg(long)]
        model: PathBuf,
        /// Query spec as inline JSON or a path to a JSON file.
        #[arg(long)]
        spec: String,
    },
    /// Anomaly-detection AUC with a fraction of inliers permuted.
    Anomaly {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        inliers: PathBuf,
        #[arg(long)]
        outliers: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        bins: usize,
        /// Histogram CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive oracle report for a small configuration.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean adjacency matrix of a dataset under an ordering, as CSV.
    Heatmap {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "bft")]
        ordering: OrderingKind,
        /// Matrix size; defaults to the largest graph.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &PgcError) -> u8 {
    match err {
        PgcError::InvalidArgument(_) | PgcError::Config(_) => 2,
        PgcError::Numeric(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, out } => commands::train(&config, out.as_deref()),
        Command::Sample {
            model,
            count,
            seed,
            scaffold,
            out,
        } => commands::sample(&model, count, seed, scaffold.as_deref(), out.as_deref()),
        Command::Eval {
            samples,
            train,
            valency,
            out,
        } => commands::eval(&samples, &train, valency.as_deref(), out.as_deref()),
        Command::Query { model, spec } => commands::query(&model, &spec),
        Command::Anomaly {
            model,
            inliers,
            outliers,
            frac,
            seed,
            bins,
            out,
        } => commands::anomaly(&model, &inliers, &outliers, frac, seed, bins, out.as_deref()),
        Command::Check { config, seed, out } => commands::check(&config, seed, out.as_deref()),
        Command::Heatmap {
            data,
            ordering,
            m,
            seed,
            out,
        } => commands::heatmap(&data, ordering, m, seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
