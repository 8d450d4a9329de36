use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nncomplete::bench::{self, BenchConfig, Overrides};
use nncomplete::data::{
    gen_synthetic_dist, gen_synthetic_scalar, write_long_csv, write_samples_csv, Labeled, SyntheticSpec,
};
use nncomplete::Error;

#[derive(Parser)]
#[command(
    name = "nncomplete",
    version,
    about = "Nearest-neighbor matrix completion benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark and write a JSON report plus a per-entry CSV.
    Bench(BenchArgs),
    /// Write a synthetic panel as long CSV (or samples CSV).
    Generate(GenerateArgs),
}

#[derive(clap::Args)]
struct BenchArgs {
    /// TOML file with BenchConfig keys; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset kind, optionally with a path: `long-csv:panel.csv`.
    #[arg(long)]
    dataset: Option<String>,
    /// Method id; repeat to run several (replaces the configured list).
    #[arg(long = "estimator")]
    estimators: Vec<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    propensity: Option<f64>,
    #[arg(long)]
    n_rows: Option<usize>,
    #[arg(long)]
    n_cols: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `abs_error` or `ks_distance`.
    #[arg(long)]
    metric: Option<String>,
    /// JSON report path; the entry CSV is written alongside.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Scalar,
    Dist,
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "scalar")]
    kind: Kind,
    #[arg(long, default_value_t = 50)]
    n_rows: usize,
    #[arg(long, default_value_t = 50)]
    n_cols: usize,
    #[arg(long, default_value_t = 4)]
    rank: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    propensity: f64,
    /// Samples per observed cell for `--kind dist`.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the full signal matrix as long CSV.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        _ => 3,
    }
}

fn bench_cmd(args: BenchArgs) -> Result<(), Error> {
    let mut config = match &args.config {
        Some(p) => BenchConfig::from_file(p)?,
        None => BenchConfig::default(),
    };
    Overrides {
        dataset: args.dataset,
        estimators: args.estimators,
        sigma: args.sigma,
        propensity: args.propensity,
        n_rows: args.n_rows,
        n_cols: args.n_cols,
        trials: args.trials,
        seed: args.seed,
        metric: args.metric,
        out: args.out,
    }
    .apply(&mut config)?;
    let report = bench::run_to_files(&config)?;
    for s in &report.summary {
        let mean = s.mean_error.map_or("n/a".to_string(), |m| format!("{m:.6}"));
        let se = s.std_error.map_or("n/a".to_string(), |m| format!("{m:.6}"));
        println!(
            "{:<13} mean {:?} {mean} (se {se}) over {} trials, {} failed entries",
            s.estimator.id(),
            report.metric,
            s.n_trials_scored,
            s.n_failed_entries
        );
    }
    eprintln!("wrote {} and {}", config.out.display(), config.entries_path().display());
    Ok(())
}

fn generate_cmd(args: GenerateArgs) -> Result<(), Error> {
    let spec = SyntheticSpec {
        n_rows: args.n_rows,
        n_cols: args.n_cols,
        rank: args.rank,
        noise_sd: args.sigma,
        propensity: args.propensity,
        sample_count: args.samples,
        constant_theta: None,
        seed: args.seed,
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    let (n, t) = (args.n_rows, args.n_cols);
    let theta = match args.kind {
        Kind::Scalar => {
            let g = gen_synthetic_scalar(&spec)?;
            write_long_csv(File::create(&args.out)?, &Labeled::indexed(g.matrix, n, t))?;
            g.theta
        }
        Kind::Dist => {
            let g = gen_synthetic_dist(&spec)?;
            write_samples_csv(File::create(&args.out)?, &Labeled::indexed(g.matrix, n, t))?;
            g.theta
        }
    };
    if let Some(path) = args.truth {
        let full = nncomplete::MaskedMatrix::dense(theta)?;
        write_long_csv(BufWriter::new(File::create(path)?), &Labeled::indexed(full, n, t))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(args) => bench_cmd(args),
        Command::Generate(args) => generate_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
