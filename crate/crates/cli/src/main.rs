use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use possfuse::experiment::{run_experiment, ExperimentConfig, ExperimentKind, RunOptions};
use possfuse::oracle::fusion_exactness_suite;
use possfuse::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Possibilistic Bernoulli filtering and Chernoff fusion experiments.
#[derive(Parser)]
#[command(name = "possfuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run each sensor's filter on its own and report OSPA per sensor.
    Single(ExperimentArgs),
    /// Fuse two independent sensors with the centralized product and Chernoff fusion.
    FuseIndependent(ExperimentArgs),
    /// Fuse two filters fed by the same sensor and report covariance traces.
    FuseDependent(ExperimentArgs),
    /// Check the closed-form fusion against brute-force numerical references.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo run count (overrides the config).
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores, capped by POSSFUSE_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write truth-labeled scans to scans.csv.
    #[arg(long)]
    dump_scans: bool,
}

#[derive(Args)]
struct SelftestArgs {
    /// Seed for the random test mixtures.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of random state pairs.
    #[arg(long, default_value_t = 100)]
    pairs: usize,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn run(kind: ExperimentKind, args: ExperimentArgs) -> Result<(), Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if args.threads == Some(0) {
        return Err(Error::Config("at `--threads`: must be at least 1".into()));
    }

    let start = Instant::now();
    let output = run_experiment(
        &config,
        kind,
        RunOptions {
            threads: args.threads,
            dump_scans: args.dump_scans,
        },
    )?;
    let files = output.write_to(&config.output_dir)?;

    let agg = &output.aggregate;
    println!(
        "{}: {} runs x {} steps in {:.1}s",
        kind.name(),
        agg.runs,
        agg.steps,
        start.elapsed().as_secs_f64()
    );
    let first = 10.min(agg.steps);
    for s in &agg.series {
        let traces: Vec<f64> = s.mean_trace[first - 1..].iter().flatten().copied().collect();
        let trace = if traces.is_empty() {
            "n/a".to_string()
        } else {
            format!("{:.4}", traces.iter().sum::<f64>() / traces.len() as f64)
        };
        println!(
            "  {:<12} mean OSPA (steps {first}-{}) {:.4}  mean trace {trace}",
            s.name,
            agg.steps,
            s.mean_ospa_over(first, agg.steps)
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn selftest(args: SelftestArgs) -> ExitCode {
    const OMEGAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let start = Instant::now();
    let report = match fusion_exactness_suite(&mut rng, args.pairs, &OMEGAS) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("selftest: fusion failed: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    let checks = [
        ("chernoff fusion pointwise", report.max_chernoff_gap),
        ("independent fusion pointwise", report.max_independent_gap),
        ("chernoff supremum", report.max_log_sup_gap),
    ];
    let mut ok = true;
    for (name, gap) in checks {
        let pass = gap <= TOL;
        ok &= pass;
        println!("[{}] {name}: max gap {gap:.3e}", if pass { "PASS" } else { "FAIL" });
    }
    println!(
        "{} fusions over {} grid points in {:.2}s",
        report.cases,
        report.points_checked,
        start.elapsed().as_secs_f64()
    );
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Single(a) => (ExperimentKind::Single, a),
        Command::FuseIndependent(a) => (ExperimentKind::FuseIndependent, a),
        Command::FuseDependent(a) => (ExperimentKind::FuseDependent, a),
        Command::Selftest(a) => return selftest(a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
