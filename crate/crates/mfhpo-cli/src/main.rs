//! Command-line driver for the multi-fidelity HPO engine.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mfhpo_core::analysis::{
    rank_matrix, rank_stability, summarize, trajectory, write_rank_matrix_csv, write_summary_csv,
    write_trajectory_csv, Trajectory,
};
use mfhpo_core::benchmark::{
    build_benchmark, export_curve_table, sample_distinct_configs, BenchSpec, Regime,
};
use mfhpo_core::engine::{read_event_log, run_experiment, write_event_log, RunRecord};
use mfhpo_core::policies::PolicyKind;
use mfhpo_core::seed::child_rng;
use mfhpo_core::Error as CoreError;

use config::build_run_config;

#[derive(Parser)]
#[command(
    name = "mfhpo",
    about = "Multi-fidelity hyperparameter optimization on surrogate learning-curve benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a curve-table CSV from a synthetic benchmark.
    GenBench(GenBenchOpts),
    /// Run one experiment and write its event log.
    Run(RunOpts),
    /// Compute analysis CSVs from event logs or a benchmark.
    Analyze(AnalyzeOpts),
    /// Run a policies x seeds matrix and aggregate a summary.
    Compare(CompareOpts),
}

/// Options shared by `run` and `compare`; every run-config file key has a
/// matching flag, and flags win over file values.
#[derive(Args, Debug, Default, Clone)]
pub struct RunOpts {
    /// Run-config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Inner-loop policy: max_fidelity | one_epoch | sha | hyperband | rober.
    #[arg(long)]
    pub policy: Option<String>,
    /// Outer-loop sampler: random | forest_bo.
    #[arg(long)]
    pub sampler: Option<String>,
    /// Outer-loop iterations (configurations drawn) [default: 200].
    #[arg(long)]
    pub iters: Option<usize>,
    /// Finalists for one-epoch model selection [default: 3].
    #[arg(long)]
    pub topk: Option<usize>,
    /// Maximum fidelity in epochs [default: 100].
    #[arg(long)]
    pub zmax: Option<usize>,
    /// Master seed; falls back to $MFHPO_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Benchmark regime: dominant | crossing | file [default: dominant].
    #[arg(long)]
    pub regime: Option<String>,
    /// Benchmark noise standard deviation [default: 0].
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Benchmark generator seed [default: 0].
    #[arg(long)]
    pub bench_seed: Option<u64>,
    /// Noise replicates stored per config [default: 1].
    #[arg(long)]
    pub n_seeds: Option<u64>,
    /// Curve-table path (regime = file).
    #[arg(long)]
    pub bench_path: Option<PathBuf>,
    /// Halving reduction factor [default: 3].
    #[arg(long)]
    pub eta: Option<usize>,
    /// First rung of the halving ladder [default: eta].
    #[arg(long)]
    pub rung_base: Option<usize>,
    /// Early-rejection probability threshold [default: 0.9].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Epochs without improvement before stopping [default: 10].
    #[arg(long)]
    pub n_patience: Option<usize>,
    /// Outlier screening applies at epochs <= min(z_min, 4) [default: 4].
    #[arg(long)]
    pub z_min: Option<usize>,
    /// First epoch with extrapolation checks [default: 4].
    #[arg(long)]
    pub check_from: Option<usize>,
    /// Posterior draws per extrapolation check [default: 2000].
    #[arg(long)]
    pub rober_samples: Option<usize>,
    /// Judge predicted finals without observation noise.
    #[arg(long)]
    pub no_predictive_noise: bool,
    /// Resume top-K finalists from checkpoints instead of retraining.
    #[arg(long)]
    pub resume_topk: bool,
    /// Acquisition exploration ceiling [default: 1.96].
    #[arg(long)]
    pub kappa_max: Option<f64>,
    /// Acquisition decay rate [default: 0.1].
    #[arg(long)]
    pub kappa_lambda: Option<f64>,
    /// Acquisition decay cycle length [default: 25].
    #[arg(long)]
    pub kappa_period: Option<usize>,
    /// Candidate-pool size for acquisition argmax [default: 1000].
    #[arg(long)]
    pub acq_pool: Option<usize>,
    /// Trees in the surrogate forest [default: 100].
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Maximize acquisition over the whole space instead of a pool.
    #[arg(long)]
    pub exhaustive_acq: bool,
    /// Event-log output path (JSON lines).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenBenchOpts {
    /// Benchmark regime: dominant | crossing.
    #[arg(long, default_value = "dominant")]
    regime: String,
    /// Number of distinct configurations to export.
    #[arg(long, default_value_t = 1_000)]
    configs: usize,
    #[arg(long, default_value_t = 100)]
    zmax: usize,
    /// Benchmark generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Noise replicates per config.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AnalyzeOpts {
    /// Event log to turn into a trajectory CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Policy label for the trajectory rows [default: from file name].
    #[arg(long)]
    policy: Option<String>,
    /// Seed label for the trajectory rows.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample this many configs and emit their per-epoch rank matrix.
    #[arg(long)]
    rank_configs: Option<usize>,
    /// Benchmark regime for the rank matrix: dominant | crossing | file.
    #[arg(long, default_value = "dominant")]
    regime: String,
    #[arg(long, default_value_t = 100)]
    zmax: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Benchmark generator seed.
    #[arg(long, default_value_t = 0)]
    bench_seed: u64,
    #[arg(long)]
    bench_path: Option<PathBuf>,
    /// Sampling seed for the rank-matrix configs.
    #[arg(long, default_value_t = 0)]
    seed_configs: u64,
    /// Output directory for CSVs.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct CompareOpts {
    #[command(flatten)]
    run: RunOpts,
    /// Comma-separated policy list.
    #[arg(long, value_delimiter = ',', required = true)]
    policies: Vec<String>,
    /// Number of seeded repetitions per policy.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// First master seed; repetitions use seed_base..seed_base+seeds.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Output directory for summary.csv and trajectory.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn regime_from_str(s: &str) -> Result<Regime, CoreError> {
    match s {
        "dominant" => Ok(Regime::Dominant),
        "crossing" => Ok(Regime::Crossing),
        "file" => Ok(Regime::File),
        other => Err(CoreError::InvalidRunConfig(format!(
            "unknown regime {other:?}"
        ))),
    }
}

fn cmd_gen_bench(opts: &GenBenchOpts) -> Result<(), CoreError> {
    let spec = BenchSpec {
        regime: regime_from_str(&opts.regime)?,
        z_max: opts.zmax,
        noise_sigma: opts.noise_sigma,
        n_seeds: opts.seeds,
        master_seed: opts.seed,
        source_path: None,
    };
    if spec.regime == Regime::File {
        return Err(CoreError::InvalidRunConfig(
            "gen-bench generates synthetic regimes only".into(),
        ));
    }
    let bench = build_benchmark(&spec, None)?;
    // Config sampling gets its own stream so the exported set is a pure
    // function of the benchmark seed.
    let mut rng = child_rng(opts.seed, 100, &[]);
    let configs = sample_distinct_configs(bench.space(), opts.configs, &mut rng)?;
    export_curve_table(bench.as_ref(), &configs, &opts.out)?;
    println!(
        "wrote {} configs x {} seeds x {} epochs to {} (master seed {})",
        opts.configs,
        opts.seeds,
        opts.zmax,
        opts.out.display(),
        opts.seed
    );
    Ok(())
}

fn print_run_summary(record: &RunRecord) {
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "policy={} total_epochs={} final_test={}",
        record.policy, record.cumulative_epochs, record.selected_final_test
    );
}

fn cmd_run(opts: &RunOpts) -> Result<(), CoreError> {
    let cfg = build_run_config(opts)?;
    let record = run_experiment(&cfg)?;
    if let Some(path) = &opts.log {
        write_event_log(&record.events, path)?;
    }
    print_run_summary(&record);
    Ok(())
}

fn cmd_analyze(opts: &AnalyzeOpts) -> Result<(), CoreError> {
    if opts.log.is_none() && opts.rank_configs.is_none() {
        return Err(CoreError::InvalidRunConfig(
            "analyze needs --log and/or --rank-configs".into(),
        ));
    }
    std::fs::create_dir_all(&opts.out_dir)?;

    if let Some(log_path) = &opts.log {
        let events = read_event_log(log_path)?;
        let label = opts.policy.clone().unwrap_or_else(|| {
            log_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into())
        });
        let t = trajectory(&events, &label, opts.seed)?;
        let path = opts.out_dir.join("trajectory.csv");
        let mut w = BufWriter::new(File::create(&path)?);
        write_trajectory_csv(&mut w, std::slice::from_ref(&t))?;
        w.flush()?;
        println!("wrote {}", path.display());
    }

    if let Some(n) = opts.rank_configs {
        let spec = BenchSpec {
            regime: regime_from_str(&opts.regime)?,
            z_max: opts.zmax,
            noise_sigma: opts.noise_sigma,
            n_seeds: 1,
            master_seed: opts.bench_seed,
            source_path: opts.bench_path.clone(),
        };
        let bench = build_benchmark(&spec, None)?;
        let mut rng = child_rng(opts.seed_configs, 101, &[]);
        let configs = sample_distinct_configs(bench.space(), n, &mut rng)?;
        let matrix = rank_matrix(bench.as_ref(), &configs, 0)?;
        let path = opts.out_dir.join("rank_matrix.csv");
        let mut w = BufWriter::new(File::create(&path)?);
        write_rank_matrix_csv(&mut w, &matrix)?;
        w.flush()?;
        println!("wrote {}", path.display());
        for z in [1, 5, 10, matrix.z_max / 2, matrix.z_max] {
            if z >= 1 && z <= matrix.z_max {
                println!("rank_stability z={z} {}", rank_stability(&matrix, z));
            }
        }
    }
    Ok(())
}

fn cmd_compare(opts: &CompareOpts) -> Result<(), CoreError> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut records: Vec<RunRecord> = Vec::new();
    let mut trajectories: Vec<Trajectory> = Vec::new();
    for name in &opts.policies {
        PolicyKind::parse(name)
            .ok_or_else(|| CoreError::InvalidRunConfig(format!("unknown policy {name:?}")))?;
        for s in 0..opts.seeds {
            let mut run_opts = opts.run.clone();
            run_opts.policy = Some(name.clone());
            run_opts.seed = Some(opts.seed_base + s);
            let cfg = build_run_config(&run_opts)?;
            let record = run_experiment(&cfg)?;
            for w in &record.warnings {
                eprintln!(
                    "warning: [{} seed {}] {w}",
                    record.policy, record.master_seed
                );
            }
            trajectories.push(trajectory(
                &record.events,
                &record.policy,
                record.master_seed,
            )?);
            records.push(record);
        }
    }

    let rows = summarize(&records);
    let summary_path = opts.out_dir.join("summary.csv");
    let mut w = BufWriter::new(File::create(&summary_path)?);
    write_summary_csv(&mut w, &rows)?;
    w.flush()?;
    let traj_path = opts.out_dir.join("trajectory.csv");
    let mut w = BufWriter::new(File::create(&traj_path)?);
    write_trajectory_csv(&mut w, &trajectories)?;
    w.flush()?;

    println!(
        "wrote {} and {}",
        summary_path.display(),
        traj_path.display()
    );
    for r in &rows {
        println!(
            "policy={} final_test={}±{} total_epochs={} speedup={:.2}",
            r.policy, r.final_test_mean, r.final_test_stderr, r.total_epochs, r.speedup
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenBench(opts) => cmd_gen_bench(opts),
        Command::Run(opts) => cmd_run(opts),
        Command::Analyze(opts) => cmd_analyze(opts),
        Command::Compare(opts) => cmd_compare(opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            let code = match e.category() {
                "config" => 2,
                "benchmark" => 3,
                "format" => 4,
                "fit" => 5,
                "engine" => 6,
                _ => 7,
            };
            ExitCode::from(code)
        }
    }
}
