use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lowrank_mtl::bench::{
    self, config::EstimatorKind, parse_config, ExperimentConfig, LambdaSpec, SweepAxis,
};
use lowrank_mtl::datagen::{FeatureDist, ParamScheme};
use lowrank_mtl::diagnostics;
use lowrank_mtl::MtlError;

#[derive(Parser)]
#[command(name = "bench", about = "Multi-task low-rank regression benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a config-driven sweep and write raw/aggregate CSV files.
    Run {
        #[arg(long)]
        config: String,
        /// Output path stem; overrides the config's `output` key.
        #[arg(long)]
        out: Option<String>,
        /// Worker thread count (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run one estimator on one freshly generated cell; record to stdout.
    Single {
        #[arg(long)]
        estimator: String,
        #[arg(long, default_value_t = 100)]
        d: usize,
        #[arg(long, default_value_t = 5)]
        r: usize,
        #[arg(long, default_value_t = 10)]
        m: usize,
        #[arg(long = "T", default_value_t = 800)]
        t: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the invariant diagnostic suite.
    Check,
}

fn exit_for(err: &MtlError) -> ExitCode {
    match err {
        MtlError::Io { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn cmd_run(config: &str, out: Option<String>, threads: Option<usize>) -> Result<(), MtlError> {
    let text = std::fs::read_to_string(config).map_err(|source| MtlError::Io {
        path: config.to_string(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = out {
        cfg.output_path = out;
    }
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| MtlError::invalid(format!("thread pool: {e}")))?;
    }
    let records = bench::run_sweep(&cfg)?;
    let aggregates = bench::aggregate(&records);
    bench::write_csv(&records, &aggregates, &cfg.output_path)?;
    eprintln!(
        "wrote {} raw rows to {}.raw.csv, {} aggregate rows to {}.agg.csv",
        records.len(),
        cfg.output_path,
        aggregates.len(),
        cfg.output_path
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_single(
    estimator: &str,
    d: usize,
    r: usize,
    m: usize,
    t: usize,
    sigma: f64,
    seed: u64,
) -> Result<(), MtlError> {
    let est = EstimatorKind::parse(estimator)
        .ok_or_else(|| MtlError::invalid(format!("unknown estimator '{estimator}'")))?;
    let cfg = ExperimentConfig {
        d,
        r,
        m,
        t,
        sigma,
        sweep_axis: SweepAxis::Tasks,
        sweep_values: vec![t as f64],
        estimators: vec![est],
        n_seeds: 1,
        base_seed: seed,
        lambda: LambdaSpec::Theory,
        feature_dist: FeatureDist::Gaussian,
        param_scheme: ParamScheme::Gaussian,
        transfer: false,
        record_runtime: true,
        max_iters: 5000,
        rel_tol: 1e-8,
        output_path: String::new(),
    };
    let rec = bench::run_cell(&cfg, t as f64, 0, est)?;
    let mut out = Vec::new();
    bench::write_raw_csv(&mut out, std::slice::from_ref(&rec)).map_err(|source| {
        MtlError::Io { path: "<stdout>".into(), source }
    })?;
    print!("{}", String::from_utf8_lossy(&out));
    Ok(())
}

fn cmd_check() -> Result<(), MtlError> {
    let outcomes = diagnostics::run_all(0);
    let mut all_ok = true;
    for o in &outcomes {
        println!(
            "{}: {}/{} trials within bound (need {}) ... {}",
            o.name,
            o.passes,
            o.trials,
            o.required,
            if o.ok() { "ok" } else { "FAIL" }
        );
        all_ok &= o.ok();
    }
    let dev = diagnostics::moment_identity_deviation(0, 10, 200_000);
    let ok = dev < 0.05;
    println!("moment_identity: max entrywise deviation {dev:.4} (need < 0.05) ... {}", if ok { "ok" } else { "FAIL" });
    all_ok &= ok;
    if all_ok {
        Ok(())
    } else {
        Err(MtlError::invalid("diagnostic suite reported failures"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config, out, threads } => cmd_run(&config, out, threads),
        Cmd::Single { estimator, d, r, m, t, sigma, seed } => {
            cmd_single(&estimator, d, r, m, t, sigma, seed)
        }
        Cmd::Check => cmd_check(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
