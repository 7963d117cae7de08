use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use short_bandit::harness::{
    linear_grid, run_experiment_with_threads, sweep_parameter, verify_pattern_simulator, ExperimentConfig,
};
use short_bandit::reporting::{emit_histogram, emit_results, emit_sweep, emit_verification, parse_config};
use short_bandit::rngdist::{derive_stream, sample_gamma};
use short_bandit::simulators::{pattern_series, SimulatorKind, STEP_GAMMA};
use short_bandit::{Error, Result};

#[derive(Parser)]
#[command(name = "short-bandit", version, about = "Short-horizon bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured strategy and write CSVs plus a manifest.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Sweep one strategy's parameter over a grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<u64>,
        /// Label of the strategy to sweep (from the config).
        #[arg(long)]
        strategy: String,
        /// `start:stop:step` or a comma separated list.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value = "results/sweep.csv")]
        out: PathBuf,
    },
    /// Re-estimate the pattern simulator's lag regression.
    VerifySim {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500_000)]
        steps: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Write a histogram of simulated daily steps.
    Hist {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Source::Pattern)]
        source: Source,
        #[arg(long, default_value_t = 500_000)]
        samples: usize,
        #[arg(long, default_value_t = 1000.0)]
        bin_width: f64,
        #[arg(long, default_value = "results/histogram.csv")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Stationary,
    Pattern,
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::defaults(SimulatorKind::Stationary, false),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn threads(common: &Common) -> usize {
    common.threads.unwrap_or_else(rayon::current_num_threads).max(1)
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse grid {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        return linear_grid(v[0], v[1], v[2]);
    }
    spec.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, runs, out } => {
            let mut config = load(&common)?;
            if let Some(r) = runs {
                config.runs = r;
            }
            let summaries = run_experiment_with_threads(&config, threads(&common))?;
            emit_results(&summaries, &config, &out, timestamp())?;
            println!("{:<16} {:>10} {:>10}", "strategy", "overall", "last7");
            for s in &summaries {
                println!("{:<16} {:>10.1} {:>10.1}", s.label, s.overall_mean, s.last7_mean);
            }
            println!("wrote {}", out.display());
        }
        Command::Sweep {
            common,
            runs,
            strategy,
            grid,
            out,
        } => {
            let mut config = load(&common)?;
            if let Some(r) = runs {
                config.runs = r;
            }
            let target = config
                .strategies
                .iter()
                .find(|s| s.label == strategy)
                .cloned()
                .ok_or_else(|| Error::Config(format!("no strategy labelled {strategy:?}")))?;
            let grid = parse_grid(&grid)?;
            let n = threads(&common);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            let result = pool.install(|| sweep_parameter(&config, &target, &grid))?;
            emit_sweep(&result, &out)?;
            for p in &result.points {
                println!(
                    "{} = {:<10} overall {:>10.1}  last7 {:>10.1}",
                    result.parameter, p.value, p.overall_mean, p.last7_mean
                );
            }
            println!(
                "best {} = {} (overall {:.1})",
                result.parameter, result.best_value, result.best_overall
            );
        }
        Command::VerifySim { common, steps, out } => {
            let config = load(&common)?;
            let report = verify_pattern_simulator(steps, config.master_seed, &config.environment.pattern)?;
            emit_verification(&report, &out)?;
            println!("surviving features: {}", report.survivors.join(", "));
            let p = report.reduced_fit.p_values();
            for (j, name) in report.reduced_fit.feature_names.iter().enumerate() {
                println!(
                    "{name:<6} {:>9.4}  se {:.4}  p {:.3e}",
                    report.reduced_fit.coefficients[j], report.reduced_fit.std_errors[j], p[j]
                );
            }
            println!("mean steps {:.1}", report.mean_steps);
        }
        Command::Hist {
            common,
            source,
            samples,
            bin_width,
            out,
        } => {
            let config = load(&common)?;
            let mut stream = derive_stream(config.master_seed, 0);
            let draws = match source {
                Source::Stationary => (0..samples)
                    .map(|_| sample_gamma(&mut stream, STEP_GAMMA))
                    .collect::<Result<Vec<_>>>()?,
                Source::Pattern => pattern_series(samples, &config.environment.pattern, &mut stream)?,
            };
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                    path: parent.to_path_buf(),
                    source: e,
                })?;
            }
            let h = emit_histogram(&draws, bin_width, Path::new(&out))?;
            let n = draws.len() as f64;
            let mean = draws.iter().sum::<f64>() / n;
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            println!(
                "samples {}  mean {:.1}  variance {:.4e}  modal bin {}",
                draws.len(),
                mean,
                var,
                h.mode_bin_start()
            );
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
