//! Monte-Carlo experiment runner.
//!
//! Each (strategy, run) pair gets two streams, one for the environment and one
//! for the policy, derived from the master seed and a hash of the strategy
//! index and run index. Runs are grouped into fixed-size blocks; block sums
//! are computed in run order and then combined in block order, so results are
//! bit-identical for any number of worker threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linreg::{backward_eliminate, fit_ols, DesignMatrix, RegressionFit};
use crate::reporting::hist::{histogram, Histogram};
use crate::rngdist::{derive_stream, mix64, RngStream};
use crate::simulators::{pattern_series, Environment, PatternParams, SimulatorKind, PATTERN_LAGS};
use crate::strategies::{default_strategies, Agent, StrategyConfig};

pub const DEFAULT_HORIZON: usize = 70;
pub const DEFAULT_RUNS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;

/// Number of runs summed sequentially before blocks are combined.
const BLOCK_RUNS: u64 = 256;

/// Width of the late-performance window.
pub const LAST_DAYS: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub horizon: usize,
    pub runs: u64,
    pub master_seed: u64,
    pub environment: Environment,
    pub strategies: Vec<StrategyConfig>,
    /// Give every strategy the same environment stream for a given run.
    pub paired_noise: bool,
}

impl ExperimentConfig {
    /// Default experiment for a simulator: horizon 70, six tuned strategies.
    pub fn defaults(kind: SimulatorKind, forced_exploration: bool) -> Self {
        ExperimentConfig {
            horizon: DEFAULT_HORIZON,
            runs: DEFAULT_RUNS,
            master_seed: DEFAULT_SEED,
            environment: Environment::new(kind),
            strategies: default_strategies(kind, forced_exploration),
            paired_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.runs < 1 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.master_seed > i64::MAX as u64 {
            return Err(Error::Config(format!("master_seed must not exceed {}", i64::MAX)));
        }
        self.environment.validate()?;
        let k = self.environment.arms.len();
        let mut labels = std::collections::HashSet::new();
        for s in &self.strategies {
            s.validate()?;
            if !labels.insert(s.label.as_str()) {
                return Err(Error::Config(format!("duplicate strategy label {}", s.label)));
            }
            if self.horizon < k * s.forced_pulls_per_arm {
                return Err(Error::Config(format!(
                    "horizon {} is shorter than the forced exploration of {} ({} arms x {} pulls)",
                    self.horizon, s.label, k, s.forced_pulls_per_arm
                )));
            }
        }
        Ok(())
    }

    /// Environment and policy stream ids for one episode.
    pub fn stream_ids(&self, strategy_index: usize, run: u64) -> (u64, u64) {
        let key = |a: u64, b: u64, role: u64| mix64(mix64(mix64(a) ^ b) ^ role);
        let env_owner = if self.paired_noise {
            u64::MAX
        } else {
            strategy_index as u64
        };
        (key(env_owner, run, 1), key(strategy_index as u64, run, 2))
    }

    pub fn episode_streams(&self, strategy_index: usize, run: u64) -> (RngStream, RngStream) {
        let (env, policy) = self.stream_ids(strategy_index, run);
        (
            derive_stream(self.master_seed, env),
            derive_stream(self.master_seed, policy),
        )
    }
}

/// Rewards and arm choices of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub rewards: Vec<f64>,
    pub arms: Vec<usize>,
}

/// Run one episode of `strategy` for `config.horizon` steps.
pub fn run_episode(
    config: &ExperimentConfig,
    strategy: &StrategyConfig,
    env_stream: &mut RngStream,
    policy_stream: &mut RngStream,
) -> Result<EpisodeOutcome> {
    let env = &config.environment;
    let mut episode = env.start_episode(env_stream)?;
    let mut agent = Agent::new(strategy, &env.arms, policy_stream);
    for _ in 0..config.horizon {
        let arm = agent.select(&episode, policy_stream)?;
        env.step(&mut episode, arm, env_stream)?;
        agent.observe(&episode);
    }
    Ok(EpisodeOutcome {
        rewards: episode.rewards,
        arms: episode.arm_choices,
    })
}

/// Averaged results for one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub label: String,
    pub runs: u64,
    pub per_t_mean: Vec<f64>,
    pub overall_mean: f64,
    pub last7_mean: f64,
}

impl MetricsSummary {
    pub fn from_per_t(label: &str, runs: u64, per_t_mean: Vec<f64>) -> Self {
        let overall_mean = mean(&per_t_mean);
        let tail = per_t_mean.len().saturating_sub(LAST_DAYS);
        let last7_mean = mean(&per_t_mean[tail..]);
        MetricsSummary {
            label: label.to_string(),
            runs,
            per_t_mean,
            overall_mean,
            last7_mean,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Run every configured strategy for `config.runs` episodes on the current
/// rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricsSummary>> {
    config.validate()?;
    config
        .strategies
        .iter()
        .enumerate()
        .map(|(i, s)| run_strategy(config, i, s))
        .collect()
}

/// As [`run_experiment`], on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: usize) -> Result<Vec<MetricsSummary>> {
    with_pool(threads, || run_experiment(config))
}

pub(crate) fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(f)
}

fn run_strategy(config: &ExperimentConfig, index: usize, strategy: &StrategyConfig) -> Result<MetricsSummary> {
    let h = config.horizon;
    let blocks = config.runs.div_ceil(BLOCK_RUNS);
    let partials = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut sums = vec![0.0; h];
            let end = ((b + 1) * BLOCK_RUNS).min(config.runs);
            for run in b * BLOCK_RUNS..end {
                let (mut env, mut policy) = config.episode_streams(index, run);
                let outcome = run_episode(config, strategy, &mut env, &mut policy)?;
                for (s, r) in sums.iter_mut().zip(&outcome.rewards) {
                    *s += r;
                }
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut totals = vec![0.0; h];
    for block in &partials {
        for (t, v) in totals.iter_mut().zip(block) {
            *t += v;
        }
    }
    let n = config.runs as f64;
    let per_t: Vec<f64> = totals.into_iter().map(|s| s / n).collect();
    Ok(MetricsSummary::from_per_t(&strategy.label, config.runs, per_t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub overall_mean: f64,
    pub last7_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub label: String,
    /// `"epsilon"` or `"ucb_c"`.
    pub parameter: &'static str,
    pub points: Vec<SweepPoint>,
    pub best_value: f64,
    pub best_overall: f64,
}

/// Evaluate `strategy` at every grid value of its tuned parameter.
///
/// Every grid point reuses the master seed and strategy slot 0, so all points
/// see the same environment streams and differences reflect the parameter.
pub fn sweep_parameter(config: &ExperimentConfig, strategy: &StrategyConfig, grid: &[f64]) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let parameter = match strategy.policy {
        crate::strategies::Policy::Ucb1 => "ucb_c",
        crate::strategies::Policy::Ucbt => {
            return Err(Error::Config(format!(
                "strategy {} has no tunable parameter",
                strategy.label
            )))
        }
        _ => "epsilon",
    };
    let mut points = Vec::with_capacity(grid.len());
    for &value in grid {
        let point_config = ExperimentConfig {
            strategies: vec![strategy.with_parameter(value)?],
            ..config.clone()
        };
        let summary = run_experiment(&point_config)?.remove(0);
        points.push(SweepPoint {
            value,
            overall_mean: summary.overall_mean,
            last7_mean: summary.last7_mean,
        });
    }
    let best = points.iter().fold(
        &points[0],
        |best, p| if p.overall_mean > best.overall_mean { p } else { best },
    );
    Ok(SweepResult {
        label: strategy.label.clone(),
        parameter,
        best_value: best.value,
        best_overall: best.overall_mean,
        points,
    })
}

/// Evenly spaced grid `start, start + step, ...` up to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(Error::Config(format!("invalid grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| tidy(start + i as f64 * step)).collect())
}

// Drop accumulated binary noise, e.g. 0.24000000000000002 -> 0.24.
fn tidy(x: f64) -> f64 {
    format!("{x:.12e}").parse().unwrap_or(x)
}

/// Outcome of re-estimating the pattern simulator's lag structure.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub n_steps: usize,
    pub full_fit: RegressionFit,
    pub reduced_fit: RegressionFit,
    pub survivors: Vec<String>,
    pub mean_steps: f64,
    pub histogram: Histogram,
}

impl VerificationReport {
    /// Reduced-model coefficient of `lagK`, or zero when it was eliminated.
    pub fn lag_coefficient(&self, lag: usize) -> f64 {
        let name = format!("lag{lag}");
        self.reduced_fit
            .feature_names
            .iter()
            .position(|n| *n == name)
            .map_or(0.0, |i| self.reduced_fit.coefficients[i])
    }
}

pub const VERIFY_ALPHA: f64 = 0.05;
pub const VERIFY_BIN_WIDTH: f64 = 1000.0;

/// Generate `n_steps` un-adjusted pattern steps and rerun the lag-7 OLS with
/// backward elimination at alpha 0.05.
pub fn verify_pattern_simulator(n_steps: usize, seed: u64, params: &PatternParams) -> Result<VerificationReport> {
    if n_steps < 10_000 {
        return Err(Error::ParameterDomain(format!(
            "verification needs at least 10000 steps, got {n_steps}"
        )));
    }
    let mut stream = derive_stream(seed, 0);
    let series = pattern_series(n_steps, params, &mut stream)?;
    let names: Vec<String> = (1..=PATTERN_LAGS).map(|i| format!("lag{i}")).collect();
    let mut design = DesignMatrix::with_capacity(names, true, n_steps - PATTERN_LAGS);
    let mut lags = [0.0; PATTERN_LAGS];
    for t in PATTERN_LAGS..series.len() {
        for (i, slot) in lags.iter_mut().enumerate() {
            *slot = series[t - 1 - i];
        }
        design.push_row(&lags, series[t])?;
    }
    let full_fit = fit_ols(&design)?;
    let (reduced_fit, survivors) = backward_eliminate(&design, VERIFY_ALPHA)?;
    Ok(VerificationReport {
        n_steps,
        full_fit,
        reduced_fit,
        survivors,
        mean_steps: mean(&series),
        histogram: histogram(&series, VERIFY_BIN_WIDTH)?,
    })
}
