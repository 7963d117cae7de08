//! Experiment configuration files (TOML).
//!
//! Every key is optional. An empty file describes the default stationary
//! experiment: horizon 70, the three default arms and the six tuned
//! strategies. Unknown keys are rejected.
//!
//! ```toml
//! horizon = 70
//! runs = 100000
//! master_seed = 42
//! simulator = "pattern"          # or "stationary"
//! feedback = "baseline"          # or "adjusted"
//! paired_noise = false
//! forced_exploration = false     # default strategies pull each arm 4 times
//!
//! [pattern]
//! lag_coefficients = [0.2599, 0.0984, 0.0851, 0.1337, 0.0, 0.13, 0.1833]
//! constant = -3000.0
//! noise_shape = 1.1
//! noise_scale = 3500.0
//! priming_shape = 2.8
//! priming_scale = 3100.0
//!
//! [[arms]]
//! name = "A"
//! oracle_value = -0.2
//! adjust_low = -0.2
//! adjust_high = 0.0
//!
//! [[strategies]]
//! label = "UCB1"
//! policy = "ucb1"                # epsilon_greedy | epsilon_decreasing | ucb1 | ucbt
//! oracle = "mean"                # or "regression"
//! ucb_c = 1600.0
//! forced_pulls_per_arm = 1
//! regression_window = 7
//! ```
//!
//! Omitted strategy parameters take the tuned value for the configured
//! simulator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, DEFAULT_HORIZON, DEFAULT_RUNS, DEFAULT_SEED};
use crate::rngdist::GammaParams;
use crate::simulators::{ArmSpec, Environment, FeedbackMode, PatternParams, SimulatorKind, PATTERN_LAGS};
use crate::strategies::{
    default_strategies, OracleKind, Policy, StrategyConfig, DEFAULT_WINDOW, FORCED_EXPLORATION_PULLS,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulator: Option<SimulatorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paired_noise: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced_exploration: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<RawPattern>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<ArmSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<RawStrategy>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawPattern {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lag_coefficients: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub priming_shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub priming_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawStrategy {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub policy: Policy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ucb_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced_pulls_per_arm: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regression_window: Option<usize>,
}

/// Read, default and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let kind = raw.simulator.unwrap_or(SimulatorKind::Stationary);
    let forced = raw.forced_exploration.unwrap_or(false);
    let pattern = resolve_pattern(raw.pattern.unwrap_or_default())?;
    let environment = Environment {
        kind,
        arms: raw.arms.unwrap_or_else(crate::simulators::default_arm_bank),
        pattern,
        feedback: raw.feedback.unwrap_or(FeedbackMode::Baseline),
    };
    let strategies = match raw.strategies {
        None => default_strategies(kind, forced),
        Some(list) => list.into_iter().map(|s| resolve_strategy(s, kind, forced)).collect(),
    };
    let config = ExperimentConfig {
        horizon: raw.horizon.unwrap_or(DEFAULT_HORIZON),
        runs: raw.runs.unwrap_or(DEFAULT_RUNS),
        master_seed: raw.master_seed.unwrap_or(DEFAULT_SEED),
        environment,
        strategies,
        paired_noise: raw.paired_noise.unwrap_or(false),
    };
    config.validate()?;
    Ok(config)
}

fn resolve_pattern(raw: RawPattern) -> Result<PatternParams> {
    let d = PatternParams::default();
    let lag_coefficients = match raw.lag_coefficients {
        None => d.lag_coefficients,
        Some(v) => <[f64; PATTERN_LAGS]>::try_from(v.as_slice()).map_err(|_| {
            Error::Config(format!(
                "pattern.lag_coefficients needs {PATTERN_LAGS} values, got {}",
                v.len()
            ))
        })?,
    };
    let gamma = |shape: Option<f64>, scale: Option<f64>, default: GammaParams, what: &str| {
        GammaParams::new(shape.unwrap_or(default.shape()), scale.unwrap_or(default.scale()))
            .map_err(|e| Error::Config(format!("pattern {what}: {e}")))
    };
    Ok(PatternParams {
        lag_coefficients,
        constant: raw.constant.unwrap_or(d.constant),
        noise: gamma(raw.noise_shape, raw.noise_scale, d.noise, "noise")?,
        priming: gamma(raw.priming_shape, raw.priming_scale, d.priming, "priming")?,
    })
}

fn resolve_strategy(raw: RawStrategy, kind: SimulatorKind, forced: bool) -> StrategyConfig {
    let oracle = raw.oracle.unwrap_or(OracleKind::Mean);
    let tuned = default_strategies(kind, forced);
    let template = tuned
        .iter()
        .find(|s| s.policy == raw.policy && s.oracle == oracle)
        .or_else(|| tuned.iter().find(|s| s.policy == raw.policy))
        .expect("every policy has a default");
    let label = raw.label.unwrap_or_else(|| match oracle {
        OracleKind::Mean => raw.policy.name().to_string(),
        OracleKind::Regression => format!("{} reg", raw.policy.name()),
    });
    let forced_default = if forced {
        FORCED_EXPLORATION_PULLS
    } else {
        template.forced_pulls_per_arm
    };
    StrategyConfig {
        label,
        policy: raw.policy,
        oracle,
        epsilon: raw.epsilon.unwrap_or(template.epsilon),
        ucb_c: raw.ucb_c.unwrap_or(template.ucb_c),
        forced_pulls_per_arm: raw.forced_pulls_per_arm.unwrap_or(forced_default),
        regression_window: raw.regression_window.unwrap_or(DEFAULT_WINDOW),
    }
}

pub(crate) fn to_raw(config: &ExperimentConfig) -> RawConfig {
    let env = &config.environment;
    let p = &env.pattern;
    RawConfig {
        horizon: Some(config.horizon),
        runs: Some(config.runs),
        master_seed: Some(config.master_seed),
        simulator: Some(env.kind),
        feedback: Some(env.feedback),
        paired_noise: Some(config.paired_noise),
        forced_exploration: None,
        pattern: Some(RawPattern {
            lag_coefficients: Some(p.lag_coefficients.to_vec()),
            constant: Some(p.constant),
            noise_shape: Some(p.noise.shape()),
            noise_scale: Some(p.noise.scale()),
            priming_shape: Some(p.priming.shape()),
            priming_scale: Some(p.priming.scale()),
        }),
        arms: Some(env.arms.clone()),
        strategies: Some(
            config
                .strategies
                .iter()
                .map(|s| RawStrategy {
                    label: Some(s.label.clone()),
                    policy: s.policy,
                    oracle: Some(s.oracle),
                    epsilon: Some(s.epsilon),
                    ucb_c: Some(s.ucb_c),
                    forced_pulls_per_arm: Some(s.forced_pulls_per_arm),
                    regression_window: Some(s.regression_window),
                })
                .collect(),
        ),
    }
}

/// Fully explicit TOML rendering of `config`.
pub fn write_config(config: &ExperimentConfig) -> Result<String> {
    toml::to_string(&to_raw(config)).map_err(|e| Error::Config(e.to_string()))
}
