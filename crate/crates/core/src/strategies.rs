//! Bandit policies, reward oracles and forced exploration.
//!
//! A strategy combines a policy (epsilon-greedy, epsilon-decreasing, UCB1 or
//! UCBT) with an oracle that estimates each arm's next reward. The mean oracle
//! averages the arm's own past rewards. The regression oracle fits
//!
//! ```text
//! rho_t ~ c + b_1 rho_{t-1} + ... + b_m rho_{t-m} + b_o O_a
//! ```
//!
//! on the whole episode and predicts every arm from the last `m` rewards and
//! the arm's code value `O_a`, so pulls of one arm inform the others.
//!
//! Every episode starts with a forced exploration phase: each arm is pulled
//! `forced_pulls_per_arm` times in a shuffled order before the policy engages.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linreg::{fit_ols, predict, DesignMatrix, RegressionFit};
use crate::rngdist::RngStream;
use crate::simulators::{ArmSpec, EpisodeState, SimulatorKind};

/// Running sums for one arm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmStats {
    pub pull_count: u64,
    pub reward_sum: f64,
    pub reward_sum_squares: f64,
}

impl ArmStats {
    pub fn from_rewards(rewards: &[f64]) -> Self {
        let mut stats = ArmStats::default();
        for &r in rewards {
            stats.push(r);
        }
        stats
    }

    pub fn push(&mut self, reward: f64) {
        self.pull_count += 1;
        self.reward_sum += reward;
        self.reward_sum_squares += reward * reward;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.pull_count >= 1).then(|| self.reward_sum / self.pull_count as f64)
    }

    /// Sample standard deviation (n - 1 denominator), needs two pulls.
    pub fn sample_std(&self) -> Option<f64> {
        if self.pull_count < 2 {
            return None;
        }
        let n = self.pull_count as f64;
        let centred = self.reward_sum_squares - self.reward_sum * self.reward_sum / n;
        Some((centred / (n - 1.0)).max(0.0).sqrt())
    }
}

/// Mean of the arm's observed rewards.
pub fn mean_estimate(stats: &ArmStats) -> Result<f64> {
    stats.mean().ok_or(Error::NoData)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    EpsilonGreedy,
    EpsilonDecreasing,
    Ucb1,
    Ucbt,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::EpsilonGreedy => "epsilon_greedy",
            Policy::EpsilonDecreasing => "epsilon_decreasing",
            Policy::Ucb1 => "ucb1",
            Policy::Ucbt => "ucbt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Mean,
    Regression,
}

/// Default regression window (number of lagged rewards).
pub const DEFAULT_WINDOW: usize = 7;

/// Pulls per arm used when a strategy is run "with forced exploration".
pub const FORCED_EXPLORATION_PULLS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub label: String,
    pub policy: Policy,
    pub oracle: OracleKind,
    /// Exploration probability (epsilon-greedy) or decay exponent
    /// (epsilon-decreasing). Unused by the UCB policies.
    pub epsilon: f64,
    /// Exploration factor `C` of UCB1.
    pub ucb_c: f64,
    pub forced_pulls_per_arm: usize,
    pub regression_window: usize,
}

impl StrategyConfig {
    fn base(label: &str, policy: Policy, oracle: OracleKind) -> Self {
        StrategyConfig {
            label: label.to_string(),
            policy,
            oracle,
            epsilon: 0.0,
            ucb_c: 0.0,
            forced_pulls_per_arm: 1,
            regression_window: DEFAULT_WINDOW,
        }
    }

    pub fn epsilon_greedy(label: &str, epsilon: f64, oracle: OracleKind) -> Self {
        StrategyConfig {
            epsilon,
            ..Self::base(label, Policy::EpsilonGreedy, oracle)
        }
    }

    pub fn epsilon_decreasing(label: &str, exponent: f64, oracle: OracleKind) -> Self {
        StrategyConfig {
            epsilon: exponent,
            ..Self::base(label, Policy::EpsilonDecreasing, oracle)
        }
    }

    pub fn ucb1(label: &str, c: f64) -> Self {
        StrategyConfig {
            ucb_c: c,
            ..Self::base(label, Policy::Ucb1, OracleKind::Mean)
        }
    }

    /// UCBT needs two pulls per arm before its confidence bound exists.
    pub fn ucbt(label: &str) -> Self {
        StrategyConfig {
            forced_pulls_per_arm: 2,
            ..Self::base(label, Policy::Ucbt, OracleKind::Mean)
        }
    }

    pub fn with_forced_pulls(mut self, pulls: usize) -> Self {
        self.forced_pulls_per_arm = pulls;
        self
    }

    /// The tuned parameter of the policy: epsilon or `C`.
    pub fn parameter(&self) -> Option<f64> {
        match self.policy {
            Policy::EpsilonGreedy | Policy::EpsilonDecreasing => Some(self.epsilon),
            Policy::Ucb1 => Some(self.ucb_c),
            Policy::Ucbt => None,
        }
    }

    pub fn with_parameter(&self, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match self.policy {
            Policy::EpsilonGreedy | Policy::EpsilonDecreasing => out.epsilon = value,
            Policy::Ucb1 => out.ucb_c = value,
            Policy::Ucbt => {
                return Err(Error::Config(format!(
                    "strategy {} (ucbt) has no tunable parameter",
                    self.label
                )))
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("strategy {}: {msg}", self.label)));
        if self.label.trim().is_empty() {
            return Err(Error::Config("strategy label must not be empty".into()));
        }
        if self.forced_pulls_per_arm < 1 {
            return fail("forced_pulls_per_arm must be at least 1".into());
        }
        if self.regression_window < 1 {
            return fail("regression_window must be at least 1".into());
        }
        match self.policy {
            Policy::EpsilonGreedy if !(0.0..=1.0).contains(&self.epsilon) => {
                fail(format!("epsilon must lie in [0, 1], got {}", self.epsilon))
            }
            Policy::EpsilonDecreasing if !(self.epsilon.is_finite() && self.epsilon > 0.0) => {
                fail(format!("epsilon exponent must be positive, got {}", self.epsilon))
            }
            Policy::Ucb1 if !(self.ucb_c.is_finite() && self.ucb_c >= 0.0) => {
                fail(format!("ucb_c must be non-negative, got {}", self.ucb_c))
            }
            Policy::Ucbt if self.forced_pulls_per_arm < 2 => fail("ucbt requires forced_pulls_per_arm >= 2".into()),
            Policy::Ucb1 | Policy::Ucbt if self.oracle == OracleKind::Regression => {
                fail("the regression oracle is only available to epsilon policies".into())
            }
            _ => Ok(()),
        }
    }
}

/// The six strategies with their tuned parameters for the given simulator.
///
/// With `forced_exploration` every strategy pulls each arm four times before
/// engaging; otherwise once (twice for UCBT).
pub fn default_strategies(kind: SimulatorKind, forced_exploration: bool) -> Vec<StrategyConfig> {
    let (c, eps_greedy, eps_decr) = match kind {
        SimulatorKind::Stationary => (2500.0, 0.11, 0.7),
        SimulatorKind::Pattern => (1600.0, 0.03, 1.0),
    };
    let mut out = vec![
        StrategyConfig::ucb1("UCB1", c),
        StrategyConfig::ucbt("UCBT"),
        StrategyConfig::epsilon_greedy("e-greedy", eps_greedy, OracleKind::Mean),
        StrategyConfig::epsilon_decreasing("e-decr", eps_decr, OracleKind::Mean),
        StrategyConfig::epsilon_greedy("e-greedy reg", eps_greedy, OracleKind::Regression),
        StrategyConfig::epsilon_decreasing("e-decr reg", eps_decr, OracleKind::Regression),
    ];
    if forced_exploration {
        for s in &mut out {
            s.forced_pulls_per_arm = FORCED_EXPLORATION_PULLS;
        }
    }
    out
}

/// Fitted regression oracle for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionOracleState {
    pub fit: Option<RegressionFit>,
    pub window: usize,
    pub training_rows: usize,
}

impl RegressionOracleState {
    pub fn empty(window: usize) -> Self {
        RegressionOracleState {
            fit: None,
            window,
            training_rows: 0,
        }
    }
}

/// Oracle output: a prediction, or a request to use the mean oracle instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Value(f64),
    Fallback,
}

fn regression_feature_names(window: usize) -> Vec<String> {
    (1..=window)
        .map(|i| format!("lag{i}"))
        .chain(std::iter::once("arm_code".to_string()))
        .collect()
}

/// Rebuild the regression oracle from the episode's reward history.
///
/// Row `t` pairs `(rho_{t-1}, ..., rho_{t-m}, O_{a_t})` with `rho_t`. The fit
/// is kept only with at least `m + 3` rows (two more than the feature count)
/// and a non-singular design.
pub fn retrain_regression(history: &EpisodeState, window: usize, arms: &[ArmSpec]) -> RegressionOracleState {
    let rewards = &history.rewards;
    let rows = rewards.len().saturating_sub(window);
    let features = window + 1;
    if rows < features + 2 {
        return RegressionOracleState {
            fit: None,
            window,
            training_rows: rows,
        };
    }
    let mut design = DesignMatrix::with_capacity(regression_feature_names(window), true, rows);
    let mut x = vec![0.0; features];
    for t in window..rewards.len() {
        for (i, slot) in x[..window].iter_mut().enumerate() {
            *slot = rewards[t - 1 - i];
        }
        x[window] = arms[history.arm_choices[t]].oracle_value;
        design.push_row(&x, rewards[t]).expect("row width matches");
    }
    RegressionOracleState {
        fit: fit_ols(&design).ok(),
        window,
        training_rows: rows,
    }
}

/// Predicted reward of `arm` given the last `m` rewards, most recent first.
pub fn regression_estimate(state: &RegressionOracleState, recent_rewards: &[f64], arm: &ArmSpec) -> Result<Estimate> {
    let Some(fit) = &state.fit else {
        return Ok(Estimate::Fallback);
    };
    if recent_rewards.len() != state.window {
        return Err(Error::Dimension {
            expected: state.window,
            got: recent_rewards.len(),
        });
    }
    let mut x = Vec::with_capacity(state.window + 1);
    x.extend_from_slice(recent_rewards);
    x.push(arm.oracle_value);
    Ok(Estimate::Value(predict(fit, &x)?))
}

/// `mean + c * sqrt(2 ln(total_pulls) / n_a)`.
pub fn ucb1_score(stats: &ArmStats, total_pulls: u64, c: f64) -> Result<f64> {
    let mean = mean_estimate(stats)?;
    if total_pulls < 1 {
        return Err(Error::ParameterDomain("total_pulls must be at least 1".into()));
    }
    let bonus = (2.0 * (total_pulls as f64).ln() / stats.pull_count as f64).sqrt();
    Ok(mean + c * bonus)
}

/// One-sided 99% Student-t critical values for 1..=200 degrees of freedom.
#[rustfmt::skip]
#[allow(clippy::approx_constant)]
const T_CRITICAL_99: [f64; 200] = [
    31.821, 6.965, 4.541, 3.747, 3.365, 3.143, 2.998, 2.896,
    2.821, 2.764, 2.718, 2.681, 2.650, 2.624, 2.602, 2.583,
    2.567, 2.552, 2.539, 2.528, 2.518, 2.508, 2.500, 2.492,
    2.485, 2.479, 2.473, 2.467, 2.462, 2.457, 2.453, 2.449,
    2.445, 2.441, 2.438, 2.434, 2.431, 2.429, 2.426, 2.423,
    2.421, 2.418, 2.416, 2.414, 2.412, 2.410, 2.408, 2.407,
    2.405, 2.403, 2.402, 2.400, 2.399, 2.397, 2.396, 2.395,
    2.394, 2.392, 2.391, 2.390, 2.389, 2.388, 2.387, 2.386,
    2.385, 2.384, 2.383, 2.382, 2.382, 2.381, 2.380, 2.379,
    2.379, 2.378, 2.377, 2.376, 2.376, 2.375, 2.374, 2.374,
    2.373, 2.373, 2.372, 2.372, 2.371, 2.370, 2.370, 2.369,
    2.369, 2.368, 2.368, 2.368, 2.367, 2.367, 2.366, 2.366,
    2.365, 2.365, 2.365, 2.364, 2.364, 2.363, 2.363, 2.363,
    2.362, 2.362, 2.362, 2.361, 2.361, 2.361, 2.360, 2.360,
    2.360, 2.360, 2.359, 2.359, 2.359, 2.358, 2.358, 2.358,
    2.358, 2.357, 2.357, 2.357, 2.357, 2.356, 2.356, 2.356,
    2.356, 2.355, 2.355, 2.355, 2.355, 2.354, 2.354, 2.354,
    2.354, 2.354, 2.353, 2.353, 2.353, 2.353, 2.353, 2.353,
    2.352, 2.352, 2.352, 2.352, 2.352, 2.351, 2.351, 2.351,
    2.351, 2.351, 2.351, 2.350, 2.350, 2.350, 2.350, 2.350,
    2.350, 2.350, 2.349, 2.349, 2.349, 2.349, 2.349, 2.349,
    2.349, 2.348, 2.348, 2.348, 2.348, 2.348, 2.348, 2.348,
    2.348, 2.347, 2.347, 2.347, 2.347, 2.347, 2.347, 2.347,
    2.347, 2.347, 2.346, 2.346, 2.346, 2.346, 2.346, 2.346,
    2.346, 2.346, 2.346, 2.346, 2.345, 2.345, 2.345, 2.345,
];

/// Normal-limit critical value used above 200 degrees of freedom.
pub const NORMAL_CRITICAL_99: f64 = 2.326;

/// One-sided 99% Student-t critical value.
pub fn critical_value(df: u64) -> f64 {
    match df {
        0 => f64::INFINITY,
        1..=200 => T_CRITICAL_99[df as usize - 1],
        _ => NORMAL_CRITICAL_99,
    }
}

/// `mean + t* s / sqrt(n)` with `t*` at `n - 1` degrees of freedom.
///
/// Identical observations give `s = 0` and the score reduces to the mean.
pub fn ucbt_score(stats: &ArmStats) -> Result<f64> {
    let (Some(mean), Some(s)) = (stats.mean(), stats.sample_std()) else {
        return Err(Error::InsufficientData(format!(
            "ucbt needs two pulls per arm, have {}",
            stats.pull_count
        )));
    };
    if s == 0.0 {
        return Ok(mean);
    }
    let n = stats.pull_count;
    Ok(mean + critical_value(n - 1) * s / (n as f64).sqrt())
}

/// Each arm `pulls_per_arm` times, uniformly shuffled.
pub fn forced_schedule(num_arms: usize, pulls_per_arm: usize, stream: &mut RngStream) -> Vec<usize> {
    let mut schedule: Vec<usize> = (0..num_arms)
        .flat_map(|a| std::iter::repeat_n(a, pulls_per_arm))
        .collect();
    schedule.shuffle(stream);
    schedule
}

/// Index of the largest value, ties broken uniformly at random.
pub fn argmax_random_tie(values: &[f64], stream: &mut RngStream) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .map(|(i, _)| i)
        .collect();
    match ties.len() {
        0 => stream.next_index(values.len()),
        1 => ties[0],
        n => ties[stream.next_index(n)],
    }
}

/// Exploration probability of epsilon-decreasing at step `t`, `min(1, t^-eps)`.
pub fn decreasing_exploration_probability(t: usize, exponent: f64) -> f64 {
    (1.0 / (t as f64).powf(exponent)).clamp(0.0, 1.0)
}

/// Per-arm estimates from the configured oracle, falling back to the mean
/// oracle while the regression fit or its input window is unavailable.
pub fn oracle_estimates(
    config: &StrategyConfig,
    episode: &EpisodeState,
    arm_stats: &[ArmStats],
    oracle: &RegressionOracleState,
    arms: &[ArmSpec],
) -> Result<Vec<f64>> {
    if config.oracle == OracleKind::Regression && episode.rewards.len() >= oracle.window && oracle.fit.is_some() {
        let recent: Vec<f64> = episode.rewards.iter().rev().take(oracle.window).copied().collect();
        let mut out = Vec::with_capacity(arms.len());
        for arm in arms {
            match regression_estimate(oracle, &recent, arm)? {
                Estimate::Value(v) => out.push(v),
                Estimate::Fallback => unreachable!("fit checked above"),
            }
        }
        return Ok(out);
    }
    arm_stats.iter().map(mean_estimate).collect()
}

/// Choose the arm for step `episode.t`.
///
/// While `episode.t` is inside `schedule` the scheduled arm is returned.
pub fn select_arm(
    config: &StrategyConfig,
    episode: &EpisodeState,
    arm_stats: &[ArmStats],
    oracle: &RegressionOracleState,
    schedule: &[usize],
    arms: &[ArmSpec],
    stream: &mut RngStream,
) -> Result<usize> {
    let t = episode.t;
    if t == 0 {
        return Err(Error::ParameterDomain("time steps start at 1".into()));
    }
    if let Some(&arm) = schedule.get(t - 1) {
        return Ok(arm);
    }
    let k = arms.len();
    match config.policy {
        Policy::EpsilonGreedy | Policy::EpsilonDecreasing => {
            let explore_p = match config.policy {
                Policy::EpsilonGreedy => config.epsilon,
                _ => decreasing_exploration_probability(t, config.epsilon),
            };
            if stream.next_unit() < explore_p {
                return Ok(stream.next_index(k));
            }
            let estimates = oracle_estimates(config, episode, arm_stats, oracle, arms)?;
            Ok(argmax_random_tie(&estimates, stream))
        }
        Policy::Ucb1 => {
            let total = episode.completed_steps() as u64 + 1;
            let scores = arm_stats
                .iter()
                .map(|s| ucb1_score(s, total, config.ucb_c))
                .collect::<Result<Vec<_>>>()?;
            Ok(argmax_random_tie(&scores, stream))
        }
        Policy::Ucbt => {
            let scores = arm_stats.iter().map(ucbt_score).collect::<Result<Vec<_>>>()?;
            Ok(argmax_random_tie(&scores, stream))
        }
    }
}

/// Per-episode state of one strategy.
#[derive(Debug, Clone)]
pub struct Agent<'a> {
    config: &'a StrategyConfig,
    arms: &'a [ArmSpec],
    schedule: Vec<usize>,
    stats: Vec<ArmStats>,
    oracle: RegressionOracleState,
}

impl<'a> Agent<'a> {
    pub fn new(config: &'a StrategyConfig, arms: &'a [ArmSpec], stream: &mut RngStream) -> Self {
        Agent {
            config,
            arms,
            schedule: forced_schedule(arms.len(), config.forced_pulls_per_arm, stream),
            stats: vec![ArmStats::default(); arms.len()],
            oracle: RegressionOracleState::empty(config.regression_window),
        }
    }

    pub fn schedule(&self) -> &[usize] {
        &self.schedule
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    pub fn oracle(&self) -> &RegressionOracleState {
        &self.oracle
    }

    pub fn select(&self, episode: &EpisodeState, stream: &mut RngStream) -> Result<usize> {
        select_arm(
            self.config,
            episode,
            &self.stats,
            &self.oracle,
            &self.schedule,
            self.arms,
            stream,
        )
    }

    /// Account for the step just recorded in `episode`.
    pub fn observe(&mut self, episode: &EpisodeState) {
        let (Some(&arm), Some(&reward)) = (episode.arm_choices.last(), episode.rewards.last()) else {
            return;
        };
        self.stats[arm].push(reward);
        if self.config.oracle == OracleKind::Regression {
            self.oracle = retrain_regression(episode, self.config.regression_window, self.arms);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngdist::derive_stream;
    use crate::simulators::default_arm_bank;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn episode_from(rewards: &[f64], arms: &[usize]) -> EpisodeState {
        let mut e = EpisodeState::new();
        for (&r, &a) in rewards.iter().zip(arms) {
            e.record(r, r, 0.0, a);
        }
        e
    }

    #[test]
    fn mean_estimate_examples() {
        assert_eq!(
            mean_estimate(&ArmStats::from_rewards(&[8000.0, 9000.0])).unwrap(),
            8500.0
        );
        assert_eq!(mean_estimate(&ArmStats::from_rewards(&[7000.0])).unwrap(), 7000.0);
        assert!(matches!(mean_estimate(&ArmStats::default()), Err(Error::NoData)));
    }

    #[test]
    fn ucb1_examples() {
        let one = ArmStats::from_rewards(&[8000.0]);
        assert_eq!(ucb1_score(&one, 3, 0.0).unwrap(), 8000.0);
        assert_eq!(ucb1_score(&one, 1, 2500.0).unwrap(), 8000.0);
        let expected = 8000.0 + 2500.0 * (2.0 * 3f64.ln()).sqrt();
        assert!((ucb1_score(&one, 3, 2500.0).unwrap() - expected).abs() < 1e-9);
        assert!(matches!(ucb1_score(&ArmStats::default(), 3, 1.0), Err(Error::NoData)));
    }

    #[test]
    fn critical_values() {
        assert_eq!(critical_value(201), 2.326);
        assert_eq!(critical_value(10_000), 2.326);
        assert!((critical_value(1) - 31.82).abs() < 0.005);
        assert!((critical_value(10) - 2.764).abs() < 0.0005);
    }

    #[test]
    fn critical_table_matches_t_quantiles() {
        for df in 1..=200u64 {
            let exact = StudentsT::new(0.0, 1.0, df as f64).unwrap().inverse_cdf(0.99);
            assert!(
                (critical_value(df) - exact).abs() <= 5.1e-4,
                "df {df}: table {} vs {exact}",
                critical_value(df)
            );
        }
    }

    #[test]
    fn ucbt_examples() {
        assert_eq!(ucbt_score(&ArmStats::from_rewards(&[8000.0, 8000.0])).unwrap(), 8000.0);
        let s = ArmStats::from_rewards(&[8000.0, 9000.0]);
        let expected = 8500.0 + critical_value(1) * 707.106_781_186_547_5 / 2f64.sqrt();
        assert!((ucbt_score(&s).unwrap() - expected).abs() < 1e-6);
        assert!((ucbt_score(&s).unwrap() - (8500.0 + 31.82 * 707.107 / std::f64::consts::SQRT_2)).abs() < 5.0);
        assert!(matches!(
            ucbt_score(&ArmStats::from_rewards(&[1.0])),
            Err(Error::InsufficientData(_))
        ));

        let rewards: Vec<f64> = (0..300)
            .map(|i| 8000.0 + if i % 2 == 0 { 100.0 } else { -100.0 })
            .collect();
        let stats = ArmStats::from_rewards(&rewards);
        let s = stats.sample_std().unwrap();
        let expected = 8000.0 + 2.326 * s / 300f64.sqrt();
        assert!((ucbt_score(&stats).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn forced_schedule_examples() {
        let mut s = derive_stream(31, 0);
        let mut one = forced_schedule(3, 1, &mut s);
        one.sort();
        assert_eq!(one, vec![0, 1, 2]);
        let four = forced_schedule(3, 4, &mut s);
        assert_eq!(four.len(), 12);
        for a in 0..3 {
            assert_eq!(four.iter().filter(|&&x| x == a).count(), 4);
        }
        assert_eq!(forced_schedule(1, 5, &mut s), vec![0; 5]);
    }

    #[test]
    fn retrain_row_counts() {
        let arms = default_arm_bank();
        let short = episode_from(&[1.0; 7], &[0; 7]);
        let state = retrain_regression(&short, 7, &arms);
        assert!(state.fit.is_none());
        assert_eq!(state.training_rows, 0);

        let mut s = derive_stream(32, 0);
        let rewards: Vec<f64> = (0..70).map(|_| 8000.0 + 1000.0 * s.next_standard_normal()).collect();
        let choices: Vec<usize> = (0..70).map(|i| i % 3).collect();
        let state = retrain_regression(&episode_from(&rewards, &choices), 7, &arms);
        assert_eq!(state.training_rows, 63);
        let fit = state.fit.unwrap();
        assert_eq!(fit.coefficients.len(), 8);
        assert!(fit.intercept.is_some());
    }

    #[test]
    fn retrain_recovers_noiseless_rule() {
        // rho_t = 500 + 0.3 rho_{t-1} + 0.2 rho_{t-2} + ... built from a
        // fixed linear rule in the lags and the arm code.
        let arms = default_arm_bank();
        let lag_rule = [0.3, 0.1, -0.05, 0.02, 0.0, 0.04, 0.06];
        let (icpt, arm_coef) = (2500.0, 8000.0);
        let mut s = derive_stream(33, 0);
        let mut rewards: Vec<f64> = (0..7).map(|_| 6000.0 + 4000.0 * s.next_unit()).collect();
        let mut choices: Vec<usize> = (0..7).map(|_| s.next_index(3)).collect();
        for t in 7..60 {
            let a = s.next_index(3);
            let lagged: f64 = lag_rule.iter().enumerate().map(|(i, b)| b * rewards[t - 1 - i]).sum();
            rewards.push(icpt + lagged + arm_coef * arms[a].oracle_value);
            choices.push(a);
        }
        let state = retrain_regression(&episode_from(&rewards, &choices), 7, &arms);
        let fit = state.fit.unwrap();
        assert!((fit.intercept.unwrap() - icpt).abs() < 1e-6 * icpt);
        for (b, want) in fit.coefficients.iter().zip(lag_rule.iter().chain([arm_coef].iter())) {
            assert!((b - want).abs() < 1e-6 * want.abs().max(1.0), "{b} vs {want}");
        }
    }

    #[test]
    fn regression_estimate_examples() {
        let arms = default_arm_bank();
        let names = regression_feature_names(7);
        let constant = RegressionOracleState {
            fit: Some(RegressionFit::from_coefficients(names, vec![0.0; 8], Some(8500.0))),
            window: 7,
            training_rows: 10,
        };
        for arm in &arms {
            assert_eq!(
                regression_estimate(&constant, &[1.0; 7], arm).unwrap(),
                Estimate::Value(8500.0)
            );
        }
        assert_eq!(
            regression_estimate(&RegressionOracleState::empty(7), &[1.0; 7], &arms[0]).unwrap(),
            Estimate::Fallback
        );
    }

    #[test]
    fn regression_learns_arm_multiplier() {
        // Noiseless rho = 10000 * (1 + O_a) with varied arms.
        let arms = default_arm_bank();
        let mut s = derive_stream(34, 0);
        let choices: Vec<usize> = (0..40).map(|_| s.next_index(3)).collect();
        let rewards: Vec<f64> = choices
            .iter()
            .map(|&a| 10_000.0 * (1.0 + arms[a].oracle_value))
            .collect();
        let state = retrain_regression(&episode_from(&rewards, &choices), 7, &arms);
        let recent: Vec<f64> = rewards.iter().rev().take(7).copied().collect();
        let est: Vec<f64> = arms
            .iter()
            .map(|a| match regression_estimate(&state, &recent, a).unwrap() {
                Estimate::Value(v) => v,
                Estimate::Fallback => panic!("expected a fit"),
            })
            .collect();
        for (e, want) in est.iter().zip([8000.0, 9000.0, 10_000.0]) {
            assert!((e - want).abs() < 1e-6, "{e} vs {want}");
        }
    }

    #[test]
    fn single_arm_history_falls_back() {
        // Every row shares one arm code, so the arm column duplicates the intercept.
        let arms = default_arm_bank();
        let mut s = derive_stream(35, 0);
        let rewards: Vec<f64> = (0..30).map(|_| 8000.0 + 500.0 * s.next_standard_normal()).collect();
        let state = retrain_regression(&episode_from(&rewards, &[1; 30]), 7, &arms);
        assert!(state.fit.is_none());
    }

    fn stats_with_means(means: &[f64]) -> Vec<ArmStats> {
        means.iter().map(|&m| ArmStats::from_rewards(&[m])).collect()
    }

    #[test]
    fn greedy_exploits_best_mean() {
        let arms = default_arm_bank();
        let config = StrategyConfig::epsilon_greedy("g", 0.0, OracleKind::Mean);
        let stats = stats_with_means(&[8000.0, 8500.0, 9100.0]);
        let episode = episode_from(&[8000.0, 8500.0, 9100.0], &[0, 1, 2]);
        let mut s = derive_stream(36, 0);
        for _ in 0..1000 {
            let arm = select_arm(
                &config,
                &episode,
                &stats,
                &RegressionOracleState::empty(7),
                &[0, 1, 2],
                &arms,
                &mut s,
            )
            .unwrap();
            assert_eq!(arm, 2);
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let arms = default_arm_bank();
        let config = StrategyConfig::epsilon_greedy("g", 1.0, OracleKind::Mean);
        let stats = stats_with_means(&[8000.0, 8500.0, 9100.0]);
        let episode = episode_from(&[8000.0, 8500.0, 9100.0], &[0, 1, 2]);
        let mut s = derive_stream(37, 0);
        let mut counts = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            counts[select_arm(
                &config,
                &episode,
                &stats,
                &RegressionOracleState::empty(7),
                &[0, 1, 2],
                &arms,
                &mut s,
            )
            .unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn decreasing_schedule() {
        assert_eq!(decreasing_exploration_probability(1, 1.0), 1.0);
        assert!((decreasing_exploration_probability(100, 1.0) - 0.01).abs() < 1e-15);
        assert_eq!(decreasing_exploration_probability(1, 0.7), 1.0);
    }

    #[test]
    fn forced_phase_returns_schedule() {
        let arms = default_arm_bank();
        let config = StrategyConfig::ucb1("u", 2500.0);
        let schedule = [2, 0, 1];
        let mut episode = EpisodeState::new();
        let mut stats = vec![ArmStats::default(); 3];
        let mut s = derive_stream(38, 0);
        for &want in &schedule {
            let arm = select_arm(
                &config,
                &episode,
                &stats,
                &RegressionOracleState::empty(7),
                &schedule,
                &arms,
                &mut s,
            )
            .unwrap();
            assert_eq!(arm, want);
            episode.record(8000.0, 8000.0, 0.0, arm);
            stats[arm].push(8000.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(StrategyConfig::ucbt("t").with_forced_pulls(1).validate().is_err());
        assert!(StrategyConfig::ucbt("t").validate().is_ok());
        assert!(StrategyConfig::epsilon_greedy("g", 1.5, OracleKind::Mean)
            .validate()
            .is_err());
        assert!(StrategyConfig::epsilon_decreasing("d", 0.0, OracleKind::Mean)
            .validate()
            .is_err());
        assert!(StrategyConfig::ucb1("u", 1.0).with_forced_pulls(0).validate().is_err());
        let mut u = StrategyConfig::ucb1("u", 1.0);
        u.oracle = OracleKind::Regression;
        assert!(u.validate().is_err());
        for kind in [SimulatorKind::Stationary, SimulatorKind::Pattern] {
            for forced in [false, true] {
                for s in default_strategies(kind, forced) {
                    s.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn mean_and_constant_regression_agree() {
        let arms = default_arm_bank();
        let stats = ArmStats::from_rewards(&[7000.0, 9400.0, 8100.0]);
        let state = RegressionOracleState {
            fit: Some(RegressionFit::from_coefficients(
                regression_feature_names(7),
                vec![0.0; 8],
                Some(mean_estimate(&stats).unwrap()),
            )),
            window: 7,
            training_rows: 10,
        };
        assert_eq!(
            regression_estimate(&state, &[5.0; 7], &arms[1]).unwrap(),
            Estimate::Value(mean_estimate(&stats).unwrap())
        );
    }

    proptest! {
        #[test]
        fn argmax_shift_invariant(
            values in proptest::collection::vec(0.0f64..20_000.0, 3),
            shift in -10_000.0f64..10_000.0,
            seed in any::<u64>(),
        ) {
            // Round onto a coarse grid so shifted values stay exactly ordered.
            let base: Vec<f64> = values.iter().map(|v| v.round()).collect();
            let shifted: Vec<f64> = base.iter().map(|v| v + shift.round()).collect();
            let a = argmax_random_tie(&base, &mut derive_stream(seed, 0));
            let b = argmax_random_tie(&shifted, &mut derive_stream(seed, 0));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn ucb1_increasing_in_total_pulls(
            rewards in proptest::collection::vec(1000.0f64..20_000.0, 1..20),
            t in 1u64..1000,
            c in 1.0f64..5000.0,
        ) {
            let stats = ArmStats::from_rewards(&rewards);
            prop_assert!(ucb1_score(&stats, t + 1, c).unwrap() > ucb1_score(&stats, t, c).unwrap());
        }

        #[test]
        fn ucbt_order_invariant(
            rewards in proptest::collection::vec(1000.0f64..20_000.0, 2..40),
            seed in any::<u64>(),
        ) {
            let mut shuffled = rewards.clone();
            shuffled.shuffle(&mut derive_stream(seed, 0));
            let a = ucbt_score(&ArmStats::from_rewards(&rewards)).unwrap();
            let b = ucbt_score(&ArmStats::from_rewards(&shuffled)).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs());
        }

        #[test]
        fn forced_schedule_counts(
            seed in any::<u64>(),
            k in 1usize..8,
            p in 1usize..6,
        ) {
            let schedule = forced_schedule(k, p, &mut derive_stream(seed, 0));
            prop_assert_eq!(schedule.len(), k * p);
            for a in 0..k {
                prop_assert_eq!(schedule.iter().filter(|&&x| x == a).count(), p);
            }
        }

        #[test]
        fn short_history_regression_equals_mean_policy(
            seed in any::<u64>(),
            steps in 3usize..10,
        ) {
            // Fewer than window + 3 training rows: both oracles choose identically.
            let arms = default_arm_bank();
            let reg = StrategyConfig::epsilon_greedy("r", 0.2, OracleKind::Regression);
            let mean = StrategyConfig::epsilon_greedy("m", 0.2, OracleKind::Mean);
            let mut s = derive_stream(seed, 1);
            let mut episode = EpisodeState::new();
            let mut stats = vec![ArmStats::default(); 3];
            let schedule = vec![0, 1, 2];
            for t in 0..steps {
                let a = if t < 3 { t } else { s.next_index(3) };
                let r = 8000.0 + 1000.0 * s.next_standard_normal();
                episode.record(r, r, 0.0, a);
                stats[a].push(r);
            }
            let oracle = retrain_regression(&episode, 7, &arms);
            prop_assert!(oracle.fit.is_none());
            let x = select_arm(&reg, &episode, &stats, &oracle, &schedule, &arms, &mut derive_stream(seed, 2)).unwrap();
            let y = select_arm(&mean, &episode, &stats, &oracle, &schedule, &arms, &mut derive_stream(seed, 2)).unwrap();
            prop_assert_eq!(x, y);
        }
    }
}
