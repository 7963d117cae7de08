//! Virtual-player environments.
//!
//! Both environments produce a daily baseline step count `S_t`. The selected
//! arm then scales it by `1 + r`, with `r` drawn uniformly from the arm's
//! adjustment range, giving the observed reward.
//!
//! * Stationary: `S_t ~ Gamma(2.8, 3100)`, independent across days.
//! * Pattern: after seven primed days, `S_t = C + sum_i beta_i * X_{t-i} + g`
//!   with `g ~ Gamma(1.1, 3500)`, where `X` is either the baseline series or
//!   the adjusted (rewarded) series depending on [`FeedbackMode`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rngdist::{sample_gamma, sample_uniform, GammaParams, RngStream};

/// Number of lagged days in the pattern recursion.
pub const PATTERN_LAGS: usize = 7;

/// Daily step distribution fitted to the Mechanical Turk step data.
pub const STEP_GAMMA: GammaParams = GammaParams::known(2.8, 3100.0);

/// Noise term of the pattern recursion.
pub const PATTERN_NOISE: GammaParams = GammaParams::known(1.1, 3500.0);

/// Lag coefficients fitted to the Mechanical Turk data, most recent day first.
/// The five-day lag was eliminated and is fixed at zero.
pub const MTURK_LAG_COEFFICIENTS: [f64; PATTERN_LAGS] = [0.2599, 0.0984, 0.0851, 0.1337, 0.0, 0.1300, 0.1833];

pub const PATTERN_CONSTANT: f64 = -3000.0;

/// One selectable intervention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub name: String,
    /// Code value identifying the arm to the regression oracle.
    pub oracle_value: f64,
    pub adjust_low: f64,
    pub adjust_high: f64,
}

impl ArmSpec {
    pub fn new(name: impl Into<String>, oracle_value: f64, adjust_low: f64, adjust_high: f64) -> Result<Self> {
        let arm = ArmSpec {
            name: name.into(),
            oracle_value,
            adjust_low,
            adjust_high,
        };
        arm.validate()?;
        Ok(arm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.adjust_low.is_finite() && self.adjust_high.is_finite() && self.oracle_value.is_finite()) {
            return Err(Error::Config(format!("arm {}: values must be finite", self.name)));
        }
        if self.adjust_low > self.adjust_high {
            return Err(Error::Config(format!(
                "arm {}: adjust_low {} exceeds adjust_high {}",
                self.name, self.adjust_low, self.adjust_high
            )));
        }
        if self.adjust_low <= -1.0 {
            return Err(Error::Config(format!(
                "arm {}: adjust_low must be greater than -1 so rewards stay positive",
                self.name
            )));
        }
        Ok(())
    }

    /// Expected reward multiplier `1 + E[r]`.
    pub fn mean_multiplier(&self) -> f64 {
        1.0 + 0.5 * (self.adjust_low + self.adjust_high)
    }
}

/// The three default arms A, B and C.
pub fn default_arm_bank() -> Vec<ArmSpec> {
    vec![
        ArmSpec {
            name: "A".into(),
            oracle_value: -0.2,
            adjust_low: -0.2,
            adjust_high: 0.0,
        },
        ArmSpec {
            name: "B".into(),
            oracle_value: -0.1,
            adjust_low: -0.1,
            adjust_high: 0.1,
        },
        ArmSpec {
            name: "C".into(),
            oracle_value: 0.0,
            adjust_low: 0.0,
            adjust_high: 0.2,
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternParams {
    /// `beta_1..beta_7`, index 0 multiplies the previous day.
    pub lag_coefficients: [f64; PATTERN_LAGS],
    pub constant: f64,
    pub noise: GammaParams,
    pub priming: GammaParams,
}

impl Default for PatternParams {
    fn default() -> Self {
        PatternParams {
            lag_coefficients: MTURK_LAG_COEFFICIENTS,
            constant: PATTERN_CONSTANT,
            noise: PATTERN_NOISE,
            priming: STEP_GAMMA,
        }
    }
}

impl PatternParams {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.priming.validate()?;
        if !self.constant.is_finite() || self.lag_coefficients.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("pattern coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Deterministic part of the recursion, `C + sum_i beta_i * lags[i]`.
    pub fn lag_level(&self, lags: &[f64; PATTERN_LAGS]) -> f64 {
        self.constant + self.lag_coefficients.iter().zip(lags).map(|(b, x)| b * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorKind {
    Stationary,
    Pattern,
}

/// Which series the pattern recursion reads its lags from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// Lags are the un-adjusted baseline steps `S_{t-i}`.
    Baseline,
    /// Lags are the steps actually walked, `rho_{t-i}`.
    Adjusted,
}

/// Per-episode history. `t` is the index of the next step, starting at 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeState {
    pub t: usize,
    /// Primed days preceding the episode (pattern simulator only).
    pub priming: Vec<f64>,
    pub baseline_steps: Vec<f64>,
    pub rewards: Vec<f64>,
    pub adjustments: Vec<f64>,
    pub arm_choices: Vec<usize>,
}

impl EpisodeState {
    pub fn new() -> Self {
        EpisodeState {
            t: 1,
            ..Default::default()
        }
    }

    pub fn with_priming(priming: Vec<f64>) -> Self {
        EpisodeState {
            t: 1,
            priming,
            ..Default::default()
        }
    }

    pub fn completed_steps(&self) -> usize {
        self.rewards.len()
    }

    /// Last seven values of the feedback series, most recent first. Primed
    /// days fill in before the episode's own history.
    pub fn feedback_lags(&self, mode: FeedbackMode) -> Option<[f64; PATTERN_LAGS]> {
        let series = match mode {
            FeedbackMode::Baseline => &self.baseline_steps,
            FeedbackMode::Adjusted => &self.rewards,
        };
        let mut lags = [0.0; PATTERN_LAGS];
        let mut it = series.iter().rev().chain(self.priming.iter().rev());
        for slot in lags.iter_mut() {
            *slot = *it.next()?;
        }
        Some(lags)
    }

    /// Append one completed step and advance `t`.
    pub fn record(&mut self, baseline: f64, reward: f64, adjustment: f64, arm: usize) {
        self.baseline_steps.push(baseline);
        self.rewards.push(reward);
        self.adjustments.push(adjustment);
        self.arm_choices.push(arm);
        self.t += 1;
    }
}

/// One draw from the stationary step distribution.
pub fn stationary_step(stream: &mut RngStream) -> f64 {
    sample_gamma(stream, STEP_GAMMA).expect("constant parameters are valid")
}

/// Seven independent primed days, oldest first.
pub fn prime_history(stream: &mut RngStream, priming: GammaParams) -> Result<[f64; PATTERN_LAGS]> {
    let mut out = [0.0; PATTERN_LAGS];
    for v in out.iter_mut() {
        *v = sample_gamma(stream, priming)?;
    }
    Ok(out)
}

/// One step of the pattern recursion. `lags[0]` is the previous day.
///
/// A negative result is rejected and the noise term redrawn.
pub fn pattern_step(lags: &[f64; PATTERN_LAGS], params: &PatternParams, stream: &mut RngStream) -> Result<f64> {
    params.noise.validate()?;
    Ok(pattern_step_with(lags, params, || {
        sample_gamma(stream, params.noise).expect("validated above")
    }))
}

pub(crate) fn pattern_step_with(
    lags: &[f64; PATTERN_LAGS],
    params: &PatternParams,
    mut noise: impl FnMut() -> f64,
) -> f64 {
    let level = params.lag_level(lags);
    loop {
        let s = level + noise();
        if s >= 0.0 {
            return s;
        }
    }
}

/// Apply an arm to a baseline: returns `(reward, adjustment)`.
pub fn apply_arm(baseline: f64, arm: &ArmSpec, stream: &mut RngStream) -> Result<(f64, f64)> {
    if baseline.is_nan() || baseline < 0.0 {
        return Err(Error::ParameterDomain(format!(
            "baseline must be non-negative, got {baseline}"
        )));
    }
    let r = sample_uniform(stream, arm.adjust_low, arm.adjust_high)?;
    Ok((baseline * (1.0 + r), r))
}

/// A configured environment: simulator kind, arm bank and pattern settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub kind: SimulatorKind,
    pub arms: Vec<ArmSpec>,
    pub pattern: PatternParams,
    pub feedback: FeedbackMode,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            kind: SimulatorKind::Stationary,
            arms: default_arm_bank(),
            pattern: PatternParams::default(),
            feedback: FeedbackMode::Baseline,
        }
    }
}

impl Environment {
    pub fn new(kind: SimulatorKind) -> Self {
        Environment {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(Error::Config("arm bank is empty".into()));
        }
        for arm in &self.arms {
            arm.validate()?;
        }
        self.pattern.validate()
    }

    /// Fresh episode; the pattern simulator primes seven days first.
    pub fn start_episode(&self, stream: &mut RngStream) -> Result<EpisodeState> {
        match self.kind {
            SimulatorKind::Stationary => Ok(EpisodeState::new()),
            SimulatorKind::Pattern => {
                let primed = prime_history(stream, self.pattern.priming)?;
                Ok(EpisodeState::with_priming(primed.to_vec()))
            }
        }
    }

    /// Generate the next baseline, apply `arm_index` and record the step.
    pub fn step(&self, state: &mut EpisodeState, arm_index: usize, stream: &mut RngStream) -> Result<f64> {
        let arm = self
            .arms
            .get(arm_index)
            .ok_or_else(|| Error::Config(format!("arm index {arm_index} outside bank of {}", self.arms.len())))?;
        let baseline = match self.kind {
            SimulatorKind::Stationary => sample_gamma(stream, STEP_GAMMA)?,
            SimulatorKind::Pattern => {
                let lags = state
                    .feedback_lags(self.feedback)
                    .ok_or_else(|| Error::Config("pattern simulator needs seven prior days".into()))?;
                pattern_step(&lags, &self.pattern, stream)?
            }
        };
        let (reward, adjustment) = apply_arm(baseline, arm, stream)?;
        state.record(baseline, reward, adjustment, arm_index);
        Ok(reward)
    }
}

/// Un-adjusted pattern simulator output: `n` steps after a primed week.
pub fn pattern_series(n: usize, params: &PatternParams, stream: &mut RngStream) -> Result<Vec<f64>> {
    params.validate()?;
    let primed = prime_history(stream, params.priming)?;
    let mut series = Vec::with_capacity(n + PATTERN_LAGS);
    series.extend_from_slice(&primed);
    for _ in 0..n {
        let mut lags = [0.0; PATTERN_LAGS];
        for (i, slot) in lags.iter_mut().enumerate() {
            *slot = series[series.len() - 1 - i];
        }
        let s = pattern_step(&lags, params, stream)?;
        series.push(s);
    }
    Ok(series.split_off(PATTERN_LAGS))
}
