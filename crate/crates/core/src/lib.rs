//! Short-horizon multi-armed bandits.
//!
//! The crate bundles four layers:
//!
//! * [`rngdist`]: reproducible, splittable random streams and the Gamma and
//!   uniform samplers the simulators draw from.
//! * [`linreg`]: ordinary least squares with standard errors, p-values and
//!   backward elimination.
//! * [`simulators`]: the stationary and pattern (7-lag autoregressive) daily
//!   step environments, plus the arm adjustment mechanism.
//! * [`strategies`]: epsilon-greedy, epsilon-decreasing, UCB1 and UCBT with a
//!   mean or a regression oracle and forced exploration.
//!
//! On top of them, [`harness`] runs seeded Monte-Carlo experiments and
//! parameter sweeps, and [`reporting`] handles configuration files, CSV output
//! and histograms.

pub mod error;
pub mod harness;
pub mod linreg;
pub mod reporting;
pub mod rngdist;
pub mod simulators;
pub mod strategies;

pub use error::{Error, Result};
