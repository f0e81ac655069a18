//! Threshold optimization for mean-reversion pairs trading.
//!
//! The spread between two cointegrated assets is modelled as an
//! Ornstein-Uhlenbeck process. After standardization (zero mean, unit
//! stationary variance, time measured in units of `1/tau`) a trading
//! strategy is an entry/exit pair `(a, b)` with `a > b`. Every completed
//! trade cycle earns `2(a - b - c)`; the crate evaluates the long-run profit
//! rate and its variance rate from series expressions for the mean and
//! variance of the cycle duration, optimizes thresholds with and without a
//! bound on the variance rate, and quantifies the cost of trading with
//! misspecified process parameters.
//!
//! [`simulator`] provides an independent Monte Carlo route for every
//! analytic quantity; [`ingest`] turns raw price pairs into parameter
//! estimates.

pub mod cycle_stats;
pub mod error;
pub mod ingest;
pub mod misspec;
pub mod optimizer;
pub mod ou_model;
pub mod simulator;
pub mod specfun;
pub mod strategy_eval;

pub use cycle_stats::{CycleStats, Strategy};
pub use error::{Error, Result};
pub use ingest::{EstimatedParams, PricePairSeries, StdErrors};
pub use misspec::{ComparisonRow, MisspecOutcome, MisspecScenario};
pub use optimizer::{FrontierPoint, OptResult, RiskBound};
pub use ou_model::{GeneralPerformance, GeneralStrategy, OUParams, PairSpec};
pub use simulator::{ProfitEstimate, SimConfig, SimCycleEstimate};
pub use strategy_eval::{CostedStrategy, Performance};
