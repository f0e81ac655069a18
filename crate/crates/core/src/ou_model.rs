//! Ornstein-Uhlenbeck spread model in its general parametrization
//!
//! ```text
//! dX = tau (mu - X) ds + sigma dW
//! ```
//!
//! and the change of variables to the standardized process
//!
//! ```text
//! Y = sqrt(2 tau / sigma^2) (X - mu),   t = tau s
//! ```
//!
//! which has zero mean, unit stationary variance and unit mean-reversion
//! speed. All optimization happens in standardized coordinates; the
//! functions here move strategies, costs and performance figures between
//! the two frames.

use serde::{Deserialize, Serialize};

use crate::cycle_stats::Strategy;
use crate::error::{domain, Result};
use crate::strategy_eval::Performance;

/// Parameters of the spread process. `sigma2` is the squared volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    pub mu: f64,
    pub tau: f64,
    pub sigma2: f64,
}

impl OUParams {
    pub fn new(mu: f64, tau: f64, sigma2: f64) -> Result<Self> {
        if !(mu.is_finite() && tau.is_finite() && sigma2.is_finite()) {
            return domain(format!(
                "OU parameters must be finite (mu={mu}, tau={tau}, sigma2={sigma2})"
            ));
        }
        if tau <= 0.0 {
            return domain(format!("tau must be positive, got {tau}"));
        }
        if sigma2 <= 0.0 {
            return domain(format!("sigma2 must be positive, got {sigma2}"));
        }
        Ok(Self { mu, tau, sigma2 })
    }

    /// Parameters under which the general and standardized frames coincide.
    pub fn standard() -> Self {
        Self {
            mu: 0.0,
            tau: 1.0,
            sigma2: 2.0,
        }
    }

    /// `sqrt(2 tau / sigma^2)`: price units to standardized units.
    pub fn standardizing_scale(&self) -> f64 {
        (2.0 * self.tau / self.sigma2).sqrt()
    }

    /// Standard deviation of the stationary law, `sqrt(sigma^2 / (2 tau))`.
    pub fn stationary_sd(&self) -> f64 {
        (self.sigma2 / (2.0 * self.tau)).sqrt()
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma2 / (2.0 * self.tau)
    }
}

/// Cointegration coefficient and per-unit transaction costs of the two legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub eta: f64,
    pub cost_a: f64,
    pub cost_b: f64,
}

impl PairSpec {
    pub fn new(eta: f64, cost_a: f64, cost_b: f64) -> Result<Self> {
        if !(eta.is_finite() && cost_a.is_finite() && cost_b.is_finite()) {
            return domain("pair specification must be finite");
        }
        if cost_a < 0.0 || cost_b < 0.0 {
            return domain(format!(
                "transaction costs must be non-negative (cost_a={cost_a}, cost_b={cost_b})"
            ));
        }
        Ok(Self {
            eta,
            cost_a,
            cost_b,
        })
    }
}

/// Entry and exit levels in price units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralStrategy {
    pub a_tilde: f64,
    pub b_tilde: f64,
}

/// Profit rate (price per time unit) and variance rate (price² per time unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralPerformance {
    pub profit_rate: f64,
    pub variance_rate: f64,
}

/// Round-trip cost of one unit spread position, `2 c_A + 2 eta c_B`.
pub fn combined_cost(spec: &PairSpec) -> f64 {
    2.0 * spec.cost_a + 2.0 * spec.eta * spec.cost_b
}

pub fn standardize_cost(p: &OUParams, c_tilde: f64) -> Result<f64> {
    if !(c_tilde >= 0.0) || !c_tilde.is_finite() {
        return domain(format!(
            "cost must be finite and non-negative, got {c_tilde}"
        ));
    }
    Ok(p.standardizing_scale() * c_tilde)
}

pub fn destandardize_cost(p: &OUParams, c: f64) -> f64 {
    p.stationary_sd() * c
}

/// Maps a price-space variance-rate bound to standardized units.
pub fn standardize_variance_rate(p: &OUParams, v_tilde: f64) -> f64 {
    v_tilde * 2.0 / p.sigma2
}

/// Maps `(x, s)` to `(y, t)`.
pub fn standardize_point(p: &OUParams, x: f64, s: f64) -> (f64, f64) {
    (p.standardizing_scale() * (x - p.mu), p.tau * s)
}

/// Inverse of [`standardize_point`].
pub fn destandardize_point(p: &OUParams, y: f64, t: f64) -> (f64, f64) {
    (p.stationary_sd() * y + p.mu, t / p.tau)
}

pub fn destandardize_strategy(p: &OUParams, strat: &Strategy) -> GeneralStrategy {
    let sd = p.stationary_sd();
    GeneralStrategy {
        a_tilde: sd * strat.a() + p.mu,
        b_tilde: sd * strat.b() + p.mu,
    }
}

/// Standardized thresholds of a price-space strategy under `p`.
pub fn standardize_strategy(p: &OUParams, strat: &GeneralStrategy) -> Result<Strategy> {
    let scale = p.standardizing_scale();
    Strategy::new(
        scale * (strat.a_tilde - p.mu),
        scale * (strat.b_tilde - p.mu),
    )
}

pub fn destandardize_performance(p: &OUParams, perf: &Performance) -> GeneralPerformance {
    GeneralPerformance {
        profit_rate: (p.tau * p.sigma2 / 2.0).sqrt() * perf.profit_rate,
        variance_rate: p.sigma2 / 2.0 * perf.variance_rate,
    }
}

/// Exact conditional law of `X_{s+dt}` given `X_s = x0`: returns `(mean, variance)`.
pub fn transition(p: &OUParams, x0: f64, dt: f64) -> Result<(f64, f64)> {
    if !(dt > 0.0) {
        return domain(format!("transition step must be positive, got {dt}"));
    }
    let decay = (-p.tau * dt).exp();
    let mean = p.mu + (x0 - p.mu) * decay;
    let variance = p.stationary_variance() * -(-2.0 * p.tau * dt).exp_m1();
    Ok((mean, variance))
}
