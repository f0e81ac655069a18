//! Mean and variance of the trade-cycle duration for the standardized
//! spread `dY = -Y dt + sqrt(2) dW`.
//!
//! A cycle starts when `Y` hits the entry level `a`, passes through the exit
//! level `b` and ends at the next hit of `a`. Both moments are differences of
//! per-endpoint power series in `xi ∈ {a, b}`:
//!
//! ```text
//! odd(xi)    = Σ_{k≥1} Γ(k - 1/2) (√2 xi)^{2k-1} / (2k-1)!
//! even(xi)   = Σ_{k≥1} Γ(k)       (√2 xi)^{2k}   / (2k)!
//! digam(xi)  = Σ_{k≥1} Γ(k - 1/2) (ψ(k - 1/2) + γ) (√2 xi)^{2k-1} / (2k-1)!
//!
//! E[T]   = odd(a) - odd(b)
//! var T  = w1(a) - w1(b) - digam(a) + digam(b),   w1 = odd · even
//! ```
//!
//! `odd` and `even` are the odd and even parts of
//! `u(xi) = 1/2 Σ Γ(k/2) (√2 xi)^k / k!` (so `w1 = u(xi)² - u(-xi)²`), and `γ`
//! is the Euler-Mascheroni constant. The `+ γ` shift in the digamma weights
//! is what makes the variance agree with direct first-passage quadrature and
//! with simulation; plain `ψ(k - 1/2)` weights overstate `var T` by exactly
//! `γ E[T]`.
//!
//! All three series are summed with running term ratios, so no factorial or
//! gamma value is ever formed explicitly.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Hard cap on the number of series terms per endpoint.
pub const MAX_TERMS: usize = 500;

/// Relative size below which a series term no longer changes the sum.
pub const SERIES_REL_TOL: f64 = 1e-17;

/// Tolerance (relative to the magnitude of the summed pieces) within which a
/// negative variance is treated as cancellation noise and clamped to zero.
const NEGATIVE_VARIANCE_TOL: f64 = 1e-10;

/// Standardized entry level `a` and exit level `b`, `a > b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Strategy {
    a: f64,
    b: f64,
}

impl Strategy {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return domain(format!("thresholds must be finite (a={a}, b={b})"));
        }
        if a <= b {
            return domain(format!("entry level must exceed exit level (a={a}, b={b})"));
        }
        Ok(Self { a, b })
    }

    /// The symmetric strategy `(a, -a)`, `a > 0`.
    pub fn symmetric(a: f64) -> Result<Self> {
        Self::new(a, -a)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// The mirrored strategy `(-b, -a)`; it has identical cycle statistics.
    pub fn reflected(&self) -> Self {
        Self {
            a: -self.b,
            b: -self.a,
        }
    }
}

/// `E[T]` and `var T` in standardized time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleStats {
    pub mean_t: f64,
    pub var_t: f64,
}

/// Per-endpoint series values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointSeries {
    pub odd: f64,
    pub even: f64,
    pub digamma_weighted: f64,
    /// Number of terms summed.
    pub terms: usize,
}

impl EndpointSeries {
    fn w1(&self) -> f64 {
        self.odd * self.even
    }
}

/// Evaluates the three endpoint series at `xi` with at most `max_terms` terms.
pub fn endpoint_series_capped(xi: f64, max_terms: usize) -> Result<EndpointSeries> {
    if !xi.is_finite() {
        return domain(format!("series argument must be finite, got {xi}"));
    }
    let x2 = 2.0 * xi * xi;
    // k = 1 terms.
    let mut odd_term = std::f64::consts::PI.sqrt() * std::f64::consts::SQRT_2 * xi;
    let mut even_term = xi * xi;
    // ψ(1/2) + γ = -2 ln 2
    let mut weight = -2.0 * std::f64::consts::LN_2;

    let mut odd = 0.0;
    let mut even = 0.0;
    let mut weighted = 0.0;

    for k in 1..=max_terms {
        let weighted_term = odd_term * weight;
        odd += odd_term;
        even += even_term;
        weighted += weighted_term;

        let kf = k as f64;
        let odd_ratio = (kf - 0.5) * x2 / ((2.0 * kf) * (2.0 * kf + 1.0));
        let even_ratio = kf * x2 / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
        let negligible = |term: f64, sum: f64| term.abs() <= SERIES_REL_TOL * sum.abs().max(1.0);
        // Terms grow while the ratios exceed one; only stop on the decaying side.
        if odd_ratio < 1.0
            && even_ratio < 1.0
            && negligible(odd_term, odd)
            && negligible(even_term, even)
            && negligible(weighted_term, weighted)
        {
            return Ok(EndpointSeries {
                odd,
                even,
                digamma_weighted: weighted,
                terms: k,
            });
        }

        odd_term *= odd_ratio;
        even_term *= even_ratio;
        // ψ(k + 1/2) = ψ(k - 1/2) + 1/(k - 1/2)
        weight += 1.0 / (kf - 0.5);
    }
    Err(Error::Convergence(format!(
        "cycle-time series at xi={xi} did not converge within {max_terms} terms"
    )))
}

pub fn endpoint_series(xi: f64) -> Result<EndpointSeries> {
    endpoint_series_capped(xi, MAX_TERMS)
}

fn check_order(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) {
        return domain(format!("thresholds must be finite (a={a}, b={b})"));
    }
    if a < b {
        return domain(format!("entry level below exit level (a={a}, b={b})"));
    }
    Ok(())
}

fn combine(sa: &EndpointSeries, sb: &EndpointSeries) -> Result<CycleStats> {
    let mean_t = sa.odd - sb.odd;
    let raw = sa.w1() - sb.w1() - sa.digamma_weighted + sb.digamma_weighted;
    let var_t = if raw >= 0.0 {
        raw
    } else {
        let scale =
            sa.w1().abs() + sb.w1().abs() + sa.digamma_weighted.abs() + sb.digamma_weighted.abs();
        if raw >= -NEGATIVE_VARIANCE_TOL * scale.max(1.0) {
            0.0
        } else {
            return Err(Error::Convergence(format!(
                "cycle-time variance evaluated to {raw} (pieces of magnitude {scale})"
            )));
        }
    };
    Ok(CycleStats { mean_t, var_t })
}

/// `E[T]` and `var T` for thresholds `a ≥ b`; `a == b` yields zeros.
pub fn cycle_stats_at(a: f64, b: f64) -> Result<CycleStats> {
    check_order(a, b)?;
    if a == b {
        return Ok(CycleStats {
            mean_t: 0.0,
            var_t: 0.0,
        });
    }
    let sa = endpoint_series(a)?;
    let sb = endpoint_series(b)?;
    combine(&sa, &sb)
}

pub fn expected_cycle_time_at(a: f64, b: f64) -> Result<f64> {
    cycle_stats_at(a, b).map(|s| s.mean_t)
}

pub fn cycle_time_variance_at(a: f64, b: f64) -> Result<f64> {
    cycle_stats_at(a, b).map(|s| s.var_t)
}

pub fn cycle_stats(strat: &Strategy) -> Result<CycleStats> {
    cycle_stats_at(strat.a, strat.b)
}

/// Expected duration of one trade cycle.
pub fn expected_cycle_time(strat: &Strategy) -> Result<f64> {
    expected_cycle_time_at(strat.a, strat.b)
}

/// Variance of the duration of one trade cycle.
pub fn cycle_time_variance(strat: &Strategy) -> Result<f64> {
    cycle_time_variance_at(strat.a, strat.b)
}
