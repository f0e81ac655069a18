//! Threshold optimization over symmetric strategies `(a, -a)`.
//!
//! * [`maximize_unconstrained`] maximizes the profit rate `Π(a, -a)` over
//!   `a > c/2` with a bracketing expansion followed by golden-section search.
//! * [`solve_risk_constrained`] adds the bound `V(a, -a) ≤ v0`. If the
//!   unconstrained optimum already satisfies it, that optimum is returned;
//!   otherwise the bound is located by bisection on `[c/2, a*]`, where `V`
//!   rises from zero.
//! * [`efficient_frontier`] samples `(a, V, Π)` along `[c/2, a*]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cycle_stats::Strategy;
use crate::error::{domain, Error, Result};
use crate::strategy_eval::{evaluate_symmetric, Performance};

/// Default location tolerance for `a*`.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default tolerance on `|V - v0|` for the risk-constrained solver.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Width of the search window above `c/2` used to bracket the maximum.
pub const BRACKET_SPAN: f64 = 50.0;

/// Number of samples used to verify that `V` increases on `[c/2, a*]`.
pub const MONOTONICITY_SAMPLES: usize = 32;

/// Resolution of the grid scan used when the monotonicity check fails.
pub const FALLBACK_GRID_POINTS: usize = 4096;

const MAX_BISECTIONS: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Upper bound `v0` on the standardized variance rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskBound {
    v0: f64,
}

impl RiskBound {
    pub fn new(v0: f64) -> Result<Self> {
        if !(v0 > 0.0) || !v0.is_finite() {
            return domain(format!("risk bound must be finite and positive, got {v0}"));
        }
        Ok(Self { v0 })
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }
}

/// Output of the optimizers. The strategy is always symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptResult {
    pub strategy: Strategy,
    pub performance: Performance,
    /// Whether the risk bound cut off the unconstrained optimum.
    pub constraint_active: bool,
    /// `|V - v0|` when the bound is active, zero otherwise.
    pub residual: f64,
    /// Set when `V` failed the monotonicity check and the answer came from a
    /// grid scan instead of bisection.
    pub monotonicity_fallback: bool,
    /// Golden-section or bisection iterations performed.
    pub iterations: usize,
}

impl OptResult {
    pub fn a(&self) -> f64 {
        self.strategy.a()
    }
}

/// One sample `(a, V(a, -a), Π(a, -a))` of the efficient frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub a: f64,
    pub variance_rate: f64,
    pub profit_rate: f64,
}

fn check_cost(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return domain(format!("cost must be finite and positive, got {c}"));
    }
    Ok(())
}

fn profit_at(a: f64, c: f64) -> Result<f64> {
    evaluate_symmetric(a, c).map(|p| p.profit_rate)
}

/// Expands geometrically from `c/2` until the profit rate turns down.
/// Returns `(lo, hi)` with the maximizer inside.
fn bracket_maximum(c: f64) -> Result<(f64, f64)> {
    let start = c / 2.0;
    let limit = start + BRACKET_SPAN;
    let mut step = 1e-3 * c.max(1e-2);
    let mut points = vec![(start, 0.0)];
    loop {
        let x = start + step;
        if x > limit {
            return Err(Error::Bracketing(format!(
                "profit rate still increasing at a = {limit} for c = {c}"
            )));
        }
        let fx = profit_at(x, c).map_err(|e| {
            Error::Bracketing(format!(
                "profit rate not evaluable at a = {x} for c = {c}: {e}"
            ))
        })?;
        let n = points.len();
        if fx < points[n - 1].1 {
            let lo = if n >= 2 { points[n - 2].0 } else { start };
            return Ok((lo, x));
        }
        points.push((x, fx));
        step *= 2.0;
    }
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
/// Returns `(argmax, max, iterations)`.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(hi > lo) {
        return domain(format!("empty search interval [{lo}, {hi}]"));
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while hi - lo > tol {
        iterations += 1;
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
        if iterations > 10_000 {
            return Err(Error::Convergence(
                "golden-section search did not terminate".into(),
            ));
        }
    }
    Ok(if f1 >= f2 {
        (x1, f1, iterations)
    } else {
        (x2, f2, iterations)
    })
}

fn symmetric_result(a: f64, c: f64) -> Result<(Strategy, Performance)> {
    Ok((Strategy::symmetric(a)?, evaluate_symmetric(a, c)?))
}

/// Profit-maximizing symmetric strategy for standardized cost `c > 0`,
/// located to within `tol` in `a`.
pub fn maximize_unconstrained(c: f64, tol: f64) -> Result<OptResult> {
    check_cost(c)?;
    let (lo, hi) = bracket_maximum(c)?;
    let (a_star, _, iterations) = golden_section_max(|a| profit_at(a, c), lo, hi, tol)?;
    let (strategy, performance) = symmetric_result(a_star, c)?;
    Ok(OptResult {
        strategy,
        performance,
        constraint_active: false,
        residual: 0.0,
        monotonicity_fallback: false,
        iterations,
    })
}

/// Risk-constrained optimum for cost `c`, bound `v0` and tolerance `eps` on
/// `|V - v0|`.
pub fn solve_risk_constrained(c: f64, bound: RiskBound, eps: f64) -> Result<OptResult> {
    let unconstrained = maximize_unconstrained(c, DEFAULT_TOL)?;
    solve_risk_constrained_from(c, &unconstrained, bound, eps)
}

/// As [`solve_risk_constrained`], reusing an already computed unconstrained
/// optimum for the same `c`.
pub fn solve_risk_constrained_from(
    c: f64,
    unconstrained: &OptResult,
    bound: RiskBound,
    eps: f64,
) -> Result<OptResult> {
    check_cost(c)?;
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    let v0 = bound.v0();
    if unconstrained.performance.variance_rate <= v0 {
        return Ok(OptResult {
            constraint_active: false,
            residual: 0.0,
            ..*unconstrained
        });
    }
    let a_star = unconstrained.a();
    let floor = c / 2.0;
    if !variance_increasing(c, floor, a_star)? {
        return grid_fallback(c, floor, a_star, v0);
    }

    let (mut lo, mut hi) = (floor, a_star);
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let v = evaluate_symmetric(mid, c)?.variance_rate;
        if (v - v0).abs() <= eps {
            let (strategy, performance) = symmetric_result(mid, c)?;
            return Ok(OptResult {
                strategy,
                performance,
                constraint_active: true,
                residual: (performance.variance_rate - v0).abs(),
                monotonicity_fallback: false,
                iterations,
            });
        }
        if v > v0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        if iterations >= MAX_BISECTIONS || hi - lo <= f64::EPSILON * hi.abs() {
            return Err(Error::Convergence(format!(
                "bisection stalled at a = {mid} with |V - v0| = {} > eps = {eps}",
                (v - v0).abs()
            )));
        }
    }
}

fn variance_increasing(c: f64, lo: f64, hi: f64) -> Result<bool> {
    let n = MONOTONICITY_SAMPLES;
    let mut prev = f64::NEG_INFINITY;
    for i in 0..n {
        let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let v = evaluate_symmetric(a, c)?.variance_rate;
        if v <= prev {
            return Ok(false);
        }
        prev = v;
    }
    Ok(true)
}

fn grid_fallback(c: f64, lo: f64, hi: f64, v0: f64) -> Result<OptResult> {
    let n = FALLBACK_GRID_POINTS;
    let mut best: Option<(f64, Performance)> = None;
    for i in 0..n {
        let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let perf = evaluate_symmetric(a, c)?;
        if perf.variance_rate <= v0 && best.is_none_or(|(_, p)| perf.profit_rate > p.profit_rate) {
            best = Some((a, perf));
        }
    }
    // a = c/2 always satisfies the bound, so the scan is never empty.
    let (a, performance) = best.expect("break-even strategy is always feasible");
    Ok(OptResult {
        strategy: Strategy::symmetric(a)?,
        performance,
        constraint_active: true,
        residual: (performance.variance_rate - v0).abs(),
        monotonicity_fallback: true,
        iterations: n,
    })
}

/// `n_points` equally spaced samples of `(a, V, Π)` for `a ∈ [c/2, a*]`.
pub fn efficient_frontier(c: f64, n_points: usize) -> Result<Vec<FrontierPoint>> {
    let unconstrained = maximize_unconstrained(c, DEFAULT_TOL)?;
    efficient_frontier_from(c, &unconstrained, n_points)
}

pub fn efficient_frontier_from(
    c: f64,
    unconstrained: &OptResult,
    n_points: usize,
) -> Result<Vec<FrontierPoint>> {
    check_cost(c)?;
    if n_points < 2 {
        return domain(format!("frontier needs at least 2 points, got {n_points}"));
    }
    let lo = c / 2.0;
    let hi = unconstrained.a();
    (0..n_points)
        .into_par_iter()
        .map(|i| {
            let a = if i == n_points - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n_points - 1) as f64
            };
            let p = evaluate_symmetric(a, c)?;
            Ok(FrontierPoint {
                a,
                variance_rate: p.variance_rate,
                profit_rate: p.profit_rate,
            })
        })
        .collect()
}
