//! Long-run profit rate and variance rate of a standardized strategy.
//!
//! With `N_t` the number of completed cycles by time `t` and per-cycle profit
//! `π = 2(a - b - c)`, renewal theory gives
//!
//! ```text
//! Π = lim π E[N_t] / t   = π / E[T]
//! V = lim var(π N_t) / t = π² var T / E[T]³
//! ```

use serde::Serialize;

use crate::cycle_stats::{cycle_stats, CycleStats, Strategy};
use crate::error::{domain, Result};

/// A strategy together with its standardized round-trip cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostedStrategy {
    pub strategy: Strategy,
    pub c: f64,
}

impl CostedStrategy {
    pub fn new(strategy: Strategy, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return domain(format!("cost must be finite and non-negative, got {c}"));
        }
        Ok(Self { strategy, c })
    }

    /// Symmetric strategy `(a, -a)` at cost `c`.
    pub fn symmetric(a: f64, c: f64) -> Result<Self> {
        Self::new(Strategy::symmetric(a)?, c)
    }
}

/// Standardized profit rate `Π` and variance rate `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Performance {
    pub profit_rate: f64,
    pub variance_rate: f64,
}

/// Profit of one completed trade cycle.
pub fn cycle_profit(cs: &CostedStrategy) -> f64 {
    2.0 * (cs.strategy.a() - cs.strategy.b() - cs.c)
}

fn from_stats(profit: f64, stats: &CycleStats) -> Performance {
    Performance {
        profit_rate: profit / stats.mean_t,
        variance_rate: profit * profit * stats.var_t / stats.mean_t.powi(3),
    }
}

fn stats_for(cs: &CostedStrategy) -> Result<CycleStats> {
    let stats = cycle_stats(&cs.strategy)?;
    if !(stats.mean_t > 0.0) {
        return domain(format!(
            "expected cycle time is not positive for (a={}, b={})",
            cs.strategy.a(),
            cs.strategy.b()
        ));
    }
    Ok(stats)
}

pub fn expected_profit_rate(cs: &CostedStrategy) -> Result<f64> {
    evaluate(cs).map(|p| p.profit_rate)
}

pub fn profit_rate_variance(cs: &CostedStrategy) -> Result<f64> {
    evaluate(cs).map(|p| p.variance_rate)
}

/// Joint evaluation of `Π` and `V` from one cycle-statistics evaluation.
pub fn evaluate(cs: &CostedStrategy) -> Result<Performance> {
    let stats = stats_for(cs)?;
    Ok(from_stats(cycle_profit(cs), &stats))
}

/// `Π(a, -a)` and `V(a, -a)` at cost `c`.
pub fn evaluate_symmetric(a: f64, c: f64) -> Result<Performance> {
    evaluate(&CostedStrategy::symmetric(a, c)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle_stats::expected_cycle_time;
    use crate::cycle_stats::Strategy;
    use proptest::prelude::*;

    fn cs(a: f64, b: f64, c: f64) -> CostedStrategy {
        CostedStrategy::new(Strategy::new(a, b).unwrap(), c).unwrap()
    }

    #[test]
    fn cycle_profit_examples() {
        assert_eq!(cycle_profit(&cs(0.6, -0.4, 1.0)), 0.0);
        assert!((cycle_profit(&cs(1.0, -1.0, 0.2)) - 3.6).abs() < 1e-15);
    }

    #[test]
    fn break_even_is_exactly_zero() {
        for c in [0.014, 0.2, 1.0, 3.0] {
            let p = evaluate(&cs(c / 2.0, -c / 2.0, c)).unwrap();
            assert_eq!(p.profit_rate, 0.0);
            assert_eq!(p.variance_rate, 0.0);
        }
    }

    #[test]
    fn profit_rate_is_profit_over_mean_cycle() {
        let x = cs(0.5, -0.5, 0.2);
        let et = expected_cycle_time(&x.strategy).unwrap();
        let pi = expected_profit_rate(&x).unwrap();
        assert_eq!(pi, cycle_profit(&x) / et);
        // 1.6 / 2.6151071839441657
        assert!((pi - 0.611_829_606_764_661_5).abs() < 1e-13);
    }

    #[test]
    fn negative_when_cost_exceeds_band() {
        assert!(expected_profit_rate(&cs(0.3, -0.3, 1.0)).unwrap() < 0.0);
        assert!(profit_rate_variance(&cs(0.3, -0.3, 1.0)).unwrap() > 0.0);
    }

    #[test]
    fn joint_matches_separate_bitwise() {
        let x = cs(0.9, -0.2, 0.3);
        let p = evaluate(&x).unwrap();
        assert_eq!(
            p.profit_rate.to_bits(),
            expected_profit_rate(&x).unwrap().to_bits()
        );
        assert_eq!(
            p.variance_rate.to_bits(),
            profit_rate_variance(&x).unwrap().to_bits()
        );
    }

    #[test]
    fn rejects_negative_cost() {
        assert!(CostedStrategy::new(Strategy::new(1.0, 0.0).unwrap(), -0.1).is_err());
        assert!(CostedStrategy::new(Strategy::new(1.0, 0.0).unwrap(), f64::NAN).is_err());
    }

    #[test]
    fn symmetric_family_shape() {
        let c = 1.0;
        // Below break-even the profit rate is negative and falls towards zero width.
        let p01 = evaluate_symmetric(0.01, c).unwrap().profit_rate;
        let p05 = evaluate_symmetric(0.05, c).unwrap().profit_rate;
        assert!(p01 < p05 && p05 < 0.0);

        let grid: Vec<f64> = (1..=400).map(|i| c / 2.0 + 0.01 * i as f64).collect();
        let perf: Vec<Performance> = grid
            .iter()
            .map(|&a| evaluate_symmetric(a, c).unwrap())
            .collect();
        assert!(perf
            .iter()
            .all(|p| p.profit_rate > 0.0 && p.variance_rate > 0.0));
        let peak = perf
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.profit_rate.total_cmp(&y.1.profit_rate))
            .unwrap()
            .0;
        for w in perf[peak..].windows(2) {
            assert!(w[1].profit_rate < w[0].profit_rate);
        }
        // The variance rate keeps rising past the profit maximizer and decays
        // only beyond its own peak.
        let vpeak = perf
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.variance_rate.total_cmp(&y.1.variance_rate))
            .unwrap()
            .0;
        assert!(vpeak > peak);
        for w in perf[..=peak].windows(2) {
            assert!(w[1].variance_rate > w[0].variance_rate);
        }
        for w in perf[vpeak..].windows(2) {
            assert!(w[1].variance_rate < w[0].variance_rate);
        }
    }

    proptest! {
        #[test]
        fn variance_rate_non_negative(a in -2.0f64..2.0, w in 0.01f64..3.0, c in 0.0f64..2.0) {
            prop_assume!((w - c).abs() > 1e-9);
            let p = evaluate(&cs(a, a - w, c)).unwrap();
            prop_assert!(p.variance_rate >= 0.0);
            prop_assert_eq!(p.profit_rate.signum(), (w - c).signum());
        }

        #[test]
        fn cycle_profit_affine(a in -2.0f64..2.0, w in 0.01f64..3.0, c in 0.0f64..2.0, d in 0.0f64..1.0) {
            let base = cycle_profit(&cs(a, a - w, c));
            prop_assert!((cycle_profit(&cs(a + d, a - w, c)) - base - 2.0 * d).abs() < 1e-12);
            prop_assert!((cycle_profit(&cs(a, a - w, c + d)) - base + 2.0 * d).abs() < 1e-12);
        }
    }
}
