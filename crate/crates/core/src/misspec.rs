//! Trading with wrong process parameters.
//!
//! A trader who believes `believed_params` optimizes in the believed
//! standardized frame and then holds the resulting thresholds fixed in price
//! space. The same price levels are standardized again under the true
//! parameters to obtain the performance actually realized.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::optimizer::{
    maximize_unconstrained, solve_risk_constrained_from, OptResult, RiskBound, DEFAULT_EPS,
    DEFAULT_TOL,
};
use crate::ou_model::{
    destandardize_performance, destandardize_strategy, standardize_cost, standardize_strategy,
    standardize_variance_rate, GeneralPerformance, GeneralStrategy, OUParams,
};
use crate::strategy_eval::{evaluate, CostedStrategy};

/// Benchmark spread parameters: `mu = 1`, `tau = 10`, `sigma^2 = 1e-4`.
pub const BENCHMARK_PARAMS: OUParams = OUParams {
    mu: 1.0,
    tau: 10.0,
    sigma2: 1e-4,
};

/// Benchmark round-trip cost in price units.
pub const BENCHMARK_COST: f64 = 0.0015;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MisspecScenario {
    pub true_params: OUParams,
    pub believed_params: OUParams,
    /// Round-trip cost in price units.
    pub cost_general: f64,
    /// Bound on the price-space variance rate.
    pub risk_bound_general: Option<f64>,
}

impl MisspecScenario {
    pub fn new(
        true_params: OUParams,
        believed_params: OUParams,
        cost_general: f64,
        risk_bound_general: Option<f64>,
    ) -> Result<Self> {
        for p in [&true_params, &believed_params] {
            OUParams::new(p.mu, p.tau, p.sigma2)?;
        }
        if !(cost_general > 0.0) || !cost_general.is_finite() {
            return domain(format!(
                "cost must be finite and positive, got {cost_general}"
            ));
        }
        if let Some(v) = risk_bound_general {
            RiskBound::new(v)?;
        }
        Ok(Self {
            true_params,
            believed_params,
            cost_general,
            risk_bound_general,
        })
    }

    /// Correctly specified benchmark scenario without a risk bound.
    pub fn benchmark() -> Self {
        Self {
            true_params: BENCHMARK_PARAMS,
            believed_params: BENCHMARK_PARAMS,
            cost_general: BENCHMARK_COST,
            risk_bound_general: None,
        }
    }

    pub fn with_believed(self, believed_params: OUParams) -> Self {
        Self {
            believed_params,
            ..self
        }
    }

    pub fn with_bound(self, risk_bound_general: Option<f64>) -> Self {
        Self {
            risk_bound_general,
            ..self
        }
    }

    /// Same true parameters, believed correctly.
    pub fn correctly_specified(self) -> Self {
        Self {
            believed_params: self.true_params,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MisspecOutcome {
    /// Price-space thresholds actually traded.
    pub believed_strategy: GeneralStrategy,
    pub believed_perf: GeneralPerformance,
    pub realized_perf: GeneralPerformance,
    /// Realized variance rate within the bound (always true without a bound).
    pub realized_feasible: bool,
    /// Whether the bound was binding in the believed frame.
    pub constraint_active: bool,
    pub monotonicity_fallback: bool,
}

/// One row of [`frontier_comparison`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub v0_general: f64,
    #[serde(rename = "believed_V")]
    pub believed_v: f64,
    #[serde(rename = "believed_Pi")]
    pub believed_pi: f64,
    #[serde(rename = "realized_V")]
    pub realized_v: f64,
    #[serde(rename = "realized_Pi")]
    pub realized_pi: f64,
}

impl ComparisonRow {
    pub const HEADER: [&'static str; 5] = [
        "v0_general",
        "believed_V",
        "believed_Pi",
        "realized_V",
        "realized_Pi",
    ];
}

/// Believed-frame cost and unconstrained optimum, shared across a sweep.
struct BelievedFrame {
    c: f64,
    unconstrained: OptResult,
}

impl BelievedFrame {
    fn new(s: &MisspecScenario) -> Result<Self> {
        let c = standardize_cost(&s.believed_params, s.cost_general)?;
        Ok(Self {
            c,
            unconstrained: maximize_unconstrained(c, DEFAULT_TOL)?,
        })
    }

    /// Largest variance rate on the believed frontier, in price units.
    fn max_variance_general(&self, s: &MisspecScenario) -> f64 {
        s.believed_params.sigma2 / 2.0 * self.unconstrained.performance.variance_rate
    }
}

fn outcome(s: &MisspecScenario, frame: &BelievedFrame, v0: Option<f64>) -> Result<MisspecOutcome> {
    let believed = &s.believed_params;
    let truth = &s.true_params;
    let solution = match v0 {
        Some(v) => {
            let bound = RiskBound::new(standardize_variance_rate(believed, v))?;
            solve_risk_constrained_from(frame.c, &frame.unconstrained, bound, DEFAULT_EPS)?
        }
        None => frame.unconstrained,
    };
    let believed_strategy = destandardize_strategy(believed, &solution.strategy);
    let believed_perf = destandardize_performance(believed, &solution.performance);

    let realized = standardize_strategy(truth, &believed_strategy).map_err(|_| {
        Error::Domain(format!(
            "traded levels ({}, {}) collapse to a <= b under the true parameters",
            believed_strategy.a_tilde, believed_strategy.b_tilde
        ))
    })?;
    let c_true = standardize_cost(truth, s.cost_general)?;
    let perf = evaluate(&CostedStrategy::new(realized, c_true)?)?;
    let realized_perf = destandardize_performance(truth, &perf);

    // The solver meets the bound to within eps in standardized units.
    let slack = truth.sigma2 / 2.0 * DEFAULT_EPS;
    let realized_feasible = v0.is_none_or(|v| realized_perf.variance_rate <= v + slack);
    Ok(MisspecOutcome {
        believed_strategy,
        believed_perf,
        realized_perf,
        realized_feasible,
        constraint_active: solution.constraint_active,
        monotonicity_fallback: solution.monotonicity_fallback,
    })
}

/// Thresholds chosen under the believed parameters and their believed and
/// realized performance.
pub fn analyze(scenario: &MisspecScenario) -> Result<MisspecOutcome> {
    let frame = BelievedFrame::new(scenario)?;
    outcome(scenario, &frame, scenario.risk_bound_general)
}

/// Outcomes for each bound in `v0s` (price units); the scenario's own bound is ignored.
pub fn outcomes_at(scenario: &MisspecScenario, v0s: &[f64]) -> Result<Vec<MisspecOutcome>> {
    let frame = BelievedFrame::new(scenario)?;
    v0s.par_iter()
        .map(|&v| outcome(scenario, &frame, Some(v)))
        .collect()
}

/// Bounds `Ṽmax k / n`, `k = 1..n`, spanning the believed frontier.
pub fn believed_bound_sweep(scenario: &MisspecScenario, n_points: usize) -> Result<Vec<f64>> {
    if n_points < 2 {
        return domain(format!(
            "comparison needs at least 2 points, got {n_points}"
        ));
    }
    let frame = BelievedFrame::new(scenario)?;
    let vmax = frame.max_variance_general(scenario);
    Ok((1..=n_points)
        .map(|k| vmax * k as f64 / n_points as f64)
        .collect())
}

/// Believed and realized frontiers over [`believed_bound_sweep`].
pub fn frontier_comparison(
    scenario: &MisspecScenario,
    n_points: usize,
) -> Result<Vec<ComparisonRow>> {
    let v0s = believed_bound_sweep(scenario, n_points)?;
    let outcomes = outcomes_at(scenario, &v0s)?;
    Ok(v0s
        .iter()
        .zip(outcomes)
        .map(|(&v0_general, o)| ComparisonRow {
            v0_general,
            believed_v: o.believed_perf.variance_rate,
            believed_pi: o.believed_perf.profit_rate,
            realized_v: o.realized_perf.variance_rate,
            realized_pi: o.realized_perf.profit_rate,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MisspecParam {
    Mu,
    Tau,
    Sigma2,
}

/// Default believed-parameter grid around `truth`: ±25% and ±50% for `tau`
/// and `sigma2`; shifts of ±2.5 and ±5 stationary standard deviations for `mu`.
pub fn default_believed_grid(truth: &OUParams, param: MisspecParam) -> Vec<OUParams> {
    let sd = truth.stationary_sd();
    [-1.0, -0.5, 0.5, 1.0]
        .iter()
        .map(|&k| match param {
            MisspecParam::Mu => OUParams {
                mu: truth.mu + 5.0 * k * sd,
                ..*truth
            },
            MisspecParam::Tau => OUParams {
                tau: truth.tau * (1.0 + 0.5 * k),
                ..*truth
            },
            MisspecParam::Sigma2 => OUParams {
                sigma2: truth.sigma2 * (1.0 + 0.5 * k),
                ..*truth
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> MisspecScenario {
        MisspecScenario::benchmark()
    }

    fn params(mu: f64, tau: f64, sigma2: f64) -> OUParams {
        OUParams::new(mu, tau, sigma2).unwrap()
    }

    fn correct_optimum() -> f64 {
        analyze(&bench()).unwrap().realized_perf.profit_rate
    }

    #[test]
    fn identity_scenario_realizes_its_beliefs() {
        for bound in [None, Some(1e-6), Some(1e-5)] {
            let o = analyze(&bench().with_bound(bound)).unwrap();
            assert!((o.believed_perf.profit_rate - o.realized_perf.profit_rate).abs() < 1e-10);
            assert!((o.believed_perf.variance_rate - o.realized_perf.variance_rate).abs() < 1e-10);
            assert!(o.realized_feasible);
        }
        let rows = frontier_comparison(&bench(), 20).unwrap();
        for r in rows {
            assert!((r.believed_pi - r.realized_pi).abs() < 1e-10);
            assert!((r.believed_v - r.realized_v).abs() < 1e-10);
        }
    }

    #[test]
    fn mu_misspecification_keeps_beliefs_but_loses_profit() {
        let s = bench().with_believed(params(1.0005, 10.0, 1e-4));
        let correct = frontier_comparison(&bench(), 25).unwrap();
        let wrong = frontier_comparison(&s, 25).unwrap();
        for (x, y) in correct.iter().zip(&wrong) {
            assert!((x.v0_general - y.v0_general).abs() < 1e-10);
            assert!((x.believed_pi - y.believed_pi).abs() < 1e-10);
            assert!((x.believed_v - y.believed_v).abs() < 1e-10);
        }
        let o = analyze(&s).unwrap();
        assert!(o.realized_perf.profit_rate < correct_optimum());
    }

    #[test]
    fn tau_overestimate_inflates_believed_profit() {
        let s = bench().with_believed(params(1.0, 20.0, 1e-4));
        let o = analyze(&s).unwrap();
        assert!(o.believed_perf.profit_rate > o.realized_perf.profit_rate);
        assert!(o.believed_perf.profit_rate > correct_optimum());

        let v0s = believed_bound_sweep(&s, 15).unwrap();
        let believed = outcomes_at(&s, &v0s).unwrap();
        let correct = outcomes_at(&bench(), &v0s).unwrap();
        for (b, c) in believed.iter().zip(&correct) {
            assert!(b.believed_perf.profit_rate > c.believed_perf.profit_rate);
        }
    }

    #[test]
    fn sigma_overestimate_undershoots_binding_bound() {
        let s = bench().with_believed(params(1.0, 10.0, 1.5e-4));
        let rows = frontier_comparison(&s, 10).unwrap();
        let outcomes =
            outcomes_at(&s, &rows.iter().map(|r| r.v0_general).collect::<Vec<_>>()).unwrap();
        let mut binding = 0;
        for (r, o) in rows.iter().zip(&outcomes) {
            if o.constraint_active {
                binding += 1;
                assert!(r.realized_v < r.v0_general);
                assert!(o.realized_feasible);
            }
        }
        assert!(binding > 0);
    }

    #[test]
    fn realized_profit_never_beats_correct_optimum() {
        let truth = BENCHMARK_PARAMS;
        let best = correct_optimum();
        for param in [MisspecParam::Mu, MisspecParam::Tau, MisspecParam::Sigma2] {
            for believed in default_believed_grid(&truth, param) {
                let o = analyze(&bench().with_believed(believed)).unwrap();
                assert!(
                    o.realized_perf.profit_rate <= best * (1.0 + 1e-12),
                    "{param:?}"
                );
            }
        }
    }

    #[test]
    fn common_mu_shift_translates_levels_only() {
        let base = bench()
            .with_believed(params(1.0003, 12.0, 1.2e-4))
            .with_bound(Some(5e-6));
        let shift = 0.37;
        let moved = MisspecScenario {
            true_params: params(1.0 + shift, 10.0, 1e-4),
            believed_params: params(1.0003 + shift, 12.0, 1.2e-4),
            ..base
        };
        let x = analyze(&base).unwrap();
        let y = analyze(&moved).unwrap();
        assert!((x.believed_strategy.a_tilde + shift - y.believed_strategy.a_tilde).abs() < 1e-12);
        assert!((x.believed_strategy.b_tilde + shift - y.believed_strategy.b_tilde).abs() < 1e-12);
        assert_eq!(x.believed_perf, y.believed_perf);
        let rel = |p: f64, q: f64| (p - q).abs() / q.abs();
        assert!(rel(x.realized_perf.profit_rate, y.realized_perf.profit_rate) < 1e-9);
        assert!(rel(x.realized_perf.variance_rate, y.realized_perf.variance_rate) < 1e-9);
        assert_eq!(x.realized_feasible, y.realized_feasible);
    }

    fn realized_standardized_a(believed: OUParams) -> (f64, f64) {
        let o = analyze(&bench().with_believed(believed)).unwrap();
        let s = standardize_strategy(&BENCHMARK_PARAMS, &o.believed_strategy).unwrap();
        let c = standardize_cost(&BENCHMARK_PARAMS, BENCHMARK_COST).unwrap();
        (s.a(), maximize_unconstrained(c, DEFAULT_TOL).unwrap().a())
    }

    #[test]
    fn tau_underestimate_widens_band() {
        let (a, a_star) = realized_standardized_a(params(1.0, 5.0, 1e-4));
        assert!(a > a_star);
    }

    #[test]
    fn sigma_underestimate_narrows_band() {
        let (a, a_star) = realized_standardized_a(params(1.0, 10.0, 0.5e-4));
        assert!(a < a_star);
    }

    #[test]
    fn invalid_scenarios_rejected() {
        assert!(MisspecScenario::new(BENCHMARK_PARAMS, BENCHMARK_PARAMS, -1.0, None).is_err());
        assert!(
            MisspecScenario::new(BENCHMARK_PARAMS, BENCHMARK_PARAMS, 0.0015, Some(0.0)).is_err()
        );
        assert!(frontier_comparison(&bench(), 1).is_err());
    }

    #[test]
    fn far_off_mean_still_evaluates() {
        let s = bench().with_believed(params(1.05, 10.0, 1e-4));
        let o = analyze(&s).unwrap();
        // Both levels far above the true mean: ordered, so valid, just poor.
        assert!(o.realized_perf.profit_rate < correct_optimum());
    }
}
