use ou_pairs_core::cycle_stats::cycle_stats;
use ou_pairs_core::ingest::{build_spread, estimate_ou, PricePairSeries};
use ou_pairs_core::misspec::{analyze, BENCHMARK_COST, BENCHMARK_PARAMS};
use ou_pairs_core::optimizer::{maximize_unconstrained, DEFAULT_TOL};
use ou_pairs_core::ou_model::{destandardize_performance, standardize_cost};
use ou_pairs_core::simulator::{estimate_profit_statistics, sample_path};
use ou_pairs_core::strategy_eval::cycle_profit;
use ou_pairs_core::{CostedStrategy, MisspecScenario, SimConfig, Strategy};

#[test]
fn counting_process_variance_grows_linearly() {
    let cs = CostedStrategy::new(Strategy::new(0.8, -0.3).unwrap(), 0.1).unwrap();
    let stats = cycle_stats(&cs.strategy).unwrap();
    let profit = cycle_profit(&cs);
    let renewal = stats.var_t / stats.mean_t.powi(3);
    let mut per_t = Vec::new();
    for (k, mult) in [100.0, 200.0, 400.0].iter().enumerate() {
        let t = mult * stats.mean_t;
        let est =
            estimate_profit_statistics(&cs, t, 4000, &SimConfig::with_seed(70 + k as u64)).unwrap();
        assert!(!est.short_horizon);
        per_t.push(est.var_rate / (profit * profit));
    }
    let lo = per_t.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = per_t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi / lo - 1.0 < 0.10, "{per_t:?}");
    for v in &per_t {
        assert!((v / renewal - 1.0).abs() < 0.10, "{v} vs {renewal}");
    }
}

#[test]
fn general_frame_scales_standardized_optimum() {
    let p = BENCHMARK_PARAMS;
    let c = standardize_cost(&p, BENCHMARK_COST).unwrap();
    let r = maximize_unconstrained(c, DEFAULT_TOL).unwrap();
    let g = destandardize_performance(&p, &r.performance);
    let o = analyze(&MisspecScenario::benchmark()).unwrap();
    assert_eq!(o.believed_perf, g);
    assert!((o.believed_strategy.a_tilde - p.mu - r.a() * p.stationary_sd()).abs() < 1e-15);
}

#[test]
fn estimated_parameters_feed_misspecification() {
    let p = BENCHMARK_PARAMS;
    let dt = 0.001;
    let n = 200_000;
    let x = sample_path(&p, p.mu, dt, n - 1, 31).unwrap();
    let b: Vec<f64> = (0..n).map(|i| 40.0 + 1e-4 * i as f64).collect();
    let a: Vec<f64> = x.iter().zip(&b).map(|(x, b)| x + 0.5 * b).collect();
    let series = PricePairSeries::new((0..n).map(|i| i as f64 * dt).collect(), a, b).unwrap();
    let spread = build_spread(&series, 0.5, false).unwrap();
    let est = estimate_ou(&spread, 0.5).unwrap();

    let scenario = MisspecScenario::new(p, est.params, BENCHMARK_COST, None).unwrap();
    let outcome = analyze(&scenario).unwrap();
    let best = analyze(&MisspecScenario::benchmark())
        .unwrap()
        .realized_perf
        .profit_rate;
    assert!(outcome.realized_perf.profit_rate <= best);
    // A fit this close to the truth costs little.
    assert!(outcome.realized_perf.profit_rate > 0.9 * best);
}
