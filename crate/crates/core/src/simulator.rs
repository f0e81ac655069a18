//! Monte Carlo oracle for the analytic cycle and profit statistics.
//!
//! Paths are advanced with the exact Ornstein-Uhlenbeck transition, so the
//! simulated marginals carry no discretization bias. Level crossings between
//! grid points are detected with the Brownian-bridge crossing probability
//! `exp(-2 d0 d1 / s²)` (`d0`, `d1` distances to the level at both ends of
//! a step, `s²` the step variance); without it, discrete monitoring inflates
//! the mean cycle time by several percent at practical step sizes.
//!
//! Each chain or replication draws from its own ChaCha8 stream derived from
//! the master seed, and results are gathered in index order, so output is
//! identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::cycle_stats::{expected_cycle_time, Strategy};
use crate::error::{domain, Error, Result};
use crate::ou_model::{transition, OUParams};
use crate::strategy_eval::{cycle_profit, CostedStrategy};

/// Stream-id offsets keeping the cycle and profit estimators on disjoint substreams.
const CYCLE_STREAMS: u64 = 0;
const PROFIT_STREAMS: u64 = 1 << 40;

/// Beyond this exponent the bridge crossing probability is treated as zero.
const BRIDGE_CUTOFF: f64 = 40.0;

/// Largest step, as a fraction of the squared band width `(a - b)²`. Keeps the
/// per-step standard deviation at or below an eighth of the band.
const BAND_STEP_FRACTION: f64 = 1.0 / 128.0;

/// Horizons shorter than this many mean cycle times are flagged.
pub const SHORT_HORIZON_CYCLES: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Largest time step in standardized units.
    pub dt: f64,
    pub seed: u64,
    /// A single cycle (or the wait for the first entry) longer than this many
    /// steps aborts the estimate.
    pub max_steps_per_cycle: u64,
    /// Independent chains the cycle sample is split across.
    pub chains: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            seed: 0,
            max_steps_per_cycle: 100_000_000,
            chains: 64,
        }
    }
}

impl SimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return domain(format!("dt must be finite and positive, got {}", self.dt));
        }
        if self.max_steps_per_cycle == 0 || self.chains == 0 {
            return domain("step budget and chain count must be at least 1");
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Sample moments of simulated cycle durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimCycleEstimate {
    pub mean_t: f64,
    pub var_t: f64,
    pub stderr_mean: f64,
    pub stderr_var: f64,
    pub n: usize,
}

impl SimCycleEstimate {
    /// Two-sided interval for `E[T]` at `z` standard errors.
    pub fn mean_interval(&self, z: f64) -> (f64, f64) {
        (
            self.mean_t - z * self.stderr_mean,
            self.mean_t + z * self.stderr_mean,
        )
    }

    pub fn var_interval(&self, z: f64) -> (f64, f64) {
        (
            self.var_t - z * self.stderr_var,
            self.var_t + z * self.stderr_var,
        )
    }
}

/// Replication statistics of the cumulative profit `π N_t` over a horizon `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitEstimate {
    /// Mean of `π N_t / t` (estimates the profit rate).
    pub mean_rate: f64,
    /// `var(π N_t) / t` (estimates the variance rate).
    pub var_rate: f64,
    pub stderr_mean: f64,
    pub stderr_var: f64,
    /// Mean number of completed cycles.
    pub mean_cycles: f64,
    pub horizon: f64,
    pub replications: usize,
    /// Horizon below [`SHORT_HORIZON_CYCLES`] mean cycle times.
    pub short_horizon: bool,
}

/// Exact sampling of `X` on the grid `0, dt, …, n_steps·dt`, starting at `x0`.
pub fn sample_path(
    params: &OUParams,
    x0: f64,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (_, variance) = transition(params, x0, dt)?;
    let decay = (-params.tau * dt).exp();
    let sd = variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = Vec::with_capacity(n_steps + 1);
    let mut x = x0;
    path.push(x);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x = params.mu + (x - params.mu) * decay + sd * z;
        path.push(x);
    }
    Ok(path)
}

/// Exact one-step kernel for the standardized process.
#[derive(Debug, Clone, Copy)]
struct Stepper {
    h: f64,
    decay: f64,
    sd: f64,
    variance: f64,
}

impl Stepper {
    fn new(h: f64) -> Self {
        let variance = -(-2.0 * h).exp_m1();
        Self {
            h,
            decay: (-h).exp(),
            sd: variance.sqrt(),
            variance,
        }
    }

    fn step<R: Rng>(&self, y: f64, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        y * self.decay + self.sd * z
    }

    /// Did the path cross `level` during a step from `y0` to `y1`?
    fn crossed<R: Rng>(&self, y0: f64, y1: f64, level: f64, rng: &mut R) -> bool {
        let d0 = y0 - level;
        let d1 = y1 - level;
        if d0 * d1 <= 0.0 {
            return true;
        }
        let exponent = 2.0 * d0 * d1 / self.variance;
        exponent < BRIDGE_CUTOFF && rng.random::<f64>() < (-exponent).exp()
    }
}

fn step_for(strat: &Strategy, cfg: &SimConfig) -> Stepper {
    let width = strat.a() - strat.b();
    Stepper::new(cfg.dt.min(BAND_STEP_FRACTION * width * width))
}

/// Phase of the trading strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Flat, waiting for the first touch of the entry level.
    Flat,
    /// Position open, waiting for the exit level.
    Open,
    /// Reversed position, waiting for the entry level again.
    Reversed,
}

/// Strategy automaton over one step. Returns whether the first entry happened
/// and how many cycles completed; a step ending beyond both levels fires both.
fn advance_phase<R: Rng>(
    phase: &mut Phase,
    stepper: &Stepper,
    y0: f64,
    y1: f64,
    strat: &Strategy,
    rng: &mut R,
) -> (bool, u32) {
    let mut entered = false;
    let mut completed = 0;
    match *phase {
        Phase::Flat => {
            if stepper.crossed(y0, y1, strat.a(), rng) {
                entered = true;
                *phase = Phase::Open;
                if y1 <= strat.b() {
                    *phase = Phase::Reversed;
                }
            }
        }
        Phase::Open => {
            if stepper.crossed(y0, y1, strat.b(), rng) {
                *phase = Phase::Reversed;
                if y1 >= strat.a() {
                    completed += 1;
                    *phase = Phase::Open;
                }
            }
        }
        Phase::Reversed => {
            if stepper.crossed(y0, y1, strat.a(), rng) {
                completed += 1;
                *phase = Phase::Open;
                if y1 <= strat.b() {
                    *phase = Phase::Reversed;
                }
            }
        }
    }
    (entered, completed)
}

fn run_chain(
    strat: &Strategy,
    cfg: &SimConfig,
    stepper: &Stepper,
    chain: usize,
    n_cycles: usize,
) -> Result<Vec<f64>> {
    let mut rng = cfg.rng(CYCLE_STREAMS + chain as u64);
    let mut durations = Vec::with_capacity(n_cycles);
    // Entry at time zero.
    let mut y = strat.a();
    let mut phase = Phase::Open;
    let mut steps_in_cycle: u64 = 0;
    while durations.len() < n_cycles {
        let y1 = stepper.step(y, &mut rng);
        steps_in_cycle += 1;
        let (_, completed) = advance_phase(&mut phase, stepper, y, y1, strat, &mut rng);
        y = y1;
        if completed > 0 {
            durations.push(steps_in_cycle as f64 * stepper.h);
            steps_in_cycle = 0;
        } else if steps_in_cycle >= cfg.max_steps_per_cycle {
            return Err(Error::Budget {
                steps: steps_in_cycle,
                context: format!(
                    "cycle for (a={}, b={}) at step {}",
                    strat.a(),
                    strat.b(),
                    stepper.h
                ),
            });
        }
    }
    Ok(durations)
}

struct Moments {
    mean: f64,
    var: f64,
    stderr_mean: f64,
    stderr_var: f64,
}

/// Sample mean, unbiased variance and their standard errors.
fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let m2 = pairwise_sum(&dev2) / n;
    let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
    let m4 = pairwise_sum(&dev4) / n;
    let var = m2 * n / (n - 1.0);
    // Asymptotic variance of the sample variance: (m4 - m2²) / n.
    let stderr_var = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    Moments {
        mean,
        var,
        stderr_mean: (var / n).sqrt(),
        stderr_var,
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Simulates `n_cycles` complete trade cycles of the standardized process
/// and returns the sample moments of their durations.
pub fn estimate_cycle_stats(
    strat: &Strategy,
    cfg: &SimConfig,
    n_cycles: usize,
) -> Result<SimCycleEstimate> {
    cfg.validate()?;
    if n_cycles < 2 {
        return domain(format!("need at least 2 cycles, got {n_cycles}"));
    }
    let stepper = step_for(strat, cfg);
    let chains = cfg.chains.min(n_cycles);
    let per_chain: Vec<usize> = (0..chains)
        .map(|i| n_cycles / chains + usize::from(i < n_cycles % chains))
        .collect();
    let samples = per_chain
        .par_iter()
        .enumerate()
        .map(|(i, &n)| run_chain(strat, cfg, &stepper, i, n))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<f64> = samples.into_iter().flatten().collect();
    let m = moments(&all);
    Ok(SimCycleEstimate {
        mean_t: m.mean,
        var_t: m.var,
        stderr_mean: m.stderr_mean,
        stderr_var: m.stderr_var,
        n: all.len(),
    })
}

fn run_horizon(
    cs: &CostedStrategy,
    cfg: &SimConfig,
    stepper: &Stepper,
    n_steps: u64,
    replication: usize,
) -> Result<u64> {
    let strat = &cs.strategy;
    let mut rng = cfg.rng(PROFIT_STREAMS + replication as u64);
    // Stationary start, flat until the first entry.
    let mut y: f64 = rng.sample(StandardNormal);
    let mut phase = Phase::Flat;
    let mut cycles = 0u64;
    let mut since_event = 0u64;
    for _ in 0..n_steps {
        let y1 = stepper.step(y, &mut rng);
        let (entered, completed) = advance_phase(&mut phase, stepper, y, y1, strat, &mut rng);
        y = y1;
        since_event += 1;
        if entered || completed > 0 {
            since_event = 0;
            cycles += u64::from(completed);
        } else if since_event >= cfg.max_steps_per_cycle {
            return Err(Error::Budget {
                steps: since_event,
                context: format!("replication {replication} stalled"),
            });
        }
    }
    Ok(cycles)
}

/// Runs `replications` independent horizons of length `horizon` and
/// estimates the profit rate and the variance rate from the spread of
/// `π N_t` across replications.
pub fn estimate_profit_statistics(
    cs: &CostedStrategy,
    horizon: f64,
    replications: usize,
    cfg: &SimConfig,
) -> Result<ProfitEstimate> {
    cfg.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain(format!(
            "horizon must be finite and positive, got {horizon}"
        ));
    }
    if replications < 2 {
        return domain(format!("need at least 2 replications, got {replications}"));
    }
    let nominal = step_for(&cs.strategy, cfg);
    let n_steps = (horizon / nominal.h).ceil().max(1.0) as u64;
    let stepper = Stepper::new(horizon / n_steps as f64);
    let short_horizon = horizon < SHORT_HORIZON_CYCLES * expected_cycle_time(&cs.strategy)?;

    let counts = (0..replications)
        .into_par_iter()
        .map(|r| run_horizon(cs, cfg, &stepper, n_steps, r))
        .collect::<Result<Vec<u64>>>()?;

    let profit = cycle_profit(cs);
    let totals: Vec<f64> = counts.iter().map(|&n| profit * n as f64).collect();
    let m = moments(&totals);
    let cycles: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    Ok(ProfitEstimate {
        mean_rate: m.mean / horizon,
        var_rate: m.var / horizon,
        stderr_mean: m.stderr_mean / horizon,
        stderr_var: m.stderr_var / horizon,
        mean_cycles: pairwise_sum(&cycles) / replications as f64,
        horizon,
        replications,
        short_horizon,
    })
}
