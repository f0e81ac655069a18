//! Price-pair loading, spread construction and parameter estimation.
//!
//! The OU fit maximizes the exact Gaussian transition likelihood between
//! consecutive observations, so spacing may be irregular. For fixed `tau`
//! the maximizing `mu` and `sigma^2` are available in closed form; the
//! remaining one-dimensional problem is solved as a root of the score in
//! `tau`.

use std::path::Path;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::ou_model::OUParams;

/// Required CSV header.
pub const CSV_HEADER: [&str; 3] = ["s", "A", "B"];

const MIN_OBS: usize = 3;
const TAU_REL_TOL: f64 = 1e-14;
const MAX_BRACKET_STEPS: usize = 200;
const MAX_BISECTIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct PricePairSeries {
    timestamps: Vec<f64>,
    prices_a: Vec<f64>,
    prices_b: Vec<f64>,
}

impl PricePairSeries {
    pub fn new(timestamps: Vec<f64>, prices_a: Vec<f64>, prices_b: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices_a.len() || timestamps.len() != prices_b.len() {
            return domain(format!(
                "series lengths differ: {} timestamps, {} A prices, {} B prices",
                timestamps.len(),
                prices_a.len(),
                prices_b.len()
            ));
        }
        if timestamps.len() < MIN_OBS {
            return domain(format!(
                "need at least {MIN_OBS} observations, got {}",
                timestamps.len()
            ));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&timestamps) && finite(&prices_a) && finite(&prices_b)) {
            return domain("series contains non-finite values");
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return domain(format!(
                "timestamps must be strictly increasing (observation {})",
                i + 2
            ));
        }
        Ok(Self {
            timestamps,
            prices_a,
            prices_b,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn prices_a(&self) -> &[f64] {
        &self.prices_a
    }

    pub fn prices_b(&self) -> &[f64] {
        &self.prices_b
    }
}

/// Asymptotic standard errors from the observed information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StdErrors {
    pub mu: f64,
    pub tau: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatedParams {
    pub params: OUParams,
    pub eta: f64,
    pub n_obs: usize,
    pub log_likelihood: f64,
    /// `None` when the observed information is not positive definite.
    pub std_errors: Option<StdErrors>,
}

fn parse_cell(record: &csv::StringRecord, idx: usize, line: u64) -> Result<f64> {
    let cell = record.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("expected 3 fields, found {}", record.len()),
    })?;
    let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("column {} is not a number: {cell:?}", CSV_HEADER[idx]),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("column {} is not finite", CSV_HEADER[idx]),
        });
    }
    Ok(value)
}

/// Reads a `s,A,B` file. Errors carry the 1-based line number.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PricePairSeries> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must be s,A,B, found {}", names.join(",")),
        });
    }

    let (mut s, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let t = parse_cell(&record, 0, line)?;
        if let Some(&prev) = s.last() {
            if t <= prev {
                return Err(Error::Parse {
                    line,
                    message: format!("timestamp {t} does not increase (previous {prev})"),
                });
            }
        }
        s.push(t);
        a.push(parse_cell(&record, 1, line)?);
        b.push(parse_cell(&record, 2, line)?);
    }
    PricePairSeries::new(s, a, b)
}

fn transformed(v: &[f64], log_prices: bool, leg: &str) -> Result<Vec<f64>> {
    if !log_prices {
        return Ok(v.to_vec());
    }
    v.iter()
        .enumerate()
        .map(|(i, &p)| {
            if p > 0.0 {
                Ok(p.ln())
            } else {
                domain(format!(
                    "log prices need positive {leg} prices (observation {}: {p})",
                    i + 1
                ))
            }
        })
        .collect()
}

/// `(s_i, A_i - eta B_i)`, or `(s_i, ln A_i - eta ln B_i)` with `log_prices`.
pub fn build_spread(
    series: &PricePairSeries,
    eta: f64,
    log_prices: bool,
) -> Result<Vec<(f64, f64)>> {
    if !eta.is_finite() {
        return domain(format!("eta must be finite, got {eta}"));
    }
    let a = transformed(&series.prices_a, log_prices, "A")?;
    let b = transformed(&series.prices_b, log_prices, "B")?;
    Ok(series
        .timestamps
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(&s, (&a, &b))| (s, a - eta * b))
        .collect())
}

/// Least-squares slope of `A` on `B` (with intercept).
pub fn estimate_eta(series: &PricePairSeries, log_prices: bool) -> Result<f64> {
    let a = transformed(&series.prices_a, log_prices, "A")?;
    let b = transformed(&series.prices_b, log_prices, "B")?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if sbb == 0.0 {
        return Err(Error::Degenerate("B prices have zero variance".into()));
    }
    let sab: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    Ok(sab / sbb)
}

/// Consecutive observation pairs, centered at the sample mean.
struct Transitions {
    dt: Vec<f64>,
    x0: Vec<f64>,
    x1: Vec<f64>,
    center: f64,
}

impl Transitions {
    fn new(spread: &[(f64, f64)]) -> Result<Self> {
        if spread.len() < MIN_OBS {
            return domain(format!(
                "need at least {MIN_OBS} observations, got {}",
                spread.len()
            ));
        }
        if spread.iter().any(|(s, x)| !s.is_finite() || !x.is_finite()) {
            return domain("spread contains non-finite values");
        }
        let n = spread.len() as f64;
        let center = spread.iter().map(|p| p.1).sum::<f64>() / n;
        if spread.iter().all(|p| p.1 == spread[0].1) {
            return Err(Error::Degenerate("spread is constant".into()));
        }
        let mut tr = Self {
            dt: vec![],
            x0: vec![],
            x1: vec![],
            center,
        };
        for (i, w) in spread.windows(2).enumerate() {
            let dt = w[1].0 - w[0].0;
            if !(dt > 0.0) {
                return domain(format!(
                    "timestamps must be strictly increasing (observation {})",
                    i + 2
                ));
            }
            tr.dt.push(dt);
            tr.x0.push(w[0].1 - center);
            tr.x1.push(w[1].1 - center);
        }
        Ok(tr)
    }

    fn len(&self) -> usize {
        self.dt.len()
    }
}

/// Per-transition decay `phi` and normalized variance `q`, with
/// `var = sigma^2 q`.
fn kernel(tau: f64, dt: f64) -> (f64, f64) {
    let phi = (-tau * dt).exp();
    let q = -(-2.0 * tau * dt).exp_m1() / (2.0 * tau);
    (phi, q)
}

/// Closed-form `mu` and `sigma^2` maximizing the likelihood at fixed `tau`.
fn profile(tr: &Transitions, tau: f64) -> (f64, f64) {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..tr.len() {
        let (phi, q) = kernel(tau, tr.dt[i]);
        let z = tr.x1[i] - tr.x0[i] * phi;
        num += z * (1.0 - phi) / q;
        den += (1.0 - phi).powi(2) / q;
    }
    let mu = num / den;
    let mut ss = 0.0;
    for i in 0..tr.len() {
        let (phi, q) = kernel(tau, tr.dt[i]);
        let r = tr.x1[i] - mu - (tr.x0[i] - mu) * phi;
        ss += r * r / q;
    }
    (mu, ss / tr.len() as f64)
}

fn log_likelihood(tr: &Transitions, mu: f64, tau: f64, sigma2: f64) -> f64 {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut ll = 0.0;
    for i in 0..tr.len() {
        let (phi, q) = kernel(tau, tr.dt[i]);
        let v = sigma2 * q;
        let r = tr.x1[i] - mu - (tr.x0[i] - mu) * phi;
        ll -= 0.5 * (ln_2pi + v.ln() + r * r / v);
    }
    ll
}

/// Derivative of the profile likelihood in `tau` (envelope theorem).
fn profile_score(tr: &Transitions, tau: f64) -> f64 {
    let (mu, sigma2) = profile(tr, tau);
    let mut score = 0.0;
    for i in 0..tr.len() {
        let dt = tr.dt[i];
        let (phi, q) = kernel(tau, dt);
        let r = tr.x1[i] - mu - (tr.x0[i] - mu) * phi;
        let dr = (tr.x0[i] - mu) * dt * phi;
        let dq = (dt * phi * phi - q) / tau;
        score -= 0.5 * (dq / q + 2.0 * r * dr / (sigma2 * q) - r * r * dq / (sigma2 * q * q));
    }
    score
}

/// Starting value from the lag-one regression slope at the mean spacing.
fn initial_tau(tr: &Transitions) -> f64 {
    let n = tr.len() as f64;
    let m0 = tr.x0.iter().sum::<f64>() / n;
    let m1 = tr.x1.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for i in 0..tr.len() {
        sxy += (tr.x0[i] - m0) * (tr.x1[i] - m1);
        sxx += (tr.x0[i] - m0).powi(2);
    }
    let mean_dt = tr.dt.iter().sum::<f64>() / n;
    let phi = sxy / sxx;
    if phi > 0.0 && phi < 1.0 {
        -phi.ln() / mean_dt
    } else {
        1.0 / mean_dt
    }
}

fn solve_tau(tr: &Transitions) -> Result<f64> {
    let start = initial_tau(tr);
    let (mut lo, mut hi) = (start, start);
    let mut found = false;
    for _ in 0..MAX_BRACKET_STEPS {
        let (s_lo, s_hi) = (profile_score(tr, lo), profile_score(tr, hi));
        if s_lo > 0.0 && s_hi < 0.0 {
            found = true;
            break;
        }
        if !(s_lo > 0.0) {
            lo /= 2.0;
        }
        if !(s_hi < 0.0) {
            hi *= 2.0;
        }
    }
    if !found {
        return Err(Error::Convergence(format!(
            "no interior likelihood maximum for tau in [{lo}, {hi}] (no detectable mean reversion)"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= TAU_REL_TOL * mid || mid == lo || mid == hi {
            return Ok(mid);
        }
        if profile_score(tr, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence(format!(
        "tau bisection stalled in [{lo}, {hi}]"
    )))
}

/// Observed-information standard errors via a central-difference Hessian in
/// `(mu / sd, ln tau, ln sigma^2)`.
fn std_errors(tr: &Transitions, mu: f64, tau: f64, sigma2: f64) -> Option<StdErrors> {
    let sd = (sigma2 / (2.0 * tau)).sqrt();
    let theta = [mu / sd, tau.ln(), sigma2.ln()];
    let step = [1e-3, 1e-4, 1e-4];
    let f = |t: [f64; 3]| log_likelihood(tr, t[0] * sd, t[1].exp(), t[2].exp());
    let f0 = f(theta);
    let mut h = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let at = |di: f64, dj: f64| {
                let mut t = theta;
                t[i] += di * step[i];
                t[j] += dj * step[j];
                f(t)
            };
            h[i][j] = if i == j {
                (at(1.0, 0.0) - 2.0 * f0 + at(-1.0, 0.0)) / (step[i] * step[i])
            } else {
                (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0))
                    / (4.0 * step[i] * step[j])
            };
            h[j][i] = h[i][j];
        }
    }
    let info = h.map(|row| row.map(|x| -x));
    let cov = invert3(&info)?;
    if (0..3).any(|k| !(cov[k][k] > 0.0)) {
        return None;
    }
    Some(StdErrors {
        mu: sd * cov[0][0].sqrt(),
        tau: tau * cov[1][1].sqrt(),
        sigma2: sigma2 * cov[2][2].sqrt(),
    })
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let cof =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
    if !(det.abs() > 0.0) || !det.is_finite() {
        return None;
    }
    Some(adj.map(|row| row.map(|x| x / det)))
}

/// Maximum-likelihood fit of `(mu, tau, sigma^2)` to `(s, x)` observations.
/// `eta` is recorded in the result unchanged.
pub fn estimate_ou(spread: &[(f64, f64)], eta: f64) -> Result<EstimatedParams> {
    let tr = Transitions::new(spread)?;
    let tau = solve_tau(&tr)?;
    let (mu_c, sigma2) = profile(&tr, tau);
    if !(sigma2 > 0.0) {
        return Err(Error::Degenerate(
            "transitions are fitted exactly (zero residual variance)".into(),
        ));
    }
    let log_likelihood = log_likelihood(&tr, mu_c, tau, sigma2);
    let std_errors = std_errors(&tr, mu_c, tau, sigma2);
    let params = OUParams::new(mu_c + tr.center, tau, sigma2)?;
    Ok(EstimatedParams {
        params,
        eta,
        n_obs: spread.len(),
        log_likelihood,
        std_errors,
    })
}

/// Exact transition log-likelihood of `spread` under `params`.
pub fn ou_log_likelihood(spread: &[(f64, f64)], params: &OUParams) -> Result<f64> {
    let tr = Transitions::new(spread)?;
    Ok(log_likelihood(
        &tr,
        params.mu - tr.center,
        params.tau,
        params.sigma2,
    ))
}
