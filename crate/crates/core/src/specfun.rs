//! Gamma and digamma functions on the positive real axis.
//!
//! Both functions shift the argument upwards with the functional recurrence
//! until the asymptotic (Stirling / de Moivre) expansion is accurate to
//! machine precision, then undo the shift.

use crate::error::{domain, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `ln(sqrt(pi))`, i.e. `ln Γ(1/2)`.
pub const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// `ln(sqrt(2 pi))`.
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Arguments at or above this threshold go straight to the asymptotic series.
const ASYMPTOTIC_FROM: f64 = 15.0;

// B_{2k} / (2k (2k - 1)) for k = 1..8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

// B_{2k} / (2k) for k = 1..8.
const DIGAMMA_ASYMPTOTIC: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

fn check_arg(x: f64, name: &str) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return domain(format!(
            "{name} requires a finite positive argument, got {x}"
        ));
    }
    Ok(())
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_arg(x, "log_gamma")?;
    let mut shifted = x;
    let mut log_product = 0.0;
    // Accumulate the product in chunks so it cannot overflow.
    let mut product = 1.0;
    while shifted < ASYMPTOTIC_FROM {
        product *= shifted;
        shifted += 1.0;
        if product > 1e250 {
            log_product += product.ln();
            product = 1.0;
        }
    }
    log_product += product.ln();
    Ok(stirling(shifted) - log_product)
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut correction = 0.0;
    for coef in STIRLING.iter().rev() {
        correction = correction * inv2 + coef;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + correction * inv
}

/// Gamma function for `x > 0`; overflows to infinity past `x ≈ 171.6`.
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}

/// Digamma function `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_arg(x, "digamma")?;
    let mut shifted = x;
    let mut offset = 0.0;
    while shifted < ASYMPTOTIC_FROM {
        offset += 1.0 / shifted;
        shifted += 1.0;
    }
    let inv2 = 1.0 / (shifted * shifted);
    let mut tail = 0.0;
    for coef in DIGAMMA_ASYMPTOTIC.iter().rev() {
        tail = tail * inv2 + coef;
    }
    Ok(shifted.ln() - 0.5 / shifted - tail * inv2 - offset)
}

/// `ψ(n + 1/2)` from the closed recurrence
/// `ψ(n + 1/2) = -γ - 2 ln 2 + 2 Σ_{k=1..n} 1/(2k - 1)`.
pub fn digamma_half_integer(n: u32) -> f64 {
    let harmonic_odd: f64 = (1..=n).map(|k| 1.0 / (2.0 * k as f64 - 1.0)).sum();
    -EULER_GAMMA - 2.0 * std::f64::consts::LN_2 + 2.0 * harmonic_odd
}
