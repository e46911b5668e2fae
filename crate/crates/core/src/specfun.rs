//! Special functions behind the closed-form marginal likelihoods.
//!
//! Only what the example models need: the exponential integral `E1`,
//! `ln Γ`, `ln B` and generalized log-factorials.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITERATIONS: u64 = 200;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below `x = 1`, modified-Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::domain(
            "exp_integral_e1",
            format!("x = {x} must be > 0"),
        ));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= 1.0 {
        e1_series(x)
    } else {
        e1_continued_fraction(x)
    }
}

// E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k·k!)
fn e1_series(x: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..=MAX_ITERATIONS {
        let k = k as f64;
        term *= -x / k;
        let contribution = term / k;
        sum += contribution;
        if contribution.abs() <= sum.abs() * f64::EPSILON * 0.25 {
            return Ok(-EULER_GAMMA - x.ln() - sum);
        }
    }
    Err(Error::Convergence {
        routine: "exp_integral_e1 series",
        iterations: MAX_ITERATIONS,
    })
}

// E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
fn e1_continued_fraction(x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITERATIONS {
        let i = i as f64;
        let a = -i * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            return Ok(h * (-x).exp());
        }
    }
    Err(Error::Convergence {
        routine: "exp_integral_e1 continued fraction",
        iterations: MAX_ITERATIONS,
    })
}

// Stirling series coefficients B_{2k} / (2k (2k - 1)), k = 1..8.
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

const STIRLING_THRESHOLD: f64 = 10.0;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::domain("ln_gamma", format!("x = {x} must be > 0")));
    }
    Ok(ln_gamma_unchecked(x))
}

/// `ln Γ(x)` without argument validation; callers guarantee `x > 0`.
pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    // Shift upward with Γ(x) = Γ(x + n) / (x (x+1) ... (x+n-1)) until the
    // asymptotic series is accurate to working precision.
    let mut z = x;
    let mut shift = 1.0;
    while z < STIRLING_THRESHOLD {
        shift *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for coef in STIRLING.iter().rev() {
        series = series * inv2 + coef;
    }
    series *= inv;
    // (z - 1/2) ln z - z carried in extended precision, then rounded once.
    let (ln_hi, ln_lo) = ln_split(z);
    let w = z - 0.5;
    let product = w * ln_hi;
    let product_err = w.mul_add(ln_hi, -product);
    let (sum, sum_err) = two_sum(product, -z);
    let tail = sum_err + product_err + w * ln_lo + HALF_LN_2PI + series;
    let stirling = sum + tail;
    if shift == 1.0 {
        stirling
    } else {
        stirling - shift.ln()
    }
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
// ln 2 split so that e * LN2_HI is exact for any binary exponent e.
const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;

/// `ln z` as an unevaluated sum `hi + lo` for positive normal `z`.
fn ln_split(z: f64) -> (f64, f64) {
    let bits = z.to_bits();
    let mut exponent = ((bits >> 52) & 0x7ff) as i64 - 1022;
    let mut mantissa = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1022u64 << 52));
    if mantissa < std::f64::consts::FRAC_1_SQRT_2 {
        mantissa *= 2.0;
        exponent -= 1;
    }
    let e = exponent as f64;
    two_sum(e * LN2_HI, e * LN2_LO + mantissa.ln())
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b)`.
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(
            "ln_beta",
            format!("arguments ({a}, {b}) must both be > 0"),
        ));
    }
    Ok(ln_beta_unchecked(a, b))
}

pub(crate) fn ln_beta_unchecked(a: f64, b: f64) -> f64 {
    ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
}

/// Generalized log-factorial `ln z! = ln Γ(z + 1)`, defined for `z > -1`.
pub fn ln_factorial(z: f64) -> Result<f64> {
    if !(z > -1.0) || z.is_nan() {
        return Err(Error::domain(
            "ln_factorial",
            format!("z = {z} must be > -1"),
        ));
    }
    Ok(ln_gamma_unchecked(z + 1.0))
}

/// `ln C(n, k)` for integers `0 ≤ k ≤ n`.
pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let (n, k) = (n as f64, k as f64);
    ln_gamma_unchecked(n + 1.0) - ln_gamma_unchecked(k + 1.0) - ln_gamma_unchecked(n - k + 1.0)
}
