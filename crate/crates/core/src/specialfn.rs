//! Imaginary error function `erfi(z) = (2/√π) ∫_0^z e^{t²} dt` on the real line.
//!
//! Below [`Z_SWITCH`] the Maclaurin series is summed directly (all terms are
//! positive, so there is no cancellation). Above it the optimally truncated
//! asymptotic series `e^{z²}/(√π z) · Σ (2k-1)!!/(2z²)^k` is used, and the
//! logarithm is formed without ever materialising `e^{z²}`.

use crate::error::{Error, Result};

/// Crossover between the Maclaurin and asymptotic branches.
pub const Z_SWITCH: f64 = 6.0;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
// ln(√π)
const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErfiResult {
    /// `erfi(z)`; `±inf` once `e^{z²}` overflows.
    pub value: f64,
    /// `ln erfi(z)` for `z > 0`; `NaN` for `z <= 0`, where the log is undefined.
    pub log_value: f64,
}

/// Maclaurin series sum `Σ z^{2k+1} / (k! (2k+1))` (without the 2/√π factor).
fn series_sum(z: f64) -> f64 {
    let z2 = z * z;
    let mut power = z; // z^{2k+1}/k!
    let mut sum = z;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        power *= z2 / k;
        let term = power / (2.0 * k + 1.0);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Optimally truncated `Σ (2k-1)!!/(2z²)^k`, starting at 1.
fn asymptotic_correction(z: f64) -> f64 {
    let inv = 1.0 / (2.0 * z * z);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 1.0_f64;
    loop {
        let next = term * (2.0 * k - 1.0) * inv;
        if next >= term || next < 1e-17 * sum {
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    sum
}

/// `ln erfi(z)` for `z > 0`.
pub fn log_erfi(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("ln erfi(z) needs finite z > 0 (got {z})")));
    }
    Ok(log_erfi_positive(z))
}

#[inline]
fn log_erfi_positive(z: f64) -> f64 {
    if z <= Z_SWITCH {
        (FRAC_2_SQRT_PI * series_sum(z)).ln()
    } else {
        z * z - LN_SQRT_PI - z.ln() + asymptotic_correction(z).ln()
    }
}

pub fn erfi(z: f64) -> ErfiResult {
    if z == 0.0 || z.is_nan() {
        return ErfiResult { value: z, log_value: f64::NAN };
    }
    let a = z.abs();
    let value = if a <= Z_SWITCH {
        FRAC_2_SQRT_PI * series_sum(a)
    } else {
        let e = (a * a).exp();
        if e.is_finite() {
            e / (std::f64::consts::PI.sqrt() * a) * asymptotic_correction(a)
        } else {
            f64::INFINITY
        }
    };
    if z > 0.0 {
        ErfiResult { value, log_value: log_erfi_positive(a) }
    } else {
        ErfiResult { value: -value, log_value: f64::NAN }
    }
}

/// `|ln series(z) - ln asymptotic(z)|`, i.e. the relative disagreement of the
/// two evaluation branches at `z > 0`.
pub fn branch_mismatch(z: f64) -> f64 {
    let series = (FRAC_2_SQRT_PI * series_sum(z)).ln();
    let asym = z * z - LN_SQRT_PI - z.ln() + asymptotic_correction(z).ln();
    (series - asym).abs()
}

/// `ln(erfi(a)/erfi(b))` for `a, b > 0`, never forming either value.
pub fn log_erfi_ratio(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "log_erfi_ratio needs positive arguments (got {a}, {b})"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    Ok(log_erfi(a)? - log_erfi(b)?)
}
