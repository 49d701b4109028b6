//! Special functions used by the channel and LLR code.
//!
//! Everything here works in double precision and is written to stay finite
//! over the whole real line: the scaled complementary error function, the
//! `Φ(z) = 1 + √π·z·e^{z²}·erfc(−z)` helper used by the Rayleigh LLR, scaled
//! modified Bessel functions for Rician fading, and a stable `log₂(1+e^{−l})`.

use std::f64::consts::{LN_2, PI};

pub use libm::erfc;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Crossover above which the continued fraction is used for `erfcx`.
const ERFCX_CF_START: f64 = 4.0;
const ERFCX_CF_TERMS: usize = 160;

/// Tail of Laplace's continued fraction for `erfcx`.
///
/// Returns `g` with `√π·erfcx(u) = 1 / (u + 0.5 / g)`, i.e.
/// `g = u + 1/(u + 1.5/(u + 2/(u + ...)))`. Only valid for `u ≥ 2` or so.
fn erfcx_cf_tail(u: f64) -> f64 {
    let mut t = u;
    for n in (2..=ERFCX_CF_TERMS).rev() {
        t = u + (n as f64 * 0.5) / t;
    }
    t
}

/// Scaled complementary error function `e^{x²}·erfc(x)`.
///
/// Finite for every `x` above roughly −26.6, where `2e^{x²}` overflows.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        // erfc(x) = 2 − erfc(−x)
        let e = (x * x).exp();
        return 2.0 * e - erfcx(-x);
    }
    if x < ERFCX_CF_START {
        (x * x).exp() * erfc(x)
    } else {
        1.0 / (SQRT_PI * (x + 0.5 / erfcx_cf_tail(x)))
    }
}

/// `Φ(−u)` for `u ≥ 0`, which lies in `(0, 1]`.
///
/// `Φ(−u) = 1 − √π·u·erfcx(u)`; for large `u` the subtraction cancels, so the
/// continued-fraction form `K/(u+K)` with `K = 0.5/g` is used instead.
fn phi_negative(u: f64) -> f64 {
    debug_assert!(u >= 0.0);
    if u < ERFCX_CF_START {
        1.0 - SQRT_PI * u * erfcx(u)
    } else {
        let k = 0.5 / erfcx_cf_tail(u);
        k / (u + k)
    }
}

/// Natural log of `Φ(z) = 1 + √π·z·e^{z²}·erfc(−z)`.
///
/// For `z ≥ 0` the identity `Φ(z) = 2√π·z·e^{z²} + Φ(−z)` is used so the
/// exponential never has to be formed explicitly.
pub fn ln_phi(z: f64) -> f64 {
    if z < 0.0 {
        phi_negative(-z).ln()
    } else if z == 0.0 {
        0.0
    } else {
        let tail = phi_negative(z) * (-z * z).exp();
        z * z + (2.0 * SQRT_PI * z + tail).ln()
    }
}

/// `log₂(1 + e^{−l})`, accurate for both signs and large magnitudes.
pub fn log2_one_plus_exp_neg(l: f64) -> f64 {
    if l >= 0.0 {
        (-l).exp().ln_1p() / LN_2
    } else {
        (-l + l.exp().ln_1p()) / LN_2
    }
}

/// Natural-log version of [`log2_one_plus_exp_neg`].
pub fn ln_one_plus_exp_neg(l: f64) -> f64 {
    log2_one_plus_exp_neg(l) * LN_2
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 − Φ_N(x)`, accurate in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Gaussian density with the given mean and standard deviation.
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

const BESSEL_SERIES_LIMIT: f64 = 20.0;

/// Exponentially scaled modified Bessel function `e^{−x}·I₀(x)` for `x ≥ 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    bessel_ie(0, x.abs())
}

/// Exponentially scaled modified Bessel function `e^{−x}·I₁(x)` for `x ≥ 0`.
pub fn bessel_i1e(x: f64) -> f64 {
    let v = bessel_ie(1, x.abs());
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn bessel_ie(order: u32, x: f64) -> f64 {
    if x < BESSEL_SERIES_LIMIT {
        // I_ν(x) = Σ (x/2)^{2k+ν} / (k! (k+ν)!), all terms positive.
        let half = 0.5 * x;
        let q = half * half;
        let mut term = if order == 0 { 1.0 } else { half };
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + order as f64));
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic expansion; for x ≥ 20 the smallest term is below 1e-17.
        let mu = 4.0 * (order * order) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}
