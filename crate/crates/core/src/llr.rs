//! LLR rules for the fading channel and the densities they induce.
//!
//! Three rules map a channel output to a decoder message:
//!
//! * ideal side information, `l = 2·y·r/σ_n²` (the gain is known per bit);
//! * the true LLR without side information, `log p(y|+1)/p(y|−1)` with the
//!   gain averaged out;
//! * the linear rule `l̂ = α·y`, with `α = 2·r̂/σ̂_n²` for fixed receiver
//!   estimates of the gain and noise variance.
//!
//! All values leaving this module are saturated to `±LLR_CLIP`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPoint, ChannelSample, FadingDistribution, Symbol};
use crate::error::{Error, NumericalError, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::{erfc, ln_phi, normal_cdf, normal_pdf, normal_sf};

/// Saturation level for every LLR produced here.
pub const LLR_CLIP: f64 = 50.0;

pub fn saturate(l: f64) -> f64 {
    l.clamp(-LLR_CLIP, LLR_CLIP)
}

/// Which rule turns `y` into a decoder message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlrModel {
    IdealSi,
    TrueNoSi,
    Linear { alpha: f64 },
}

impl LlrModel {
    pub fn linear(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(LlrModel::Linear { alpha })
        } else {
            Err(Error::domain(format!("linear LLR coefficient must be positive, got {alpha}")))
        }
    }

    /// Linear rule from receiver estimates: `α = 2·r̂/σ̂_n²`.
    pub fn from_estimates(r_hat: f64, sigma_hat: f64) -> Result<Self> {
        if !(sigma_hat > 0.0) {
            return Err(Error::domain("noise estimate must be positive"));
        }
        Self::linear(2.0 * r_hat / (sigma_hat * sigma_hat))
    }

    /// The conventional baseline: `r̂ = E[r]` and `σ̂_n = σ_n`.
    pub fn mean_gain(point: &ChannelPoint) -> Result<Self> {
        Self::from_estimates(point.fading().moments().mean, point.sigma_n())
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            LlrModel::Linear { alpha } => Some(*alpha),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            LlrModel::IdealSi => "ideal-si".into(),
            LlrModel::TrueNoSi => "true-no-si".into(),
            LlrModel::Linear { alpha } => format!("linear({alpha})"),
        }
    }
}

/// `l = (2/σ_n²)·y·r`.
pub fn llr_ideal_si(y: f64, r: f64, sigma_n: f64) -> f64 {
    saturate(2.0 * y * r / (sigma_n * sigma_n))
}

/// `l̂ = α·y`.
pub fn llr_linear(y: f64, alpha: f64) -> f64 {
    saturate(alpha * y)
}

/// Argument scaling of the closed-form Rayleigh LLR: `z = y / √(2σ²(1+2σ²))`.
fn rayleigh_z(y: f64, sigma_n: f64) -> f64 {
    let s2 = sigma_n * sigma_n;
    y / (2.0 * s2 * (1.0 + 2.0 * s2)).sqrt()
}

/// Exact LLR without side information on normalized Rayleigh fading,
/// `log Φ(z)/Φ(−z)`, evaluated in log form so it never overflows.
/// Odd in `y` bit for bit.
pub fn llr_true_rayleigh(y: f64, sigma_n: f64) -> f64 {
    let z = rayleigh_z(y.abs(), sigma_n);
    let l = ln_phi(z) - ln_phi(-z);
    saturate(if y < 0.0 { -l } else { l })
}

/// Exact LLR without side information for any fading law with a density,
/// from the log of the two gain-averaged likelihoods.
pub fn llr_true_generic(y: f64, point: &ChannelPoint) -> Result<f64> {
    if !point.fading().has_density() {
        return Err(Error::domain("true no-SI LLR by quadrature needs a fading density"));
    }
    let plus = ln_output_density_quadrature(point, y, Symbol::Plus)?;
    let minus = ln_output_density_quadrature(point, y, Symbol::Minus)?;
    Ok(saturate(plus - minus))
}

/// True no-SI LLR, closed form where one exists.
pub fn llr_true(y: f64, point: &ChannelPoint) -> Result<f64> {
    match point.fading() {
        FadingDistribution::RayleighNormalized => Ok(llr_true_rayleigh(y, point.sigma_n())),
        FadingDistribution::Constant { gain } => Ok(llr_ideal_si(y, *gain, point.sigma_n())),
        _ => llr_true_generic(y, point),
    }
}

/// Applies `model` to one channel realization.
pub fn llr_for_sample(sample: &ChannelSample, point: &ChannelPoint, model: &LlrModel) -> Result<f64> {
    match model {
        LlrModel::IdealSi => Ok(llr_ideal_si(sample.y, sample.r, point.sigma_n())),
        LlrModel::TrueNoSi => llr_true(sample.y, point),
        LlrModel::Linear { alpha } => Ok(llr_linear(sample.y, *alpha)),
    }
}

/// `ln p(y | x)` with the gain averaged out.
pub fn ln_output_density(point: &ChannelPoint, y: f64, x: Symbol) -> Result<f64> {
    let s = point.sigma_n();
    let yy = y * x.value();
    match point.fading() {
        FadingDistribution::RayleighNormalized => {
            // p(y|+1) = 2Δ²/(√(2π)σ) · e^{−y²/2σ²} · Φ(z)
            let s2 = s * s;
            let delta2 = s2 / (2.0 * s2 + 1.0);
            Ok((2.0 * delta2 / ((2.0 * PI).sqrt() * s)).ln() - yy * yy / (2.0 * s2) + ln_phi(rayleigh_z(yy, s)))
        }
        FadingDistribution::Constant { gain } => {
            let d = (yy - gain) / s;
            Ok(-0.5 * d * d - (s * (2.0 * PI).sqrt()).ln())
        }
        _ => ln_output_density_quadrature(point, y, x),
    }
}

/// `p(y | x)`.
pub fn output_density(point: &ChannelPoint, y: f64, x: Symbol) -> Result<f64> {
    ln_output_density(point, y, x).map(f64::exp)
}

/// `ln ∫ p(r)·N(y; x·r, σ²) dr` by adaptive quadrature, with the Gaussian
/// factor scaled by its maximum over the support to avoid underflow.
pub fn ln_output_density_quadrature(point: &ChannelPoint, y: f64, x: Symbol) -> Result<f64> {
    let fading = point.fading();
    if !fading.has_density() {
        return Err(Error::domain("output density by quadrature needs a fading density"));
    }
    let s = point.sigma_n();
    let yy = y * x.value();
    // past the nominal support when y is far out, so the truncated tail does not bias the result
    let top = fading.support_max().max(yy + 8.0 * s);
    let peak = yy.clamp(0.0, top);
    let shift = (yy - peak) * (yy - peak) / (2.0 * s * s);
    let mut pts = fading.breakpoints();
    pts.push(top);
    for p in [peak - 4.0 * s, peak - s, peak, peak + s, peak + 4.0 * s] {
        if p > 0.0 && p < top {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let q = integrate_with_breaks(
        |r| {
            let d = yy - r;
            fading.density_unchecked(r) * (shift - d * d / (2.0 * s * s)).exp()
        },
        &pts,
        QuadOptions::with_tol(0.0, 1e-11),
    )?;
    if !(q.value > 0.0) {
        return Err(NumericalError::NonFinite {
            context: "log output density",
            value: q.value,
        }
        .into());
    }
    Ok(q.value.ln() - shift - (s * (2.0 * PI).sqrt()).ln())
}

/// Density of `l̂` conditioned on a gain: Gaussian with mean `α·r` and
/// standard deviation `α·σ_n`.
pub fn linear_llr_conditional_pdf(l_hat: f64, r: f64, sigma_n: f64, alpha: f64) -> f64 {
    normal_pdf(l_hat, alpha * r, alpha * sigma_n)
}

/// Density of the linear LLR `l̂ = α·y` given `x = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLlrPdf {
    point: ChannelPoint,
    alpha: f64,
}

impl LinearLlrPdf {
    pub fn new(point: ChannelPoint, alpha: f64) -> Result<Self> {
        LlrModel::linear(alpha)?;
        Ok(Self { point, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn point(&self) -> &ChannelPoint {
        &self.point
    }

    /// `Δ = √(σ_n²/(2σ_n²+1))`, defined for normalized Rayleigh fading only.
    pub fn delta(&self) -> Option<f64> {
        match self.point.fading() {
            FadingDistribution::RayleighNormalized => {
                let s2 = self.point.sigma_n().powi(2);
                Some((s2 / (2.0 * s2 + 1.0)).sqrt())
            }
            _ => None,
        }
    }

    /// `p(l̂)`: closed form on Rayleigh, Gaussian for a constant gain,
    /// averaged conditional Gaussian otherwise.
    pub fn density(&self, l_hat: f64) -> Result<f64> {
        match self.point.fading() {
            FadingDistribution::RayleighNormalized => Ok(self.density_rayleigh_closed_form(l_hat)),
            FadingDistribution::Constant { gain } => Ok(linear_llr_conditional_pdf(
                l_hat,
                *gain,
                self.point.sigma_n(),
                self.alpha,
            )),
            _ => self.density_by_averaging(l_hat),
        }
    }

    fn density_rayleigh_closed_form(&self, l: f64) -> f64 {
        let a = self.alpha;
        let s = self.point.sigma_n();
        let d = self.delta().expect("rayleigh");
        let d2 = d * d;
        let s2 = s * s;
        let pre = 2.0 * d2 / (a * s * (2.0 * PI).sqrt());
        let outer = (-d2 * l * l / (a * a * s2)).exp();
        let first = (-d2 * l * l / (2.0 * a * a * s2 * s2)).exp();
        let second = d * (2.0 * PI).sqrt() / (2.0 * a * s2) * l * erfc(-d * l / (a * s2 * SQRT_2));
        pre * outer * (first + second)
    }

    /// Averages the conditional Gaussian over the gain density by quadrature.
    pub fn density_by_averaging(&self, l_hat: f64) -> Result<f64> {
        let fading = self.point.fading();
        if !fading.has_density() {
            return Err(Error::domain("averaging needs a fading density"));
        }
        let s = self.point.sigma_n();
        let a = self.alpha;
        let y = l_hat / a;
        let top = fading.support_max().max(y + 8.0 * s);
        let mut pts = fading.breakpoints();
        pts.push(top);
        for p in [y - 4.0 * s, y, y + 4.0 * s] {
            if p > 0.0 && p < top {
                pts.push(p);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let q = integrate_with_breaks(
            |r| fading.density_unchecked(r) * linear_llr_conditional_pdf(l_hat, r, s, a),
            &pts,
            QuadOptions::with_tol(1e-300, 1e-12),
        )?;
        Ok(q.value)
    }
}

/// Distribution function of the channel LLR under `model` given `x = +1`,
/// returned as `(P(L ≤ t), P(L > t))` with each side computed directly so
/// both tails keep their relative accuracy.
pub fn llr_cdf_pair(point: &ChannelPoint, model: &LlrModel, t: f64) -> Result<(f64, f64)> {
    match model {
        LlrModel::Linear { alpha } => output_cdf_pair(point, t / alpha),
        LlrModel::TrueNoSi => {
            if t <= -LLR_CLIP {
                return Ok((0.0, 1.0));
            }
            if t >= LLR_CLIP {
                return Ok((1.0, 0.0));
            }
            let y = invert_true_llr(point, t)?;
            output_cdf_pair(point, y)
        }
        LlrModel::IdealSi => ideal_si_cdf_pair(point, t),
    }
}

/// `(P(y ≤ t), P(y > t))` for `y = r + n`.
pub fn output_cdf_pair(point: &ChannelPoint, t: f64) -> Result<(f64, f64)> {
    let s = point.sigma_n();
    let fading = point.fading();
    if let FadingDistribution::Constant { gain } = fading {
        let z = (t - gain) / s;
        return Ok((normal_cdf(z), normal_sf(z)));
    }
    let mut pts = fading.breakpoints();
    let top = fading.support_max();
    for p in [t - 4.0 * s, t, t + 4.0 * s] {
        if p > 0.0 && p < top {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let opts = QuadOptions::with_tol(1e-16, 1e-11);
    let lower = integrate_with_breaks(|r| fading.density_unchecked(r) * normal_cdf((t - r) / s), &pts, opts)?;
    let upper = integrate_with_breaks(|r| fading.density_unchecked(r) * normal_sf((t - r) / s), &pts, opts)?;
    Ok((lower.value.clamp(0.0, 1.0), upper.value.clamp(0.0, 1.0)))
}

fn ideal_si_cdf_pair(point: &ChannelPoint, t: f64) -> Result<(f64, f64)> {
    let s = point.sigma_n();
    let s2 = s * s;
    // Given r: l ~ N(2r²/σ², (2r/σ)²).
    let z = |r: f64| {
        if r <= 0.0 {
            if t >= 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (t - 2.0 * r * r / s2) * s / (2.0 * r)
        }
    };
    let fading = point.fading();
    if let FadingDistribution::Constant { gain } = fading {
        let zz = z(*gain);
        return Ok((normal_cdf(zz), normal_sf(zz)));
    }
    let top = fading.support_max();
    let mut pts = fading.breakpoints();
    // where the conditional mean crosses t, and where the Gaussian sharpens near r = 0
    let cross = (t.max(0.0) * s2 / 2.0).sqrt();
    for p in [cross, 0.5 * t.abs() * s, 2.0 * t.abs() * s] {
        if p > 0.0 && p < top {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let opts = QuadOptions::with_tol(1e-16, 1e-11);
    let lower = integrate_with_breaks(|r| fading.density_unchecked(r) * normal_cdf(z(r)), &pts, opts)?;
    let upper = integrate_with_breaks(|r| fading.density_unchecked(r) * normal_sf(z(r)), &pts, opts)?;
    Ok((lower.value.clamp(0.0, 1.0), upper.value.clamp(0.0, 1.0)))
}

/// Solves `llr_true(y) = t` by bisection; the true LLR is increasing in `y`.
fn invert_true_llr(point: &ChannelPoint, t: f64) -> Result<f64> {
    let mut lo = -1.0;
    let mut hi = 1.0;
    while llr_true(lo, point)? > t {
        lo *= 2.0;
    }
    while llr_true(hi, point)? < t {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if llr_true(mid, point)? < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    #[test]
    fn ideal_si_examples() {
        for s in [0.3, 0.7, 1.9] {
            assert!((llr_ideal_si(s * s, 1.0, s) - 2.0).abs() < 1e-14);
        }
        assert_eq!(llr_ideal_si(0.0, 0.5, 0.7), 0.0);
        // 2·0.8862/0.7436² by hand: 1.7724 / 0.55294096 = 3.20540...
        assert!((llr_ideal_si(1.0, 0.8862, 0.7436) - 3.2054).abs() < 1e-3);
    }

    #[test]
    fn linear_examples() {
        assert_eq!(llr_linear(0.0, 3.1), 0.0);
        assert!((llr_linear(1.0, 2.9634) - 2.9634).abs() < 1e-15);
        let baseline = LlrModel::from_estimates(0.8862, 0.7436).unwrap();
        assert!((llr_linear(1.0, baseline.alpha().unwrap()) - 3.2054).abs() < 1e-3);
        assert!(LlrModel::linear(0.0).is_err());
        assert!(LlrModel::linear(-1.0).is_err());
    }

    #[test]
    fn true_rayleigh_is_odd_and_zero_at_origin() {
        assert_eq!(llr_true_rayleigh(0.0, 0.7), 0.0);
        for y in [0.01, 0.5, 3.0, 11.0, 400.0] {
            assert_eq!(llr_true_rayleigh(-y, 0.7436), -llr_true_rayleigh(y, 0.7436));
        }
        assert_eq!(llr_true_rayleigh(1e6, 0.5), LLR_CLIP);
    }

    #[test]
    fn true_generic_matches_closed_form_at_one_point() {
        let p = ChannelPoint::rayleigh(0.7436).unwrap();
        let a = llr_true_rayleigh(1.0, 0.7436);
        let b = llr_true_generic(1.0, &p).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        assert!(llr_true_generic(0.0, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn generic_rejects_constant() {
        let p = ChannelPoint::new(0.5, FadingDistribution::constant(1.0).unwrap()).unwrap();
        assert!(llr_true_generic(0.3, &p).is_err());
    }

    #[test]
    fn closed_form_output_density_matches_quadrature() {
        for s in [0.4, 0.7436, 1.3] {
            let p = ChannelPoint::rayleigh(s).unwrap();
            for y in [-4.0, -1.0, 0.0, 0.3, 2.0, 6.0] {
                for x in [Symbol::Plus, Symbol::Minus] {
                    let a = ln_output_density(&p, y, x).unwrap();
                    let b = ln_output_density_quadrature(&p, y, x).unwrap();
                    assert!((a - b).abs() < 1e-9, "σ={s} y={y}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn conditional_linear_pdf_has_unit_mass() {
        let q = integrate(
            |l| linear_llr_conditional_pdf(l, 0.8, 0.7, 2.5),
            -30.0,
            30.0,
            QuadOptions::with_tol(1e-14, 1e-13),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn delta_formula() {
        let pdf = LinearLlrPdf::new(ChannelPoint::rayleigh(0.7).unwrap(), 2.0).unwrap();
        let want = (0.49f64 / 1.98).sqrt();
        assert!((pdf.delta().unwrap() - want).abs() < 1e-15);
        let rice = LinearLlrPdf::new(
            ChannelPoint::new(0.7, FadingDistribution::rician(2.0).unwrap()).unwrap(),
            2.0,
        )
        .unwrap();
        assert!(rice.delta().is_none());
    }

    #[test]
    fn cdf_pairs_sum_to_one() {
        let p = ChannelPoint::rayleigh(0.7436).unwrap();
        for model in [LlrModel::IdealSi, LlrModel::TrueNoSi, LlrModel::Linear { alpha: 2.4 }] {
            for t in [-20.0, -1.0, 0.0, 0.5, 7.0] {
                let (lo, hi) = llr_cdf_pair(&p, &model, t).unwrap();
                assert!((lo + hi - 1.0).abs() < 1e-10, "{model:?} t={t}: {lo}+{hi}");
            }
        }
    }
}
