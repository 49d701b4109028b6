//! Capacity functional of an LLR rule and its maximization over linear rules.
//!
//! For a rule `y ↦ l` the functional is `1 − E[log₂(1 + e^{−l})]` under
//! `x = +1`. It equals the channel capacity when `l` is the true LLR; for a
//! linear rule it is the rate predictor `Ĉ` maximized by [`optimize_r_hat`].

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelPoint, FadingDistribution, Symbol};
use crate::error::{NumericalError, Result};
use crate::llr::{llr_true, ln_output_density, LlrModel};
use crate::optimize::golden_section_max;
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::{log2_one_plus_exp_neg, normal_pdf};

/// Floor of the denominator in the consistency ratio.
pub const CONSISTENCY_EPS: f64 = 1e-12;

const GRID_POINTS: usize = 400;
const R_HAT_MIN: f64 = 1e-4;
const R_HAT_TOL: f64 = 1e-6;

fn quad_opts() -> QuadOptions {
    QuadOptions::with_tol(1e-10, 1e-11)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Bits per channel use.
    pub value: f64,
    pub llr_model: LlrModel,
    pub point: ChannelPoint,
    pub consistency_deviation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MclaSolution {
    pub r_hat_opt: f64,
    pub alpha_opt: f64,
    pub c_hat_max: f64,
    pub sigma_n: f64,
}

/// Capacity functional of `model` at `point`, with its consistency deviation.
pub fn capacity_of_model(point: &ChannelPoint, model: &LlrModel) -> Result<CapacityResult> {
    let value = capacity_value(point, model)?;
    let consistency_deviation = consistency_deviation(point, model)?;
    Ok(CapacityResult {
        value,
        llr_model: *model,
        point: point.clone(),
        consistency_deviation,
    })
}

/// The functional alone.
pub fn capacity_value(point: &ChannelPoint, model: &LlrModel) -> Result<f64> {
    let penalty = match model {
        LlrModel::Linear { alpha } => {
            let a = *alpha;
            expect_over_output(point, |y| log2_one_plus_exp_neg(a * y))?
        }
        LlrModel::TrueNoSi => {
            if let FadingDistribution::Constant { gain } = point.fading() {
                let a = 2.0 * gain / point.sigma_n().powi(2);
                expect_over_output(point, |y| log2_one_plus_exp_neg(a * y))?
            } else {
                let mut err = None;
                let v = expect_over_output(point, |y| match llr_true(y, point) {
                    Ok(l) => log2_one_plus_exp_neg(l),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
                v
            }
        }
        LlrModel::IdealSi => ideal_si_penalty(point)?,
    };
    Ok((1.0 - penalty).clamp(0.0, 1.0))
}

/// `Ĉ` for the linear rule `l̂ = α·y`.
pub fn c_hat(point: &ChannelPoint, alpha: f64) -> Result<f64> {
    capacity_value(point, &LlrModel::linear(alpha)?)
}

/// `E[g(y) | x = +1]` over `[−span, span]`.
fn expect_over_output<G: FnMut(f64) -> f64>(point: &ChannelPoint, mut g: G) -> Result<f64> {
    let span = point.output_span();
    let s = point.sigma_n();
    let mut pts = vec![-span, 0.0, span];
    let fading = point.fading();
    if let FadingDistribution::Constant { gain } = fading {
        pts.extend([gain - 4.0 * s, *gain, gain + 4.0 * s]);
    } else {
        pts.extend([s, fading.moments().mean]);
    }
    pts.retain(|p| p.abs() <= span);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut err = None;
    let q = integrate_with_breaks(
        |y| match ln_output_density(point, y, Symbol::Plus) {
            Ok(lp) => lp.exp() * g(y),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &pts,
        quad_opts(),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(q.value)
}

/// `E_r E_n[log₂(1 + e^{−2r(r+n)/σ²})]` by nested quadrature.
fn ideal_si_penalty(point: &ChannelPoint) -> Result<f64> {
    let s = point.sigma_n();
    let s2 = s * s;
    let inner = |r: f64| -> std::result::Result<f64, NumericalError> {
        if r == 0.0 {
            return Ok(1.0);
        }
        let q = integrate_with_breaks(
            |n| normal_pdf(n, 0.0, s) * log2_one_plus_exp_neg(2.0 * r * (r + n) / s2),
            &[-9.0 * s, -r, 9.0 * s],
            QuadOptions::with_tol(1e-12, 1e-11),
        )?;
        Ok(q.value)
    };
    let fading = point.fading();
    if let FadingDistribution::Constant { gain } = fading {
        return Ok(inner(*gain)?);
    }
    let mut err = None;
    let q = integrate_with_breaks(
        |r| match inner(r) {
            Ok(v) => fading.density_unchecked(r) * v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &fading.breakpoints(),
        quad_opts(),
    )?;
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(q.value)
}

/// Largest violation of `p(−l) = e^{−l}·p(l)` over a grid of `l ≥ 0`,
/// relative to `max(p(l), ε)`.
///
/// For rules that are odd increasing maps of `y` the comparison is done in
/// the `y` domain, where the Jacobian of the map cancels from both sides.
pub fn consistency_deviation(point: &ChannelPoint, model: &LlrModel) -> Result<f64> {
    if let FadingDistribution::Constant { gain } = point.fading() {
        // l is Gaussian with mean a·r0 and sd a·σ; exact expression.
        let a = match model {
            LlrModel::Linear { alpha } => *alpha,
            _ => 2.0 * gain / point.sigma_n().powi(2),
        };
        return Ok(grid_max(GRID_POINTS, a * point.output_span(), |l| {
            let p = normal_pdf(l, a * gain, a * point.sigma_n());
            let m = normal_pdf(-l, a * gain, a * point.sigma_n());
            (m - (-l).exp() * p).abs() / p.max(CONSISTENCY_EPS)
        }));
    }
    match model {
        LlrModel::IdealSi => ideal_si_consistency(point),
        LlrModel::Linear { alpha } => {
            let a = *alpha;
            y_domain_consistency(point, |y| Ok(a * y), |_| Ok(a))
        }
        LlrModel::TrueNoSi => y_domain_consistency(
            point,
            |y| llr_true(y, point),
            |y| {
                let h = 1e-5 * (1.0 + y.abs());
                Ok((llr_true(y + h, point)? - llr_true(y - h, point)?) / (2.0 * h))
            },
        ),
    }
}

fn grid_max<F: FnMut(f64) -> f64>(n: usize, top: f64, mut f: F) -> f64 {
    (0..=n)
        .map(|i| f(top * i as f64 / n as f64))
        .fold(0.0, f64::max)
}

fn y_domain_consistency<L, D>(point: &ChannelPoint, map: L, slope: D) -> Result<f64>
where
    L: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let span = point.output_span();
    let mut worst: f64 = 0.0;
    for i in 0..=GRID_POINTS {
        let y = span * i as f64 / GRID_POINTS as f64;
        let l = map(y)?;
        if l.abs() >= crate::llr::LLR_CLIP {
            break;
        }
        let p = ln_output_density(point, y, Symbol::Plus)?.exp();
        let m = ln_output_density(point, -y, Symbol::Plus)?.exp();
        let d = slope(y)?;
        let dev = (m - (-l).exp() * p).abs() / p.max(CONSISTENCY_EPS * d);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Density of the ideal-SI LLR: mixture over `r` of `N(2r²/σ², (2r/σ)²)`.
pub fn ideal_si_llr_density(point: &ChannelPoint, l: f64) -> Result<f64> {
    let s = point.sigma_n();
    let s2 = s * s;
    let fading = point.fading();
    if let FadingDistribution::Constant { gain } = fading {
        return Ok(normal_pdf(l, 2.0 * gain * gain / s2, 2.0 * gain / s));
    }
    let mut pts = fading.breakpoints();
    let top = fading.support_max();
    let cross = (l.abs() * s2 / 2.0).sqrt();
    for p in [cross, 0.5 * cross, 2.0 * cross] {
        if p > 0.0 && p < top {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let q = integrate_with_breaks(
        |r| {
            if r <= 0.0 {
                0.0
            } else {
                fading.density_unchecked(r) * normal_pdf(l, 2.0 * r * r / s2, 2.0 * r / s)
            }
        },
        &pts,
        QuadOptions::with_tol(1e-300, 1e-11),
    )?;
    Ok(q.value)
}

fn ideal_si_consistency(point: &ChannelPoint) -> Result<f64> {
    let top = 0.8 * crate::llr::LLR_CLIP;
    let mut worst: f64 = 0.0;
    for i in 0..=GRID_POINTS {
        let l = top * i as f64 / GRID_POINTS as f64;
        let p = ideal_si_llr_density(point, l)?;
        let m = ideal_si_llr_density(point, -l)?;
        worst = worst.max((m - (-l).exp() * p).abs() / p.max(CONSISTENCY_EPS));
    }
    Ok(worst)
}

/// Maximizes `Ĉ` over `r̂` with `σ̂_n = σ_n`.
///
/// Golden-section search on `[1e-4, 10·E[r]]`. If the maximizer lands on the
/// upper edge the bracket is widened tenfold once before giving up.
pub fn optimize_r_hat(point: &ChannelPoint) -> Result<MclaSolution> {
    let s2 = point.sigma_n().powi(2);
    let objective = |r_hat: f64| c_hat(point, 2.0 * r_hat / s2);
    let mut hi = 10.0 * point.fading().moments().mean;
    for attempt in 0..2 {
        let m = golden_section_max(objective, R_HAT_MIN, hi, R_HAT_TOL)?;
        if hi - m.x > 2.0 * R_HAT_TOL && m.x - R_HAT_MIN > 2.0 * R_HAT_TOL {
            return Ok(MclaSolution {
                r_hat_opt: m.x,
                alpha_opt: 2.0 * m.x / s2,
                c_hat_max: m.value,
                sigma_n: point.sigma_n(),
            });
        }
        if attempt == 0 && m.x - R_HAT_MIN <= 2.0 * R_HAT_TOL {
            return Err(NumericalError::NotBracketed {
                lo: R_HAT_MIN,
                hi,
                at: m.x,
            }
            .into());
        }
        if attempt == 1 {
            return Err(NumericalError::NotBracketed {
                lo: R_HAT_MIN,
                hi,
                at: m.x,
            }
            .into());
        }
        hi *= 10.0;
    }
    unreachable!()
}

/// Memo of `α_opt` keyed by `(σ_n, fading)`.
#[derive(Debug, Default)]
pub struct AlphaOptCache {
    map: RwLock<HashMap<(u64, u64), f64>>,
}

impl AlphaOptCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&self, sigma_n: f64, fading: &FadingDistribution) -> Result<f64> {
        let key = (sigma_n.to_bits(), fading.cache_key());
        if let Some(a) = self.map.read().expect("alpha cache poisoned").get(&key) {
            return Ok(*a);
        }
        let point = ChannelPoint::new(sigma_n, fading.clone())?;
        let alpha = optimize_r_hat(&point)?.alpha_opt;
        self.map.write().expect("alpha cache poisoned").insert(key, alpha);
        Ok(alpha)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("alpha cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn global_cache() -> &'static AlphaOptCache {
    static CACHE: OnceLock<AlphaOptCache> = OnceLock::new();
    CACHE.get_or_init(AlphaOptCache::new)
}

/// `α_opt(σ_n) = 2·r̂_opt/σ_n²`, memoized process-wide.
pub fn alpha_opt(sigma_n: f64, fading: &FadingDistribution) -> Result<f64> {
    global_cache().get_or_compute(sigma_n, fading)
}

/// `E_b/N_0` in dB for unit symbol energy and `E[r²] = 1`.
pub fn ebn0_from_sigma(sigma_n: f64, rate: f64) -> f64 {
    10.0 * (1.0 / (2.0 * rate * sigma_n * sigma_n)).log10()
}

/// Inverse of [`ebn0_from_sigma`].
pub fn sigma_from_ebn0(ebn0_db: f64, rate: f64) -> f64 {
    (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt()
}

/// Second differences and local maxima of `Ĉ` over an increasing `r̂` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityAudit {
    pub values: Vec<f64>,
    pub max_second_difference: f64,
    pub local_maxima: usize,
}

/// Tabulates `Ĉ(r̂)` and reports the largest second difference and the
/// number of strict interior local maxima (plateaus within `plateau` count once).
pub fn concavity_audit(point: &ChannelPoint, r_hats: &[f64], plateau: f64) -> Result<ConcavityAudit> {
    let s2 = point.sigma_n().powi(2);
    let values = r_hats
        .iter()
        .map(|&r| c_hat(point, 2.0 * r / s2))
        .collect::<Result<Vec<_>>>()?;
    let mut max_second_difference = f64::NEG_INFINITY;
    for w in values.windows(3) {
        max_second_difference = max_second_difference.max(w[0] - 2.0 * w[1] + w[2]);
    }
    // count sign changes from rising to falling, ignoring steps within the plateau
    let mut local_maxima = 0;
    let mut rising = None;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= plateau {
            continue;
        }
        let up = d > 0.0;
        if rising == Some(true) && !up {
            local_maxima += 1;
        }
        rising = Some(up);
    }
    if rising == Some(true) || local_maxima == 0 {
        // maximum sits at an end of the grid
        local_maxima = local_maxima.max(1);
    }
    Ok(ConcavityAudit {
        values,
        max_second_difference,
        local_maxima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_alpha_gives_zero() {
        let p = ChannelPoint::rayleigh(0.7436).unwrap();
        assert!(c_hat(&p, 1e-9).unwrap().abs() < 1e-6);
    }

    #[test]
    fn ebn0_examples() {
        assert!((ebn0_from_sigma(0.7274, 0.5) - 2.76).abs() < 0.01);
        assert!((ebn0_from_sigma(0.6442, 0.5) - 3.82).abs() < 0.01);
        assert_eq!(ebn0_from_sigma(1.0, 0.5), 0.0);
        assert!((sigma_from_ebn0(ebn0_from_sigma(0.81, 0.3), 0.3) - 0.81).abs() < 1e-14);
    }

    #[test]
    fn optimum_on_constant_gain_is_the_gain() {
        for (r0, s) in [(1.0, 0.8), (0.6, 0.5)] {
            let p = ChannelPoint::new(s, FadingDistribution::constant(r0).unwrap()).unwrap();
            let m = optimize_r_hat(&p).unwrap();
            assert!((m.r_hat_opt - r0).abs() < 1e-4, "{m:?}");
        }
    }

    #[test]
    fn cache_is_reused() {
        let cache = AlphaOptCache::new();
        let f = FadingDistribution::RayleighNormalized;
        let a = cache.get_or_compute(0.9, &f).unwrap();
        let b = cache.get_or_compute(0.9, &f).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn ideal_si_density_has_unit_mass() {
        let p = ChannelPoint::rayleigh(0.8).unwrap();
        let q = crate::quadrature::integrate_with_breaks(
            |l| ideal_si_llr_density(&p, l).unwrap(),
            &[-30.0, 0.0, 5.0, 80.0],
            QuadOptions::with_tol(1e-10, 1e-9),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-7, "{}", q.value);
    }
}
