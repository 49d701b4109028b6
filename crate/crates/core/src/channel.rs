//! Fading distributions and the memoryless channel `y = r·x + n`.
//!
//! The gain `r ≥ 0` is drawn independently for every channel use and `n` is
//! zero-mean Gaussian with standard deviation `σ_n`. Distributions are plain
//! immutable values; sampling takes the caller's random stream.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::{bessel_i0e, bessel_i1e};

/// Tail mass allowed beyond [`FadingDistribution::support_max`].
pub const TAIL_MASS: f64 = 1e-12;

/// Number of standard deviations covering a Gaussian/Rayleigh tail of 1e-12.
const TAIL_SIGMAS: f64 = 7.5;

/// Probability law of the nonnegative channel gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingDistribution {
    /// `p(r) = 2r·e^{−r²}`, so `E[r²] = 1`.
    RayleighNormalized,
    /// Rician with the given K-factor, scaled to `E[r²] = 1`.
    Rician { k_factor: f64 },
    /// Deterministic gain: a point mass with no density.
    Constant { gain: f64 },
    /// Piecewise-linear density through user-supplied knots.
    Tabulated(TabulatedFading),
}

/// First and second moment of the gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingMoments {
    pub mean: f64,
    pub second_moment: f64,
}

impl FadingDistribution {
    pub fn rician(k_factor: f64) -> Result<Self> {
        let d = FadingDistribution::Rician { k_factor };
        d.validate()?;
        Ok(d)
    }

    pub fn constant(gain: f64) -> Result<Self> {
        let d = FadingDistribution::Constant { gain };
        d.validate()?;
        Ok(d)
    }

    pub fn tabulated(r: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        Ok(FadingDistribution::Tabulated(TabulatedFading::new(r, density)?))
    }

    /// Loads a tabulated density from a two-column `r,density` CSV file.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(FadingDistribution::Tabulated(TabulatedFading::from_reader(file)?))
    }

    /// Checks parameter ranges. Distributions built through the constructors
    /// are always valid; deserialized or literal values may not be.
    pub fn validate(&self) -> Result<()> {
        match self {
            FadingDistribution::RayleighNormalized => Ok(()),
            FadingDistribution::Rician { k_factor } => {
                if k_factor.is_finite() && *k_factor >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("Rician K-factor must be finite and ≥ 0, got {k_factor}")))
                }
            }
            FadingDistribution::Constant { gain } => {
                if gain.is_finite() && *gain >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::domain(format!("constant gain must be finite and ≥ 0, got {gain}")))
                }
            }
            FadingDistribution::Tabulated(t) => t.check(),
        }
    }

    /// Whether the gain has a density (everything but `Constant`).
    pub fn has_density(&self) -> bool {
        !matches!(self, FadingDistribution::Constant { .. })
    }

    /// Density `p(r)`.
    pub fn pdf(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!("fading pdf queried at r = {r} < 0")));
        }
        match self {
            FadingDistribution::Constant { .. } => Err(Error::domain(
                "constant fading is a point mass without a density; use moments() or sampling",
            )),
            _ => Ok(self.density_unchecked(r)),
        }
    }

    /// Density for `r ≥ 0` without the domain checks; zero for `Constant`.
    pub(crate) fn density_unchecked(&self, r: f64) -> f64 {
        match self {
            FadingDistribution::RayleighNormalized => 2.0 * r * (-r * r).exp(),
            FadingDistribution::Rician { k_factor } => rician_pdf(*k_factor, r),
            FadingDistribution::Constant { .. } => 0.0,
            FadingDistribution::Tabulated(t) => t.pdf(r),
        }
    }

    /// Cumulative distribution function `P(R ≤ r)`.
    pub fn cdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        match self {
            FadingDistribution::RayleighNormalized => -(-r * r).exp_m1(),
            FadingDistribution::Constant { gain } => {
                if r >= *gain {
                    1.0
                } else {
                    0.0
                }
            }
            FadingDistribution::Tabulated(t) => t.cdf(r),
            FadingDistribution::Rician { .. } => {
                let top = self.support_max();
                if r >= top {
                    return 1.0;
                }
                let mut pts: Vec<f64> = self.breakpoints().into_iter().filter(|&p| p < r).collect();
                pts.push(r);
                integrate_with_breaks(|t| self.density_unchecked(t), &pts, QuadOptions::with_tol(1e-14, 1e-12))
                    .map(|q| q.value.clamp(0.0, 1.0))
                    .unwrap_or(f64::NAN)
            }
        }
    }

    /// `E[r]` and `E[r²]`.
    pub fn moments(&self) -> FadingMoments {
        match self {
            FadingDistribution::RayleighNormalized => FadingMoments {
                mean: 0.5 * std::f64::consts::PI.sqrt(),
                second_moment: 1.0,
            },
            FadingDistribution::Rician { k_factor } => FadingMoments {
                mean: rician_mean(*k_factor),
                second_moment: 1.0,
            },
            FadingDistribution::Constant { gain } => FadingMoments {
                mean: *gain,
                second_moment: gain * gain,
            },
            FadingDistribution::Tabulated(t) => t.moments(),
        }
    }

    /// Gain beyond which at most [`TAIL_MASS`] probability remains.
    pub fn support_max(&self) -> f64 {
        match self {
            FadingDistribution::RayleighNormalized => (-TAIL_MASS.ln()).sqrt(),
            FadingDistribution::Rician { k_factor } => {
                let (nu, s) = rician_params(*k_factor);
                nu + TAIL_SIGMAS * s
            }
            FadingDistribution::Constant { gain } => *gain,
            FadingDistribution::Tabulated(t) => *t.r.last().expect("validated table"),
        }
    }

    /// Sorted partition of `[0, support_max]` that isolates narrow features.
    pub fn breakpoints(&self) -> Vec<f64> {
        let top = self.support_max();
        let mut pts = match self {
            FadingDistribution::RayleighNormalized => vec![0.0, std::f64::consts::FRAC_1_SQRT_2, 1.5, top],
            FadingDistribution::Rician { k_factor } => {
                let (nu, s) = rician_params(*k_factor);
                let mut v = vec![0.0, top];
                for k in [-6.0, -2.0, 0.0, 2.0] {
                    v.push(nu + k * s);
                }
                v
            }
            FadingDistribution::Constant { gain } => vec![0.0, *gain],
            FadingDistribution::Tabulated(t) => t.r.clone(),
        };
        pts.retain(|p| (0.0..=top).contains(p));
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        if pts.len() == 1 {
            pts.push(pts[0]);
        }
        pts
    }

    /// Draws one gain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingDistribution::RayleighNormalized => {
                // inverse CDF with u ∈ (0, 1]
                let u: f64 = 1.0 - rng.gen::<f64>();
                (-u.ln()).sqrt()
            }
            FadingDistribution::Rician { k_factor } => {
                let (nu, s) = rician_params(*k_factor);
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                (nu + s * g1).hypot(s * g2)
            }
            FadingDistribution::Constant { gain } => *gain,
            FadingDistribution::Tabulated(t) => t.inverse_cdf(rng.gen::<f64>()),
        }
    }

    /// Stable hash used to key memo tables.
    pub fn cache_key(&self) -> u64 {
        let mut h = DefaultHasher::new();
        match self {
            FadingDistribution::RayleighNormalized => 0u8.hash(&mut h),
            FadingDistribution::Rician { k_factor } => {
                1u8.hash(&mut h);
                k_factor.to_bits().hash(&mut h);
            }
            FadingDistribution::Constant { gain } => {
                2u8.hash(&mut h);
                gain.to_bits().hash(&mut h);
            }
            FadingDistribution::Tabulated(t) => {
                3u8.hash(&mut h);
                for (r, p) in t.r.iter().zip(&t.density) {
                    r.to_bits().hash(&mut h);
                    p.to_bits().hash(&mut h);
                }
            }
        }
        h.finish()
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        match self {
            FadingDistribution::RayleighNormalized => "rayleigh".into(),
            FadingDistribution::Rician { k_factor } => format!("rician(K={k_factor})"),
            FadingDistribution::Constant { gain } => format!("constant({gain})"),
            FadingDistribution::Tabulated(t) => format!("tabulated({} knots)", t.r.len()),
        }
    }
}

/// Line-of-sight amplitude and per-dimension scatter deviation for `E[r²] = 1`.
fn rician_params(k: f64) -> (f64, f64) {
    ((k / (k + 1.0)).sqrt(), (0.5 / (k + 1.0)).sqrt())
}

fn rician_pdf(k: f64, r: f64) -> f64 {
    let x = 2.0 * r * (k * (k + 1.0)).sqrt();
    let d = (k + 1.0).sqrt() * r - k.sqrt();
    2.0 * (k + 1.0) * r * (-d * d).exp() * bessel_i0e(x)
}

/// `E[r] = s·√(π/2)·L_{1/2}(−K)` written with scaled Bessel functions.
fn rician_mean(k: f64) -> f64 {
    let (_, s) = rician_params(k);
    s * (0.5 * std::f64::consts::PI).sqrt() * ((1.0 + k) * bessel_i0e(0.5 * k) + k * bessel_i1e(0.5 * k))
}

/// Piecewise-linear gain density.
///
/// The CDF between knots is the cubic Hermite interpolant whose knot slopes
/// are the tabulated densities. With trapezoid-consistent knot values that
/// cubic reduces to the exact integral of the linear density, so it is
/// monotone and sampling inverts it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct TabulatedFading {
    r: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    r: Vec<f64>,
    density: Vec<f64>,
}

impl TryFrom<RawTable> for TabulatedFading {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        TabulatedFading::new(raw.r, raw.density)
    }
}

impl From<TabulatedFading> for RawTable {
    fn from(t: TabulatedFading) -> Self {
        RawTable {
            r: t.r,
            density: t.density,
        }
    }
}

impl TabulatedFading {
    /// Builds the table and rescales the density to unit mass.
    pub fn new(r: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if r.len() < 2 || r.len() != density.len() {
            return Err(Error::domain("tabulated fading needs ≥ 2 (r, density) pairs"));
        }
        if r.iter().chain(&density).any(|v| !v.is_finite()) {
            // infinite knots would also mean an unbounded second moment
            return Err(Error::domain("tabulated fading contains non-finite values"));
        }
        if r[0] < 0.0 {
            return Err(Error::domain("tabulated gains must be ≥ 0"));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("tabulated gains must be strictly increasing"));
        }
        if density.iter().any(|&p| p < 0.0) {
            return Err(Error::domain("tabulated density must be nonnegative"));
        }
        let mut cdf = Vec::with_capacity(r.len());
        cdf.push(0.0);
        for i in 1..r.len() {
            let seg = 0.5 * (density[i - 1] + density[i]) * (r[i] - r[i - 1]);
            cdf.push(cdf[i - 1] + seg);
        }
        let total = *cdf.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::domain("tabulated density has zero mass"));
        }
        let density = density.into_iter().map(|p| p / total).collect();
        let cdf = cdf.into_iter().map(|c| c / total).collect();
        let t = TabulatedFading { r, density, cdf };
        t.check()?;
        Ok(t)
    }

    /// Reads `r,density` rows; a non-numeric first row is taken as a header.
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut r = Vec::new();
        let mut density = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::domain(format!("row {}: expected two columns", i + 1)));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(a), Ok(b)) => {
                    r.push(a);
                    density.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::domain(format!("row {}: not a number", i + 1))),
            }
        }
        TabulatedFading::new(r, density)
    }

    fn check(&self) -> Result<()> {
        let mass = integrate_with_breaks(|t| self.pdf(t), &self.r, QuadOptions::with_tol(1e-13, 1e-12))?;
        if (mass.value - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("tabulated density integrates to {}", mass.value)));
        }
        Ok(())
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.r, &self.density)
    }

    fn segment(&self, r: f64) -> Option<usize> {
        let n = self.r.len();
        if r < self.r[0] || r > self.r[n - 1] {
            return None;
        }
        let i = self.r.partition_point(|&k| k <= r);
        Some(i.clamp(1, n - 1) - 1)
    }

    fn pdf(&self, r: f64) -> f64 {
        match self.segment(r) {
            None => 0.0,
            Some(i) => {
                let h = self.r[i + 1] - self.r[i];
                let t = (r - self.r[i]) / h;
                self.density[i] * (1.0 - t) + self.density[i + 1] * t
            }
        }
    }

    fn cdf(&self, r: f64) -> f64 {
        if r <= self.r[0] {
            return 0.0;
        }
        match self.segment(r) {
            None => 1.0,
            Some(i) => {
                let h = self.r[i + 1] - self.r[i];
                let t = r - self.r[i];
                let slope = (self.density[i + 1] - self.density[i]) / h;
                (self.cdf[i] + self.density[i] * t + 0.5 * slope * t * t).min(1.0)
            }
        }
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let n = self.r.len();
        let j = self.cdf.partition_point(|&c| c < u).clamp(1, n - 1);
        let i = j - 1;
        let h = self.r[i + 1] - self.r[i];
        let target = (u - self.cdf[i]).max(0.0);
        let a = 0.5 * (self.density[i + 1] - self.density[i]) / h;
        let b = self.density[i];
        // a t² + b t − target = 0, root in [0, h]; stable form avoids cancellation
        let t = if a.abs() < 1e-300 {
            if b > 0.0 {
                target / b
            } else {
                0.0
            }
        } else {
            let disc = (b * b + 4.0 * a * target).max(0.0);
            2.0 * target / (b + disc.sqrt())
        };
        self.r[i] + t.clamp(0.0, h)
    }

    fn moments(&self) -> FadingMoments {
        // Exact for piecewise-linear densities: integrate r·p and r²·p per segment.
        let mut mean = 0.0;
        let mut second = 0.0;
        for i in 0..self.r.len() - 1 {
            let (a, b) = (self.r[i], self.r[i + 1]);
            let (pa, pb) = (self.density[i], self.density[i + 1]);
            let h = b - a;
            let slope = (pb - pa) / h;
            let c0 = pa - slope * a;
            // p(r) = c0 + slope·r on [a, b]
            let int = |k: i32| (b.powi(k) - a.powi(k)) / k as f64;
            mean += c0 * int(2) + slope * int(3);
            second += c0 * int(3) + slope * int(4);
        }
        FadingMoments {
            mean,
            second_moment: second,
        }
    }
}

/// One channel condition: noise level and gain law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPoint {
    sigma_n: f64,
    fading: FadingDistribution,
}

impl ChannelPoint {
    pub fn new(sigma_n: f64, fading: FadingDistribution) -> Result<Self> {
        if !(sigma_n > 0.0 && sigma_n.is_finite()) {
            return Err(Error::domain(format!("sigma_n must be positive and finite, got {sigma_n}")));
        }
        fading.validate()?;
        Ok(Self { sigma_n, fading })
    }

    /// Normalized Rayleigh fading at the given noise level.
    pub fn rayleigh(sigma_n: f64) -> Result<Self> {
        Self::new(sigma_n, FadingDistribution::RayleighNormalized)
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn fading(&self) -> &FadingDistribution {
        &self.fading
    }

    pub fn with_sigma(&self, sigma_n: f64) -> Result<Self> {
        Self::new(sigma_n, self.fading.clone())
    }

    /// Largest |y| worth integrating over: `r_max + 8σ_n`.
    pub fn output_span(&self) -> f64 {
        self.fading.support_max() + 8.0 * self.sigma_n
    }
}

/// Bipolar channel input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Plus,
    Minus,
}

impl Symbol {
    pub fn value(self) -> f64 {
        match self {
            Symbol::Plus => 1.0,
            Symbol::Minus => -1.0,
        }
    }

    /// Maps code bit 0 to `+1` and 1 to `−1`.
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Symbol::Plus
        } else {
            Symbol::Minus
        }
    }
}

/// One realization of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub x: Symbol,
    pub r: f64,
    pub y: f64,
}

/// Transmits `x` once: draws a fresh gain and Gaussian noise.
pub fn sample_channel<R: Rng + ?Sized>(point: &ChannelPoint, x: Symbol, rng: &mut R) -> ChannelSample {
    let r = point.fading.sample(rng);
    let n: f64 = rng.sample(StandardNormal);
    ChannelSample {
        x,
        r,
        y: r * x.value() + point.sigma_n * n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn total_mass(d: &FadingDistribution) -> f64 {
        integrate_with_breaks(
            |r| d.density_unchecked(r),
            &d.breakpoints(),
            QuadOptions::with_tol(1e-14, 1e-13),
        )
        .unwrap()
        .value
    }

    #[test]
    fn rayleigh_pdf_values() {
        let d = FadingDistribution::RayleighNormalized;
        assert_eq!(d.pdf(0.0).unwrap(), 0.0);
        assert!((d.pdf(1.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(d.pdf(-0.1).is_err());
    }

    #[test]
    fn constant_has_no_density() {
        let d = FadingDistribution::constant(0.5).unwrap();
        assert!(matches!(d.pdf(0.5), Err(Error::Domain(_))));
        let m = FadingDistribution::constant(0.7).unwrap().moments();
        assert_eq!(m.mean, 0.7);
        assert!((m.second_moment - 0.49).abs() < 1e-15);
    }

    #[test]
    fn densities_integrate_to_one() {
        let tab = FadingDistribution::tabulated(vec![0.0, 0.5, 1.0, 2.0], vec![0.0, 1.0, 0.6, 0.0]).unwrap();
        for d in [
            FadingDistribution::RayleighNormalized,
            FadingDistribution::rician(0.5).unwrap(),
            FadingDistribution::rician(7.0).unwrap(),
            FadingDistribution::rician(1e6).unwrap(),
            tab,
        ] {
            let m = total_mass(&d);
            assert!((m - 1.0).abs() < 1e-9, "{}: mass {m}", d.label());
        }
    }

    #[test]
    fn rayleigh_moments() {
        let m = FadingDistribution::RayleighNormalized.moments();
        assert!((m.mean - 0.8862).abs() < 5e-5);
        assert_eq!(m.second_moment, 1.0);
    }

    #[test]
    fn rician_moments_match_quadrature() {
        for k in [0.0, 0.3, 4.0, 60.0, 1e6] {
            let d = FadingDistribution::rician(k).unwrap();
            let q = |p: i32| {
                integrate_with_breaks(
                    |r| r.powi(p) * d.density_unchecked(r),
                    &d.breakpoints(),
                    QuadOptions::with_tol(1e-14, 1e-13),
                )
                .unwrap()
                .value
            };
            let m = d.moments();
            assert!((m.mean - q(1)).abs() < 1e-9, "K={k}: {} vs {}", m.mean, q(1));
            assert!((q(2) - 1.0).abs() < 1e-9, "K={k}");
        }
        let near_los = FadingDistribution::rician(1e6).unwrap().moments().mean;
        assert!((near_los - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tabulated_moments_are_exact() {
        let d = FadingDistribution::tabulated(vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 0.0]).unwrap();
        let m = d.moments();
        let q = integrate(|r| r * d.density_unchecked(r), 0.0, 3.0, QuadOptions::default()).unwrap();
        assert!((m.mean - 4.0 / 3.0).abs() < 1e-12);
        assert!((m.mean - q.value).abs() < 1e-9);
    }

    #[test]
    fn tabulated_rejects_bad_input() {
        assert!(FadingDistribution::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(FadingDistribution::tabulated(vec![-1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(FadingDistribution::tabulated(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(FadingDistribution::tabulated(vec![0.0, f64::INFINITY], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn csv_header_is_optional() {
        let with = "r,density\n0,0\n1,2\n2,0\n";
        let without = "0,0\n1,2\n2,0\n";
        let a = TabulatedFading::from_reader(with.as_bytes()).unwrap();
        let b = TabulatedFading::from_reader(without.as_bytes()).unwrap();
        assert_eq!(a, b);
        assert!(TabulatedFading::from_reader("0,0\nx,1\n".as_bytes()).is_err());
    }

    #[test]
    fn noiseless_constant_channel() {
        let point = ChannelPoint::new(1e-9, FadingDistribution::constant(1.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_channel(&point, Symbol::Plus, &mut rng);
        assert!((s.y - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sampling_is_reproducible() {
        let point = ChannelPoint::rayleigh(0.7).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100)
                .map(|_| sample_channel(&point, Symbol::Minus, &mut rng).y.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(ChannelPoint::rayleigh(0.0).is_err());
        assert!(ChannelPoint::rayleigh(f64::NAN).is_err());
    }
}
