//! Quantized density evolution for sum-product decoding of LDPC ensembles.
//!
//! Message densities live on a symmetric uniform grid with an exact zero bin
//! and saturating end bins. Check nodes use a two-input table of the box-plus
//! operation on magnitudes; variable nodes convolve with FFTs. Both node
//! updates conserve mass analytically. Floating-point leakage is measured
//! per update (see [`DeTrajectory::max_mass_defect`]) and removed by
//! rescaling, because total mass one is a repelling fixed point of the
//! recursion: an uncorrected deficit grows geometrically with the iteration.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::capacity::{alpha_opt, ebn0_from_sigma};
use crate::channel::{ChannelPoint, FadingDistribution};
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};
use crate::llr::{llr_cdf_pair, LlrModel};
use crate::special::log2_one_plus_exp_neg;

/// Bins on each side of zero in the standard grid (2047 bins in total).
pub const DEFAULT_HALF_BINS: usize = 1023;
pub const DEFAULT_L_MAX: f64 = 25.0;
pub const DEFAULT_TARGET_MER: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 300;
pub const STALL_WINDOW: usize = 10;
pub const STALL_RELATIVE_DECREASE: f64 = 1e-6;

/// Symmetric quantization grid `{k·Δ : |k| ≤ half}` with `Δ = l_max/half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantGrid {
    half: usize,
    l_max: f64,
}

impl Default for QuantGrid {
    fn default() -> Self {
        Self {
            half: DEFAULT_HALF_BINS,
            l_max: DEFAULT_L_MAX,
        }
    }
}

impl QuantGrid {
    pub fn new(half: usize, l_max: f64) -> Result<Self> {
        if half == 0 || half > u16::MAX as usize || !(l_max > 0.0 && l_max.is_finite()) {
            return Err(Error::domain(format!("bad quantization grid: half={half}, l_max={l_max}")));
        }
        Ok(Self { half, l_max })
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.l_max / self.half as f64
    }

    pub fn zero_index(&self) -> usize {
        self.half
    }

    pub fn value(&self, index: usize) -> f64 {
        (index as f64 - self.half as f64) * self.step()
    }

    /// Nearest bin, saturating at the ends.
    pub fn index_of(&self, l: f64) -> usize {
        let k = (l / self.step()).round().clamp(-(self.half as f64), self.half as f64);
        (k + self.half as f64) as usize
    }

    fn key(&self) -> (usize, u64) {
        (self.half, self.l_max.to_bits())
    }
}

/// Probability masses on a [`QuantGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPdf {
    grid: QuantGrid,
    mass: Vec<f64>,
}

impl QuantizedPdf {
    pub fn from_masses(grid: QuantGrid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::domain(format!("expected {} masses, got {}", grid.len(), mass.len())));
        }
        if mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::domain("masses must be finite and nonnegative"));
        }
        Ok(Self { grid, mass })
    }

    pub fn point_mass(grid: QuantGrid, l: f64) -> Self {
        let mut mass = vec![0.0; grid.len()];
        mass[grid.index_of(l)] = 1.0;
        Self { grid, mass }
    }

    pub fn grid(&self) -> &QuantGrid {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass below zero plus half the zero bin.
    pub fn message_error_rate(&self) -> f64 {
        mer_of(self.grid.half, &self.mass)
    }

    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.grid.value(i))
            .sum()
    }

    /// The density of `−L`.
    pub fn mirrored(&self) -> Self {
        let mut mass = self.mass.clone();
        mass.reverse();
        Self { grid: self.grid, mass }
    }

    /// `1 − Σ p(l)·log₂(1 + e^{−l})`.
    pub fn capacity_bits(&self) -> f64 {
        1.0 - self
            .mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * log2_one_plus_exp_neg(self.grid.value(i)))
            .sum::<f64>()
    }
}

fn mer_of(half: usize, mass: &[f64]) -> f64 {
    mass[..half].iter().sum::<f64>() + 0.5 * mass[half]
}

/// Rescales to unit mass and returns the defect `|Σ − 1|` found beforehand.
fn renormalize(mass: &mut [f64]) -> f64 {
    let total: f64 = mass.iter().sum();
    if total > 0.0 {
        mass.iter_mut().for_each(|m| *m /= total);
    }
    (total - 1.0).abs()
}

/// Bins the channel LLR density under `x = +1` on the standard grid.
pub fn quantize_channel_pdf(point: &ChannelPoint, model: &LlrModel) -> Result<QuantizedPdf> {
    quantize_channel_pdf_on(QuantGrid::default(), point, model)
}

/// Bins the channel LLR density by exact distribution-function differences
/// per bin; the end bins take the tails.
pub fn quantize_channel_pdf_on(grid: QuantGrid, point: &ChannelPoint, model: &LlrModel) -> Result<QuantizedPdf> {
    let n = grid.len();
    let step = grid.step();
    // edges[k] separates bin k from bin k+1
    let edges: Vec<f64> = (0..n - 1).map(|k| grid.value(k) + 0.5 * step).collect();
    let pairs = edges
        .iter()
        .map(|&t| llr_cdf_pair(point, model, t))
        .collect::<Result<Vec<_>>>()?;
    let h = grid.half;
    let mut mass = vec![0.0; n];
    mass[0] = pairs[0].0;
    for k in 1..n - 1 {
        mass[k] = if k < h {
            pairs[k].0 - pairs[k - 1].0
        } else if k > h {
            pairs[k - 1].1 - pairs[k].1
        } else {
            1.0 - pairs[k - 1].0 - pairs[k].1
        };
    }
    mass[n - 1] = pairs[n - 2].1;
    for m in mass.iter_mut() {
        *m = m.max(0.0);
    }
    renormalize(&mut mass);
    Ok(QuantizedPdf { grid, mass })
}

/// `|a ⊞ b|` for `a, b ≥ 0`: `2·atanh(tanh(a/2)·tanh(b/2))`.
fn boxplus_magnitude(a: f64, b: f64) -> f64 {
    a.min(b) + (-(a + b)).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Output bin of the check-node rule for every pair of input magnitude bins.
#[derive(Debug)]
struct CheckTable {
    width: usize,
    index: Vec<u16>,
}

impl CheckTable {
    fn new(grid: &QuantGrid) -> Self {
        let width = grid.half + 1;
        let step = grid.step();
        let mut index = vec![0u16; width * width];
        for m in 0..width {
            for n in m..width {
                let t = (boxplus_magnitude(m as f64 * step, n as f64 * step) / step).round() as usize;
                let t = t.min(grid.half) as u16;
                index[m * width + n] = t;
                index[n * width + m] = t;
            }
        }
        Self { width, index }
    }
}

/// FFT data for variable-node updates against one channel density.
struct VarKernel {
    size: usize,
    dmax: usize,
    channel_shifted: Vec<Complex64>,
    unshift: Vec<Complex64>,
}

/// Density-evolution machinery bound to one grid.
pub struct DeEngine {
    grid: QuantGrid,
    table: Arc<CheckTable>,
    planner: Mutex<FftPlanner<f64>>,
}

impl std::fmt::Debug for DeEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeEngine").field("grid", &self.grid).finish()
    }
}

fn table_for(grid: &QuantGrid) -> Arc<CheckTable> {
    static TABLES: OnceLock<Mutex<HashMap<(usize, u64), Arc<CheckTable>>>> = OnceLock::new();
    let mut tables = TABLES.get_or_init(Default::default).lock().expect("table cache poisoned");
    tables
        .entry(grid.key())
        .or_insert_with(|| Arc::new(CheckTable::new(grid)))
        .clone()
}

/// Settings for one density-evolution run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub target_mer: f64,
    pub max_iter: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            target_mer: DEFAULT_TARGET_MER,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Outcome of iterating density evolution from the channel density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeTrajectory {
    /// Error rate of the channel messages themselves.
    pub initial_mer: f64,
    /// Error rate after each iteration, starting with iteration one.
    pub mer: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest `|Σ − 1|` observed right after a node update.
    pub max_mass_defect: f64,
}

impl DeTrajectory {
    /// Iterations needed to reach the target, if it was reached.
    pub fn ell_star(&self) -> Option<usize> {
        self.converged.then_some(self.iterations)
    }

    pub fn final_mer(&self) -> f64 {
        self.mer.last().copied().unwrap_or(self.initial_mer)
    }
}

impl DeEngine {
    pub fn new(grid: QuantGrid) -> Self {
        Self {
            grid,
            table: table_for(&grid),
            planner: Mutex::new(FftPlanner::new()),
        }
    }

    /// Shared engine on the default grid.
    pub fn standard() -> &'static DeEngine {
        static ENGINE: OnceLock<DeEngine> = OnceLock::new();
        ENGINE.get_or_init(|| DeEngine::new(QuantGrid::default()))
    }

    pub fn grid(&self) -> &QuantGrid {
        &self.grid
    }

    fn check_grid(&self, pdf: &QuantizedPdf) -> Result<()> {
        if pdf.grid != self.grid {
            return Err(Error::domain("density lives on a different quantization grid"));
        }
        Ok(())
    }

    /// Density of `a ⊞ b` for independent messages.
    fn boxplus(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let h = self.grid.half;
        let w = self.table.width;
        let split = |p: &[f64]| {
            let pos: Vec<f64> = p[h..].to_vec();
            let mut neg = vec![0.0; h + 1];
            for m in 1..=h {
                neg[m] = p[h - m];
            }
            (pos, neg)
        };
        let (ap, an) = split(a);
        let (bp, bn) = split(b);
        let mut cp = vec![0.0; h + 1];
        let mut cn = vec![0.0; h + 1];
        for m in 0..w {
            let (xp, xn) = (ap[m], an[m]);
            if xp == 0.0 && xn == 0.0 {
                continue;
            }
            let row = &self.table.index[m * w..(m + 1) * w];
            for n in 0..w {
                let t = row[n] as usize;
                cp[t] += xp * bp[n] + xn * bn[n];
                cn[t] += xp * bn[n] + xn * bp[n];
            }
        }
        let mut out = vec![0.0; self.grid.len()];
        out[h] = cp[0] + cn[0];
        for t in 1..=h {
            out[h + t] = cp[t];
            out[h - t] = cn[t];
        }
        out
    }

    /// Check-to-variable density: `Σ ρ_j · v^{⊞(j−1)}`, with the powers
    /// built one box-plus at a time in increasing degree.
    fn check_node(&self, v: &[f64], rho: &[(u32, f64)]) -> Vec<f64> {
        let dmax = rho.iter().map(|&(d, _)| d).max().unwrap_or(2);
        let mut out = vec![0.0; v.len()];
        let mut power = v.to_vec();
        for d in 2..=dmax {
            if d > 2 {
                power = self.boxplus(&power, v);
            }
            if let Some(&(_, c)) = rho.iter().find(|&&(dd, _)| dd == d) {
                for (o, p) in out.iter_mut().zip(&power) {
                    *o += c * p;
                }
            }
        }
        out
    }

    fn kernel(&self, channel: &[f64], dmax: usize) -> VarKernel {
        let k = self.grid.half;
        let span = 2 * dmax * k + 1;
        let size = span.next_power_of_two();
        let mut buf: Vec<Complex64> = channel.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        buf.resize(size, Complex64::new(0.0, 0.0));
        self.fft(&mut buf, false);
        let rotate = |shift: usize, sign: f64| {
            (0..size)
                .map(|f| {
                    let phase = ((f as u128 * shift as u128) % size as u128) as f64 / size as f64;
                    Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * phase)
                })
                .collect::<Vec<_>>()
        };
        // w_f = e^{−2πi·f·K/size} delays by K bins
        let delay = rotate((dmax - 1) * k, -1.0);
        let unshift = rotate(k, 1.0);
        let channel_shifted = buf.iter().zip(&delay).map(|(c, d)| c * d).collect();
        VarKernel {
            size,
            dmax,
            channel_shifted,
            unshift,
        }
    }

    fn fft(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = {
            let mut planner = self.planner.lock().expect("fft planner poisoned");
            if inverse {
                planner.plan_fft_inverse(buf.len())
            } else {
                planner.plan_fft_forward(buf.len())
            }
        };
        plan.process(buf);
    }

    /// Variable-to-check density `channel ⊛ Σ λ_i u^{⊛(i−1)}`.
    fn variable_node(&self, kernel: &VarKernel, u: &[f64], lambda: &[(u32, f64)]) -> Vec<f64> {
        let k = self.grid.half;
        let mut coeffs = vec![0.0; kernel.dmax + 1];
        for &(d, c) in lambda {
            coeffs[d as usize] += c;
        }
        let mut buf: Vec<Complex64> = u.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        buf.resize(kernel.size, Complex64::new(0.0, 0.0));
        self.fft(&mut buf, false);
        for f in 0..kernel.size {
            let z = buf[f] * kernel.unshift[f];
            // Σ_i λ_i z^{i−1} by Horner
            let mut acc = Complex64::new(coeffs[kernel.dmax], 0.0);
            for i in (1..kernel.dmax).rev() {
                acc = acc * z + coeffs[i];
            }
            buf[f] = acc * kernel.channel_shifted[f];
        }
        self.fft(&mut buf, true);
        let scale = 1.0 / kernel.size as f64;
        let center = kernel.dmax * k;
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        for (j, c) in buf.iter().enumerate().take(2 * kernel.dmax * k + 1) {
            let m = (c.re * scale).max(0.0);
            let bin = if j + k < center {
                0
            } else if j > center + k {
                n - 1
            } else {
                j + k - center
            };
            out[bin] += m;
        }
        out
    }

    /// One iteration: check-node update of `incoming`, then the variable-node
    /// update against `channel`.
    pub fn de_step(
        &self,
        ensemble: &DegreeDistribution,
        channel: &QuantizedPdf,
        incoming: &QuantizedPdf,
    ) -> Result<QuantizedPdf> {
        self.check_grid(channel)?;
        self.check_grid(incoming)?;
        let dd = ensemble.normalized();
        let kernel = self.kernel(&channel.mass, dd.max_variable_degree() as usize);
        let mut u = self.check_node(&incoming.mass, dd.rho());
        renormalize(&mut u);
        let mut v = self.variable_node(&kernel, &u, dd.lambda());
        renormalize(&mut v);
        Ok(QuantizedPdf {
            grid: self.grid,
            mass: v,
        })
    }

    /// Iterates from the channel density until the error rate reaches the
    /// target, stalls, or `max_iter` runs out.
    pub fn run(&self, ensemble: &DegreeDistribution, channel: &QuantizedPdf, cfg: &DeConfig) -> Result<DeTrajectory> {
        self.run_inner(ensemble, channel, cfg, |_, _| {})
    }

    /// Like [`run`](Self::run), also handing every check-to-variable density
    /// and the preceding variable-to-check error rate to `observe`.
    pub(crate) fn run_inner<F>(
        &self,
        ensemble: &DegreeDistribution,
        channel: &QuantizedPdf,
        cfg: &DeConfig,
        mut observe: F,
    ) -> Result<DeTrajectory>
    where
        F: FnMut(&[f64], f64),
    {
        self.check_grid(channel)?;
        let dd = ensemble.normalized();
        let kernel = self.kernel(&channel.mass, dd.max_variable_degree() as usize);
        let initial_mer = channel.message_error_rate();
        let mut traj = DeTrajectory {
            initial_mer,
            mer: Vec::new(),
            iterations: 0,
            converged: initial_mer <= cfg.target_mer,
            max_mass_defect: 0.0,
        };
        let mut v = channel.mass.clone();
        let mut prev_mer = initial_mer;
        while !traj.converged && traj.iterations < cfg.max_iter {
            let mut u = self.check_node(&v, dd.rho());
            traj.max_mass_defect = traj.max_mass_defect.max(renormalize(&mut u));
            observe(&u, prev_mer);
            v = self.variable_node(&kernel, &u, dd.lambda());
            traj.max_mass_defect = traj.max_mass_defect.max(renormalize(&mut v));
            let mer = mer_of(self.grid.half, &v);
            traj.iterations += 1;
            traj.mer.push(mer);
            prev_mer = mer;
            if !mer.is_finite() {
                break;
            }
            if mer <= cfg.target_mer {
                traj.converged = true;
                break;
            }
            let t = traj.mer.len();
            if t > STALL_WINDOW {
                let before = traj.mer[t - 1 - STALL_WINDOW];
                if before - mer < STALL_RELATIVE_DECREASE * before {
                    break;
                }
            }
        }
        Ok(traj)
    }

    /// Capacity of `channel ⊛ u^{⊛(d−1)}` for every density `u` in `inputs`
    /// (rows) and degree `d` in `degrees` (columns).
    pub(crate) fn variable_capacities(&self, channel: &QuantizedPdf, inputs: &[Vec<f64>], degrees: &[u32]) -> Vec<Vec<f64>> {
        let dmax = degrees.iter().copied().max().unwrap_or(2) as usize;
        let kernel = self.kernel(&channel.mass, dmax);
        inputs
            .iter()
            .map(|u| {
                degrees
                    .iter()
                    .map(|&d| {
                        let mut v = self.variable_node(&kernel, u, &[(d, 1.0)]);
                        renormalize(&mut v);
                        QuantizedPdf { grid: self.grid, mass: v }.capacity_bits()
                    })
                    .collect()
            })
            .collect()
    }

    /// Capacity of the check-to-variable density produced from `v`.
    pub(crate) fn check_capacity(&self, v: &[f64], rho: &[(u32, f64)]) -> f64 {
        let total: f64 = rho.iter().map(|&(_, c)| c).sum();
        let rho: Vec<_> = rho.iter().map(|&(d, c)| (d, c / total)).collect();
        let mut u = self.check_node(v, &rho);
        renormalize(&mut u);
        QuantizedPdf { grid: self.grid, mass: u }.capacity_bits()
    }

    /// Runs DE and, for every iteration `t`, records the error rate `x_{t−1}`
    /// of the messages entering the check nodes together with the error rate
    /// of `channel ⊛ u_t^{⊛(d−1)}` for each `d` in `degrees`, where `u_t` is
    /// that iteration's check-to-variable density.
    pub(crate) fn run_with_degree_mers(
        &self,
        ensemble: &DegreeDistribution,
        channel: &QuantizedPdf,
        cfg: &DeConfig,
        degrees: &[u32],
    ) -> Result<(DeTrajectory, Vec<(f64, Vec<f64>)>)> {
        let dmax = degrees.iter().copied().max().unwrap_or(2) as usize;
        let kernel = self.kernel(&channel.mass, dmax);
        let mut rows = Vec::new();
        let traj = self.run_inner(ensemble, channel, cfg, |u, x_prev| {
            let e = degrees
                .iter()
                .map(|&d| {
                    let mut v = self.variable_node(&kernel, u, &[(d, 1.0)]);
                    renormalize(&mut v);
                    mer_of(self.grid.half, &v)
                })
                .collect();
            rows.push((x_prev, e));
        })?;
        Ok((traj, rows))
    }
}

/// One density-evolution iteration on the standard engine.
pub fn de_step(
    ensemble: &DegreeDistribution,
    channel: &QuantizedPdf,
    incoming: &QuantizedPdf,
) -> Result<QuantizedPdf> {
    if channel.grid == QuantGrid::default() {
        DeEngine::standard().de_step(ensemble, channel, incoming)
    } else {
        DeEngine::new(channel.grid).de_step(ensemble, channel, incoming)
    }
}

/// Runs density evolution at one channel point until `MER ≤ p_t`.
pub fn iterations_to_target(
    ensemble: &DegreeDistribution,
    point: &ChannelPoint,
    model: &LlrModel,
    p_t: f64,
    max_iter: usize,
) -> Result<DeTrajectory> {
    if !(p_t > 0.0 && p_t < 1.0) || max_iter == 0 {
        return Err(Error::domain("need 0 < p_t < 1 and max_iter ≥ 1"));
    }
    let channel = quantize_channel_pdf(point, model)?;
    DeEngine::standard().run(
        ensemble,
        &channel,
        &DeConfig {
            target_mer: p_t,
            max_iter,
        },
    )
}

/// How the LLR rule is chosen at each probed noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdMode {
    IdealSi,
    TrueNoSi,
    LinearFixedAlpha { alpha: f64 },
    /// `α = α_opt(σ_n)` recomputed at every probe.
    LinearMcla,
    /// `α = 2·E[r]/σ_n²` recomputed at every probe.
    LinearMeanGain,
}

impl ThresholdMode {
    pub fn model_at(&self, point: &ChannelPoint) -> Result<LlrModel> {
        match self {
            ThresholdMode::IdealSi => Ok(LlrModel::IdealSi),
            ThresholdMode::TrueNoSi => Ok(LlrModel::TrueNoSi),
            ThresholdMode::LinearFixedAlpha { alpha } => LlrModel::linear(*alpha),
            ThresholdMode::LinearMcla => LlrModel::linear(alpha_opt(point.sigma_n(), point.fading())?),
            ThresholdMode::LinearMeanGain => LlrModel::mean_gain(point),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ThresholdMode::IdealSi => "ideal-si".into(),
            ThresholdMode::TrueNoSi => "true-no-si".into(),
            ThresholdMode::LinearFixedAlpha { alpha } => format!("fixed-alpha({alpha})"),
            ThresholdMode::LinearMcla => "mcla".into(),
            ThresholdMode::LinearMeanGain => "mean-gain".into(),
        }
    }
}

/// Summary of a density-evolution run at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub sigma_n: f64,
    pub alpha: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_mer: f64,
}

/// Adjacent probes on either side of the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCertificate {
    pub converged: Probe,
    pub diverged: Probe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub sigma_star: f64,
    pub llr_mode: ThresholdMode,
    pub alpha_at_star: Option<f64>,
    pub ebn0_star_db: f64,
    pub rate: f64,
    pub certificate: ThresholdCertificate,
}

/// Bisection on `σ_n` for the largest noise level at which DE converges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub de: DeConfig,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            lo: 0.3,
            hi: 1.2,
            tol: 1e-4,
            de: DeConfig::default(),
        }
    }
}

impl ThresholdSearch {
    pub fn probe(
        &self,
        ensemble: &DegreeDistribution,
        mode: &ThresholdMode,
        fading: &FadingDistribution,
        sigma_n: f64,
    ) -> Result<Probe> {
        let point = ChannelPoint::new(sigma_n, fading.clone())?;
        let model = mode.model_at(&point)?;
        let channel = quantize_channel_pdf(&point, &model)?;
        let traj = DeEngine::standard().run(ensemble, &channel, &self.de)?;
        Ok(Probe {
            sigma_n,
            alpha: model.alpha(),
            converged: traj.converged,
            iterations: traj.iterations,
            final_mer: traj.final_mer(),
        })
    }

    pub fn run(
        &self,
        ensemble: &DegreeDistribution,
        mode: &ThresholdMode,
        fading: &FadingDistribution,
    ) -> Result<ThresholdResult> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.tol > 0.0) {
            return Err(Error::Bracket {
                lo: self.lo,
                hi: self.hi,
                detail: "need 0 < lo < hi and tol > 0".into(),
            });
        }
        let mut good = self.probe(ensemble, mode, fading, self.lo)?;
        if !good.converged {
            return Err(Error::Bracket {
                lo: self.lo,
                hi: self.hi,
                detail: "density evolution diverges at both ends".into(),
            });
        }
        let mut bad = self.probe(ensemble, mode, fading, self.hi)?;
        if bad.converged {
            return Err(Error::Bracket {
                lo: self.lo,
                hi: self.hi,
                detail: "density evolution converges at both ends".into(),
            });
        }
        while bad.sigma_n - good.sigma_n > self.tol {
            let mid = 0.5 * (good.sigma_n + bad.sigma_n);
            let p = self.probe(ensemble, mode, fading, mid)?;
            log::debug!("{} σ={mid:.6} converged={} after {}", mode.label(), p.converged, p.iterations);
            if p.converged {
                good = p;
            } else {
                bad = p;
            }
        }
        let sigma_star = 0.5 * (good.sigma_n + bad.sigma_n);
        let point = ChannelPoint::new(sigma_star, fading.clone())?;
        let alpha_at_star = mode.model_at(&point)?.alpha();
        let rate = ensemble.rate();
        Ok(ThresholdResult {
            sigma_star,
            llr_mode: *mode,
            alpha_at_star,
            ebn0_star_db: ebn0_from_sigma(sigma_star, rate),
            rate,
            certificate: ThresholdCertificate {
                converged: good,
                diverged: bad,
            },
        })
    }

    /// Re-runs DE at `σ* − tol` and `σ* + tol`; returns whether the first
    /// converges and the second diverges.
    pub fn replay(
        &self,
        result: &ThresholdResult,
        ensemble: &DegreeDistribution,
        fading: &FadingDistribution,
    ) -> Result<(bool, bool)> {
        let below = self.probe(ensemble, &result.llr_mode, fading, result.sigma_star - self.tol)?;
        let above = self.probe(ensemble, &result.llr_mode, fading, result.sigma_star + self.tol)?;
        Ok((below.converged, !above.converged))
    }
}

/// Threshold with the default bracket `[0.3, 1.2]` and tolerance `1e-4`.
pub fn threshold_search(
    ensemble: &DegreeDistribution,
    mode: &ThresholdMode,
    fading: &FadingDistribution,
) -> Result<ThresholdResult> {
    ThresholdSearch::default().run(ensemble, mode, fading)
}

/// `ℓ*` for every `(α, σ_n)` pair plus the per-`σ_n` optimum-`α` column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub alphas: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// `ell_star[a][s]` for `alphas[a]` and `sigmas[s]`.
    pub ell_star: Vec<Vec<Option<usize>>>,
    pub mcla_alphas: Vec<f64>,
    pub mcla_ell_star: Vec<Option<usize>>,
}

impl ConvergenceStudy {
    /// Largest `σ_n` with finite `ℓ*` in column `a`.
    pub fn widest_sigma(&self, a: usize) -> Option<f64> {
        self.sigmas
            .iter()
            .zip(&self.ell_star[a])
            .filter(|(_, l)| l.is_some())
            .map(|(s, _)| *s)
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))))
    }

    /// Rows `alpha,sigma_n,ell_star` with `−1` marking divergence.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "sigma_n", "ell_star"])?;
        for (a, row) in self.alphas.iter().zip(&self.ell_star) {
            for (s, l) in self.sigmas.iter().zip(row) {
                out.write_record([fmt_g(*a), fmt_g(*s), fmt_ell(*l)])?;
            }
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// The optimum-`α` reference column in the same layout.
    pub fn write_mcla_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "sigma_n", "ell_star"])?;
        for ((a, s), l) in self.mcla_alphas.iter().zip(&self.sigmas).zip(&self.mcla_ell_star) {
            out.write_record([fmt_g(*a), fmt_g(*s), fmt_ell(*l)])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn fmt_ell(l: Option<usize>) -> String {
    l.map_or_else(|| "-1".to_string(), |v| v.to_string())
}

/// Six significant digits without trailing zeros.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        let s = format!("{:.5e}", x);
        let (mant, e) = s.split_once('e').expect("exponent");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Tabulates `ℓ*(p_t)` over fixed-`α` columns and the per-`σ_n` MCLA column.
pub fn convergence_range_study(
    ensemble: &DegreeDistribution,
    fading: &FadingDistribution,
    alpha_grid: &[f64],
    sigma_grid: &[f64],
    cfg: &DeConfig,
) -> Result<ConvergenceStudy> {
    if alpha_grid.is_empty() || sigma_grid.is_empty() {
        return Err(Error::domain("convergence study needs nonempty grids"));
    }
    let mcla_alphas = sigma_grid
        .iter()
        .map(|&s| alpha_opt(s, fading))
        .collect::<Result<Vec<_>>>()?;
    // one job per cell; the last row is the MCLA reference
    let jobs: Vec<(usize, usize, f64)> = alpha_grid
        .iter()
        .enumerate()
        .flat_map(|(a, &alpha)| (0..sigma_grid.len()).map(move |s| (a, s, alpha)))
        .chain(mcla_alphas.iter().enumerate().map(|(s, &alpha)| (alpha_grid.len(), s, alpha)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(_, s, alpha)| {
            let point = ChannelPoint::new(sigma_grid[s], fading.clone())?;
            let channel = quantize_channel_pdf(&point, &LlrModel::linear(alpha)?)?;
            Ok(DeEngine::standard().run(ensemble, &channel, cfg)?.ell_star())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ell_star = vec![vec![None; sigma_grid.len()]; alpha_grid.len()];
    let mut mcla_ell_star = vec![None; sigma_grid.len()];
    for (&(a, s, _), l) in jobs.iter().zip(cells) {
        if a == alpha_grid.len() {
            mcla_ell_star[s] = l;
        } else {
            ell_star[a][s] = l;
        }
    }
    Ok(ConvergenceStudy {
        alphas: alpha_grid.to_vec(),
        sigmas: sigma_grid.to_vec(),
        ell_star,
        mcla_alphas,
        mcla_ell_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> QuantGrid {
        QuantGrid::default()
    }

    #[test]
    fn grid_has_exact_zero_bin() {
        let g = grid();
        assert_eq!(g.len(), 2047);
        assert_eq!(g.value(g.zero_index()), 0.0);
        assert_eq!(g.value(0), -25.0);
        assert_eq!(g.value(g.len() - 1), 25.0);
        assert_eq!(g.index_of(1e9), g.len() - 1);
    }

    #[test]
    fn boxplus_magnitude_matches_tanh_rule() {
        for (a, b) in [(0.3, 0.4), (2.0, 7.5), (5.0, 5.0), (0.0, 3.0)] {
            let want = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
            assert!((boxplus_magnitude(a, b) - want).abs() < 1e-12, "{a} {b}");
        }
        // tanh saturates here; compare with the closed form for equal inputs
        let want = 12.0 + (-24.0f64).exp().ln_1p() - 2f64.ln();
        assert!((boxplus_magnitude(12.0, 12.0) - want).abs() < 1e-14);
    }

    #[test]
    fn perfect_messages_stay_perfect() {
        let g = grid();
        let top = QuantizedPdf::point_mass(g, g.l_max());
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let out = de_step(&dd, &top, &top).unwrap();
        assert!(out.message_error_rate() <= 1e-12);
        assert!(out.masses()[g.len() - 1] > 1.0 - 1e-12);
    }

    #[test]
    fn mirrored_input_gives_mirrored_output() {
        let g = grid();
        let mut mass = vec![0.0; g.len()];
        mass[g.index_of(-1.0)] = 0.2;
        mass[g.index_of(0.0)] = 0.1;
        mass[g.index_of(2.5)] = 0.3;
        mass[g.index_of(6.0)] = 0.4;
        let ch = QuantizedPdf::from_masses(g, mass).unwrap();
        let dd = DegreeDistribution::new(vec![(2, 0.4), (3, 0.6)], vec![(6, 1.0)]).unwrap();
        let a = de_step(&dd, &ch, &ch).unwrap().mirrored();
        let b = de_step(&dd, &ch.mirrored(), &ch.mirrored()).unwrap();
        for (x, y) in a.masses().iter().zip(b.masses()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn target_above_initial_error_rate_needs_no_iterations() {
        let p = ChannelPoint::rayleigh(0.7).unwrap();
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let t = iterations_to_target(&dd, &p, &LlrModel::linear(2.5).unwrap(), 0.9, 300).unwrap();
        assert_eq!(t.ell_star(), Some(0));
    }

    #[test]
    fn general_format() {
        assert_eq!(fmt_g(2.9634), "2.9634");
        assert_eq!(fmt_g(0.64414123), "0.644141");
        assert_eq!(fmt_g(300.0), "300");
        assert_eq!(fmt_g(1.5e-7), "1.5e-7");
    }
}
