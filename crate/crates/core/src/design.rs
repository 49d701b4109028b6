//! Degree-distribution design under the optimum linear LLR.
//!
//! Variable-degree fractions are optimized by iterated linear programming
//! against density evolution. At the current design `λ`, one DE run records
//! the check-to-variable density `u_t` of every iteration. Holding those
//! fixed, the error rate after the variable-node update is linear in `λ`:
//! `Σ_i λ_i·e_i(t)` with `e_i(t) = MER(channel ⊛ u_t^{⊛(i−1)})`. The LP
//! maximizes `Σ λ_i/i` (equivalently the rate) subject to a decrease of that
//! error rate at every recorded iteration, a stability bound on `λ_2` and a
//! trust region around the current `λ`. Each LP solution is checked with full
//! DE and accepted only if it converges, so every returned design carries a
//! replayable certificate.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::capacity::alpha_opt;
use crate::channel::{ChannelPoint, FadingDistribution};
use crate::density::{
    quantize_channel_pdf, QuantGrid, DeConfig, DeEngine, QuantizedPdf, ThresholdMode, ThresholdResult, ThresholdSearch,
};
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};
use crate::llr::LlrModel;
use crate::special::{normal_cdf, normal_sf};

/// Variable degrees used by default, capped at `d_v_max`.
pub const DEFAULT_DEGREES: [u32; 14] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 15, 20, 29, 30];

const MIN_TRUST: f64 = 1e-3;
const MAX_TRUST: f64 = 0.25;
const STALL_IMPROVEMENT: f64 = 1e-4;
const HEADROOM: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub rho: Vec<(u32, f64)>,
    pub dv_max: u32,
    /// Allowed variable degrees; `None` means [`DEFAULT_DEGREES`] up to `dv_max`.
    pub degrees: Option<Vec<u32>>,
    pub max_iter: usize,
    pub target_mer: f64,
    /// Required factor of error-rate decrease per recorded iteration.
    pub margin: f64,
    /// Fraction of the stability bound allowed for `λ_2`. At the bound the
    /// error rate near zero contracts by a factor close to one per iteration.
    pub stability_margin: f64,
    pub initial_trust: f64,
    pub max_outer: usize,
    pub fading: FadingDistribution,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self {
            rho: vec![(9, 1.0)],
            dv_max: 30,
            degrees: None,
            max_iter: 300,
            target_mer: 1e-6,
            margin: 0.99,
            stability_margin: 0.9,
            initial_trust: 0.05,
            max_outer: 200,
            fading: FadingDistribution::RayleighNormalized,
        }
    }
}

impl DesignSpec {
    /// Every degree from 2 to `dv_max`.
    pub fn with_full_degree_range(mut self) -> Self {
        self.degrees = Some((2..=self.dv_max).collect());
        self
    }

    pub fn allowed_degrees(&self) -> Result<Vec<u32>> {
        if self.dv_max < 3 {
            return Err(Error::domain("d_v_max must be at least 3"));
        }
        let mut d: Vec<u32> = match &self.degrees {
            Some(v) => v.clone(),
            None => DEFAULT_DEGREES.to_vec(),
        };
        d.retain(|&x| (2..=self.dv_max).contains(&x));
        d.sort_unstable();
        d.dedup();
        if d.iter().all(|&x| x < 3) {
            return Err(Error::domain("allowed degrees must include one of at least 3"));
        }
        Ok(d)
    }

    fn de_config(&self) -> DeConfig {
        DeConfig {
            target_mer: self.target_mer,
            max_iter: self.max_iter,
        }
    }

    fn ensemble(&self, lambda: &[(u32, f64)]) -> Result<DegreeDistribution> {
        DegreeDistribution::new(lambda.to_vec(), self.rho.clone())
    }
}

/// Replayable evidence that a design converges at an operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCertificate {
    pub sigma_n: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub final_mer: f64,
}

impl DesignCertificate {
    /// Re-runs DE for `dd` at the certified point; true if it still converges.
    pub fn replay(&self, dd: &DegreeDistribution, fading: &FadingDistribution, max_iter: usize, target_mer: f64) -> Result<bool> {
        let point = ChannelPoint::new(self.sigma_n, fading.clone())?;
        let channel = quantize_channel_pdf(&point, &LlrModel::linear(self.alpha)?)?;
        let traj = DeEngine::standard().run(dd, &channel, &DeConfig { target_mer, max_iter })?;
        Ok(traj.converged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub distribution: DegreeDistribution,
    pub rate: f64,
    pub certificate: DesignCertificate,
    /// Certified rate after every accepted step, starting point first.
    pub rate_history: Vec<f64>,
    /// Why the search stopped.
    pub diagnostic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDesign {
    pub distribution: DegreeDistribution,
    pub threshold: ThresholdResult,
}

struct Operating {
    point: ChannelPoint,
    alpha: f64,
    channel: QuantizedPdf,
    bhattacharyya: f64,
}

impl Operating {
    fn new(sigma_n: f64, fading: &FadingDistribution) -> Result<Self> {
        let point = ChannelPoint::new(sigma_n, fading.clone())?;
        let alpha = alpha_opt(sigma_n, fading)?;
        let channel = quantize_channel_pdf(&point, &LlrModel::linear(alpha)?)?;
        let g = channel.grid();
        let bhattacharyya = channel
            .masses()
            .iter()
            .enumerate()
            .map(|(i, m)| m * (-0.5 * g.value(i)).exp())
            .sum();
        Ok(Self {
            point,
            alpha,
            channel,
            bhattacharyya,
        })
    }

    fn check(&self, dd: &DegreeDistribution, cfg: &DeConfig) -> Result<Option<DesignCertificate>> {
        let traj = DeEngine::standard().run(dd, &self.channel, cfg)?;
        Ok(traj.converged.then(|| DesignCertificate {
            sigma_n: self.point.sigma_n(),
            alpha: self.alpha,
            iterations: traj.iterations,
            final_mer: traj.final_mer(),
        }))
    }
}

fn sparse(degrees: &[u32], lambda: &[f64]) -> Vec<(u32, f64)> {
    degrees
        .iter()
        .zip(lambda)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&d, &c)| (d, c))
        .collect()
}

/// Consistent Gaussian LLR density `N(μ, 2μ)` on `grid`.
fn gaussian_masses(grid: &QuantGrid, mu: f64) -> Vec<f64> {
    let mut mass = vec![0.0; grid.len()];
    if mu <= 0.0 {
        mass[grid.zero_index()] = 1.0;
        return mass;
    }
    let sd = (2.0 * mu).sqrt();
    let h = 0.5 * grid.step();
    let last = grid.len() - 1;
    for (i, m) in mass.iter_mut().enumerate() {
        let lo = if i == 0 { f64::NEG_INFINITY } else { (grid.value(i) - h - mu) / sd };
        let hi = if i == last { f64::INFINITY } else { (grid.value(i) + h - mu) / sd };
        *m = if lo > 0.0 { normal_sf(lo) - normal_sf(hi) } else { normal_cdf(hi) - normal_cdf(lo) };
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    mass
}

/// Consistent Gaussian density whose capacity is `info` bits.
fn gaussian_with_capacity(grid: &QuantGrid, info: f64) -> Vec<f64> {
    let cap = |mu: f64| QuantizedPdf::from_masses(*grid, gaussian_masses(grid, mu)).map_or(0.0, |p| p.capacity_bits());
    let (mut lo, mut hi) = (0.0, 80.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cap(mid) < info {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    gaussian_masses(grid, 0.5 * (lo + hi))
}

const EXIT_POINTS: usize = 40;
const CHECK_POINTS: usize = 100;
/// Bisection steps on the design noise level of the transfer-curve start.
const START_STEPS: usize = 7;
/// Highest design noise level tried, relative to the target.
const START_CEILING: f64 = 1.15;

/// Check-node side of the transfer-curve LP: for each sampled level `a` of
/// check-to-variable information, the variable-to-check information needed
/// for the check nodes to return at least `a`.
///
/// Curves are measured on consistent Gaussian a-priori densities, exactly
/// through the box-plus table for the check side and exactly through the
/// channel density for the variable side.
struct ExitCurves {
    required: Vec<f64>,
    inputs: Vec<Vec<f64>>,
}

impl ExitCurves {
    fn new(spec: &DesignSpec) -> Self {
        let engine = DeEngine::standard();
        let grid = *engine.grid();
        let info: Vec<f64> = (0..=CHECK_POINTS).map(|j| (j as f64 / CHECK_POINTS as f64).min(0.9995)).collect();
        let check: Vec<f64> = info
            .iter()
            .map(|&t| engine.check_capacity(&gaussian_with_capacity(&grid, t), &spec.rho))
            .collect();
        let top = check.iter().copied().fold(0.0, f64::max).min(0.995);
        let mut levels = Vec::new();
        let mut required = Vec::new();
        for k in 1..=EXIT_POINTS {
            let a = top * k as f64 / EXIT_POINTS as f64;
            let Some(j) = check.iter().position(|&c| c >= a) else { continue };
            let need = if j == 0 {
                info[0]
            } else {
                let w = (a - check[j - 1]) / (check[j] - check[j - 1]);
                info[j - 1] + w * (info[j] - info[j - 1])
            };
            levels.push(a);
            required.push(need);
        }
        let inputs = levels.iter().map(|&a| gaussian_with_capacity(&grid, a)).collect();
        Self { required, inputs }
    }

    /// Highest-rate `λ` whose variable-node curve on `channel` clears the
    /// check-node requirement at every level; degree 2 is capped at
    /// `stability`.
    fn solve(&self, channel: &QuantizedPdf, degrees: &[u32], stability: f64) -> Option<Vec<f64>> {
        let table = DeEngine::standard().variable_capacities(channel, &self.inputs, degrees);
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = degrees
            .iter()
            .map(|&d| {
                let hi = if d == 2 { stability.min(1.0) } else { 1.0 };
                lp.add_var(1.0 / d as f64, (0.0, hi))
            })
            .collect();
        let ones: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
        for (row, &need) in table.iter().zip(&self.required) {
            let terms: Vec<_> = vars.iter().zip(row).map(|(&v, &c)| (v, c)).collect();
            lp.add_constraint(terms.as_slice(), ComparisonOp::Ge, need);
        }
        let solution = lp.solve().ok()?.into_solution().ok()?;
        Some(clean(vars.iter().map(|&v| solution.var_value(v)).collect()))
    }
}

fn stability_bound(spec: &DesignSpec, op: &Operating) -> f64 {
    let rho_prime = spec.rho.iter().map(|&(d, c)| c * (d as f64 - 1.0)).sum::<f64>()
        / spec.rho.iter().map(|&(_, c)| c).sum::<f64>();
    spec.stability_margin / (rho_prime * op.bhattacharyya)
}

/// Drops LP round-off and rescales to unit sum.
fn clean(mut lambda: Vec<f64>) -> Vec<f64> {
    for l in lambda.iter_mut() {
        if *l < 1e-9 {
            *l = 0.0;
        }
    }
    let s: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= s);
    lambda
}

/// Convergent starting design. The transfer-curve LP is optimistic, so it
/// is solved for the channel at a design noise level `σ_d ≥ σ_n`, with `σ_d`
/// bisected to the smallest value whose design still passes full DE at
/// `σ_n`. Falls back to the best convergent single degree or mixture of
/// degree 2 with the largest allowed degree.
fn initial_design(spec: &DesignSpec, degrees: &[u32], op: &Operating) -> Result<(Vec<f64>, DesignCertificate)> {
    let cfg = spec.de_config();
    let curves = ExitCurves::new(spec);
    let stability = stability_bound(spec, op);
    let sigma = op.point.sigma_n();
    let mut best: Option<(f64, Vec<f64>, DesignCertificate)> = None;
    let mut attempt = |sigma_d: f64| -> Result<bool> {
        let design_op = Operating::new(sigma_d, op.point.fading())?;
        let Some(lambda) = curves.solve(&design_op.channel, degrees, stability) else {
            return Ok(false);
        };
        let Ok(dd) = spec.ensemble(&sparse(degrees, &lambda)) else {
            return Ok(false);
        };
        match op.check(&dd, &cfg)? {
            Some(cert) => {
                log::debug!("σ_d {sigma_d:.5}: rate {:.5} converges in {}", dd.rate(), cert.iterations);
                if best.as_ref().is_none_or(|b| dd.rate() > b.0) {
                    best = Some((dd.rate(), lambda, cert));
                }
                Ok(true)
            }
            None => {
                log::debug!("σ_d {sigma_d:.5}: rate {:.5} fails", dd.rate());
                Ok(false)
            }
        }
    };
    if !attempt(sigma)? {
        let (mut lo, mut hi) = (sigma, START_CEILING * sigma);
        if attempt(hi)? {
            for _ in 0..START_STEPS {
                let mid = 0.5 * (lo + hi);
                if attempt(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
    }
    let mut candidates = Vec::new();
    for (k, _) in degrees.iter().enumerate().filter(|(_, &d)| d >= 3) {
        let mut lambda = vec![0.0; degrees.len()];
        lambda[k] = 1.0;
        candidates.push(lambda);
    }
    if degrees[0] == 2 {
        let top = degrees.len() - 1;
        for step in 1..=8 {
            let mut lambda = vec![0.0; degrees.len()];
            lambda[0] = 0.05 * step as f64;
            lambda[top] = 1.0 - lambda[0];
            candidates.push(lambda);
        }
    }
    let mut ranked: Vec<(f64, Vec<f64>, DegreeDistribution)> = candidates
        .into_iter()
        .filter_map(|l| spec.ensemble(&sparse(degrees, &l)).ok().map(|dd| (dd.rate(), l, dd)))
        .filter(|(rate, _, _)| best.as_ref().is_none_or(|b| *rate > b.0))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (rate, lambda, dd) in ranked {
        if let Some(cert) = op.check(&dd, &cfg)? {
            best = Some((rate, lambda, cert));
            break;
        }
    }
    best.map(|(_, l, c)| (l, c)).ok_or_else(|| {
        Error::Infeasible(format!("no starting ensemble converges at σ_n = {}", op.point.sigma_n()))
    })
}

/// One LP step around `current`; `None` if the LP has no solution.
fn lp_step(
    spec: &DesignSpec,
    degrees: &[u32],
    op: &Operating,
    current: &[f64],
    rows: &[(f64, Vec<f64>)],
    trust: f64,
    headroom: f64,
) -> Option<Vec<f64>> {
    let stability = stability_bound(spec, op);
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = degrees
        .iter()
        .zip(current)
        .map(|(&d, &c)| {
            let lo = (c - trust).max(0.0);
            let mut hi = (c + trust).min(1.0);
            if d == 2 {
                hi = hi.min(stability);
            }
            lp.add_var(1.0 / d as f64, (lo.min(hi), hi))
        })
        .collect();
    let ones: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    for (x_prev, e) in rows {
        // the current design always satisfies its own trajectory; headroom
        // below the margin shrinks as the iteration budget is used up
        let now: f64 = current.iter().zip(e).map(|(l, e)| l * e).sum();
        let rhs = now + headroom * (spec.margin * x_prev - now).max(0.0);
        let terms: Vec<_> = vars.iter().zip(e).map(|(&v, &c)| (v, c)).collect();
        lp.add_constraint(terms.as_slice(), ComparisonOp::Le, rhs);
    }
    let solution = lp.solve().ok()?.into_solution().ok()?;
    Some(clean(vars.iter().map(|&v| solution.var_value(v)).collect()))
}

/// Iterated-LP rate maximization at `op`, starting from a convergent `start`.
/// Stops early once the certified rate reaches `stop_at`.
fn maximize_rate_from(
    spec: &DesignSpec,
    degrees: &[u32],
    op: &Operating,
    start: (Vec<f64>, DesignCertificate),
    stop_at: Option<f64>,
) -> Result<DesignResult> {
    let cfg = spec.de_config();
    let (mut lambda, mut cert) = start;
    let mut dd = spec.ensemble(&sparse(degrees, &lambda))?;
    let mut history = vec![dd.rate()];
    let mut trust = spec.initial_trust;
    let mut small_steps = 0;
    let mut diagnostic = format!("stopped after {} outer iterations", spec.max_outer);
    for outer in 0..spec.max_outer {
        if stop_at.is_some_and(|r| dd.rate() >= r) {
            diagnostic = "reached the requested rate".into();
            break;
        }
        let headroom = HEADROOM * (1.0 - cert.iterations as f64 / spec.max_iter as f64).max(0.0);
        let (_, rows) = DeEngine::standard().run_with_degree_mers(&dd, &op.channel, &cfg, degrees)?;
        let Some(candidate) = lp_step(spec, degrees, op, &lambda, &rows, trust, headroom) else {
            diagnostic = format!("linear program infeasible at outer iteration {outer}; kept the last certified design");
            break;
        };
        let accepted = match spec.ensemble(&sparse(degrees, &candidate)) {
            Ok(next) if next.rate() > dd.rate() + 1e-12 => op.check(&next, &cfg)?.map(|c| (next, c)),
            _ => None,
        };
        match accepted {
            Some((next, c)) => {
                let gain = next.rate() - dd.rate();
                log::debug!("outer {outer}: rate {:.6} (+{gain:.2e}), trust {trust:.3} it {}", next.rate(), c.iterations);
                lambda = candidate;
                dd = next;
                cert = c;
                history.push(dd.rate());
                trust = (trust * 1.5).min(MAX_TRUST);
                small_steps = if gain < STALL_IMPROVEMENT { small_steps + 1 } else { 0 };
                if small_steps >= 3 {
                    diagnostic = "rate improvement below 1e-4 for three accepted steps".into();
                    break;
                }
            }
            None => {
                trust *= 0.5;
                log::debug!("outer {outer}: candidate rejected, trust {trust:.4}");
                if trust < MIN_TRUST {
                    diagnostic = "trust region collapsed; no convergent improvement nearby".into();
                    break;
                }
            }
        }
    }
    Ok(DesignResult {
        rate: dd.rate(),
        distribution: dd,
        certificate: cert,
        rate_history: history,
        diagnostic,
    })
}

/// Maximizes the design rate of a DE-convergent ensemble at `point`, with
/// the channel messages formed by the optimum linear LLR for that point.
pub fn maximize_rate(spec: &DesignSpec, point: &ChannelPoint) -> Result<DesignResult> {
    let degrees = spec.allowed_degrees()?;
    let op = Operating::new(point.sigma_n(), point.fading())?;
    let start = initial_design(spec, &degrees, &op)?;
    maximize_rate_from(spec, &degrees, &op, start, None)
}

/// Bisection bracket and resolution for [`maximize_threshold`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDesignSearch {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl Default for ThresholdDesignSearch {
    fn default() -> Self {
        Self {
            lo: 0.6,
            hi: 0.8,
            tol: 2e-3,
        }
    }
}

/// Highest-threshold ensemble of rate at least `rate_target` under the
/// optimum linear LLR.
///
/// The transfer-curve LP is solved at a bisected design noise level: the
/// largest one in `search` at which its best rate still meets the target.
/// The resulting ensemble then gets its own density-evolution threshold,
/// which carries the convergence certificate.
pub fn maximize_threshold(
    spec: &DesignSpec,
    rate_target: f64,
    search: &ThresholdDesignSearch,
) -> Result<ThresholdDesign> {
    if !(rate_target > 0.0 && rate_target < 1.0) {
        return Err(Error::domain(format!("target rate {rate_target} outside (0, 1)")));
    }
    let degrees = spec.allowed_degrees()?;
    let curves = ExitCurves::new(spec);
    let design_at = |sigma_d: f64| -> Result<Option<DegreeDistribution>> {
        let op = Operating::new(sigma_d, &spec.fading)?;
        let Some(lambda) = curves.solve(&op.channel, &degrees, stability_bound(spec, &op)) else {
            return Ok(None);
        };
        Ok(spec
            .ensemble(&sparse(&degrees, &lambda))
            .ok()
            .filter(|dd| dd.rate() >= rate_target))
    };
    let (mut lo, mut hi) = (search.lo, search.hi);
    let Some(mut best) = design_at(lo)? else {
        return Err(Error::Bracket {
            lo,
            hi,
            detail: format!("no ensemble of rate {rate_target} at the lower end"),
        });
    };
    if let Some(dd) = design_at(hi)? {
        best = dd;
    } else {
        while hi - lo > search.tol {
            let mid = 0.5 * (lo + hi);
            match design_at(mid)? {
                Some(dd) => {
                    lo = mid;
                    best = dd;
                }
                None => hi = mid,
            }
        }
    }
    log::debug!("design noise level {lo:.5}, rate {:.5}", best.rate());
    let threshold = ThresholdSearch::default().run(&best, &ThresholdMode::LinearMcla, &spec.fading)?;
    Ok(ThresholdDesign {
        distribution: best,
        threshold,
    })
}
