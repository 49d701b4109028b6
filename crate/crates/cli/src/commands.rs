//! Subcommand options and their drivers.

use std::fs::{self, File};
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use clap::{Args, ValueEnum};
use mcla_core::capacity::{
    capacity_value, concavity_audit, optimize_r_hat, sigma_from_ebn0, MclaSolution,
};
use mcla_core::channel::ChannelPoint;
use mcla_core::density::{convergence_range_study, fmt_g, DeConfig, ThresholdSearch};
use mcla_core::design::{maximize_rate, maximize_threshold, DesignSpec, ThresholdDesignSearch};
use mcla_core::ldpc::{
    append_ber_csv, construct_code, simulate_ber, ParityCheckMatrix, SimulationOptions, SystematicEncoder,
};
use mcla_core::llr::LlrModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::common::{
    linspace, load_ensemble, parse_degree_list, parse_fading, parse_mode, sibling, write_json, write_sidecar,
};

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value.as_ref().with_context(|| format!("{flag} is required (on the command line or in --config)"))
}

/// What every driver needs to know about the invocation.
pub struct Context {
    pub name: &'static str,
    pub workers: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityArgs {
    /// Explicit noise levels; overrides the --sigma-min/--sigma-max grid.
    #[arg(long, value_delimiter = ',')]
    pub sigma_n: Vec<f64>,
    #[arg(long, default_value_t = 0.4)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 1.2)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 17)]
    pub sigma_steps: usize,
    /// Explicit gain estimates; overrides the --r-hat-min/--r-hat-max grid.
    #[arg(long, value_delimiter = ',')]
    pub r_hat: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub r_hat_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub r_hat_max: f64,
    #[arg(long, default_value_t = 75)]
    pub r_hat_steps: usize,
    /// rayleigh, rician:K, constant:g or table:PATH
    #[arg(long, default_value = "rayleigh")]
    pub fading: String,
    /// Curve rows (sigma_n, r_hat, alpha, c_hat); the per-σ summary goes to
    /// `<out>.summary.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct CapacityRow {
    sigma_n: f64,
    curve: Vec<f64>,
    best: MclaSolution,
    c_true: f64,
    c_ideal: f64,
    max_second_difference: f64,
    local_maxima: usize,
}

pub fn capacity(ctx: &Context, a: CapacityArgs) -> Result<()> {
    let out = required(&a.out, "--out")?;
    let fading = parse_fading(&a.fading)?;
    let sigmas = if a.sigma_n.is_empty() {
        linspace(a.sigma_min, a.sigma_max, a.sigma_steps)?
    } else {
        a.sigma_n.clone()
    };
    let r_hats = if a.r_hat.is_empty() {
        linspace(a.r_hat_min, a.r_hat_max, a.r_hat_steps)?
    } else {
        a.r_hat.clone()
    };
    let rows = sigmas
        .par_iter()
        .map(|&s| -> Result<CapacityRow> {
            let point = ChannelPoint::new(s, fading.clone())?;
            let audit = concavity_audit(&point, &r_hats, 1e-12)?;
            Ok(CapacityRow {
                sigma_n: s,
                curve: audit.values,
                best: optimize_r_hat(&point)?,
                c_true: capacity_value(&point, &LlrModel::TrueNoSi)?,
                c_ideal: capacity_value(&point, &LlrModel::IdealSi)?,
                max_second_difference: audit.max_second_difference,
                local_maxima: audit.local_maxima,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut curves = csv::Writer::from_path(out).with_context(|| format!("creating {}", out.display()))?;
    curves.write_record(["sigma_n", "r_hat", "alpha", "c_hat"])?;
    for row in &rows {
        let s2 = row.sigma_n * row.sigma_n;
        for (r, c) in r_hats.iter().zip(&row.curve) {
            curves.write_record([fmt_g(row.sigma_n), fmt_g(*r), fmt_g(2.0 * r / s2), fmt_g(*c)])?;
        }
    }
    curves.flush()?;

    let summary_path = sibling(out, ".summary.csv");
    let mut summary = csv::Writer::from_path(&summary_path)?;
    summary.write_record([
        "sigma_n",
        "r_hat_opt",
        "alpha_opt",
        "c_hat_max",
        "c_true_no_si",
        "c_ideal_si",
        "gap",
        "max_second_difference",
        "local_maxima",
    ])?;
    for row in &rows {
        summary.write_record([
            fmt_g(row.sigma_n),
            fmt_g(row.best.r_hat_opt),
            fmt_g(row.best.alpha_opt),
            fmt_g(row.best.c_hat_max),
            fmt_g(row.c_true),
            fmt_g(row.c_ideal),
            fmt_g(row.c_true - row.best.c_hat_max),
            fmt_g(row.max_second_difference),
            row.local_maxima.to_string(),
        ])?;
    }
    summary.flush()?;
    write_sidecar(out, ctx.name, ctx.workers, &a)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MclaArgs {
    #[arg(long)]
    pub sigma_n: Option<f64>,
    #[arg(long, default_value = "rayleigh")]
    pub fading: String,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct MclaReport {
    fading: String,
    #[serde(flatten)]
    solution: MclaSolution,
    c_true_no_si: f64,
    c_ideal_si: f64,
}

pub fn mcla(ctx: &Context, a: MclaArgs) -> Result<()> {
    let fading = parse_fading(&a.fading)?;
    let point = ChannelPoint::new(*required(&a.sigma_n, "--sigma-n")?, fading.clone())?;
    let report = MclaReport {
        fading: fading.label(),
        solution: optimize_r_hat(&point)?,
        c_true_no_si: capacity_value(&point, &LlrModel::TrueNoSi)?,
        c_ideal_si: capacity_value(&point, &LlrModel::IdealSi)?,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(out) = &a.out {
        write_json(out, &report)?;
        write_sidecar(out, ctx.name, ctx.workers, &a)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdArgs {
    /// Degree distribution JSON.
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Regular ensemble as dv,dc.
    #[arg(long)]
    pub regular: Option<String>,
    /// ideal-si, true-no-si, mcla, mean-gain or fixed-alpha
    #[arg(long, default_value = "mcla")]
    pub mode: String,
    /// Coefficient for --mode fixed-alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value = "rayleigh")]
    pub fading: String,
    #[arg(long, default_value_t = 0.3)]
    pub sigma_lo: f64,
    #[arg(long, default_value_t = 1.2)]
    pub sigma_hi: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Target message error rate that counts as convergence.
    #[arg(long, default_value_t = 1e-6)]
    pub p_target: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn threshold(ctx: &Context, a: ThresholdArgs) -> Result<()> {
    let ensemble = load_ensemble(&a.ensemble, &a.regular, None)?;
    let mode = parse_mode(&a.mode, a.alpha)?;
    let fading = parse_fading(&a.fading)?;
    let search = ThresholdSearch {
        lo: a.sigma_lo,
        hi: a.sigma_hi,
        tol: a.tol,
        de: DeConfig {
            target_mer: a.p_target,
            max_iter: a.max_iter,
        },
    };
    let result = search.run(&ensemble, &mode, &fading)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    if let Some(out) = &a.out {
        write_json(out, &result)?;
        write_sidecar(out, ctx.name, ctx.workers, &a)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerArgs {
    /// Parity-check matrix; otherwise one is built from the ensemble.
    #[arg(long)]
    pub alist: Option<PathBuf>,
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Regular ensemble as dv,dc (default 3,6).
    #[arg(long)]
    pub regular: Option<String>,
    /// Block length of a constructed code.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub code_seed: u64,
    /// Write the simulated matrix here.
    #[arg(long)]
    pub save_alist: Option<PathBuf>,
    /// LLR modes to simulate, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "mcla")]
    pub mode: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Eb/N0 points in dB.
    #[arg(long, value_delimiter = ',')]
    pub ebn0: Vec<f64>,
    #[arg(long, default_value = "rayleigh")]
    pub fading: String,
    /// Seed of the channel noise, shared by every point.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub min_frame_errors: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_frames: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_frames: u64,
    /// Send random codewords instead of the all-zero word.
    #[arg(long)]
    pub encode: bool,
    /// Directory of per-point progress files; reruns resume from them.
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    /// CSV that results are appended to.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn ber(ctx: &Context, a: BerArgs) -> Result<()> {
    let out = required(&a.out, "--out")?;
    let fading = parse_fading(&a.fading)?;
    if a.ebn0.is_empty() {
        bail!("no Eb/N0 points; pass --ebn0");
    }
    let modes = a
        .mode
        .iter()
        .map(|m| parse_mode(m, a.alpha))
        .collect::<Result<Vec<_>>>()?;
    let h = match &a.alist {
        Some(path) => {
            if a.ensemble.is_some() || a.regular.is_some() {
                bail!("give either --alist or an ensemble, not both");
            }
            ParityCheckMatrix::read_alist(path)?
        }
        None => construct_code(&load_ensemble(&a.ensemble, &a.regular, Some((3, 6)))?, a.n, a.code_seed)?,
    };
    if let Some(path) = &a.save_alist {
        h.write_alist(path)?;
    }
    let rate = if a.encode {
        SystematicEncoder::new(&h).k() as f64 / h.n() as f64
    } else {
        h.design_rate()
    };
    if let Some(dir) = &a.checkpoint_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_sidecar(out, ctx.name, ctx.workers, &a)?;
    for mode in &modes {
        for &ebn0 in &a.ebn0 {
            let point = ChannelPoint::new(sigma_from_ebn0(ebn0, rate), fading.clone())?;
            log::info!("{} at {} dB (sigma_n {})", mode.label(), fmt_g(ebn0), fmt_g(point.sigma_n()));
            let opts = SimulationOptions {
                min_frame_errors: a.min_frame_errors,
                max_frames: a.max_frames,
                decoder_iterations: a.max_iter,
                batch_frames: a.batch_frames,
                encode: a.encode,
                checkpoint: a
                    .checkpoint_dir
                    .as_ref()
                    .map(|d| d.join(format!("{}_{}.json", mode.label(), fmt_g(ebn0)))),
            };
            let mut result = simulate_ber(&h, &point, &mode.model_at(&point)?, &opts, a.seed)?;
            result.llr_mode = mode.label();
            println!(
                "{} {} dB: BER {} ± {}, FER {} ({} frames)",
                result.llr_mode,
                fmt_g(ebn0),
                fmt_g(result.ber),
                fmt_g(result.ber_std_error()),
                fmt_g(result.fer),
                result.frames
            );
            append_ber_csv(out, &[result])?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Highest rate that converges at --sigma-n.
    Rate,
    /// Highest threshold at rate --rate or more.
    Threshold,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignArgs {
    #[arg(long, value_enum, default_value_t = Objective::Rate)]
    pub objective: Objective,
    /// Operating noise level for --objective rate.
    #[arg(long, default_value_t = 0.7436)]
    pub sigma_n: f64,
    /// Minimum rate for --objective threshold.
    #[arg(long, default_value_t = 0.5)]
    pub rate: f64,
    /// Check degrees as "dc" or "d:fraction,...".
    #[arg(long, default_value = "9")]
    pub rho: String,
    #[arg(long, default_value_t = 30)]
    pub dv_max: u32,
    /// Allow every variable degree from 2 to --dv-max.
    #[arg(long)]
    pub full_degrees: bool,
    /// Explicit variable degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Vec<u32>,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub p_target: f64,
    /// Fraction of the stability bound allowed for λ2.
    #[arg(long, default_value_t = 0.9)]
    pub stability_margin: f64,
    #[arg(long, default_value_t = 200)]
    pub max_outer: usize,
    /// Design-noise bracket for --objective threshold.
    #[arg(long, default_value_t = 0.6)]
    pub sigma_lo: f64,
    #[arg(long, default_value_t = 0.8)]
    pub sigma_hi: f64,
    #[arg(long, default_value_t = 2e-3)]
    pub tol: f64,
    #[arg(long, default_value = "rayleigh")]
    pub fading: String,
    /// Degree distribution JSON; the full result with its certificate goes
    /// to `<out>.certificate.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn design(ctx: &Context, a: DesignArgs) -> Result<()> {
    let out = required(&a.out, "--out")?;
    let fading = parse_fading(&a.fading)?;
    let mut spec = DesignSpec {
        rho: parse_degree_list(&a.rho)?,
        dv_max: a.dv_max,
        degrees: (!a.degrees.is_empty()).then(|| a.degrees.clone()),
        max_iter: a.max_iter,
        target_mer: a.p_target,
        stability_margin: a.stability_margin,
        max_outer: a.max_outer,
        fading: fading.clone(),
        ..DesignSpec::default()
    };
    if a.full_degrees {
        spec = spec.with_full_degree_range();
    }
    let certificate = sibling(out, ".certificate.json");
    match a.objective {
        Objective::Rate => {
            let result = maximize_rate(&spec, &ChannelPoint::new(a.sigma_n, fading)?)?;
            result.distribution.save(out)?;
            write_json(&certificate, &result)?;
            println!(
                "rate {} converges at sigma_n {} in {} iterations ({})",
                fmt_g(result.rate),
                fmt_g(result.certificate.sigma_n),
                result.certificate.iterations,
                result.diagnostic
            );
        }
        Objective::Threshold => {
            let search = ThresholdDesignSearch {
                lo: a.sigma_lo,
                hi: a.sigma_hi,
                tol: a.tol,
            };
            let result = maximize_threshold(&spec, a.rate, &search)?;
            result.distribution.save(out)?;
            write_json(&certificate, &result)?;
            println!(
                "rate {} has threshold sigma_n {} ({} dB)",
                fmt_g(result.threshold.rate),
                fmt_g(result.threshold.sigma_star),
                fmt_g(result.threshold.ebn0_star_db)
            );
        }
    }
    write_sidecar(out, ctx.name, ctx.workers, &a)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeArgs {
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Regular ensemble as dv,dc (default 3,6).
    #[arg(long)]
    pub regular: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "2.0,2.5,2.9634,3.5,4.0")]
    pub alpha: Vec<f64>,
    #[arg(long, default_value_t = 0.55)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 0.7)]
    pub sigma_max: f64,
    #[arg(long, default_value_t = 61)]
    pub sigma_steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub p_target: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value = "rayleigh")]
    pub fading: String,
    /// Fixed-α table (alpha, sigma_n, ell_star with −1 for divergence); the
    /// optimum-α column goes to `<out>.mcla.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn range(ctx: &Context, a: RangeArgs) -> Result<()> {
    let out = required(&a.out, "--out")?;
    let ensemble = load_ensemble(&a.ensemble, &a.regular, Some((3, 6)))?;
    let fading = parse_fading(&a.fading)?;
    let sigmas = linspace(a.sigma_min, a.sigma_max, a.sigma_steps)?;
    let cfg = DeConfig {
        target_mer: a.p_target,
        max_iter: a.max_iter,
    };
    let study = convergence_range_study(&ensemble, &fading, &a.alpha, &sigmas, &cfg)?;
    study.write_csv(File::create(out).with_context(|| format!("creating {}", out.display()))?)?;
    study.write_mcla_csv(File::create(sibling(out, ".mcla.csv"))?)?;
    for (i, alpha) in study.alphas.iter().enumerate() {
        let widest = study.widest_sigma(i).map_or_else(|| "none".to_string(), fmt_g);
        println!("alpha {}: converges up to sigma_n {widest}", fmt_g(*alpha));
    }
    write_sidecar(out, ctx.name, ctx.workers, &a)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlistArgs {
    /// Alist file to normalize; otherwise a code is built from the ensemble.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Regular ensemble as dv,dc (default 3,6).
    #[arg(long)]
    pub regular: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn alist_convert(ctx: &Context, a: AlistArgs) -> Result<()> {
    let out = required(&a.out, "--out")?;
    let h = match &a.input {
        Some(path) => {
            if a.ensemble.is_some() || a.regular.is_some() {
                bail!("give either --input or an ensemble, not both");
            }
            ParityCheckMatrix::read_alist(path)?
        }
        None => construct_code(&load_ensemble(&a.ensemble, &a.regular, Some((3, 6)))?, a.n, a.seed)?,
    };
    h.write_alist(out)?;
    println!(
        "n {} m {} design rate {} four-cycles {}",
        h.n(),
        h.m(),
        fmt_g(h.design_rate()),
        h.four_cycles()
    );
    write_sidecar(out, ctx.name, ctx.workers, &a)
}
