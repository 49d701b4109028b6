//! Monte Carlo bit-error-rate simulation over the fading channel.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ParityCheckMatrix, SumProductDecoder, SystematicEncoder, DEFAULT_DECODER_ITERATIONS};
use crate::capacity::ebn0_from_sigma;
use crate::channel::{sample_channel, ChannelPoint, Symbol};
use crate::density::fmt_g;
use crate::error::{Error, Result};
use crate::llr::{llr_for_sample, LlrModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationOptions {
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub decoder_iterations: usize,
    /// Frames decoded between stopping checks. Results depend on this value
    /// but not on the number of worker threads.
    pub batch_frames: u64,
    /// Transmit random codewords from a systematic encoder instead of the
    /// all-zero word.
    pub encode: bool,
    /// Progress file, rewritten after every batch and resumed from if present.
    pub checkpoint: Option<PathBuf>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 1_000_000,
            decoder_iterations: DEFAULT_DECODER_ITERATIONS,
            batch_frames: 64,
            encode: false,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub llr_mode: String,
    pub ebn0_db: f64,
    pub sigma_n: f64,
    pub frames: u64,
    pub bits_simulated: u64,
    pub bit_errors: u64,
    /// Sum over frames of the squared bit-error count.
    #[serde(default)]
    pub bit_error_squares: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub seed: u64,
}

impl BerPoint {
    fn new(llr_mode: String, point: &ChannelPoint, rate: f64, seed: u64) -> Self {
        Self {
            llr_mode,
            ebn0_db: ebn0_from_sigma(point.sigma_n(), rate),
            sigma_n: point.sigma_n(),
            frames: 0,
            bits_simulated: 0,
            bit_errors: 0,
            bit_error_squares: 0,
            frame_errors: 0,
            ber: 0.0,
            fer: 0.0,
            seed,
        }
    }

    fn add(&mut self, bits: u64, bit_errors: u64, frame_error: bool) {
        self.frames += 1;
        self.bits_simulated += bits;
        self.bit_errors += bit_errors;
        self.bit_error_squares += bit_errors * bit_errors;
        self.frame_errors += u64::from(frame_error);
        self.ber = self.bit_errors as f64 / self.bits_simulated as f64;
        self.fer = self.frame_errors as f64 / self.frames as f64;
    }

    /// One-sigma standard error of `ber` from the frame-to-frame spread of
    /// bit-error counts. Errors cluster within failed frames, so the binomial
    /// formula over bits would understate it.
    pub fn ber_std_error(&self) -> f64 {
        if self.frames < 2 {
            return f64::INFINITY;
        }
        let f = self.frames as f64;
        let n = self.bits_simulated as f64 / f;
        let mean = self.bit_errors as f64 / f;
        let var = (self.bit_error_squares as f64 / f - mean * mean).max(0.0) * f / (f - 1.0);
        (var / f).sqrt() / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    n: usize,
    seed: u64,
    sigma_n: f64,
    llr_mode: String,
    progress: BerPoint,
}

/// Transmits one frame and decodes it; returns (bit errors, frame error).
fn run_frame(
    h: &ParityCheckMatrix,
    decoder: &mut SumProductDecoder<'_>,
    encoder: Option<&SystematicEncoder>,
    point: &ChannelPoint,
    model: &LlrModel,
    opts: &SimulationOptions,
    seed: u64,
    frame: u64,
) -> Result<(u64, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    let word = match encoder {
        Some(enc) => {
            let message: Vec<u8> = (0..enc.k()).map(|_| rng.gen_range(0..2u8)).collect();
            enc.encode(&message)
        }
        None => vec![0u8; h.n()],
    };
    let llrs = word
        .iter()
        .map(|&b| llr_for_sample(&sample_channel(point, Symbol::from_bit(b), &mut rng), point, model))
        .collect::<Result<Vec<f64>>>()?;
    let out = decoder.decode(&llrs, opts.decoder_iterations);
    let errors = out.bits.iter().zip(&word).filter(|(a, b)| a != b).count() as u64;
    Ok((errors, errors > 0))
}

/// Simulates `h` at `point` with channel LLRs from `model` until
/// `min_frame_errors` frame errors or `max_frames` frames.
///
/// Frame `f` draws all of its randomness from ChaCha8 seeded with `seed` on
/// stream `f`, so a run is reproducible for any worker count.
pub fn simulate_ber(
    h: &ParityCheckMatrix,
    point: &ChannelPoint,
    model: &LlrModel,
    opts: &SimulationOptions,
    seed: u64,
) -> Result<BerPoint> {
    let encoder = opts.encode.then(|| SystematicEncoder::new(h));
    let rate = match &encoder {
        Some(e) => e.k() as f64 / h.n() as f64,
        None => h.design_rate(),
    };
    let label = model.label();
    let mut acc = BerPoint::new(label.clone(), point, rate, seed);
    if let Some(path) = &opts.checkpoint {
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let cp: Checkpoint = serde_json::from_str(&text)?;
            if cp.n != h.n() || cp.seed != seed || cp.sigma_n != point.sigma_n() || cp.llr_mode != label {
                return Err(Error::domain(format!("checkpoint {} belongs to a different run", path.display())));
            }
            acc = cp.progress;
            log::info!("resuming {} at frame {}", path.display(), acc.frames);
        }
    }
    let batch = opts.batch_frames.max(1);
    while acc.frame_errors < opts.min_frame_errors && acc.frames < opts.max_frames {
        let start = acc.frames;
        let end = (start + batch).min(opts.max_frames);
        let results = (start..end)
            .into_par_iter()
            .map_init(
                || SumProductDecoder::new(h),
                |dec, f| run_frame(h, dec, encoder.as_ref(), point, model, opts, seed, f),
            )
            .collect::<Result<Vec<_>>>()?;
        for (errors, frame_error) in results {
            acc.add(h.n() as u64, errors, frame_error);
        }
        log::debug!(
            "{label} σ={}: {} frames, {} frame errors, BER {:.3e}",
            point.sigma_n(),
            acc.frames,
            acc.frame_errors,
            acc.ber
        );
        if let Some(path) = &opts.checkpoint {
            save_checkpoint(path, h.n(), seed, point.sigma_n(), &label, &acc)?;
        }
    }
    Ok(acc)
}

fn save_checkpoint(path: &Path, n: usize, seed: u64, sigma_n: f64, label: &str, acc: &BerPoint) -> Result<()> {
    let cp = Checkpoint {
        n,
        seed,
        sigma_n,
        llr_mode: label.to_string(),
        progress: acc.clone(),
    };
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_string_pretty(&cp)?).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub const BER_CSV_HEADER: [&str; 9] = [
    "mode",
    "ebn0_db",
    "sigma_n",
    "frames",
    "bit_errors",
    "frame_errors",
    "ber",
    "fer",
    "seed",
];

/// Appends `points` to a CSV file, writing the header if the file is new.
pub fn append_ber_csv(path: impl AsRef<Path>, points: &[BerPoint]) -> Result<()> {
    let path = path.as_ref();
    let fresh = !path.exists() || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(BER_CSV_HEADER)?;
    }
    for p in points {
        w.write_record([
            p.llr_mode.clone(),
            fmt_g(p.ebn0_db),
            fmt_g(p.sigma_n),
            p.frames.to_string(),
            p.bit_errors.to_string(),
            p.frame_errors.to_string(),
            fmt_g(p.ber),
            fmt_g(p.fer),
            p.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
