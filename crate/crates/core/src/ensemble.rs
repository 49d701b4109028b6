//! Edge-perspective degree distributions of LDPC ensembles.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on `Σλ_i` and `Σρ_j`. Tables rounded to four digits sum to
/// as much as 1.0014 with fourteen coefficients.
pub const SUM_TOLERANCE: f64 = 2e-3;

/// `λ(x) = Σ λ_i x^{i−1}` and `ρ(x) = Σ ρ_j x^{j−1}`, stored as sorted
/// `(degree, fraction)` pairs.
///
/// JSON form: `{"lambda": [[degree, coeff], ...], "rho": [[degree, coeff], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct DegreeDistribution {
    lambda: Vec<(u32, f64)>,
    rho: Vec<(u32, f64)>,
}

#[derive(Deserialize)]
struct RawDistribution {
    lambda: Vec<(u32, f64)>,
    rho: Vec<(u32, f64)>,
}

impl TryFrom<RawDistribution> for DegreeDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        Self::new(raw.lambda, raw.rho)
    }
}

fn tidy(side: &str, mut coeffs: Vec<(u32, f64)>) -> Result<Vec<(u32, f64)>> {
    coeffs.sort_by_key(|&(d, _)| d);
    for w in coeffs.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::InvalidEnsemble(format!("{side}: degree {} listed twice", w[0].0)));
        }
    }
    for &(d, c) in &coeffs {
        if d < 2 {
            return Err(Error::InvalidEnsemble(format!("{side}: degree {d} is below 2")));
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidEnsemble(format!("{side}: coefficient {c} of degree {d} outside [0, 1]")));
        }
    }
    let sum: f64 = coeffs.iter().map(|&(_, c)| c).sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidEnsemble(format!("{side} coefficients sum to {sum}")));
    }
    Ok(coeffs)
}

impl DegreeDistribution {
    pub fn new(lambda: Vec<(u32, f64)>, rho: Vec<(u32, f64)>) -> Result<Self> {
        let dd = Self {
            lambda: tidy("lambda", lambda)?,
            rho: tidy("rho", rho)?,
        };
        let rate = dd.rate();
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidEnsemble(format!("design rate {rate} outside (0, 1)")));
        }
        Ok(dd)
    }

    /// The `(d_v, d_c)`-regular ensemble.
    pub fn regular(dv: u32, dc: u32) -> Result<Self> {
        Self::new(vec![(dv, 1.0)], vec![(dc, 1.0)])
    }

    pub fn lambda(&self) -> &[(u32, f64)] {
        &self.lambda
    }

    pub fn rho(&self) -> &[(u32, f64)] {
        &self.rho
    }

    pub fn max_variable_degree(&self) -> u32 {
        self.lambda.iter().filter(|&&(_, c)| c > 0.0).map(|&(d, _)| d).max().unwrap_or(2)
    }

    pub fn max_check_degree(&self) -> u32 {
        self.rho.iter().filter(|&&(_, c)| c > 0.0).map(|&(d, _)| d).max().unwrap_or(2)
    }

    /// Design rate `1 − (Σρ_j/j)/(Σλ_i/i)`.
    pub fn rate(&self) -> f64 {
        ensemble_rate(self)
    }

    /// Copy with both sides scaled to sum to exactly one and zero
    /// coefficients dropped.
    pub fn normalized(&self) -> Self {
        let norm = |v: &[(u32, f64)]| {
            let s: f64 = v.iter().map(|&(_, c)| c).sum();
            v.iter().filter(|&&(_, c)| c > 0.0).map(|&(d, c)| (d, c / s)).collect()
        };
        Self {
            lambda: norm(&self.lambda),
            rho: norm(&self.rho),
        }
    }

    /// `ρ'(1) = Σ ρ_j (j − 1)`.
    pub fn rho_prime_at_one(&self) -> f64 {
        self.rho.iter().map(|&(d, c)| c * (d as f64 - 1.0)).sum()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()? + "\n").map_err(|e| Error::io(path, e))
    }
}

/// `1 − (Σ_j ρ_j/j)/(Σ_i λ_i/i)` on the coefficients as given.
pub fn ensemble_rate(dd: &DegreeDistribution) -> f64 {
    let inv = |v: &[(u32, f64)]| v.iter().map(|&(d, c)| c / d as f64).sum::<f64>();
    1.0 - inv(&dd.rho) / inv(&dd.lambda)
}
