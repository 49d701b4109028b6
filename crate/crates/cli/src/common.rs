//! Option parsing shared by the subcommands: fading laws, ensembles, LLR
//! modes, configuration files and provenance sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mcla_core::channel::FadingDistribution;
use mcla_core::density::ThresholdMode;
use mcla_core::ensemble::DegreeDistribution;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// `rayleigh`, `rician:K`, `constant:g` or `table:PATH`.
pub fn parse_fading(s: &str) -> Result<FadingDistribution> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let number = || -> Result<f64> { arg.parse().with_context(|| format!("fading parameter in {s:?}")) };
    Ok(match kind {
        "rayleigh" if arg.is_empty() => FadingDistribution::RayleighNormalized,
        "rician" => FadingDistribution::rician(number()?)?,
        "constant" => FadingDistribution::constant(number()?)?,
        "table" if !arg.is_empty() => FadingDistribution::from_csv(arg)?,
        _ => bail!("unknown fading {s:?}; expected rayleigh, rician:K, constant:g or table:PATH"),
    })
}

/// LLR rule by name; `fixed-alpha` takes its coefficient from `alpha`.
pub fn parse_mode(s: &str, alpha: Option<f64>) -> Result<ThresholdMode> {
    Ok(match s {
        "ideal-si" => ThresholdMode::IdealSi,
        "true-no-si" => ThresholdMode::TrueNoSi,
        "mcla" => ThresholdMode::LinearMcla,
        "mean-gain" => ThresholdMode::LinearMeanGain,
        "fixed-alpha" => ThresholdMode::LinearFixedAlpha {
            alpha: alpha.ok_or_else(|| anyhow!("mode fixed-alpha needs --alpha"))?,
        },
        _ => bail!("unknown LLR mode {s:?}; expected ideal-si, true-no-si, mcla, mean-gain or fixed-alpha"),
    })
}

/// `"9"` or `"8:0.5,9:0.5"` as (degree, edge fraction) pairs.
pub fn parse_degree_list(s: &str) -> Result<Vec<(u32, f64)>> {
    s.split(',')
        .map(|item| {
            let (d, c) = item.split_once(':').unwrap_or((item, "1"));
            Ok((
                d.trim().parse().with_context(|| format!("degree in {item:?}"))?,
                c.trim().parse().with_context(|| format!("fraction in {item:?}"))?,
            ))
        })
        .collect()
}

/// Ensemble from a JSON file, a `dv,dc` pair, or `default` when both are absent.
pub fn load_ensemble(
    ensemble: &Option<PathBuf>,
    regular: &Option<String>,
    default: Option<(u32, u32)>,
) -> Result<DegreeDistribution> {
    match (ensemble, regular) {
        (Some(_), Some(_)) => bail!("give either --ensemble or --regular, not both"),
        (Some(path), None) => Ok(DegreeDistribution::load(path)?),
        (None, Some(pair)) => {
            let (dv, dc) = pair
                .split_once(',')
                .ok_or_else(|| anyhow!("--regular expects dv,dc, got {pair:?}"))?;
            Ok(DegreeDistribution::regular(dv.trim().parse()?, dc.trim().parse()?)?)
        }
        (None, None) => match default {
            Some((dv, dc)) => Ok(DegreeDistribution::regular(dv, dc)?),
            None => bail!("an ensemble is required: --ensemble FILE or --regular dv,dc"),
        },
    }
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    match steps {
        0 => bail!("a grid needs at least one point"),
        1 => Ok(vec![lo]),
        _ => {
            if !(hi > lo) {
                bail!("grid bounds must increase, got [{lo}, {hi}]");
            }
            Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
        }
    }
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Settings read from a `--config` file. Keys are the subcommand's long
/// option names (dashes or underscores); `workers` and `command` are global.
#[derive(Debug, Default)]
pub struct ConfigFile {
    pub workers: Option<usize>,
    overrides: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path, command: &str) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let Value::Object(map) = value else {
            bail!("{} must hold a JSON object", path.display());
        };
        let mut cfg = ConfigFile::default();
        for (key, value) in map {
            match key.replace('-', "_").as_str() {
                "workers" => {
                    cfg.workers = Some(serde_json::from_value(value).context("config key workers")?);
                }
                "version" => {}
                "command" => {
                    if value.as_str() != Some(command) {
                        bail!("{} was written for command {value}, not {command:?}", path.display());
                    }
                }
                k => {
                    cfg.overrides.insert(k.to_string(), value);
                }
            }
        }
        Ok(cfg)
    }

    /// `args` with every configured key replacing the command-line value.
    pub fn apply<T: Serialize + DeserializeOwned>(&self, args: T) -> Result<T> {
        if self.overrides.is_empty() {
            return Ok(args);
        }
        let mut value = serde_json::to_value(args)?;
        let Value::Object(map) = &mut value else {
            unreachable!("argument structs serialize to objects");
        };
        map.extend(self.overrides.clone());
        serde_json::from_value(value).context("applying the config file")
    }
}

/// Writes the resolved arguments next to `out` as `<out>.config.json`, in a
/// form `--config` accepts. The output path itself is left out so a replay
/// can write elsewhere.
pub fn write_sidecar<T: Serialize>(out: &Path, command: &str, workers: usize, args: &T) -> Result<()> {
    let Value::Object(mut fields) = serde_json::to_value(args)? else {
        unreachable!("argument structs serialize to objects");
    };
    let mut map = Map::new();
    map.insert("command".into(), command.into());
    map.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    map.insert("workers".into(), workers.into());
    fields.remove("out");
    map.extend(fields);
    let path = sibling(out, ".config.json");
    fs::write(&path, serde_json::to_string_pretty(&Value::Object(map))? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}
