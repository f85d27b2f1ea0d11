//! Run configuration: flat `key = value` files plus command-line overrides.
//!
//! Keys are the [`SystemParams`] field names, except that `n0` is given in
//! dBm/Hz. The extra keys `vmax`, `beamwidth_deg`, `axis`, `values`, `out`
//! and `seed` mirror the command-line flags.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineConfig, DEFAULT_BEAMWIDTH_DEG};
use crate::error::{Error, Result};
use crate::model::{dbm_per_hz_to_watts, SystemParams};

/// Speed uncertainty used when neither `phi` nor `vmax` is given (`v_max = 20` m/s).
pub const DEFAULT_PHI: f64 = 40.0;
/// Average power budget used when `p_max` is not given (W).
pub const DEFAULT_P_MAX: f64 = 1e-4;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Average power budget (W).
    Power,
    /// Maximum speed `v_max` (m/s), with `phi = 2 v_max`.
    Speed,
}

impl SweepAxis {
    /// Default grid: 9 log-spaced budgets over 1e-5..1e-3 W, or `v_max` 5..40 m/s in steps of 5.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Power => (0..9).map(|k| 1e-5 * 10f64.powf(k as f64 / 4.0)).collect(),
            SweepAxis::Speed => (1..=8).map(|k| 5.0 * k as f64).collect(),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "power" => Ok(SweepAxis::Power),
            "speed" => Ok(SweepAxis::Speed),
            other => Err(Error::Config(format!(
                "axis must be `power` or `speed`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub sweep_axis: SweepAxis,
    pub axis_values: Vec<f64>,
    pub baseline: Option<BaselineConfig>,
    pub output_path: Option<PathBuf>,
    pub seed: u64,
}

/// Values that may come from a config file or from flags; flags win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub phi: Option<f64>,
    pub vmax: Option<f64>,
    pub p_max: Option<f64>,
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}` as a number")))
}

/// Parses a comma-separated list of numbers.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| parse_f64("values", v))
        .collect()
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("axis values must not be empty".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("axis values must be finite".into()));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "axis values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

impl RunConfig {
    /// Builds a configuration from config-file text (possibly empty) and flag overrides.
    pub fn from_text(text: &str, flags: &Overrides) -> Result<Self> {
        let mut params = SystemParams::reference(DEFAULT_PHI, DEFAULT_P_MAX);
        let mut file = Overrides::default();
        let mut beamwidth = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "w_tot" => params.w_tot = parse_f64(key, value)?,
                "lambda" => params.lambda = parse_f64(key, value)?,
                "n0" => params.n0 = dbm_per_hz_to_watts(parse_f64(key, value)?),
                "delta_s" => params.delta_s = parse_f64(key, value)?,
                "d" => params.d = parse_f64(key, value)?,
                "xi" => params.xi = parse_f64(key, value)?,
                "phi" => file.phi = Some(parse_f64(key, value)?),
                "vmax" => file.vmax = Some(parse_f64(key, value)?),
                "v_drift" => params.v_drift = parse_f64(key, value)?,
                "p_max" => file.p_max = Some(parse_f64(key, value)?),
                "beamwidth_deg" => beamwidth = Some(parse_f64(key, value)?),
                "axis" => file.axis = Some(value.parse()?),
                "values" => file.values = Some(parse_values(value)?),
                "out" => file.out = Some(PathBuf::from(value)),
                "seed" => {
                    file.seed =
                        Some(value.parse().map_err(|_| {
                            Error::Config(format!("`seed`: cannot parse `{value}`"))
                        })?)
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }

        // flags replace the whole speed specification, not just one of its two spellings
        let (phi, vmax) = if flags.phi.is_some() || flags.vmax.is_some() {
            (flags.phi, flags.vmax)
        } else {
            (file.phi, file.vmax)
        };
        params.phi = match (phi, vmax) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either `phi` or `vmax`, not both".into(),
                ))
            }
            (Some(phi), None) => phi,
            (None, Some(v)) => 2.0 * v,
            (None, None) => DEFAULT_PHI,
        };
        if let Some(p) = flags.p_max.or(file.p_max) {
            params.p_max = p;
        }
        let sweep_axis = flags.axis.or(file.axis).unwrap_or(SweepAxis::Power);
        let axis_values = flags
            .values
            .clone()
            .or(file.values)
            .unwrap_or_else(|| sweep_axis.default_values());
        check_values(&axis_values)?;

        let baseline = Some(BaselineConfig {
            beamwidth_deg: beamwidth.unwrap_or(DEFAULT_BEAMWIDTH_DEG),
            v_max: params.phi / 2.0,
            p_t: 0.0,
        });
        Ok(RunConfig {
            params,
            sweep_axis,
            axis_values,
            baseline,
            output_path: flags.out.clone().or(file.out),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        })
    }

    pub fn beamwidth_deg(&self) -> f64 {
        self.baseline
            .map_or(DEFAULT_BEAMWIDTH_DEG, |b| b.beamwidth_deg)
    }
}
