//! Fixed-beamwidth reference scheme modeled on IEEE 802.11ad.
//!
//! Beams of fixed width are used; under worst-case bang-bang motion at
//! `v_max` the mobile reaches the beam edge after `r / v_max` seconds, with
//! `r = d tan(beamwidth / 2)`, and a two-beam realignment costing
//! `2 delta_s` follows. Adjacent beams overlap by half, which only explains
//! why two beams suffice and is not modeled further.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::SystemParams;
use crate::perf::snr_gamma;

pub const DEFAULT_BEAMWIDTH_DEG: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub beamwidth_deg: f64,
    /// Worst-case speed magnitude (m/s).
    pub v_max: f64,
    /// Transmit power while communicating.
    pub p_t: f64,
}

impl BaselineConfig {
    pub fn new(v_max: f64, p_t: f64) -> Self {
        BaselineConfig {
            beamwidth_deg: DEFAULT_BEAMWIDTH_DEG,
            v_max,
            p_t,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beamwidth_deg > 0.0 && self.beamwidth_deg < 180.0) {
            return Err(domain(format!(
                "beamwidth must lie in (0, 180) deg, got {}",
                self.beamwidth_deg
            )));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(domain(format!("v_max must be > 0, got {}", self.v_max)));
        }
        if !(self.p_t >= 0.0 && self.p_t.is_finite()) {
            return Err(domain(format!(
                "transmit power must be >= 0, got {}",
                self.p_t
            )));
        }
        Ok(())
    }

    pub fn beamwidth_rad(&self) -> f64 {
        self.beamwidth_deg.to_radians()
    }
}

/// Fraction of time spent communicating.
pub fn baseline_fcomm(params: &SystemParams, cfg: &BaselineConfig) -> Result<f64> {
    cfg.validate()?;
    if !(params.d > 0.0 && params.delta_s > 0.0) {
        return Err(domain("distance and microslot duration must be > 0"));
    }
    let r = params.d * (cfg.beamwidth_rad() / 2.0).tan();
    let dwell = r / cfg.v_max;
    Ok(dwell / (dwell + 2.0 * params.delta_s))
}

/// Average rate (bit/s) and average power of the fixed-beam scheme.
pub fn baseline_rate_power(params: &SystemParams, cfg: &BaselineConfig) -> Result<(f64, f64)> {
    let f_comm = baseline_fcomm(params, cfg)?;
    let gamma = snr_gamma(params)?;
    let rate = params.w_tot * (gamma * cfg.p_t / cfg.beamwidth_rad()).ln_1p() / LN_2 * f_comm;
    Ok((rate, cfg.p_t * f_comm))
}

/// Transmit power giving average power `p_bar_target`.
pub fn baseline_power_for_avg(
    params: &SystemParams,
    cfg: &BaselineConfig,
    p_bar_target: f64,
) -> Result<f64> {
    if !(p_bar_target > 0.0) {
        return Err(domain(format!(
            "target average power must be > 0, got {p_bar_target}"
        )));
    }
    Ok(p_bar_target / baseline_fcomm(params, cfg)?)
}

/// Spectral efficiency (bit/s/Hz) of the fixed-beam scheme at average power `p_bar`.
pub fn baseline_spectral_efficiency(
    params: &SystemParams,
    beamwidth_deg: f64,
    v_max: f64,
    p_bar: f64,
) -> Result<f64> {
    let mut cfg = BaselineConfig {
        beamwidth_deg,
        v_max,
        p_t: 0.0,
    };
    cfg.p_t = baseline_power_for_avg(params, &cfg, p_bar)?;
    let (rate, _) = baseline_rate_power(params, &cfg)?;
    Ok(rate / params.w_tot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
        SystemParams::reference(40.0, 1e-4)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn fcomm_reference_value() {
        let p = params();
        let cfg = BaselineConfig::new(20.0, 1.0);
        let r = 10.0 * 3.5f64.to_radians().tan();
        assert!(rel(r, 0.61163) < 1e-5);
        let f = baseline_fcomm(&p, &cfg).unwrap();
        assert!(rel(f, (r / 20.0) / (r / 20.0 + 2e-5)) < 1e-14);
        assert!(rel(f, 0.999346) < 1e-6);
    }

    #[test]
    fn fcomm_limits() {
        let p = params();
        let slow = baseline_fcomm(&p, &BaselineConfig::new(1e-9, 1.0)).unwrap();
        assert!(1.0 - slow < 1e-12);
        let fast_slots = SystemParams {
            delta_s: 1e-15,
            ..p
        };
        assert!(
            1.0 - baseline_fcomm(&fast_slots, &BaselineConfig::new(20.0, 1.0)).unwrap() < 1e-12
        );
        assert!(baseline_fcomm(&p, &BaselineConfig::new(0.0, 1.0)).is_err());
        let bad = BaselineConfig {
            beamwidth_deg: 0.0,
            ..BaselineConfig::new(20.0, 1.0)
        };
        assert!(baseline_fcomm(&p, &bad).is_err());
    }

    #[test]
    fn fcomm_decreasing() {
        let p = params();
        let mut last = 1.0;
        for v in [1.0, 5.0, 10.0, 20.0, 40.0, 80.0] {
            let f = baseline_fcomm(&p, &BaselineConfig::new(v, 1.0)).unwrap();
            assert!(f < last);
            last = f;
        }
        let mut last = 1.0;
        for ds in [1e-6, 1e-5, 1e-4, 1e-3] {
            let f = baseline_fcomm(
                &SystemParams { delta_s: ds, ..p },
                &BaselineConfig::new(20.0, 1.0),
            )
            .unwrap();
            assert!(f < last);
            last = f;
        }
    }

    #[test]
    fn rate_power_values() {
        let p = params();
        let (r, pw) = baseline_rate_power(&p, &BaselineConfig::new(20.0, 0.0)).unwrap();
        assert_eq!((r, pw), (0.0, 0.0));
        let gamma = snr_gamma(&p).unwrap();
        let cfg = BaselineConfig::new(20.0, 7.0f64.to_radians() / gamma);
        let f = baseline_fcomm(&p, &cfg).unwrap();
        let (r, pw) = baseline_rate_power(&p, &cfg).unwrap();
        assert!(rel(r, p.w_tot * f) < 1e-12);
        assert!(rel(pw, cfg.p_t * f) < 1e-15);
    }

    #[test]
    fn power_inversion() {
        let p = params();
        let cfg = BaselineConfig::new(20.0, 0.0);
        let f = baseline_fcomm(&p, &cfg).unwrap();
        let pt = baseline_power_for_avg(&p, &cfg, 1.0).unwrap();
        assert!(rel(pt, 1.0 / f) < 1e-15);
        let (_, avg) = baseline_rate_power(&p, &BaselineConfig { p_t: pt, ..cfg }).unwrap();
        assert!(rel(avg, 1.0) < 1e-12);
        let slow = BaselineConfig::new(1e-9, 0.0);
        assert!(rel(baseline_power_for_avg(&p, &slow, 2.0).unwrap(), 2.0) < 1e-12);
        assert!(baseline_power_for_avg(&p, &cfg, 0.0).is_err());
    }

    #[test]
    fn rate_increasing_in_power_and_flat_in_speed() {
        let p = params();
        let mut last = -1.0;
        for pt in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
            let (r, _) = baseline_rate_power(&p, &BaselineConfig::new(20.0, pt)).unwrap();
            assert!(r > last);
            last = r;
        }
        let r5 = baseline_rate_power(&p, &BaselineConfig::new(5.0, 1e-4))
            .unwrap()
            .0;
        let r40 = baseline_rate_power(&p, &BaselineConfig::new(40.0, 1e-4))
            .unwrap()
            .0;
        assert!((r5 - r40).abs() / r5 < 0.01);
    }
}
