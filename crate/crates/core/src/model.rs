//! Geometry and timing of one beam-sweeping / data-communication cycle.
//!
//! Positions are expressed in the cycle's local frame: at the start of the
//! cycle the uncertainty interval is `[0, u_th]`. Callers holding a median
//! position estimate `p_hat` shift by `p_hat - u_th / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result, UthBound};

/// Relative slack applied when comparing a value against a closed-form bound.
pub(crate) const REL_EPS: f64 = 1e-12;

/// Default small-angle threshold (rad) for `u_th / d`.
pub const SMALL_ANGLE_THRESHOLD: f64 = 0.35;

/// Physical scenario constants.
///
/// Power quantities (`p_max`, water level, transmit power) share one opaque
/// unit such that `gamma * P` is dimensionless. With `n0` in W/Hz that unit
/// is the watt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Bandwidth (Hz).
    pub w_tot: f64,
    /// Carrier wavelength (m).
    pub lambda: f64,
    /// Noise power spectral density (W/Hz).
    pub n0: f64,
    /// Microslot duration (s).
    pub delta_s: f64,
    /// Base station to mobile distance (m).
    pub d: f64,
    /// Antenna efficiency in (0, 1].
    pub xi: f64,
    /// Speed uncertainty `v_max - v_min` (m/s).
    pub phi: f64,
    /// Drift velocity (m/s). Must be zero for every cycle computation.
    pub v_drift: f64,
    /// Average power budget.
    pub p_max: f64,
}

impl SystemParams {
    /// 60 GHz carrier, 1.76 GHz bandwidth, -174 dBm/Hz noise, 10 us microslots,
    /// 10 m distance and unit antenna efficiency.
    pub fn reference(phi: f64, p_max: f64) -> Self {
        SystemParams {
            w_tot: 1.76e9,
            lambda: wavelength(60e9),
            n0: dbm_per_hz_to_watts(-174.0),
            delta_s: 10e-6,
            d: 10.0,
            xi: 1.0,
            phi,
            v_drift: 0.0,
            p_max,
        }
    }

    /// Checks every field invariant, including the zero-drift requirement.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("w_tot", self.w_tot),
            ("lambda", self.lambda),
            ("n0", self.n0),
            ("delta_s", self.delta_s),
            ("d", self.d),
            ("xi", self.xi),
            ("phi", self.phi),
            ("p_max", self.p_max),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("must be finite and strictly positive, got {value}"),
                });
            }
        }
        if self.xi > 1.0 {
            return Err(Error::InvalidParams {
                field: "xi",
                reason: format!("antenna efficiency must lie in (0, 1], got {}", self.xi),
            });
        }
        if !self.v_drift.is_finite() {
            return Err(Error::InvalidParams {
                field: "v_drift",
                reason: "must be finite".into(),
            });
        }
        if self.v_drift != 0.0 {
            return Err(Error::DriftNotSupported(self.v_drift));
        }
        Ok(())
    }

    /// Distance the uncertainty grows during one microslot, `delta_s * phi` (m).
    pub fn delta_phi(&self) -> f64 {
        self.delta_s * self.phi
    }
}

/// Carrier wavelength for a frequency in Hz, with `c = 3e8` m/s.
pub fn wavelength(carrier_hz: f64) -> f64 {
    3.0e8 / carrier_hz
}

/// Converts a noise density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Uncertainty interval `[center - width/2, center + width/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyInterval {
    pub center: f64,
    pub width: f64,
}

impl UncertaintyInterval {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(width >= 0.0) {
            return Err(domain(format!(
                "uncertainty width must be >= 0, got {width}"
            )));
        }
        Ok(UncertaintyInterval { center, width })
    }

    /// The interval after `dt` seconds without a sweep. The center is kept.
    pub fn after(&self, phi: f64, dt: f64) -> Result<Self> {
        Ok(UncertaintyInterval {
            center: self.center,
            width: uncertainty_after(self.width, phi, dt)?,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (
            self.center - self.width / 2.0,
            self.center + self.width / 2.0,
        )
    }
}

/// Width of the uncertainty interval after `dt` seconds without sweeping.
pub fn uncertainty_after(u0: f64, phi: f64, dt: f64) -> Result<f64> {
    if !(u0 >= 0.0 && phi >= 0.0 && dt >= 0.0) {
        return Err(domain(format!(
            "uncertainty_after needs nonnegative inputs, got u0={u0}, phi={phi}, dt={dt}"
        )));
    }
    Ok(u0 + phi * dt)
}

fn check_eta(eta: u32) -> Result<()> {
    if eta < 2 {
        return Err(domain(format!(
            "at least two sweeping beams are required, got {eta}"
        )));
    }
    Ok(())
}

/// The two dimensionless lower bounds on `u_th / (delta_s * phi)`:
/// `(shrinkage, nonnegative beams)`.
pub(crate) fn uth_bounds_hat(eta: u32) -> (f64, f64) {
    let e = f64::from(eta);
    let shrink = (e * e / 2.0 + 1.5 * e - 1.0) / (e - 1.0);
    let nonneg = 0.5 * (e - 1.0) * (e - 2.0);
    (shrink, nonneg)
}

/// Smallest sweep-trigger width for which an `eta`-beam sweep is feasible.
pub fn min_uth(params: &SystemParams, eta: u32) -> Result<f64> {
    check_eta(eta)?;
    let (shrink, nonneg) = uth_bounds_hat(eta);
    Ok(params.delta_phi() * shrink.max(nonneg))
}

/// The sweep layout and the resulting cycle timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSchedule {
    pub eta: u32,
    /// Sweep-trigger width (m).
    pub u_th: f64,
    /// Beamwidths of the `eta` sweeping beams (rad).
    pub omegas: Vec<f64>,
    /// Position interval scanned in each microslot, local frame (m).
    pub intervals: Vec<(f64, f64)>,
    /// Uncertainty width when data communication starts (m).
    pub u_comm: f64,
    /// Cycle duration (s).
    pub t_cycle: f64,
}

impl SweepSchedule {
    /// Duration of the sweep phase, `eta * delta_s`.
    pub fn sweep_duration(&self, params: &SystemParams) -> f64 {
        f64::from(self.eta) * params.delta_s
    }

    /// Position window that must contain the mobile at the end of the sweep
    /// when beam `beam` (1-based) is reported. Its width is `u_comm` for
    /// every beam.
    pub fn post_sweep_window(&self, params: &SystemParams, beam: u32) -> (f64, f64) {
        let (a, b) = self.intervals[(beam - 1) as usize];
        let slack = f64::from(self.eta + 1 - beam) * params.delta_phi() / 2.0;
        (a - slack, b + slack)
    }
}

/// Builds the sweep schedule for trigger width `u_th` and `eta` beams.
///
/// Consecutive beams widen by `delta_s * phi / d` so that the post-sweep
/// width does not depend on which beam wins, and together they cover
/// `[0, u_th]` plus the motion accumulated during the sweep.
pub fn build_schedule(params: &SystemParams, u_th: f64, eta: u32) -> Result<SweepSchedule> {
    params.validate()?;
    check_eta(eta)?;
    if !u_th.is_finite() {
        return Err(domain(format!("u_th must be finite, got {u_th}")));
    }
    let dp = params.delta_phi();
    let (shrink, nonneg) = uth_bounds_hat(eta);
    for (bound, hat) in [
        (UthBound::Shrinkage, shrink),
        (UthBound::NonNegativeBeams, nonneg),
    ] {
        let min = dp * hat;
        if u_th < min * (1.0 - REL_EPS) {
            return Err(Error::UthTooSmall {
                eta,
                u_th,
                min,
                bound,
            });
        }
    }

    let e = f64::from(eta);
    let d = params.d;
    let step = dp / d;
    let omega1 = ((u_th - dp * nonneg) / (d * e)).max(0.0);
    let omegas: Vec<f64> = (0..eta).map(|i| omega1 + f64::from(i) * step).collect();

    let mut intervals = Vec::with_capacity(eta as usize);
    let mut covered = 0.0;
    for (i, w) in omegas.iter().enumerate() {
        let backoff = i as f64 * dp / 2.0;
        let left = d * covered - backoff;
        covered += w;
        intervals.push((left, d * covered - backoff));
    }

    let u_comm = u_th / e + e * dp - dp * (e - 1.0) * (e - 2.0) / (2.0 * e);
    let t_cycle =
        (e - 1.0) * u_th / (params.phi * e) + params.delta_s / 2.0 * (e - 1.0) * (e - 2.0) / e;

    Ok(SweepSchedule {
        eta,
        u_th,
        omegas,
        intervals,
        u_comm,
        t_cycle,
    })
}

/// A non-fatal observation about the validity of the model at some input.
#[derive(Debug, Clone, PartialEq)]
pub struct Warning {
    pub message: String,
}

/// Flags trigger widths whose beam angle `u_th / d` is too large for the
/// small-angle approximation `2 atan(x/2) ~ x` (about 1% error at 0.35 rad).
pub fn validate_small_angle(params: &SystemParams, u_th: f64) -> Vec<Warning> {
    validate_small_angle_with(params, u_th, SMALL_ANGLE_THRESHOLD)
}

pub fn validate_small_angle_with(params: &SystemParams, u_th: f64, threshold: f64) -> Vec<Warning> {
    let angle = u_th / params.d;
    if angle > threshold {
        vec![Warning {
            message: format!(
                "u_th/d = {angle:.4} rad exceeds {threshold} rad; small-angle beamwidth approximation is inaccurate"
            ),
        }]
    } else {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// d = 10 m and delta_s * phi = 1e-4 m.
    fn params() -> SystemParams {
        SystemParams {
            delta_s: 1e-5,
            phi: 10.0,
            ..SystemParams::reference(10.0, 1e-3)
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn uncertainty_growth() {
        assert_eq!(uncertainty_after(1.0, 10.0, 0.05).unwrap(), 1.5);
        assert_eq!(uncertainty_after(0.5, 0.0, 100.0).unwrap(), 0.5);
        assert_eq!(uncertainty_after(1.0, 10.0, 0.0).unwrap(), 1.0);
        assert!(uncertainty_after(-1.0, 10.0, 0.0).is_err());
        assert!(uncertainty_after(1.0, -1.0, 0.0).is_err());
        assert!(uncertainty_after(1.0, 1.0, -1e-9).is_err());
    }

    #[test]
    fn interval_growth_keeps_center() {
        let u = UncertaintyInterval::new(3.0, 1.0).unwrap();
        let later = u.after(10.0, 0.05).unwrap();
        assert_eq!(later.center, 3.0);
        assert_eq!(later.bounds(), (2.25, 3.75));
        assert!(UncertaintyInterval::new(0.0, -0.1).is_err());
    }

    #[test]
    fn min_uth_values() {
        let p = params();
        assert!(rel(min_uth(&p, 2).unwrap(), 4e-4) < 1e-12);
        assert!(rel(min_uth(&p, 5).unwrap(), 6e-4) < 1e-12);
        assert!(rel(min_uth(&p, 4).unwrap(), 26.0 / 6.0 * 1e-4) < 1e-12);
        assert!(min_uth(&p, 1).is_err());
        assert!(min_uth(&p, 0).is_err());
    }

    #[test]
    fn schedule_eta2() {
        let p = params();
        let s = build_schedule(&p, 1.0, 2).unwrap();
        assert!(rel(s.omegas[0], 0.05) < 1e-12);
        assert!(rel(s.omegas[1], 0.05001) < 1e-12);
        assert!(rel(s.u_comm, 0.5 + 2e-4) < 1e-12);
        assert!(rel(s.t_cycle, 0.05) < 1e-12);
        assert_eq!(s.intervals[0], (0.0, 0.5));
    }

    #[test]
    fn schedule_eta3() {
        let p = params();
        let s = build_schedule(&p, 1.0, 3).unwrap();
        assert!(rel(s.omegas[0], 1.0 / 30.0 - 1e-5 / 3.0) < 1e-12);
        let total: f64 = s.omegas.iter().sum::<f64>() * p.d;
        assert!(rel(total, 1.0 + 2e-4) < 1e-12);
    }

    #[test]
    fn drift_rejected() {
        let p = SystemParams {
            v_drift: 1.0,
            ..params()
        };
        assert!(matches!(
            build_schedule(&p, 1.0, 2),
            Err(Error::DriftNotSupported(_))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        for p in [
            SystemParams { d: 0.0, ..params() },
            SystemParams {
                xi: 1.5,
                ..params()
            },
            SystemParams {
                n0: f64::NAN,
                ..params()
            },
            SystemParams {
                p_max: -1.0,
                ..params()
            },
        ] {
            assert!(matches!(p.validate(), Err(Error::InvalidParams { .. })));
        }
    }

    #[test]
    fn below_min_uth_reports_branch() {
        let p = params();
        // eta <= 4: shrinkage dominates
        let m = min_uth(&p, 3).unwrap();
        match build_schedule(&p, m * (1.0 - 1e-9), 3) {
            Err(Error::UthTooSmall { bound, .. }) => assert_eq!(bound, UthBound::Shrinkage),
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_schedule(&p, m * (1.0 + 1e-9), 3).is_ok());
        assert!(build_schedule(&p, m, 3).is_ok());
        // eta >= 5: nonnegative beams dominate
        let m = min_uth(&p, 7).unwrap();
        match build_schedule(&p, m * (1.0 - 1e-9), 7) {
            Err(Error::UthTooSmall { bound, .. }) => assert_eq!(bound, UthBound::NonNegativeBeams),
            other => panic!("unexpected {other:?}"),
        }
        let s = build_schedule(&p, m, 7).unwrap();
        assert!(s.omegas[0].abs() < 1e-15);
        assert!(s.omegas.iter().all(|w| *w >= 0.0));
    }

    #[test]
    fn shrinkage_boundary_is_tight() {
        let p = params();
        for eta in 2..=4 {
            let m = min_uth(&p, eta).unwrap();
            let s = build_schedule(&p, m, eta).unwrap();
            assert!(rel(s.u_comm, m) < 1e-12, "eta={eta}");
            let s = build_schedule(&p, 2.0 * m, eta).unwrap();
            assert!(s.u_comm < s.u_th);
        }
    }

    #[test]
    fn small_angle_warnings() {
        let p = params();
        assert!(validate_small_angle(&p, 1.0).is_empty());
        assert_eq!(validate_small_angle(&p, 5.0).len(), 1);
        assert!(validate_small_angle(&p, 3.5).is_empty());
        assert_eq!(validate_small_angle_with(&p, 1.0, 0.05).len(), 1);
    }

    #[test]
    fn reference_constants() {
        let p = SystemParams::reference(40.0, 1e-4);
        assert_eq!(p.lambda, 5e-3);
        assert!(rel(p.n0, 10f64.powf(-20.4)) < 1e-12);
        assert!(p.validate().is_ok());
    }
}
