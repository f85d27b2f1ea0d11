//! Link budget, water-filling power allocation and the closed-form cycle
//! averages, in physical units and in the dimensionless `(eta, upsilon, zeta)`
//! coordinates.
//!
//! The dimensionless coordinates are
//!
//! * `upsilon = u_th / (delta_s * phi)`
//! * `zeta = d * gamma * rho / (delta_s * phi * upsilon) - 1`
//!
//! and the normalized metrics `r_hat = ln(2) * r_bar / w_tot`,
//! `p_hat = d * gamma * p_bar / (delta_s * phi)` depend on nothing else.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{build_schedule, uth_bounds_hat, SweepSchedule, SystemParams, REL_EPS};

/// SNR scaling factor `lambda^2 xi / (8 pi d^2 n0 w_tot)`, per unit power.
pub fn snr_gamma(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    Ok(
        params.lambda.powi(2) * params.xi
            / (8.0 * PI * params.d.powi(2) * params.n0 * params.w_tot),
    )
}

/// Instantaneous rate (bit/s) with transmit power `p_t` spread over a beam of
/// width `omega_t` rad.
pub fn instantaneous_rate(params: &SystemParams, p_t: f64, omega_t: f64) -> Result<f64> {
    if !(omega_t > 0.0) {
        return Err(domain(format!("beamwidth must be > 0, got {omega_t}")));
    }
    if !(p_t >= 0.0) {
        return Err(domain(format!("transmit power must be >= 0, got {p_t}")));
    }
    let gamma = snr_gamma(params)?;
    Ok(params.w_tot * (gamma * p_t / omega_t).ln_1p() / LN_2)
}

/// Water-filling power `(rho - u_t / (d gamma))^+`.
pub fn waterfilling_power(rho: f64, u_t: f64, d: f64, gamma: f64) -> f64 {
    (rho - u_t / (d * gamma)).max(0.0)
}

/// Water-filling allocation over the data phase `[t_start, t_end]` of one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub rho: f64,
    pub t_start: f64,
    pub t_end: f64,
    u_comm: f64,
    phi: f64,
    d_gamma: f64,
}

impl PowerProfile {
    pub fn new(params: &SystemParams, schedule: &SweepSchedule, rho: f64) -> Result<Self> {
        let d_gamma = params.d * snr_gamma(params)?;
        check_water_level(d_gamma * rho, schedule.u_comm)?;
        Ok(PowerProfile {
            rho,
            t_start: schedule.sweep_duration(params),
            t_end: schedule.t_cycle,
            u_comm: schedule.u_comm,
            phi: params.phi,
            d_gamma,
        })
    }

    /// Uncertainty width at time `t` of the data phase.
    pub fn width_at(&self, t: f64) -> f64 {
        self.u_comm + self.phi * (t - self.t_start)
    }

    pub fn power_at(&self, t: f64) -> f64 {
        (self.rho - self.width_at(t) / self.d_gamma).max(0.0)
    }
}

fn check_water_level(level: f64, u_comm: f64) -> Result<()> {
    if !level.is_finite() || level < u_comm * (1.0 - REL_EPS) {
        return Err(Error::Infeasible(format!(
            "water level d*gamma*rho = {level:e} m is below the post-sweep width {u_comm:e} m"
        )));
    }
    Ok(())
}

/// Checks the design point and returns `(schedule, d * gamma * rho)`.
fn feasible_point(
    params: &SystemParams,
    eta: u32,
    u_th: f64,
    rho: f64,
) -> Result<(SweepSchedule, f64)> {
    let schedule = build_schedule(params, u_th, eta)?;
    let level = params.d * snr_gamma(params)? * rho;
    check_water_level(level, schedule.u_comm)?;
    Ok((schedule, level))
}

/// Bracketed term of the closed-form average rate, in m.
fn rate_bracket(u_th: f64, u_comm: f64, level: f64) -> f64 {
    let mut s = (u_th - u_comm) * (1.0 + level.ln()) - u_th * u_th.ln() + u_comm * u_comm.ln();
    if level <= u_th {
        s += u_th * (u_th / level).ln() + level - u_th;
    }
    s
}

/// Numerator of the closed-form average power, in m^2.
fn power_numerator(u_th: f64, u_comm: f64, level: f64) -> f64 {
    let mut s = (u_th - u_comm) * (2.0 * level - u_th - u_comm);
    if level <= u_th {
        s += (u_th - level).powi(2);
    }
    s
}

/// Average rate over one cycle (bit/s) under water-filling with level `rho`.
pub fn avg_rate_closed(params: &SystemParams, eta: u32, u_th: f64, rho: f64) -> Result<f64> {
    let (schedule, level) = feasible_point(params, eta, u_th, rho)?;
    let bracket = rate_bracket(u_th, schedule.u_comm, level);
    Ok((params.w_tot / (LN_2 * params.phi * schedule.t_cycle) * bracket).max(0.0))
}

/// Average transmit power over one cycle under water-filling with level `rho`.
pub fn avg_power_closed(params: &SystemParams, eta: u32, u_th: f64, rho: f64) -> Result<f64> {
    let (schedule, level) = feasible_point(params, eta, u_th, rho)?;
    let gamma = snr_gamma(params)?;
    let num = power_numerator(u_th, schedule.u_comm, level);
    Ok((num / (2.0 * params.d * params.phi * gamma * schedule.t_cycle)).max(0.0))
}

/// Normalized post-sweep width `u_comm / (delta_s * phi)`.
pub fn u_comm_hat(upsilon: f64, eta: u32) -> Result<f64> {
    if eta < 2 {
        return Err(domain(format!("eta must be >= 2, got {eta}")));
    }
    Ok(u_comm_hat_raw(upsilon, f64::from(eta)))
}

pub(crate) fn u_comm_hat_raw(upsilon: f64, e: f64) -> f64 {
    upsilon / e + 0.5 * e + 1.5 - 1.0 / e
}

/// Smallest admissible `zeta` at `(eta, upsilon)`: the zero-power boundary.
pub fn zeta_floor(upsilon: f64, eta: u32) -> Result<f64> {
    Ok(u_comm_hat(upsilon, eta)? / upsilon - 1.0)
}

/// Checks `(upsilon, zeta)` against the feasible set for `eta`.
pub fn check_normalized(eta: u32, upsilon: f64, zeta: f64) -> Result<()> {
    if eta < 2 {
        return Err(domain(format!("eta must be >= 2, got {eta}")));
    }
    let (shrink, nonneg) = uth_bounds_hat(eta);
    let ups_min = shrink.max(nonneg);
    if !upsilon.is_finite() || upsilon < ups_min * (1.0 - REL_EPS) {
        return Err(Error::Infeasible(format!(
            "upsilon = {upsilon} below upsilon_min({eta}) = {ups_min}"
        )));
    }
    let floor = zeta_floor(upsilon, eta)?;
    if !zeta.is_finite() || (1.0 + zeta) < (1.0 + floor) * (1.0 - REL_EPS) {
        return Err(Error::Infeasible(format!(
            "zeta = {zeta} below the zero-power floor {floor} at upsilon = {upsilon}"
        )));
    }
    Ok(())
}

/// `eta / ((eta - 1) (upsilon + eta/2 - 1))`, the inverse normalized cycle length.
fn cycle_factor(e: f64, upsilon: f64) -> f64 {
    e / ((e - 1.0) * (upsilon + e / 2.0 - 1.0))
}

pub(crate) fn r_hat_raw(e: f64, upsilon: f64, zeta: f64) -> f64 {
    let uc = u_comm_hat_raw(upsilon, e);
    let mut s = (upsilon - uc) * (1.0 + zeta.ln_1p()) - uc * (upsilon / uc).ln();
    if zeta < 0.0 {
        s += upsilon * (zeta - zeta.ln_1p());
    }
    cycle_factor(e, upsilon) * s
}

pub(crate) fn p_hat_raw(e: f64, upsilon: f64, zeta: f64) -> f64 {
    let uc = u_comm_hat_raw(upsilon, e);
    let mut s = (upsilon - uc) * (2.0 * upsilon * (1.0 + zeta) - upsilon - uc);
    if zeta < 0.0 {
        s += (upsilon * zeta).powi(2);
    }
    cycle_factor(e, upsilon) * s / 2.0
}

/// Normalized average rate `ln(2) r_bar / w_tot`.
pub fn r_hat(eta: u32, upsilon: f64, zeta: f64) -> Result<f64> {
    check_normalized(eta, upsilon, zeta)?;
    Ok(r_hat_raw(f64::from(eta), upsilon, zeta).max(0.0))
}

/// Normalized average power `d gamma p_bar / (delta_s phi)`.
pub fn p_hat(eta: u32, upsilon: f64, zeta: f64) -> Result<f64> {
    check_normalized(eta, upsilon, zeta)?;
    Ok(p_hat_raw(f64::from(eta), upsilon, zeta).max(0.0))
}

/// A design point in dimensionless coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedDesign {
    pub eta: u32,
    pub upsilon: f64,
    pub zeta: f64,
}

impl NormalizedDesign {
    pub fn is_feasible(&self) -> bool {
        check_normalized(self.eta, self.upsilon, self.zeta).is_ok()
    }
}

pub fn normalize(params: &SystemParams, u_th: f64, rho: f64, eta: u32) -> Result<NormalizedDesign> {
    let gamma = snr_gamma(params)?;
    let dp = params.delta_phi();
    let upsilon = u_th / dp;
    if !(upsilon > 0.0) {
        return Err(domain(format!("u_th must be > 0, got {u_th}")));
    }
    let zeta = params.d * gamma * rho / (dp * upsilon) - 1.0;
    Ok(NormalizedDesign { eta, upsilon, zeta })
}

/// Inverse of [`normalize`]: returns `(u_th, rho)`.
pub fn denormalize(params: &SystemParams, design: &NormalizedDesign) -> Result<(f64, f64)> {
    let gamma = snr_gamma(params)?;
    let dp = params.delta_phi();
    let u_th = design.upsilon * dp;
    let rho = (1.0 + design.zeta) * dp * design.upsilon / (params.d * gamma);
    Ok((u_th, rho))
}

/// `P_max` expressed in normalized power units.
pub fn p_hat_max(params: &SystemParams) -> Result<f64> {
    let gamma = snr_gamma(params)?;
    Ok(params.d * gamma * params.p_max / params.delta_phi())
}

/// Physical and normalized averages of one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclePerformance {
    pub r_bar: f64,
    pub p_bar: f64,
    pub r_hat: f64,
    pub p_hat: f64,
}

pub fn cycle_performance(
    params: &SystemParams,
    eta: u32,
    u_th: f64,
    rho: f64,
) -> Result<CyclePerformance> {
    let r_bar = avg_rate_closed(params, eta, u_th, rho)?;
    let p_bar = avg_power_closed(params, eta, u_th, rho)?;
    let gamma = snr_gamma(params)?;
    Ok(CyclePerformance {
        r_bar,
        p_bar,
        r_hat: LN_2 * r_bar / params.w_tot,
        p_hat: params.d * gamma * p_bar / params.delta_phi(),
    })
}
