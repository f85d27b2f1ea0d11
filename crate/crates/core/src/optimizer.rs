//! Rate maximization under the average power constraint.
//!
//! With water-filling and a tight power constraint, the design reduces to a
//! one-dimensional search over `upsilon` for each beam count `eta`, followed
//! by an exhaustive search over `eta in 2..=eta_max`. For fixed `eta` the
//! derivative of the rate along the power-tight curve has the sign of
//! [`f_eta`], which is strictly decreasing, so its root is found by bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{uth_bounds_hat, SystemParams, REL_EPS};
use crate::perf::{self, p_hat_raw, u_comm_hat_raw, NormalizedDesign};

/// Relative nudge away from the pole of `zeta(upsilon)` at the lower bracket end.
pub const BRACKET_NUDGE: f64 = 1e-9;
/// Default relative bracket width at which bisection stops.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Upper limit on the beam-count search.
pub const ETA_CAP: u32 = 1_000_000;

fn check_eta(eta: u32) -> Result<()> {
    if eta < 2 {
        return Err(domain(format!("eta must be >= 2, got {eta}")));
    }
    Ok(())
}

fn check_budget(p_hat_max: f64) -> Result<()> {
    if !(p_hat_max.is_finite() && p_hat_max > 0.0) {
        return Err(domain(format!(
            "normalized power budget must be > 0, got {p_hat_max}"
        )));
    }
    Ok(())
}

/// Lower end of the open interval on which `f_eta` is defined: the `upsilon`
/// where the post-sweep width equals the trigger width.
pub fn shrinkage_bound(eta: u32) -> Result<f64> {
    check_eta(eta)?;
    Ok(uth_bounds_hat(eta).0)
}

pub fn upsilon_min(eta: u32) -> Result<f64> {
    check_eta(eta)?;
    let (shrink, nonneg) = uth_bounds_hat(eta);
    Ok(shrink.max(nonneg))
}

/// Largest `upsilon` at which zero extra water (`zeta = 0`) still meets the budget.
pub fn upsilon_max(eta: u32, p_hat_max: f64) -> Result<f64> {
    check_eta(eta)?;
    check_budget(p_hat_max)?;
    let e = f64::from(eta);
    let (shrink, _) = uth_bounds_hat(eta);
    Ok(shrink + e * p_hat_max / (e - 1.0) * (1.0 + (1.0 + 2.0 * e / p_hat_max).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityBounds {
    pub eta: u32,
    pub upsilon_min: f64,
    pub upsilon_max: f64,
    pub feasible: bool,
}

pub fn feasibility_bounds(eta: u32, p_hat_max: f64) -> Result<FeasibilityBounds> {
    let lo = upsilon_min(eta)?;
    let hi = upsilon_max(eta, p_hat_max)?;
    Ok(FeasibilityBounds {
        eta,
        upsilon_min: lo,
        upsilon_max: hi,
        feasible: lo <= hi,
    })
}

/// Budget needed for `eta >= 5` beams to admit a `zeta >= 0` design, i.e.
/// the smallest budget with `upsilon_max(eta) >= upsilon_min(eta)`.
fn eta_threshold(eta: u32) -> f64 {
    let e = f64::from(eta);
    (e * e - 5.0 * e + 2.0).powi(2) / (4.0 * (e - 1.0) * (e - 2.0))
}

/// Largest beam count for which the problem is feasible. Always at least 4.
pub fn eta_max(p_hat_max: f64) -> Result<u32> {
    check_budget(p_hat_max)?;
    let mut eta = 4;
    while eta_threshold(eta + 1) <= p_hat_max {
        eta += 1;
        if eta >= ETA_CAP {
            return Err(Error::Infeasible(format!(
                "eta_max exceeds {ETA_CAP} for normalized budget {p_hat_max:e}"
            )));
        }
    }
    Ok(eta)
}

/// Excess water `zeta` that makes the power constraint tight at `(upsilon, eta)`.
pub fn zeta_of(upsilon: f64, eta: u32, p_hat_max: f64) -> Result<f64> {
    check_eta(eta)?;
    check_budget(p_hat_max)?;
    let e = f64::from(eta);
    let gap = upsilon - u_comm_hat_raw(upsilon, e);
    if !(gap > 0.0) {
        return Err(Error::Singular(format!(
            "upsilon = {upsilon} does not exceed the post-sweep width for eta = {eta}"
        )));
    }
    let hi = upsilon_max(eta, p_hat_max)?;
    if upsilon > hi * (1.0 + REL_EPS) {
        return Err(Error::Infeasible(format!(
            "upsilon = {upsilon} exceeds upsilon_max({eta}) = {hi}"
        )));
    }
    Ok(zeta_raw(e, upsilon, gap, p_hat_max).max(0.0))
}

fn zeta_raw(e: f64, upsilon: f64, gap: f64, p_hat_max: f64) -> f64 {
    (e - 1.0) * (upsilon + e / 2.0 - 1.0) / (e * upsilon * gap)
        * (p_hat_max - p_hat_raw(e, upsilon, 0.0))
}

/// Positive multiple of `d/d upsilon` of the normalized rate along the
/// power-tight curve `zeta = zeta_of(upsilon, eta)`.
pub fn f_eta(upsilon: f64, eta: u32, p_hat_max: f64) -> Result<f64> {
    let lo = shrinkage_bound(eta)?;
    let hi = upsilon_max(eta, p_hat_max)?;
    if !(upsilon > lo && upsilon <= hi * (1.0 + REL_EPS)) {
        return Err(domain(format!(
            "f_eta({eta}) is defined on ({lo}, {hi}], got upsilon = {upsilon}"
        )));
    }
    let zeta = zeta_of(upsilon, eta, p_hat_max)?;
    Ok(f_eta_raw(f64::from(eta), upsilon, zeta))
}

fn f_eta_raw(e: f64, upsilon: f64, zeta: f64) -> f64 {
    let uc = u_comm_hat_raw(upsilon, e);
    let span = (e - 1.0) * (upsilon + e / 2.0 - 1.0);
    -(upsilon - uc) / (upsilon * (1.0 + zeta)) * (span + 2.0 * e) / (2.0 * e)
        - span / (e * (1.0 + zeta)) * zeta
        + zeta.ln_1p() * e
        + (upsilon / uc).ln() * (e / 2.0 + 1.0)
}

/// Rate-maximizing `upsilon` for a fixed beam count.
///
/// Bisects `f_eta` on `(shrinkage_bound * (1 + 1e-9), upsilon_max)` until the
/// bracket is narrower than `tol * upsilon_max`, then clamps to the
/// nonnegative-beam bound.
pub fn bisect_upsilon(eta: u32, p_hat_max: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(domain(format!(
            "bisection tolerance must be > 0, got {tol}"
        )));
    }
    let limit = eta_max(p_hat_max)?;
    check_eta(eta)?;
    if eta > limit {
        return Err(Error::Infeasible(format!(
            "eta = {eta} exceeds eta_max = {limit} for normalized budget {p_hat_max:e}"
        )));
    }
    let floor = shrinkage_bound(eta)?;
    let upper = upsilon_max(eta, p_hat_max)?;
    let f = |u: f64| f_eta(u, eta, p_hat_max);

    let mut lo = floor * (1.0 + BRACKET_NUDGE);
    if lo >= upper {
        lo = floor + (upper - floor) * BRACKET_NUDGE;
    }
    let mut f_lo = f(lo)?;
    let mut nudges = 0;
    while f_lo <= 0.0 && nudges < 8 {
        lo = floor + (lo - floor) * 1e-3;
        f_lo = f(lo)?;
        nudges += 1;
    }
    let mut hi = upper;
    let f_hi = f(hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::Solver(format!(
            "f_eta({eta}) has no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}"
        )));
    }

    let width = tol * upper;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let (_, nonneg) = uth_bounds_hat(eta);
    Ok(root.max(nonneg))
}

/// Optimum of the normalized problem for one beam count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaCandidate {
    pub eta: u32,
    pub upsilon: f64,
    pub zeta: f64,
    pub r_hat: f64,
}

pub fn solve_for_eta(eta: u32, p_hat_max: f64, tol: f64) -> Result<EtaCandidate> {
    let upsilon = bisect_upsilon(eta, p_hat_max, tol)?;
    let zeta = zeta_of(upsilon, eta, p_hat_max)?;
    let r_hat = perf::r_hat(eta, upsilon, zeta)?;
    Ok(EtaCandidate {
        eta,
        upsilon,
        zeta,
        r_hat,
    })
}

/// Solves the normalized problem, which depends on the budget alone.
/// Ties in rate go to the smaller beam count.
pub fn optimize_normalized(p_hat_max: f64, tol: f64) -> Result<(EtaCandidate, Vec<EtaCandidate>)> {
    let limit = eta_max(p_hat_max)?;
    let per_eta = (2..=limit)
        .into_par_iter()
        .map(|eta| solve_for_eta(eta, p_hat_max, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut best = per_eta[0];
    for cand in &per_eta[1..] {
        if cand.r_hat > best.r_hat {
            best = *cand;
        }
    }
    Ok((best, per_eta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalDesign {
    pub eta_star: u32,
    pub upsilon_star: f64,
    pub zeta_star: f64,
    /// Sweep-trigger width (m).
    pub u_th_star: f64,
    /// Water level.
    pub rho_star: f64,
    /// Average rate (bit/s).
    pub r_bar_star: f64,
    /// Average power.
    pub p_bar_star: f64,
    pub per_eta: Vec<EtaCandidate>,
}

impl OptimalDesign {
    pub fn normalized(&self) -> NormalizedDesign {
        NormalizedDesign {
            eta: self.eta_star,
            upsilon: self.upsilon_star,
            zeta: self.zeta_star,
        }
    }
}

pub fn optimize(params: &SystemParams) -> Result<OptimalDesign> {
    optimize_with_tol(params, DEFAULT_TOL)
}

pub fn optimize_with_tol(params: &SystemParams, tol: f64) -> Result<OptimalDesign> {
    params.validate()?;
    let budget = perf::p_hat_max(params)?;
    let (best, per_eta) = optimize_normalized(budget, tol)?;
    let design = NormalizedDesign {
        eta: best.eta,
        upsilon: best.upsilon,
        zeta: best.zeta,
    };
    let (u_th, rho) = perf::denormalize(params, &design)?;
    let cycle = perf::cycle_performance(params, best.eta, u_th, rho)?;
    Ok(OptimalDesign {
        eta_star: best.eta,
        upsilon_star: best.upsilon,
        zeta_star: best.zeta,
        u_th_star: u_th,
        rho_star: rho,
        r_bar_star: cycle.r_bar,
        p_bar_star: cycle.p_bar,
        per_eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::{p_hat, r_hat};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn upsilon_min_values() {
        assert_eq!(upsilon_min(2).unwrap(), 4.0);
        assert_eq!(upsilon_min(3).unwrap(), 4.0);
        assert_eq!(upsilon_min(5).unwrap(), 6.0);
        assert!(upsilon_min(1).is_err());
    }

    #[test]
    fn upsilon_max_values() {
        assert!(
            rel(
                upsilon_max(2, 100.0).unwrap(),
                4.0 + 200.0 * (1.0 + 1.04f64.sqrt())
            ) < 1e-14
        );
        assert!(rel(upsilon_max(2, 100.0).unwrap(), 407.96) < 1e-4);
        assert!(
            rel(
                upsilon_max(3, 1.0).unwrap(),
                4.0 + 1.5 * (1.0 + 7f64.sqrt())
            ) < 1e-14
        );
        assert!(rel(upsilon_max(3, 1.0).unwrap(), 9.469) < 1e-4);
        assert!(rel(upsilon_max(2, 1e-14).unwrap(), 4.0) < 1e-6);
        assert!(upsilon_max(2, 0.0).is_err());
    }

    #[test]
    fn upsilon_max_is_zero_excess_point() {
        for eta in 2..10 {
            for p in [0.1, 1.0, 10.0, 100.0] {
                let hi = upsilon_max(eta, p).unwrap();
                assert!(rel(p_hat_raw(f64::from(eta), hi, 0.0), p) < 1e-10);
                assert!(zeta_of(hi, eta, p).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eta_max_values() {
        assert_eq!(eta_max(1.0).unwrap(), 6);
        assert_eq!(eta_max(0.05).unwrap(), 4);
        assert_eq!(eta_max(0.1).unwrap(), 5);
        assert_eq!(eta_max(3.0).unwrap(), 7);
        assert!(rel(eta_threshold(5), 1.0 / 12.0) < 1e-14);
        assert!(rel(eta_threshold(6), 0.8) < 1e-14);
        assert!(rel(eta_threshold(7), 256.0 / 120.0) < 1e-14);
        // at the threshold the zero-excess power at upsilon_min equals the budget
        for eta in 5..12 {
            let p = eta_threshold(eta);
            let at_min = p_hat(eta, upsilon_min(eta).unwrap(), 0.0).unwrap();
            assert!(rel(at_min, p) < 1e-12, "eta = {eta}");
        }
        assert!(eta_max(0.0).is_err());
    }

    /// eta_max against a direct scan of upsilon_max >= upsilon_min.
    #[test]
    fn eta_max_matches_direct_feasibility() {
        for p in [1e-3, 0.1, 0.5, 1.0, 2.0, 3.0, 10.0, 100.0, 1e4] {
            let direct = (2..2000u32)
                .take_while(|&e| feasibility_bounds(e, p).unwrap().feasible)
                .last()
                .unwrap();
            assert_eq!(eta_max(p).unwrap(), direct, "p = {p}");
        }
        for eta in 2..=4 {
            assert!(feasibility_bounds(eta, 1e-9).unwrap().feasible);
        }
    }

    #[test]
    fn zeta_of_values() {
        assert!(rel(zeta_of(8.0, 2, 1.5).unwrap(), 0.25) < 1e-14);
        assert!(rel(p_hat(2, 8.0, zeta_of(8.0, 2, 1.5).unwrap()).unwrap(), 1.5) < 1e-10);
        assert!(zeta_of(8.0, 2, 0.5).unwrap().abs() < 1e-14);
        assert!(matches!(zeta_of(4.0, 2, 1.0), Err(Error::Singular(_))));
        assert!(matches!(zeta_of(1e3, 2, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn f_eta_boundary_signs() {
        for p in [0.1, 1.0, 10.0, 100.0] {
            for eta in 2..=eta_max(p).unwrap() {
                let lo = shrinkage_bound(eta).unwrap() * (1.0 + 1e-9);
                let hi = upsilon_max(eta, p).unwrap();
                assert!(f_eta(lo, eta, p).unwrap() > 0.0);
                assert!(f_eta(hi, eta, p).unwrap() < 0.0);
            }
        }
        assert!(f_eta(shrinkage_bound(2).unwrap(), 2, 1.0).is_err());
        assert!(f_eta(upsilon_max(2, 1.0).unwrap() * 1.01, 2, 1.0).is_err());
    }

    #[test]
    fn bisection_root_is_local_max() {
        let (eta, p) = (2, 1.5);
        let u = bisect_upsilon(eta, p, DEFAULT_TOL).unwrap();
        let hi = upsilon_max(eta, p).unwrap();
        assert!(f_eta(u, eta, p).unwrap().abs() < 1e-6);
        let rate = |x: f64| r_hat(eta, x, zeta_of(x, eta, p).unwrap()).unwrap();
        let delta = 10.0 * DEFAULT_TOL * hi;
        // at this step the rate changes by less than round-off
        let slack = 8.0 * f64::EPSILON * rate(u);
        assert!(rate(u - delta) <= rate(u) + slack);
        assert!(rate(u + delta) <= rate(u) + slack);
        let wide = 1e-4 * hi;
        assert!(rate(u - wide) < rate(u));
        assert!(rate(u + wide) < rate(u));
    }

    #[test]
    fn bisection_clamps_for_large_eta() {
        // At p = 100 the interior root for large eta falls below the nonnegative-beam bound.
        let p = 100.0;
        let mut clamped = 0;
        for eta in 5..=eta_max(p).unwrap() {
            let nonneg = uth_bounds_hat(eta).1;
            let u = bisect_upsilon(eta, p, DEFAULT_TOL).unwrap();
            assert!(u >= upsilon_min(eta).unwrap() && u <= upsilon_max(eta, p).unwrap());
            if u == nonneg {
                clamped += 1;
            }
        }
        assert!(clamped > 0);
    }

    #[test]
    fn bisection_rejects_eta_above_limit() {
        assert!(matches!(
            bisect_upsilon(7, 1.0, DEFAULT_TOL),
            Err(Error::Infeasible(_))
        ));
        assert!(bisect_upsilon(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn optimize_meets_budget() {
        let params = SystemParams::reference(40.0, 1e-4);
        let opt = optimize(&params).unwrap();
        assert!(rel(opt.p_bar_star, params.p_max) < 1e-8);
        assert!(opt.zeta_star >= 0.0);
        assert_eq!(
            opt.per_eta.len() as u32,
            eta_max(perf::p_hat_max(&params).unwrap()).unwrap() - 1
        );
        assert!(opt
            .per_eta
            .iter()
            .all(|c| c.r_hat <= opt.per_eta[(opt.eta_star - 2) as usize].r_hat));
    }

    #[test]
    fn optimum_is_scale_free() {
        let a = SystemParams::reference(40.0, 1e-4);
        let budget = perf::p_hat_max(&a).unwrap();
        let mut b = SystemParams {
            w_tot: 3e8,
            d: 25.0,
            delta_s: 4e-6,
            phi: 7.0,
            ..a
        };
        // keep the normalized budget fixed
        b.p_max = budget / perf::p_hat_max(&SystemParams { p_max: 1.0, ..b }).unwrap();
        let oa = optimize(&a).unwrap();
        let ob = optimize(&b).unwrap();
        assert_eq!(oa.eta_star, ob.eta_star);
        assert!(rel(oa.upsilon_star, ob.upsilon_star) < 1e-9);
        assert!((oa.zeta_star - ob.zeta_star).abs() < 1e-9 * (1.0 + oa.zeta_star));
    }

    #[test]
    fn optimize_rejects_drift() {
        let params = SystemParams {
            v_drift: 2.0,
            ..SystemParams::reference(40.0, 1e-4)
        };
        assert!(matches!(
            optimize(&params),
            Err(Error::DriftNotSupported(_))
        ));
    }

    #[test]
    fn raw_rate_matches_checked() {
        assert_eq!(
            perf::r_hat_raw(2.0, 8.0, 0.25),
            r_hat(2, 8.0, 0.25).unwrap()
        );
    }
}
