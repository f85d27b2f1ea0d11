//! Verification suites pairing each closed form or solver result with an
//! independent numerical check. Each suite yields one [`CheckOutcome`] row.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::jensen::jensen_check;
use super::quadrature::{integrate_power_numeric, integrate_rate_numeric};
use super::trajectory::{coverage_monte_carlo, SpeedKind};
use crate::error::Result;
use crate::format::{fmt_num, write_csv_row};
use crate::model::{build_schedule, min_uth, SystemParams};
use crate::optimizer::{eta_max, f_eta, shrinkage_bound, upsilon_max, upsilon_min, zeta_of};
use crate::perf::{avg_power_closed, avg_rate_closed, r_hat, snr_gamma};

pub const REPORT_HEADER: [&str; 4] = ["check_name", "n_cases", "n_failures", "worst_residual"];

/// Relative agreement required between closed forms and quadrature.
pub const CLOSED_FORM_TOL: f64 = 1e-7;
/// Self-consistency target of the quadrature.
pub const QUADRATURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check_name: String,
    pub n_cases: usize,
    pub n_failures: usize,
    pub worst_residual: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.n_failures == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub closed_form_cases: usize,
    pub jensen_points: usize,
    pub jensen_profiles: usize,
    pub trajectories: usize,
    pub fd_points: usize,
    /// Relative error injected into the closed forms before comparison.
    pub perturb_closed_form: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 1,
            closed_form_cases: 200,
            jensen_points: 5,
            jensen_profiles: 200,
            trajectories: 100_000,
            fd_points: 50,
            perturb_closed_form: 0.0,
        }
    }
}

/// A random feasible `(params, eta, u_th, rho)` tuple. Even `index` puts the
/// water level below `u_th` (power switches off before the cycle ends), odd
/// `index` above it.
pub fn random_tuple(rng: &mut ChaCha8Rng, index: usize) -> Result<(SystemParams, u32, f64, f64)> {
    let params = SystemParams {
        d: rng.gen_range(5.0..50.0),
        ..SystemParams::reference(rng.gen_range(1.0..80.0), 1e-4)
    };
    let eta = rng.gen_range(2..=8);
    let dp = params.delta_phi();
    let lo = min_uth(&params, eta)? * (1.0 + 1e-3);
    let u_th = lo * (1e3 * dp / lo).powf(rng.gen::<f64>());
    let schedule = build_schedule(&params, u_th, eta)?;
    let level = if index.is_multiple_of(2) {
        let floor = schedule.u_comm * (1.0 + 1e-3);
        floor + (u_th - floor) * rng.gen::<f64>()
    } else {
        u_th * rng.gen_range(1.0..2.0)
    };
    let rho = level / (params.d * snr_gamma(&params)?);
    Ok((params, eta, u_th, rho))
}

pub fn closed_form_vs_quadrature(n: usize, seed: u64, perturb: f64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let (params, eta, u_th, rho) = random_tuple(&mut rng, i)?;
        let rate = avg_rate_closed(&params, eta, u_th, rho)? * (1.0 + perturb);
        let power = avg_power_closed(&params, eta, u_th, rho)? * (1.0 + perturb);
        let rate_q = integrate_rate_numeric(&params, eta, u_th, rho, QUADRATURE_TOL)?;
        let power_q = integrate_power_numeric(&params, eta, u_th, rho, QUADRATURE_TOL)?;
        let err = ((rate - rate_q).abs() / rate_q).max((power - power_q).abs() / power_q);
        worst = worst.max(err);
        if !(err <= CLOSED_FORM_TOL) {
            failures += 1;
        }
    }
    Ok(CheckOutcome {
        check_name: "closed_form_vs_quadrature".into(),
        n_cases: n,
        n_failures: failures,
        worst_residual: worst,
    })
}

pub fn waterfilling_optimality(points: usize, profiles: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5745_4154_4552);
    let mut cases = 0;
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..points {
        let (params, eta, u_th, rho) = random_tuple(&mut rng, i)?;
        let report = jensen_check(&params, eta, u_th, rho, profiles, rng.gen())?;
        cases += report.n_profiles;
        failures += report.violations;
        worst = worst.max(report.worst_excess);
    }
    Ok(CheckOutcome {
        check_name: "waterfilling_optimality".into(),
        n_cases: cases,
        n_failures: failures,
        worst_residual: worst.max(0.0),
    })
}

pub fn sweep_coverage(trajectories: usize, seed: u64) -> Result<CheckOutcome> {
    let params = SystemParams::reference(40.0, 1e-4);
    let mut cases = 0;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    let points = [(2, 1.0), (3, 4.0), (5, 1.0), (8, 2.5)];
    let kinds = [
        (SpeedKind::BangBang, params.delta_s / 7.0),
        (SpeedKind::PiecewiseUniform, params.delta_s / 3.0),
        (SpeedKind::ConstantExtreme, 0.0),
    ];
    for (k, (eta, scale)) in points.into_iter().enumerate() {
        let u_th = scale * min_uth(&params, eta)? * 1.5;
        let schedule = build_schedule(&params, u_th, eta)?;
        let (kind, dwell) = kinds[k % kinds.len()];
        let report = coverage_monte_carlo(
            &params,
            &schedule,
            kind,
            dwell,
            trajectories,
            seed.wrapping_add(k as u64),
        )?;
        cases += report.n_trajectories;
        failures += report.uncovered + report.width_violations;
        worst = worst.max(report.worst_excess);
        let spread_excess = (report.max_spread - schedule.u_comm).max(0.0);
        if spread_excess > 1e-9 * schedule.u_comm {
            failures += 1;
            worst = worst.max(spread_excess);
        }
    }
    Ok(CheckOutcome {
        check_name: "sweep_coverage".into(),
        n_cases: cases,
        n_failures: failures,
        worst_residual: worst,
    })
}

/// Sign of `f_eta` against a central difference of the rate along the
/// power-tight curve.
pub fn f_eta_sign(points: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4645_5441);
    let mut cases = 0;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for budget in [0.1, 1.0, 10.0, 100.0] {
        for eta in 2..=eta_max(budget)? {
            let lo = upsilon_min(eta)?.max(shrinkage_bound(eta)? * (1.0 + 1e-6));
            let hi = upsilon_max(eta, budget)?;
            for _ in 0..points {
                let u = lo + (hi - lo) * rng.gen_range(0.01..0.99);
                let h = 1e-6 * u;
                if u - h < lo || u + h > hi {
                    continue;
                }
                let rate = |x: f64| -> Result<f64> { r_hat(eta, x, zeta_of(x, eta, budget)?) };
                let (up, down, mid) = (rate(u + h)?, rate(u - h)?, rate(u)?);
                let diff = up - down;
                let f = f_eta(u, eta, budget)?;
                cases += 1;
                // differences at round-off level carry no sign information
                if diff.abs() <= 1e-12 * mid.abs() {
                    continue;
                }
                if (diff > 0.0) != (f > 0.0) {
                    failures += 1;
                    worst = worst.max(diff.abs() / (2.0 * h));
                }
            }
        }
    }
    Ok(CheckOutcome {
        check_name: "f_eta_sign".into(),
        n_cases: cases,
        n_failures: failures,
        worst_residual: worst,
    })
}

pub fn run_all(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        closed_form_vs_quadrature(opts.closed_form_cases, opts.seed, opts.perturb_closed_form)?,
        waterfilling_optimality(opts.jensen_points, opts.jensen_profiles, opts.seed)?,
        sweep_coverage(opts.trajectories, opts.seed)?,
        f_eta_sign(opts.fd_points, opts.seed)?,
    ])
}

pub fn write_report<W: Write + ?Sized>(
    out: &mut W,
    outcomes: &[CheckOutcome],
) -> std::io::Result<()> {
    write_csv_row(out, &REPORT_HEADER)?;
    for o in outcomes {
        write_csv_row(
            out,
            &[
                o.check_name.clone(),
                o.n_cases.to_string(),
                o.n_failures.to_string(),
                fmt_num(o.worst_residual),
            ],
        )?;
    }
    Ok(())
}
