//! Numerical evaluation of the cycle averages straight from their integral
//! definitions, independent of the closed forms in [`crate::perf`].

use crate::error::{domain, Error, Result};
use crate::model::{build_schedule, SystemParams};
use crate::perf::{instantaneous_rate, snr_gamma, waterfilling_power};

pub const DEFAULT_REL_TOL: f64 = 1e-9;
const MAX_LEVELS: usize = 22;
const BASE_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Change between the last two extrapolated estimates.
    pub last_change: f64,
    pub evaluations: usize,
}

fn midpoint_sum<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cells: usize) -> f64 {
    let h = (b - a) / cells as f64;
    (0..cells).map(|k| f(a + (k as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Composite midpoint rule on `[a, b]`, refined by halving the cell width and
/// Richardson-extrapolated, until successive diagonal estimates agree to
/// `rel_tol` (relative) or `abs_floor` (absolute).
pub fn midpoint_romberg<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<Quadrature> {
    if !(b >= a) {
        return Err(domain(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    if b == a {
        return Ok(Quadrature {
            value: 0.0,
            last_change: 0.0,
            evaluations: 0,
        });
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut cells = BASE_CELLS;
    let mut evaluations = 0;
    for level in 0..MAX_LEVELS {
        let mut row = vec![midpoint_sum(&f, a, b, cells)];
        evaluations += cells;
        let mut factor = 1.0;
        for j in 1..=level {
            factor *= 4.0;
            let prev = &rows[level - 1];
            let refined = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0);
            row.push(refined);
        }
        if level >= 2 {
            let prev = rows[level - 1][level - 1];
            let cur = row[level];
            let change = (cur - prev).abs();
            if change <= rel_tol * cur.abs() || change <= abs_floor {
                return Ok(Quadrature {
                    value: cur,
                    last_change: change,
                    evaluations,
                });
            }
        }
        rows.push(row);
        cells *= 2;
    }
    Err(Error::Solver(format!(
        "midpoint quadrature on [{a}, {b}] did not converge to {rel_tol:e} in {MAX_LEVELS} levels"
    )))
}

/// Time grid of the data phase: `[start, end]`, with the instant where the
/// water level meets the channel floor if it falls inside.
struct DataPhase {
    start: f64,
    kink: Option<f64>,
    end: f64,
    t_cycle: f64,
    u_comm: f64,
    phi: f64,
    gamma: f64,
}

impl DataPhase {
    fn new(params: &SystemParams, eta: u32, u_th: f64, rho: f64) -> Result<Self> {
        let schedule = build_schedule(params, u_th, eta)?;
        let gamma = snr_gamma(params)?;
        let start = schedule.sweep_duration(params);
        let end = schedule.t_cycle;
        let level = params.d * gamma * rho;
        let kink_t = start + (level - schedule.u_comm) / params.phi;
        let kink = (kink_t > start && kink_t < end).then_some(kink_t);
        Ok(DataPhase {
            start,
            kink,
            end,
            t_cycle: schedule.t_cycle,
            u_comm: schedule.u_comm,
            phi: params.phi,
            gamma,
        })
    }

    fn width(&self, t: f64) -> f64 {
        self.u_comm + self.phi * (t - self.start)
    }

    fn pieces(&self) -> Vec<(f64, f64)> {
        match self.kink {
            Some(k) => vec![(self.start, k), (k, self.end)],
            None => vec![(self.start, self.end)],
        }
    }

    fn average<F: Fn(f64) -> f64>(&self, f: F, rel_tol: f64, abs_floor: f64) -> Result<f64> {
        let mut total = 0.0;
        for (a, b) in self.pieces() {
            total += midpoint_romberg(&f, a, b, rel_tol, abs_floor)?.value;
        }
        Ok(total / self.t_cycle)
    }
}

/// Time-average rate (bit/s) over one cycle, integrated numerically.
pub fn integrate_rate_numeric(
    params: &SystemParams,
    eta: u32,
    u_th: f64,
    rho: f64,
    rel_tol: f64,
) -> Result<f64> {
    let phase = DataPhase::new(params, eta, u_th, rho)?;
    let d = params.d;
    let f = |t: f64| {
        let u = phase.width(t);
        let p = waterfilling_power(rho, u, d, phase.gamma);
        instantaneous_rate(params, p, u / d).unwrap_or(f64::NAN)
    };
    let floor = params.w_tot * 1e-300;
    phase.average(f, rel_tol, floor)
}

/// Time-average transmit power over one cycle, integrated numerically.
pub fn integrate_power_numeric(
    params: &SystemParams,
    eta: u32,
    u_th: f64,
    rho: f64,
    rel_tol: f64,
) -> Result<f64> {
    let phase = DataPhase::new(params, eta, u_th, rho)?;
    let d = params.d;
    let f = |t: f64| waterfilling_power(rho, phase.width(t), d, phase.gamma);
    phase.average(f, rel_tol, 1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn romberg_polynomial_and_log() {
        let q = midpoint_romberg(|x| x * x, 0.0, 3.0, 1e-12, 0.0).unwrap();
        assert!((q.value - 9.0).abs() < 1e-12);
        let q = midpoint_romberg(|x: f64| x.ln(), 1.0, 2.0, 1e-12, 0.0).unwrap();
        let exact = 2.0 * 2f64.ln() - 1.0;
        assert!((q.value - exact).abs() < 1e-12);
        assert!(q.last_change <= 1e-12 * q.value.abs());
    }

    #[test]
    fn romberg_degenerate_and_errors() {
        assert_eq!(
            midpoint_romberg(|x| x, 1.0, 1.0, 1e-9, 0.0).unwrap().value,
            0.0
        );
        assert!(midpoint_romberg(|x| x, 2.0, 1.0, 1e-9, 0.0).is_err());
    }

    #[test]
    fn refinement_converges() {
        // a tighter tolerance moves the estimate by no more than the looser one claimed
        let params = SystemParams::reference(10.0, 1e-4);
        let g = snr_gamma(&params).unwrap();
        let rho = 1.25 / (params.d * g);
        let coarse = integrate_rate_numeric(&params, 2, 1.0, rho, 1e-6).unwrap();
        let fine = integrate_rate_numeric(&params, 2, 1.0, rho, 1e-11).unwrap();
        assert!((coarse - fine).abs() <= 1e-6 * fine);
    }

    #[test]
    fn zero_at_floor() {
        let params = SystemParams::reference(10.0, 1e-4);
        let s = build_schedule(&params, 1.0, 2).unwrap();
        let g = snr_gamma(&params).unwrap();
        let rho = s.u_comm / (params.d * g);
        assert!(
            integrate_rate_numeric(&params, 2, 1.0, rho, 1e-9)
                .unwrap()
                .abs()
                < 1e-6
        );
        assert!(
            integrate_power_numeric(&params, 2, 1.0, rho, 1e-9)
                .unwrap()
                .abs()
                < 1e-20
        );
    }
}
