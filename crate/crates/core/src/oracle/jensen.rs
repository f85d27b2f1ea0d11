//! Water-filling optimality check: random nonnegative power profiles with the
//! same average power as water-filling must not achieve a higher average rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_schedule, SystemParams};
use crate::perf::{snr_gamma, waterfilling_power};

pub const GRID_POINTS: usize = 10_000;
/// Absolute slack on the normalized rate.
pub const RATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub n_profiles: usize,
    pub violations: usize,
    /// Normalized average rate of the water-filling profile.
    pub waterfilling_rate: f64,
    /// Largest `candidate - waterfilling` normalized rate observed.
    pub worst_excess: f64,
}

/// Data-phase grid and the water-filling profile sampled on it.
pub struct ProfileGrid {
    /// `d * gamma / u_t` at each grid midpoint.
    gains: Vec<f64>,
    /// Fraction of the cycle spent communicating.
    duty: f64,
    pub waterfilling: Vec<f64>,
}

impl ProfileGrid {
    pub fn new(params: &SystemParams, eta: u32, u_th: f64, rho: f64) -> Result<Self> {
        let schedule = build_schedule(params, u_th, eta)?;
        let gamma = snr_gamma(params)?;
        let start = schedule.sweep_duration(params);
        let span = schedule.t_cycle - start;
        let h = span / GRID_POINTS as f64;
        let widths: Vec<f64> = (0..GRID_POINTS)
            .map(|k| schedule.u_comm + params.phi * (k as f64 + 0.5) * h)
            .collect();
        let waterfilling = widths
            .iter()
            .map(|u| waterfilling_power(rho, *u, params.d, gamma))
            .collect();
        Ok(ProfileGrid {
            gains: widths.iter().map(|u| params.d * gamma / u).collect(),
            duty: span / schedule.t_cycle,
            waterfilling,
        })
    }

    /// Normalized average rate `(1/T) * integral of ln(1 + d gamma P_t / u_t)`.
    pub fn normalized_rate(&self, powers: &[f64]) -> f64 {
        let mean = powers
            .iter()
            .zip(&self.gains)
            .map(|(p, g)| (g * p).ln_1p())
            .sum::<f64>()
            / powers.len() as f64;
        self.duty * mean
    }

    pub fn mean_power(powers: &[f64]) -> f64 {
        powers.iter().sum::<f64>() / powers.len() as f64
    }
}

fn random_profile(rng: &mut ChaCha8Rng, reference: &[f64]) -> Vec<f64> {
    let n = reference.len();
    match rng.gen_range(0..5) {
        // iid exponential
        0 => (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect(),
        // piecewise constant blocks
        1 => {
            let blocks = rng.gen_range(1..50);
            let levels: Vec<f64> = (0..blocks).map(|_| rng.gen::<f64>()).collect();
            (0..n).map(|k| levels[k * blocks / n]).collect()
        }
        // multiplicative perturbation of water-filling
        2 => {
            let scale = rng.gen_range(0.0..0.5);
            reference
                .iter()
                .map(|p| (p * (1.0 + scale * rng.gen_range(-1.0..1.0))).max(0.0))
                .collect()
        }
        // a few spikes
        3 => {
            let mut v = vec![0.0; n];
            for _ in 0..rng.gen_range(1..20) {
                v[rng.gen_range(0..n)] += rng.gen::<f64>();
            }
            v
        }
        // linear ramp, either direction
        _ => {
            let slope = rng.gen_range(-1.0..1.0);
            (0..n)
                .map(|k| (1.0 + slope * (k as f64 / n as f64 - 0.5)).max(0.0))
                .collect()
        }
    }
}

/// Compares water-filling against `n_perturbations` random profiles, plus the
/// constant profile, all with the same average power.
pub fn jensen_check(
    params: &SystemParams,
    eta: u32,
    u_th: f64,
    rho: f64,
    n_perturbations: usize,
    seed: u64,
) -> Result<JensenReport> {
    let grid = ProfileGrid::new(params, eta, u_th, rho)?;
    let target = ProfileGrid::mean_power(&grid.waterfilling);
    let wf_rate = grid.normalized_rate(&grid.waterfilling);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut violations = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut check = |profile: Vec<f64>| -> Result<()> {
        let mean = ProfileGrid::mean_power(&profile);
        let scaled: Vec<f64> = if mean > 0.0 {
            profile.iter().map(|p| p * target / mean).collect()
        } else {
            vec![target; profile.len()]
        };
        if scaled.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::Solver("generated an invalid power profile".into()));
        }
        let excess = grid.normalized_rate(&scaled) - wf_rate;
        worst_excess = worst_excess.max(excess);
        if excess > RATE_SLACK {
            violations += 1;
        }
        Ok(())
    };

    check(vec![target; GRID_POINTS])?;
    for _ in 0..n_perturbations {
        check(random_profile(&mut rng, &grid.waterfilling))?;
    }
    Ok(JensenReport {
        n_profiles: n_perturbations + 1,
        violations,
        waterfilling_rate: wf_rate,
        worst_excess,
    })
}
