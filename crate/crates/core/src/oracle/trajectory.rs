//! Monte Carlo simulation of the mobile during the sweep phase.
//!
//! Speeds are piecewise constant on a grid of `delta_s / 100`, so explicit
//! Euler integration of the position is exact. The mobile reports beam `i`
//! when it lies inside beam `i`'s scanned interval at the start of microslot
//! `i`; the first such beam wins.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{SweepSchedule, SystemParams};

/// Integration steps per microslot.
pub const STEPS_PER_SLOT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpeedKind {
    /// One extreme speed, `+phi/2` or `-phi/2`, held for the whole cycle.
    ConstantExtreme,
    /// Uniform speed in `[-phi/2, phi/2]`, redrawn every dwell.
    PiecewiseUniform,
    /// `+phi/2` or `-phi/2`, redrawn every dwell.
    BangBang,
    /// A fixed speed, which must lie in `[-phi/2, phi/2]`.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedProcess {
    pub kind: SpeedKind,
    pub seed: u64,
    /// Time between speed changes for the piecewise kinds (s).
    pub dwell: f64,
}

impl SpeedProcess {
    pub fn new(kind: SpeedKind, seed: u64, dwell: f64) -> Self {
        SpeedProcess { kind, seed, dwell }
    }

    /// Speed on each of `n_steps` integration steps of length `step`.
    pub fn speeds(&self, phi: f64, step: f64, n_steps: usize) -> Result<Vec<f64>> {
        let half = phi / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let hold = match self.kind {
            SpeedKind::PiecewiseUniform | SpeedKind::BangBang => {
                if !(self.dwell > 0.0) {
                    return Err(domain(format!("dwell must be > 0, got {}", self.dwell)));
                }
                ((self.dwell / step).round() as usize).max(1)
            }
            _ => n_steps.max(1),
        };
        let draw = |rng: &mut ChaCha8Rng| -> Result<f64> {
            Ok(match self.kind {
                SpeedKind::ConstantExtreme | SpeedKind::BangBang => {
                    if rng.gen::<bool>() {
                        half
                    } else {
                        -half
                    }
                }
                SpeedKind::PiecewiseUniform => rng.gen_range(-half..=half),
                SpeedKind::Fixed(v) => {
                    if v.abs() > half {
                        return Err(domain(format!("fixed speed {v} outside [-{half}, {half}]")));
                    }
                    v
                }
            })
        };
        let mut out = Vec::with_capacity(n_steps);
        let mut v = 0.0;
        for k in 0..n_steps {
            if k % hold == 0 {
                v = draw(&mut rng)?;
            }
            out.push(v);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    /// Position at the start of every microslot and at the end of the sweep (m).
    pub true_positions: Vec<f64>,
    /// First beam (1-based) whose interval held the mobile at its microslot start.
    pub detected_beam: Option<u32>,
    pub covered: bool,
    /// End-of-sweep position lies in the reported beam's `u_comm` window.
    pub final_width_ok: bool,
    /// Distance by which the end position falls outside that window (0 if inside).
    pub window_excess: f64,
}

fn position_tolerance(schedule: &SweepSchedule) -> f64 {
    1e-9 * schedule.u_th.max(schedule.u_comm)
}

/// Simulates one sweep for a mobile starting at `p0` in `[0, u_th]`.
pub fn simulate_cycle(
    params: &SystemParams,
    schedule: &SweepSchedule,
    process: &SpeedProcess,
    p0: f64,
) -> Result<TrajectoryResult> {
    if !(p0 >= 0.0 && p0 <= schedule.u_th) {
        return Err(domain(format!(
            "p0 = {p0} outside the initial interval [0, {}]",
            schedule.u_th
        )));
    }
    let eta = schedule.eta as usize;
    let step = params.delta_s / STEPS_PER_SLOT as f64;
    let speeds = process.speeds(params.phi, step, eta * STEPS_PER_SLOT)?;
    let tol = position_tolerance(schedule);

    let mut p = p0;
    let mut true_positions = Vec::with_capacity(eta + 1);
    let mut detected_beam = None;
    for (slot, chunk) in speeds.chunks(STEPS_PER_SLOT).enumerate() {
        true_positions.push(p);
        if detected_beam.is_none() {
            let (a, b) = schedule.intervals[slot];
            if p >= a - tol && p <= b + tol {
                detected_beam = Some(slot as u32 + 1);
            }
        }
        for v in chunk {
            p += v * step;
        }
    }
    true_positions.push(p);

    let (final_width_ok, window_excess) = match detected_beam {
        Some(beam) => {
            let (lo, hi) = schedule.post_sweep_window(params, beam);
            let excess = (lo - p).max(p - hi).max(0.0);
            (excess <= tol, excess)
        }
        None => (false, f64::INFINITY),
    };
    Ok(TrajectoryResult {
        true_positions,
        detected_beam,
        covered: detected_beam.is_some(),
        final_width_ok,
        window_excess,
    })
}

/// Independent seed for trajectory `index`, derived from `master` by stream
/// splitting so that serial and parallel runs agree.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n_trajectories: usize,
    pub uncovered: usize,
    pub width_violations: usize,
    /// Largest distance outside the reported beam's window, covered trajectories only.
    pub worst_excess: f64,
    /// Trajectories per detected beam.
    pub per_beam: Vec<usize>,
    /// Largest spread of end positions among trajectories reporting the same beam.
    pub max_spread: f64,
}

/// Runs `n` trajectories with initial positions uniform on `[0, u_th]`.
pub fn coverage_monte_carlo(
    params: &SystemParams,
    schedule: &SweepSchedule,
    kind: SpeedKind,
    dwell: f64,
    n: usize,
    master_seed: u64,
) -> Result<CoverageReport> {
    let results = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, i));
            let p0 = rng.gen_range(0.0..=schedule.u_th);
            let process = SpeedProcess::new(kind, rng.next_u64(), dwell);
            simulate_cycle(params, schedule, &process, p0)
        })
        .collect::<Result<Vec<_>>>()?;

    let eta = schedule.eta as usize;
    let mut per_beam = vec![0; eta];
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); eta];
    let mut uncovered = 0;
    let mut width_violations = 0;
    let mut worst_excess: f64 = 0.0;
    for r in &results {
        match r.detected_beam {
            Some(beam) => {
                let idx = beam as usize - 1;
                per_beam[idx] += 1;
                let end = *r.true_positions.last().unwrap();
                ranges[idx].0 = ranges[idx].0.min(end);
                ranges[idx].1 = ranges[idx].1.max(end);
                worst_excess = worst_excess.max(r.window_excess);
                if !r.final_width_ok {
                    width_violations += 1;
                }
            }
            None => uncovered += 1,
        }
    }
    let max_spread = ranges
        .iter()
        .filter(|(lo, hi)| hi >= lo)
        .map(|(lo, hi)| hi - lo)
        .fold(0.0, f64::max);
    Ok(CoverageReport {
        n_trajectories: n,
        uncovered,
        width_violations,
        worst_excess,
        per_beam,
        max_spread,
    })
}
