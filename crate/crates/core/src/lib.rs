//! Design of the beam-sweeping / data-communication cycle for a mobile
//! millimeter-wave user on a one-dimensional road.
//!
//! [`model`] builds sweep schedules, [`perf`] evaluates average rate and power
//! under water-filling, [`optimizer`] maximizes the rate under an average
//! power budget, [`baseline`] models a fixed-beamwidth 802.11ad-style scheme
//! and [`oracle`] cross-checks all of it numerically.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cli;
pub mod error;
pub mod format;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod perf;

pub use error::{Error, Result, UthBound};
pub use model::{build_schedule, min_uth, SweepSchedule, SystemParams};
pub use optimizer::{optimize, OptimalDesign};
pub use perf::{avg_power_closed, avg_rate_closed, snr_gamma, NormalizedDesign};
