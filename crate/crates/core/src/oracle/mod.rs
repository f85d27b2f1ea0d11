//! Independent numerical checks of the closed forms, the sweep protocol and
//! the optimizer.

pub mod jensen;
pub mod quadrature;
pub mod suites;
pub mod trajectory;

pub use jensen::{jensen_check, JensenReport};
pub use quadrature::{
    integrate_power_numeric, integrate_rate_numeric, midpoint_romberg, Quadrature,
};
pub use suites::{run_all, write_report, CheckOutcome, VerifyOptions, REPORT_HEADER};
pub use trajectory::{
    coverage_monte_carlo, derive_seed, simulate_cycle, CoverageReport, SpeedKind, SpeedProcess,
    TrajectoryResult,
};
