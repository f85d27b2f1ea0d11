//! The `beamsweep` command-line tool.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input or
//! infeasible problem, 3 I/O error.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Overrides, RunConfig, SweepAxis};

use crate::baseline::{
    baseline_fcomm, baseline_rate_power, baseline_spectral_efficiency, BaselineConfig,
};
use crate::error::{Error, Result};
use crate::format::{fmt_num, write_csv_row};
use crate::model::{build_schedule, min_uth, validate_small_angle, SystemParams};
use crate::optimizer::optimize;
use crate::oracle::{run_all, write_report, VerifyOptions};
use crate::perf::p_hat_max;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Normalized budgets below this produce a near-zero-rate warning.
const TINY_BUDGET: f64 = 1e-6;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "beamsweep",
    version,
    about = "Beam-sweep cycle design for mobile mm-wave links"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal sweep trigger width, beam count and water level.
    Optimize,
    /// Spectral efficiency of the optimal design and the baseline along one axis.
    Sweep,
    /// Run the numerical verification suites.
    Verify {
        /// Scale the closed forms by `1 + EPS` before checking them.
        #[arg(long, value_name = "EPS", default_value_t = 0.0)]
        perturb_closed_form: f64,
    },
    /// Fixed-beamwidth 802.11ad-style reference scheme.
    Baseline,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Speed uncertainty v_max - v_min (m/s).
    #[arg(long, global = true)]
    pub phi: Option<f64>,
    /// Maximum speed (m/s); sets phi = 2 vmax.
    #[arg(long, global = true)]
    pub vmax: Option<f64>,
    /// Average power budget (W).
    #[arg(long, global = true)]
    pub pmax: Option<f64>,
    /// Sweep axis.
    #[arg(long, global = true, value_parser = ["power", "speed"])]
    pub axis: Option<String>,
    /// Comma-separated, strictly increasing axis values.
    #[arg(long, global = true, value_name = "A,B,C")]
    pub values: Option<String>,
    /// Output CSV path.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// RNG seed for the verification suites.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            phi: self.phi,
            vmax: self.vmax,
            p_max: self.pmax,
            axis: self.axis.as_deref().map(str::parse).transpose()?,
            values: self
                .values
                .as_deref()
                .map(config::parse_values)
                .transpose()?,
            out: self.out.clone(),
            seed: self.seed,
        })
    }

    pub fn load(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
            None => String::new(),
        };
        RunConfig::from_text(&text, &self.overrides()?)
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = cli.common.load().and_then(|cfg| match cli.command {
        Command::Optimize => cmd_optimize(&cfg, cli.common.json, out, err),
        Command::Sweep => cmd_sweep(&cfg, out, err),
        Command::Verify {
            perturb_closed_form,
        } => cmd_verify(&cfg, perturb_closed_form, out, err),
        Command::Baseline => cmd_baseline(&cfg, cli.common.json, out),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        ))
    })
}

fn write_csv_file(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = create(path)?;
    write_csv_row(&mut w, header)?;
    for row in rows {
        write_csv_row(&mut w, row)?;
    }
    w.flush()?;
    Ok(())
}

/// Result of `optimize`, in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub eta_star: u32,
    pub upsilon_star: f64,
    pub zeta_star: f64,
    pub u_th_star_m: f64,
    pub rho_star: f64,
    pub t_cycle_s: f64,
    /// Average rate over bandwidth (bit/s/Hz).
    pub spectral_efficiency: f64,
    pub r_bar: f64,
    pub p_bar: f64,
    pub warnings: Vec<String>,
}

pub const OPTIMIZE_HEADER: [&str; 9] = [
    "eta_star",
    "upsilon_star",
    "zeta_star",
    "u_th_star_m",
    "rho_star",
    "t_cycle_s",
    "spectral_efficiency",
    "r_bar",
    "p_bar",
];

impl OptimizeReport {
    fn csv_row(&self) -> Vec<String> {
        let mut row = vec![self.eta_star.to_string()];
        row.extend(
            [
                self.upsilon_star,
                self.zeta_star,
                self.u_th_star_m,
                self.rho_star,
                self.t_cycle_s,
                self.spectral_efficiency,
                self.r_bar,
                self.p_bar,
            ]
            .map(fmt_num),
        );
        row
    }

    /// Zero-power design: two beams at the smallest admissible trigger width.
    fn degenerate(params: &SystemParams, warning: String) -> Result<Self> {
        let probe = SystemParams {
            p_max: 1.0,
            ..*params
        };
        let u_th = min_uth(&probe, 2)?;
        let schedule = build_schedule(&probe, u_th, 2)?;
        Ok(OptimizeReport {
            eta_star: 2,
            upsilon_star: u_th / probe.delta_phi(),
            zeta_star: schedule.u_comm / u_th - 1.0,
            u_th_star_m: u_th,
            rho_star: 0.0,
            t_cycle_s: schedule.t_cycle,
            spectral_efficiency: 0.0,
            r_bar: 0.0,
            p_bar: 0.0,
            warnings: vec![warning],
        })
    }
}

/// Solves the design problem. A zero or vanishing budget yields a
/// zero-rate report with a warning instead of an error.
pub fn optimize_report(params: &SystemParams) -> Result<OptimizeReport> {
    if params.p_max == 0.0 {
        return OptimizeReport::degenerate(
            params,
            "p_max is zero: no power to communicate, rate is zero".into(),
        );
    }
    params.validate()?;
    let budget = p_hat_max(params)?;
    let design = match optimize(params) {
        Ok(d) => d,
        Err(e) if budget < TINY_BUDGET => {
            return OptimizeReport::degenerate(
                params,
                format!("power budget too small to optimize ({e}); reporting zero rate"),
            );
        }
        Err(e) => return Err(e),
    };
    let schedule = build_schedule(params, design.u_th_star, design.eta_star)?;
    let mut warnings: Vec<String> = validate_small_angle(params, design.u_th_star)
        .into_iter()
        .map(|w| w.message)
        .collect();
    if budget < TINY_BUDGET {
        warnings.push(format!(
            "normalized power budget {budget:e} is tiny; rate is near zero"
        ));
    }
    Ok(OptimizeReport {
        eta_star: design.eta_star,
        upsilon_star: design.upsilon_star,
        zeta_star: design.zeta_star,
        u_th_star_m: design.u_th_star,
        rho_star: design.rho_star,
        t_cycle_s: schedule.t_cycle,
        spectral_efficiency: design.r_bar_star / params.w_tot,
        r_bar: design.r_bar_star,
        p_bar: design.p_bar_star,
        warnings,
    })
}

pub fn cmd_optimize(
    cfg: &RunConfig,
    json: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let report = optimize_report(&cfg.params)?;
    for w in &report.warnings {
        writeln!(err, "warning: {w}")?;
    }
    if json {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?
        )?;
    } else {
        let rows = [
            ("eta_star", report.eta_star.to_string()),
            ("u_th_star_m", fmt_num(report.u_th_star_m)),
            ("rho_star", fmt_num(report.rho_star)),
            ("t_cycle_s", fmt_num(report.t_cycle_s)),
            ("spectral_efficiency", fmt_num(report.spectral_efficiency)),
            ("p_bar", fmt_num(report.p_bar)),
        ];
        for (k, v) in rows {
            writeln!(out, "{k:<20} {v}")?;
        }
    }
    if let Some(path) = &cfg.output_path {
        write_csv_file(path, &OPTIMIZE_HEADER, &[report.csv_row()])?;
    }
    Ok(EXIT_OK)
}

pub const SWEEP_HEADER: [&str; 6] = [
    "axis_value",
    "se_proposed",
    "se_11ad",
    "eta_star",
    "u_th_star_m",
    "p_bar",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub se_proposed: f64,
    pub se_11ad: f64,
    pub eta_star: u32,
    pub u_th_star_m: f64,
    pub p_bar: f64,
}

impl SweepRow {
    fn csv_row(&self) -> Vec<String> {
        vec![
            fmt_num(self.axis_value),
            fmt_num(self.se_proposed),
            fmt_num(self.se_11ad),
            self.eta_star.to_string(),
            fmt_num(self.u_th_star_m),
            fmt_num(self.p_bar),
        ]
    }
}

/// One grid point: the axis value replaces `p_max` (power) or sets `phi = 2 v_max` (speed).
pub fn sweep_point(
    params: &SystemParams,
    axis: SweepAxis,
    value: f64,
    beamwidth_deg: f64,
) -> Result<SweepRow> {
    let mut p = *params;
    match axis {
        SweepAxis::Power => p.p_max = value,
        SweepAxis::Speed => p.phi = 2.0 * value,
    }
    let design = optimize(&p)?;
    let se_11ad = baseline_spectral_efficiency(&p, beamwidth_deg, p.phi / 2.0, p.p_max)?;
    Ok(SweepRow {
        axis_value: value,
        se_proposed: design.r_bar_star / p.w_tot,
        se_11ad,
        eta_star: design.eta_star,
        u_th_star_m: design.u_th_star,
        p_bar: design.p_bar_star,
    })
}

/// Evaluates every grid point in parallel; rows come back in axis order.
pub fn sweep_rows(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let bw = cfg.beamwidth_deg();
    cfg.axis_values
        .par_iter()
        .map(|v| sweep_point(&cfg.params, cfg.sweep_axis, *v, bw))
        .collect()
}

/// Index of the first row breaking the expected strict trend, if any.
pub fn trend_violation(axis: SweepAxis, rows: &[SweepRow]) -> Option<usize> {
    rows.windows(2)
        .position(|w| match axis {
            SweepAxis::Power => w[1].se_proposed <= w[0].se_proposed,
            SweepAxis::Speed => w[1].se_proposed >= w[0].se_proposed,
        })
        .map(|i| i + 1)
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let rows = sweep_rows(cfg)?;
    if let Some(i) = trend_violation(cfg.sweep_axis, &rows) {
        writeln!(
            err,
            "error: spectral efficiency not strictly {} at axis value {}",
            if cfg.sweep_axis == SweepAxis::Power {
                "increasing"
            } else {
                "decreasing"
            },
            fmt_num(rows[i].axis_value)
        )?;
        return Ok(EXIT_VERIFY_FAILED);
    }
    let rows: Vec<Vec<String>> = rows.iter().map(SweepRow::csv_row).collect();
    match &cfg.output_path {
        Some(path) => write_csv_file(path, &SWEEP_HEADER, &rows)?,
        None => {
            write_csv_row(out, &SWEEP_HEADER)?;
            for row in &rows {
                write_csv_row(out, row)?;
            }
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(
    cfg: &RunConfig,
    perturb: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let opts = VerifyOptions {
        seed: cfg.seed,
        perturb_closed_form: perturb,
        ..VerifyOptions::default()
    };
    let outcomes = run_all(&opts)?;
    match &cfg.output_path {
        Some(path) => {
            let mut w = create(path)?;
            write_report(&mut w, &outcomes)?;
            w.flush()?;
        }
        None => write_report(out, &outcomes)?,
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.check_name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        writeln!(err, "verification failed: {}", failed.join(", "))?;
        Ok(EXIT_VERIFY_FAILED)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub beamwidth_deg: f64,
    pub v_max: f64,
    pub f_comm: f64,
    pub p_t: f64,
    pub spectral_efficiency: f64,
    pub r_bar: f64,
    pub p_bar: f64,
}

pub const BASELINE_HEADER: [&str; 7] = [
    "beamwidth_deg",
    "v_max",
    "f_comm",
    "p_t",
    "spectral_efficiency",
    "r_bar",
    "p_bar",
];

/// Baseline at `v_max = phi / 2`, transmitting `P_t = p_max / f_comm` so that its average power is `p_max`.
pub fn baseline_report(cfg: &RunConfig) -> Result<BaselineReport> {
    let params = &cfg.params;
    params.validate()?;
    let mut b = cfg
        .baseline
        .unwrap_or_else(|| BaselineConfig::new(params.phi / 2.0, 0.0));
    b.v_max = params.phi / 2.0;
    let f_comm = baseline_fcomm(params, &b)?;
    b.p_t = params.p_max / f_comm;
    let (r_bar, p_bar) = baseline_rate_power(params, &b)?;
    Ok(BaselineReport {
        beamwidth_deg: b.beamwidth_deg,
        v_max: b.v_max,
        f_comm,
        p_t: b.p_t,
        spectral_efficiency: r_bar / params.w_tot,
        r_bar,
        p_bar,
    })
}

pub fn cmd_baseline(cfg: &RunConfig, json: bool, out: &mut dyn Write) -> Result<i32> {
    let r = baseline_report(cfg)?;
    let values = [
        r.beamwidth_deg,
        r.v_max,
        r.f_comm,
        r.p_t,
        r.spectral_efficiency,
        r.r_bar,
        r.p_bar,
    ];
    if json {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&r).map_err(|e| Error::Config(e.to_string()))?
        )?;
    } else {
        for (k, v) in BASELINE_HEADER.iter().zip(values) {
            writeln!(out, "{k:<20} {}", fmt_num(v))?;
        }
    }
    if let Some(path) = &cfg.output_path {
        write_csv_file(path, &BASELINE_HEADER, &[values.map(fmt_num).to_vec()])?;
    }
    Ok(EXIT_OK)
}
