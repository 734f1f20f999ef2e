//! Command-line front end: `simulate`, `verify-barriers`, `sweep` and
//! `convergence`.
//!
//! Every subcommand reads a [`Config`] and writes its artifacts into the
//! output directory. Exit status is 0 on success, 1 on solver failure and 2 on
//! configuration errors.

pub mod config;
pub mod scenario;

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::barriers::verify::{verify_barriers, VerifyReport};
use crate::oracle::{convergence_study, ConvergenceReport};
use crate::{Error, Result};

pub use config::Config;
pub use scenario::{Scenario, Simulation, Summary};

#[derive(Debug, Parser)]
#[command(name = "kscollapse", version, about = "Radial Keller-Segel collapse in the mass variable")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parallel runs (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides `[barriers] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run one scenario or a regularization limit.
    Simulate,
    /// Sample the barrier families and check residual signs.
    VerifyBarriers,
    /// Run a scenario for each value of one config key.
    Sweep,
    /// Grid and time-step refinement against a manufactured solution.
    Convergence,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Errors are printed to stderr.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command. `Ok(1)` means the command completed but its check
/// failed (a barrier family breached).
pub fn execute(cli: &Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None if cli.command == Command::VerifyBarriers => Config::default(),
        None => return Err(Error::config("--config", "a config file is required")),
    };
    fs::create_dir_all(&cli.out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::config("--threads", "must be at least 1"));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::config("--threads", e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Simulate => simulate(&cfg, &cli.out).map(|_| 0),
        Command::VerifyBarriers => {
            let report = verify(&cfg, cli.seed, &cli.out)?;
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Sweep => sweep(&cfg, &cli.out).map(|_| 0),
        Command::Convergence => convergence(&cfg, &cli.out).map(|_| 0),
    })
}

pub fn simulate(cfg: &Config, out: &Path) -> Result<Summary> {
    let sc = scenario::scenario(cfg)?;
    let sim = scenario::simulate(&sc)?;
    scenario::write_simulation(out, &sc, &sim)?;
    Ok(sim.summary)
}

/// Writes `barriers.json`.
pub fn verify(cfg: &Config, seed: Option<u64>, out: &Path) -> Result<VerifyReport> {
    let vc = scenario::verify_config(cfg, seed)?;
    let report = verify_barriers(&vc)?;
    scenario::write_json(out, "barriers.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceOutput {
    pub schema: u32,
    pub spatial_min_order: Option<f64>,
    pub temporal_min_order: Option<f64>,
    #[serde(flatten)]
    pub report: ConvergenceReport,
}

/// Writes `convergence.json`.
pub fn convergence(cfg: &Config, out: &Path) -> Result<ConvergenceOutput> {
    let cc = scenario::convergence_config(cfg)?;
    let report = convergence_study(&cc)?;
    let output = ConvergenceOutput {
        schema: 1,
        spatial_min_order: report.spatial.min_order(),
        temporal_min_order: report.temporal.min_order(),
        report,
    };
    scenario::write_json(out, "convergence.json", &output)?;
    Ok(output)
}

/// One sweep point: its summary or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: String,
    pub summary: Option<Summary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema: u32,
    /// `section.key`.
    pub key: String,
    pub rows: Vec<SweepRow>,
    /// Whether `theta_onset_time` never increases along the listed values,
    /// over the points that detected an onset. `None` with fewer than two.
    pub onset_nonincreasing: Option<bool>,
}

pub const SWEEP_HEADER: &str =
    "index,value,theta_onset_time,theta_final,mass_defect_max,monotonicity_defect_min,magic_violations,error";

fn sweep_point(cfg: &Config, section: &str, key: &str, value: &str) -> Result<Summary> {
    let mut point = cfg.clone();
    point.set(section, key, value);
    let sc = scenario::scenario(&point)?;
    Ok(scenario::simulate(&sc)?.summary)
}

/// Runs every point in parallel and writes `sweep.csv` and `sweep.json`
/// ordered by point index. A failing point is recorded in its row.
pub fn sweep(cfg: &Config, out: &Path) -> Result<SweepReport> {
    let (section, key, values) = scenario::sweep_points(cfg)?;
    // Validate the base scenario layout once so that typos fail fast.
    scenario::check_layout(cfg)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(index, value)| match sweep_point(cfg, &section, &key, value) {
            Ok(summary) => SweepRow { index, value: value.clone(), summary: Some(summary), error: None },
            Err(e) => SweepRow { index, value: value.clone(), summary: None, error: Some(e.to_string()) },
        })
        .collect();
    let onsets: Vec<f64> = rows.iter().filter_map(|r| r.summary.as_ref()?.theta_onset_time).collect();
    let report = SweepReport {
        schema: 1,
        key: format!("{section}.{key}"),
        onset_nonincreasing: (onsets.len() >= 2).then(|| onsets.windows(2).all(|w| w[1] <= w[0])),
        rows,
    };
    let mut f = BufWriter::new(fs::File::create(out.join("sweep.csv"))?);
    write_sweep_csv(&mut f, &report.rows)?;
    f.flush()?;
    scenario::write_json(out, "sweep.json", &report)?;
    Ok(report)
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in rows {
        let value = csv_field(&row.value);
        match (&row.summary, &row.error) {
            (Some(s), _) => writeln!(
                out,
                "{},{},{},{},{},{},{},",
                row.index,
                value,
                s.theta_onset_time.map(|t| t.to_string()).unwrap_or_default(),
                s.theta_final,
                s.mass_defect_max,
                s.monotonicity_defect_min,
                s.magic_violations
            )?,
            (None, e) => {
                writeln!(out, "{},{},,,,,,{}", row.index, value, csv_field(e.as_deref().unwrap_or("")))?
            }
        }
    }
    Ok(())
}
