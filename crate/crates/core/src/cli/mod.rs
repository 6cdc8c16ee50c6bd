//! Command-line harness: single solves, parameter sweeps, oracle
//! cross-validation and Monte Carlo hardening reports.

pub mod config;
pub mod csv;

use crate::channel_mc::{deterministic_rate_gap, hardening_stats, rate_gap_stats};
use crate::model::{Allocation, ConstraintVariant, SystemParams};
use crate::oracle::grid_search;
use crate::solver::{solve_duration_only, solve_joint, SolveStatus, SolverError};
use clap::{Parser, Subcommand};
use config::{ConfigError, RunConfig, Scheme, SchemeKind, SweepVariable};
use csv::{results_csv, sig9, trace_csv, ResultRow, PLOT_HEADER, VALIDATE_HEADER};
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Largest tolerated relative gap between solver and oracle.
pub const VALIDATE_RTOL: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(
    name = "wpt-ee",
    version,
    about = "Energy-efficient power and duration allocation for wirelessly powered links"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; overrides `output_path` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for Monte Carlo runs; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub scheme: Option<Scheme>,
    #[arg(long, global = true)]
    pub variant: Option<ConstraintVariant>,
    /// Report efficiency in kb/J instead of bits/J.
    #[arg(long, global = true)]
    pub kbj: bool,
    /// Also write long-format plot data next to the output.
    #[arg(long, global = true)]
    pub emit_plot_data: bool,
    /// Write the Dinkelbach trace of every run to this file.
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the configured point.
    Solve,
    /// Solve every point of the configured sweep.
    Sweep,
    /// Compare the solver against the grid oracle.
    Validate,
    /// Monte Carlo channel-hardening report.
    Hardening,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success,
    ValidationFailure,
    ConfigError,
}

impl Exit {
    pub fn as_u8(self) -> u8 {
        match self {
            Self::Success => 0,
            Self::ValidationFailure => 1,
            Self::ConfigError => 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> Exit {
        Exit::ConfigError
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: &mut dyn Write, contents: &str) -> Result<(), CliError> {
    out.write_all(contents.as_bytes())
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

/// Runs one subcommand, writing reports to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Exit, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(s) = cli.scheme {
        cfg.scheme = s;
    }
    if let Some(v) = cli.variant {
        cfg.variant = v;
    }
    if let Some(o) = &cli.out {
        cfg.output_path = Some(o.clone());
    }
    match cli.command {
        Command::Solve => cmd_solve(&cfg, cli, out),
        Command::Sweep => {
            if cfg.sweep.is_empty() {
                return Err(CliError::Usage(
                    "`sweep` needs a `sweep` section in the config".into(),
                ));
            }
            cmd_sweep(&cfg, cli, out)
        }
        Command::Validate => cmd_validate(&cfg, out),
        Command::Hardening => cmd_hardening(&cfg, out),
    }
}

/// Solves every point of the config under every requested scheme, in
/// deterministic order: point order first, joint before duration-only.
pub fn solve_points(cfg: &RunConfig) -> Result<Vec<ResultRow>, SolverError> {
    let jobs: Vec<(SystemParams, SchemeKind)> = cfg
        .points()
        .into_iter()
        .flat_map(|pt| cfg.scheme.expand().iter().map(move |s| (pt.params, *s)))
        .collect();
    jobs.into_par_iter()
        .map(|(params, scheme)| {
            let solution = match scheme {
                SchemeKind::Joint => solve_joint(&params, &cfg.solver)?,
                SchemeKind::DurationOnly => solve_duration_only(&params, &cfg.solver)?,
            };
            Ok(ResultRow {
                params,
                scheme,
                variant: ConstraintVariant::BoxTauMax,
                solution,
            })
        })
        .collect()
}

fn exit_for(rows: &[ResultRow]) -> Exit {
    if rows
        .iter()
        .any(|r| r.solution.status == SolveStatus::MaxIterationsReached)
    {
        Exit::ValidationFailure
    } else {
        Exit::Success
    }
}

fn ee_scale(cli: &Cli) -> f64 {
    if cli.kbj {
        1e-3
    } else {
        1.0
    }
}

fn write_side_outputs(cfg: &RunConfig, cli: &Cli, rows: &[ResultRow]) -> Result<(), CliError> {
    if let Some(trace) = &cli.trace {
        write_file(trace, &trace_csv(rows))?;
    }
    if cli.emit_plot_data {
        let path = match &cfg.output_path {
            Some(p) => {
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
                p.with_file_name(format!("{stem}_plot.csv"))
            }
            None => PathBuf::from("plot_data.csv"),
        };
        write_file(&path, &plot_csv(cfg, rows, ee_scale(cli)))?;
    }
    Ok(())
}

/// Long-format plot data: one line per (series, x).
fn plot_csv(cfg: &RunConfig, rows: &[ResultRow], scale: f64) -> String {
    let x_var = cfg
        .sweep
        .last()
        .map(|a| a.variable)
        .unwrap_or(SweepVariable::Alpha);
    let figure = format!("ee_vs_{}", x_var.as_str());
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for r in rows {
        let (x, series) = match x_var {
            SweepVariable::Alpha => (
                sig9(r.params.alpha),
                format!("{}_n_t_{}", r.scheme.as_str(), r.params.n_t),
            ),
            SweepVariable::NT => (
                r.params.n_t.to_string(),
                format!("{}_alpha_{}", r.scheme.as_str(), sig9(r.params.alpha)),
            ),
        };
        out.push_str(&format!(
            "{figure},{series},{x},{}\n",
            sig9(r.solution.ee * scale)
        ));
    }
    out
}

pub fn cmd_solve(cfg: &RunConfig, cli: &Cli, out: &mut dyn Write) -> Result<Exit, CliError> {
    let single = RunConfig {
        sweep: Vec::new(),
        ..cfg.clone()
    };
    let rows = solve_points(&single)?;
    let text = results_csv(&rows, ee_scale(cli));
    emit(out, &text)?;
    if let Some(path) = &cli.out {
        write_file(path, &text)?;
    }
    write_side_outputs(&single, cli, &rows)?;
    Ok(exit_for(&rows))
}

pub fn cmd_sweep(cfg: &RunConfig, cli: &Cli, out: &mut dyn Write) -> Result<Exit, CliError> {
    let rows = solve_points(cfg)?;
    let text = results_csv(&rows, ee_scale(cli));
    match &cfg.output_path {
        Some(path) => write_file(path, &text)?,
        None => emit(out, &text)?,
    }
    write_side_outputs(cfg, cli, &rows)?;
    Ok(exit_for(&rows))
}

/// One solver-versus-oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationRow {
    pub params: SystemParams,
    pub solver_status: SolveStatus,
    pub solver_ee: f64,
    pub oracle_ee: f64,
    pub rel_gap: f64,
    pub flagged: bool,
}

/// Relative gap, defined as 0 when both sides report zero.
pub fn relative_gap(solver_ee: f64, oracle_ee: f64) -> f64 {
    if solver_ee == 0.0 && oracle_ee == 0.0 {
        0.0
    } else {
        (solver_ee - oracle_ee).abs() / oracle_ee.abs().max(solver_ee.abs())
    }
}

pub fn validate_points(cfg: &RunConfig) -> Result<Vec<ValidationRow>, SolverError> {
    cfg.points()
        .into_iter()
        .map(|pt| {
            let sol = solve_joint(&pt.params, &cfg.solver)?;
            let orc = grid_search(&pt.params, cfg.variant, &cfg.grid);
            let rel_gap = relative_gap(sol.ee, orc.ee);
            Ok(ValidationRow {
                params: pt.params,
                solver_status: sol.status,
                solver_ee: sol.ee,
                oracle_ee: orc.ee,
                rel_gap,
                flagged: rel_gap > VALIDATE_RTOL || sol.status == SolveStatus::MaxIterationsReached,
            })
        })
        .collect()
}

pub fn cmd_validate(cfg: &RunConfig, out: &mut dyn Write) -> Result<Exit, CliError> {
    let rows = validate_points(cfg)?;
    let mut text = String::from(VALIDATE_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            sig9(r.params.alpha),
            sig9(r.params.theta),
            r.params.n_t,
            cfg.variant.as_str(),
            r.solver_status.as_str(),
            sig9(r.solver_ee),
            sig9(r.oracle_ee),
            sig9(r.rel_gap),
            r.flagged
        ));
    }
    match &cfg.output_path {
        Some(path) => write_file(path, &text)?,
        None => emit(out, &text)?,
    }
    let flagged = rows.iter().filter(|r| r.flagged).count();
    if flagged > 0 {
        eprintln!(
            "{flagged} of {} points exceed the {VALIDATE_RTOL} gap",
            rows.len()
        );
        Ok(Exit::ValidationFailure)
    } else {
        Ok(Exit::Success)
    }
}

pub const HARDENING_HEADER: &str = "seed,n_t,samples,mean_ratio,std_ratio,p_w,tau_s,det_rel_gap,mean_rel_gap,max_rel_gap,ergodic_rel_gap,excluded";

/// Antenna counts reported by `hardening`: the configured one plus 20, 50, 100.
pub fn hardening_antennas(n_t: u32) -> Vec<u32> {
    let mut v = vec![20, 50, 100, n_t];
    v.sort_unstable();
    v.dedup();
    v
}

pub fn cmd_hardening(cfg: &RunConfig, out: &mut dyn Write) -> Result<Exit, CliError> {
    let mut text = String::from(HARDENING_HEADER);
    text.push('\n');
    let op = cfg.operating_point.map_or(
        Allocation::new(cfg.params.p1_max, 0.5 * cfg.params.slot),
        |op| Allocation::new(op.p_w, op.tau_s),
    );
    for n_t in hardening_antennas(cfg.params.n_t) {
        let params = SystemParams { n_t, ..cfg.params };
        let h = hardening_stats(n_t as usize, cfg.mc_samples, cfg.seed);
        let det = deterministic_rate_gap(&params, &op).map_err(SolverError::from)?;
        let g =
            rate_gap_stats(&params, &op, cfg.mc_samples, cfg.seed).map_err(SolverError::from)?;
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cfg.seed,
            n_t,
            h.n_samples,
            sig9(h.mean_ratio),
            sig9(h.std_ratio),
            sig9(op.p),
            sig9(op.tau),
            sig9(det),
            sig9(g.mean_rel_gap),
            sig9(g.max_rel_gap),
            sig9(g.ergodic_rel_gap),
            g.excluded
        ));
    }
    match &cfg.output_path {
        Some(path) => write_file(path, &text)?,
        None => emit(out, &text)?,
    }
    Ok(Exit::Success)
}
