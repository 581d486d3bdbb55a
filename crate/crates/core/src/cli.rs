//! Command-line front end. Exit codes: 0 success, 1 output error,
//! 2 invalid configuration or arguments, 3 solver failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{convergence_study, Ladder};
use crate::config::{ConfigError, RunConfig};
use crate::io::{write_error_table, write_timeseries, write_vtk, IoError};
use crate::scheme::{build_mesh, run_with_observer, SchemeError, Trajectory};

/// Environment variable that overrides the configured output directory
pub const OUTPUT_ENV: &str = "CHSD_OUT";

/// Relative slack of the energy audit: a step violates the energy law when
/// `E^{k+1} > E^k + ENERGY_SLACK · E^0`
pub const ENERGY_SLACK: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "chsd", version, about = "Cahn-Hilliard-Stokes-Darcy simulator and verification harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation and write the time series and VTK snapshots
    Run { config: PathBuf },
    /// Run a refinement ladder against the configured manufactured solution
    Converge {
        config: PathBuf,
        #[arg(long, value_parser = parse_ladder)]
        ladder: Ladder,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Check the discrete energy law for several time steps
    EnergyAudit {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<f64>,
    },
    /// Write the mesh as plain text
    MeshDump { config: PathBuf },
}

fn parse_ladder(s: &str) -> Result<Ladder, String> {
    Ladder::parse(s).ok_or_else(|| format!("expected temporal or spatial, got {s:?}"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("output: {0}")]
    Output(#[from] IoError),
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(IoError::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ReadConfig { .. } | CliError::Config(_) | CliError::Argument(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

/// Reads and validates a configuration; `CHSD_OUT` replaces its output
/// directory when set
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig { path: path.to_path_buf(), source })?;
    let mut config = RunConfig::parse(&text)?;
    config.validate()?;
    if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|d| !d.is_empty()) {
        config.output_dir = PathBuf::from(dir);
    }
    Ok(config)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn summary(traj: &Trajectory) -> String {
    let pc = traj.diagnostics.iter().any(|d| d.pc_multiplier);
    format!(
        "completed = {}\nfinal_step = {}\nsteps = {}\ntau = {:.16e}\nmax_newton_iters = {}\nmax_linear_residual = {:.16e}\npc_multiplier = {}\nfailure = {}\n",
        traj.completed(),
        traj.final_step,
        traj.steps,
        traj.tau,
        traj.max_newton_iterations,
        traj.max_linear_residual,
        pc,
        traj.failure.as_deref().unwrap_or("none"),
    )
}

pub fn cmd_run(config: &RunConfig) -> Result<Trajectory, CliError> {
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.txt"), config.to_text())?;
    let every = config.vtk_every;
    let steps = config.time.steps;
    let mut write_error = None;
    let (_, traj) = run_with_observer(config, &mut |disc, k, state| {
        if every > 0 && (k % every == 0 || k == steps) && write_error.is_none() {
            let text = write_vtk(disc, state, &format!("chsd step {k}"));
            if let Err(e) = std::fs::write(dir.join(format!("state_{k:06}.vtk")), text) {
                write_error = Some(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }
    write_timeseries(create(&dir.join("timeseries.csv"))?, &traj.diagnostics)?;
    std::fs::write(dir.join("summary.txt"), summary(&traj))?;
    if let Some(f) = &traj.failure {
        return Err(CliError::Solver(f.clone()));
    }
    Ok(traj)
}

pub fn cmd_converge(config: &RunConfig, ladder: Ladder, levels: usize) -> Result<crate::analysis::ErrorTable, CliError> {
    if config.mms.family == crate::config::MmsFamily::None {
        return Err(CliError::Argument("converge needs mms = trig or mms = equilibrium".into()));
    }
    if levels == 0 {
        return Err(CliError::Argument("levels must be positive".into()));
    }
    std::fs::create_dir_all(&config.output_dir)?;
    let table = convergence_study(config, ladder, levels);
    write_error_table(create(&config.output_dir.join(format!("errors_{}.csv", ladder.name())))?, &table)?;
    for l in &table.levels {
        match &l.failure {
            None => println!("level {} h={:.4e} tau={:.4e} norms={:?}", l.level, l.h, l.tau, l.norms),
            Some(f) => println!("level {} failed: {f}", l.level),
        }
    }
    println!("slopes {:?}", table.slopes);
    if let Some(f) = table.levels.iter().find_map(|l| l.failure.clone()) {
        return Err(CliError::Solver(f));
    }
    Ok(table)
}

/// Outcome of the energy audit for one time step
#[derive(Clone, Debug, PartialEq)]
pub struct AuditRow {
    pub tau: f64,
    pub steps: usize,
    pub failure: Option<String>,
    /// Number of steps with `E^{k+1} > E^k + ENERGY_SLACK · E^0`
    pub violations: usize,
    /// `max_k (E^{k+1} − E^k) / E^0`
    pub max_relative_increase: f64,
    /// `max_k |(φ^k, 1) − (φ^0, 1)|`
    pub mass_drift: f64,
}

/// Energy-law violations of a trajectory saved at every step
pub fn audit(traj: &Trajectory) -> AuditRow {
    let d = &traj.diagnostics;
    let e0 = d.first().map_or(0.0, |d| d.energy.total);
    let mut row = AuditRow {
        tau: traj.tau,
        steps: traj.final_step,
        failure: traj.failure.clone(),
        violations: 0,
        max_relative_increase: f64::NEG_INFINITY,
        mass_drift: 0.0,
    };
    for w in d.windows(2) {
        let inc = w[1].energy.total - w[0].energy.total;
        if inc > ENERGY_SLACK * e0.abs() {
            row.violations += 1;
        }
        row.max_relative_increase = row.max_relative_increase.max(inc / e0.abs());
    }
    if let Some(first) = d.first() {
        row.mass_drift = d.iter().map(|x| (x.mass - first.mass).abs()).fold(0.0, f64::max);
    }
    row
}

pub fn cmd_energy_audit(config: &RunConfig, taus: &[f64]) -> Result<Vec<AuditRow>, CliError> {
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(CliError::Argument(format!("time step {t} must be positive")));
    }
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    let runs: Vec<Result<Trajectory, SchemeError>> = taus
        .par_iter()
        .map(|&tau| {
            let mut c = config.clone();
            c.time.tau = tau;
            c.time.save_every = 1;
            c.vtk_every = 0;
            run_with_observer(&c, &mut |_, _, _| {}).map(|(_, t)| t)
        })
        .collect();
    let mut rows = Vec::new();
    let mut w = csv::Writer::from_writer(create(&dir.join("energy_audit.csv"))?);
    w.write_record(["tau", "steps", "status", "violations", "max_relative_increase", "mass_drift"])
        .map_err(IoError::from)?;
    for (i, run) in runs.into_iter().enumerate() {
        let traj = run?;
        write_timeseries(create(&dir.join(format!("timeseries_tau{i}.csv")))?, &traj.diagnostics)?;
        let row = audit(&traj);
        let status = row.failure.as_ref().map_or("ok".to_string(), |f| format!("failed: {f}"));
        w.write_record([
            format!("{:.16e}", row.tau),
            row.steps.to_string(),
            status,
            row.violations.to_string(),
            format!("{:.16e}", row.max_relative_increase),
            format!("{:.16e}", row.mass_drift),
        ])
        .map_err(IoError::from)?;
        println!(
            "tau={:.4e} steps={} violations={} max_rel_increase={:.3e} mass_drift={:.3e}",
            row.tau, row.steps, row.violations, row.max_relative_increase, row.mass_drift
        );
        rows.push(row);
    }
    w.flush()?;
    if let Some(f) = rows.iter().find_map(|r| r.failure.clone()) {
        return Err(CliError::Solver(f));
    }
    Ok(rows)
}

pub fn cmd_mesh_dump(config: &RunConfig) -> Result<PathBuf, CliError> {
    let mesh = build_mesh(config).map_err(|e| CliError::Argument(e.to_string()))?;
    std::fs::create_dir_all(&config.output_dir)?;
    let path = config.output_dir.join("mesh.txt");
    std::fs::write(&path, mesh.dump())?;
    Ok(path)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { config } => cmd_run(&load_config(config)?).map(|_| ()),
        Command::Converge { config, ladder, levels } => {
            cmd_converge(&load_config(config)?, *ladder, *levels).map(|_| ())
        }
        Command::EnergyAudit { config, taus } => cmd_energy_audit(&load_config(config)?, taus).map(|_| ()),
        Command::MeshDump { config } => cmd_mesh_dump(&load_config(config)?).map(|_| ()),
    }
}

/// Entry point of the binary
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chsd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
