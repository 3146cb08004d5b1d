//! `macexp`: exponents, tables, sweeps and oracle validation from a JSON
//! configuration.
//!
//! Exit codes: 0 ok, 1 a check failed, 2 the input was unusable.

mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use macexp_core::exponents::{gamma_surface, GRID_TOL};
use macexp_core::{
    assignment_search_with, lower_bound, optimize_thresholds, Config, Evaluator, Instance, SearchOptions, SolverConfig,
    Thresholds,
};

use output::Units;

#[derive(Parser)]
#[command(name = "macexp", version, about = "Message-dependent error exponents for correlated sources over a two-user MAC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal thresholds, the exponent, Table I at the optimum and the lower bound.
    Exponent {
        #[command(flatten)]
        common: Common,
        /// Print the full report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Write tableI.csv (F at the optimal thresholds) and tableII.csv (lower-bound F).
    Tables {
        #[command(flatten)]
        common: Common,
    },
    /// Source-function curves over rho, or the min-f surface over (gamma1, gamma2).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        mode: SweepMode,
        /// Fixed thresholds for the rho sweep (default: the optimal ones).
        #[arg(long)]
        gamma1: Option<f64>,
        #[arg(long)]
        gamma2: Option<f64>,
    },
    /// Cross-check the dual formulas against primal brute force.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Sampled (rho, gamma, tau, classes) configurations for the source check.
        #[arg(long, default_value_t = 40)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMode {
    Rho,
    Gamma,
}

#[derive(Args)]
struct Common {
    /// Configuration document (JSON).
    config: PathBuf,
    /// Output directory for CSV/JSON files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid size: gamma-grid side for `exponent` checks and `sweep gamma`,
    /// number of rho points for `sweep rho`.
    #[arg(long)]
    grid: Option<usize>,
    /// Agreement tolerance for exponent checks (nats).
    #[arg(long)]
    tol_exp: Option<f64>,
    /// Bisection tolerance on the thresholds.
    #[arg(long)]
    tol_gamma: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "MACEXP_JOBS")]
    jobs: Option<usize>,
    /// Report exponents in bits instead of nats.
    #[arg(long)]
    bits: bool,
}

enum Failure {
    Input(String),
    Check(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

struct Loaded {
    instance: Instance,
    cfg: SolverConfig,
    units: Units,
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure::Input(format!("cannot configure {jobs} threads: {e}")))?;
    }
    let config = Config::load(&common.config).map_err(|e| Failure::Input(e.to_string()))?;
    let instance = config.instance().map_err(|e| Failure::Input(e.to_string()))?;
    if let Some(t) = common.tol_exp {
        if !(t >= 0.0) {
            return Err(Failure::Input(format!("--tol-exp must be non-negative, got {t}")));
        }
    }
    let mut cfg = config.solver;
    if let Some(t) = common.tol_gamma {
        if !(t > 0.0 && t < 1.0) {
            return Err(Failure::Input(format!("--tol-gamma must lie in (0, 1), got {t}")));
        }
        cfg.gamma_tol = t;
    }
    Ok(Loaded { instance, cfg, units: Units { bits: common.bits } })
}

fn out_dir(common: &Common) -> Result<PathBuf, Failure> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn solver_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Check(e.to_string())
}

fn cmd_exponent(common: &Common, json: bool) -> Result<(), Failure> {
    let l = load(common)?;
    let started = Instant::now();
    let report = assignment_search_with(&l.instance, &l.cfg, SearchOptions { grid: common.grid }).map_err(solver_failure)?;
    eprintln!("macexp: {} in {:.1}s", common.config.display(), started.elapsed().as_secs_f64());
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(dir.join("report.json"), text + "\n")?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", output::report_text(&report, l.units));
    }
    let tol = common.tol_exp.unwrap_or(GRID_TOL);
    match &report.grid_check {
        Some(g) if g.gap.abs() > tol => Err(Failure::Check(format!(
            "gamma-grid maximum {:.6} differs from the bisection exponent {:.6} by {:.2e} (> {tol:.1e})",
            g.max.value, report.exponent.value, g.gap
        ))),
        _ => Ok(()),
    }
}

fn cmd_tables(common: &Common) -> Result<(), Failure> {
    let l = load(common)?;
    let dir = out_dir(common)?;
    let ev = Evaluator::new(&l.instance, l.cfg).map_err(solver_failure)?;
    let sol = optimize_thresholds(&ev).map_err(solver_failure)?;
    let table_i = ev.f_table(sol.gamma);
    let lb = lower_bound(&l.instance, &l.cfg).map_err(solver_failure)?;
    output::write_table(&dir.join("tableI.csv"), &output::TABLE_I_HEADER, &table_i, l.units)?;
    output::write_table(&dir.join("tableII.csv"), &output::TABLE_II_HEADER, &lb.table, l.units)?;
    eprintln!(
        "macexp: thresholds ({:.6}, {:.6}); wrote tableI.csv and tableII.csv to {}",
        sol.gamma.gamma1,
        sol.gamma.gamma2,
        dir.display()
    );
    Ok(())
}

fn cmd_sweep(common: &Common, mode: SweepMode, gamma1: Option<f64>, gamma2: Option<f64>) -> Result<(), Failure> {
    let l = load(common)?;
    let dir = out_dir(common)?;
    match mode {
        SweepMode::Rho => {
            let gamma = match (gamma1, gamma2) {
                (Some(a), Some(b)) => Thresholds::new(a, b).map_err(|e| Failure::Input(e.to_string()))?,
                (None, None) => {
                    let ev = Evaluator::new(&l.instance, l.cfg).map_err(solver_failure)?;
                    optimize_thresholds(&ev).map_err(solver_failure)?.gamma
                }
                _ => return Err(Failure::Input("give both --gamma1 and --gamma2, or neither".into())),
            };
            let n = common.grid.unwrap_or(101).max(2);
            let path = dir.join("sweep_rho.csv");
            output::write_rho_sweep(&path, &l.instance, gamma, n, &l.cfg, l.units)?;
            eprintln!("macexp: rho sweep at ({:.6}, {:.6}), {n} points -> {}", gamma.gamma1, gamma.gamma2, path.display());
        }
        SweepMode::Gamma => {
            let n = common.grid.unwrap_or(101).max(2);
            let ev = Evaluator::new(&l.instance, l.cfg).map_err(solver_failure)?;
            let started = Instant::now();
            let surface = gamma_surface(&ev, n);
            let path = dir.join("sweep_gamma.csv");
            output::write_gamma_sweep(&path, &surface, l.units)?;
            eprintln!("macexp: {n}x{n} gamma grid in {:.1}s -> {}", started.elapsed().as_secs_f64(), path.display());
        }
    }
    Ok(())
}

fn cmd_validate(common: &Common, samples: usize, seed: u64) -> Result<(), Failure> {
    let l = load(common)?;
    let checks = validate::run(&l.instance, &l.cfg, samples, seed, common.tol_exp);
    let mut failed = Vec::new();
    for c in &checks {
        println!("{}", c.line());
        if !c.passed() {
            failed.push(c.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        let offending: Vec<String> = checks.iter().filter_map(|c| c.offending.clone()).collect();
        Err(Failure::Check(format!("tolerance exceeded in {}: {}", failed.join(", "), offending.join("; "))))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Exponent { common, json } => cmd_exponent(&common, json),
        Command::Tables { common } => cmd_tables(&common),
        Command::Sweep { common, mode, gamma1, gamma2 } => cmd_sweep(&common, mode, gamma1, gamma2),
        Command::Validate { common, samples, seed } => cmd_validate(&common, samples, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("macexp: check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("macexp: {msg}");
            ExitCode::from(2)
        }
    }
}

