//! `bellman`: runs configured checks and writes reports.
//!
//! ```text
//! bellman [--config PATH] [--out DIR] [--tol X] [--grid N] [--seed N] [--general-rank] <COMMAND>
//! ```
//!
//! `check-pde`, `flow`, `verify`, `dbar` and `region` run the scenarios of
//! that kind; `report` runs all of them and prints the JSON report when no
//! output directory is given. Without `--config` the bundled `paper-core`
//! suite is used. `--tol`, `--grid` and `--seed` replace the config's global
//! defaults; values set inside a scenario still win. `--general-rank` keeps
//! only block-system scenarios. `BELLMAN_WORKERS` bounds the worker pool.
//!
//! The exit status is 0 when the suite verdict is pass, 1 when it is not,
//! and 2 on usage, config or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bellman_core::config::{parse_config, ExperimentConfig, Kind, PAPER_CORE};
use bellman_core::suite::{emit, run_suite, WORKERS_ENV};
use bellman_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "bellman", version, about = "Numerical checks for Bellman-type PDE systems")]
struct Cli {
    /// Experiment config; the bundled paper-core suite when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for report.json and CSV plot data.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Default tolerance.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,

    /// Default points per grid axis.
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,

    /// Default seed for random instances.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Keep only block-system scenarios.
    #[arg(long, global = true)]
    general_rank: bool,

    /// Worker-pool size.
    #[arg(long, global = true, env = WORKERS_ENV, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Pointwise PDE conditions.
    CheckPde,
    /// Heat-flow evolutions and energies.
    Flow,
    /// Integral inequalities.
    Verify,
    /// Bessel-series solutions and hodograph maps.
    Dbar,
    /// Parameter-region scans.
    Region,
    /// Every scenario, with the full JSON report.
    Report,
}

impl Command {
    fn kind(self) -> Option<Kind> {
        match self {
            Command::CheckPde => Some(Kind::CheckPde),
            Command::Flow => Some(Kind::Flow),
            Command::Verify => Some(Kind::Verify),
            Command::Dbar => Some(Kind::Dbar),
            Command::Region => Some(Kind::Region),
            Command::Report => None,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|source| Error::Io { path: p.clone(), source })?,
        None => PAPER_CORE.to_string(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    if let Some(g) = cli.grid {
        cfg.grid = g;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(k) = cli.command.kind() {
        cfg.scenarios.retain(|s| s.kind == k);
    }
    if cli.general_rank {
        cfg.scenarios.retain(|s| s.is_general_rank());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load(cli)?;
    let out = run_suite(&cfg, cli.workers.filter(|&n| n > 0))?;
    let report = &out.report;
    let dir = cli.out.clone().or_else(|| cfg.out.clone());
    if cli.command == Command::Report && dir.is_none() {
        println!("{}", report.to_json()?);
    } else {
        for s in &report.scenarios {
            let status = if s.ok { "ok  " } else { "FAIL" };
            let seen = s.observed.map_or("error".to_string(), |v| format!("{v:?}").to_lowercase());
            println!("{status} {:<34} expect {:<5} got {seen}", s.name, format!("{:?}", s.expect).to_lowercase());
            if let Some(e) = &s.error {
                println!("     {e}");
            }
        }
        println!(
            "{}: {} scenario(s), {} check(s), verdict {}, {:.0} ms",
            report.experiment,
            report.scenarios.len(),
            report.checks.len(),
            format!("{:?}", report.verdict).to_lowercase(),
            report.runtime_ms
        );
    }
    if let Some(d) = dir {
        for p in emit(&out, &d)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("bellman: {e}");
            ExitCode::from(2)
        }
    }
}
