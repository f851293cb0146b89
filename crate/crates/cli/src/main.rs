//! `critasym`: sweeps and tables for the critical-asymptotics library.
//!
//! Each subcommand writes `<name>.csv` (first line `# config_hash=...`)
//! and `<name>.manifest.json` into the output directory. Exit codes:
//! 0 success, 1 validation, 2 partial failure, 3 internal. On codes 1
//! and 3 an `error.json` is written instead of the table.

mod commands;
mod config;
mod output;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use config::ConfigFile;
use output::{config_hash, emit, emit_error, Failure, Table};

#[derive(Debug, Parser)]
#[command(name = "critasym", version, about = "Critical asymptotics sweeps and recurrence tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file; see the README for the schema.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent sweep cells.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Multiplier applied to solver tolerances.
    #[arg(long, global = true)]
    tol_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Leading and trailing edges of the KdV oscillation zone over a time grid.
    KdvPhase,
    /// Direct KdV solution against an asymptotic formula, per ε.
    KdvCompare,
    /// One-cut classification over an (x, t) grid of quartic fields.
    RmtPhase,
    /// Recurrence coefficients with asymptotic comparison.
    OpTable,
    /// Toda hierarchy flow of recurrence data.
    TodaRun,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::KdvPhase => "kdv-phase",
            Command::KdvCompare => "kdv-compare",
            Command::RmtPhase => "rmt-phase",
            Command::OpTable => "op-table",
            Command::TodaRun => "toda-run",
        }
    }
}

fn read_input(path: &Path, base: Option<&Path>) -> Result<Vec<u8>, Failure> {
    let full = match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    };
    fs::read(&full).map_err(|e| Failure::validation(format!("reading {}: {e}", full.display())))
}

fn canonical<T: Serialize>(command: &str, tol_scale: f64, params: &T) -> Value {
    json!({ "command": command, "tol_scale": tol_scale, "params": params })
}

type Job = Box<dyn FnOnce(Option<&[u8]>) -> Result<Table, Failure> + Send>;

struct Run {
    out: PathBuf,
    hash: Option<String>,
}

fn execute(cli: &Cli, run: &mut Run) -> Result<i32, Failure> {
    let base = cli.config.as_deref().and_then(Path::parent);
    let file = match &cli.config {
        Some(p) => ConfigFile::parse(
            &fs::read_to_string(p).map_err(|e| Failure::validation(format!("reading {}: {e}", p.display())))?,
        )?,
        None => ConfigFile::default(),
    };
    run.out = cli.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let tol_scale = cli.tol_scale.or(file.tol_scale).unwrap_or(1.0);
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        return Err(Failure::validation("tol-scale must be positive"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    match cli.jobs.or(file.jobs) {
        Some(0) => return Err(Failure::validation("jobs must be at least 1")),
        Some(k) => pool = pool.num_threads(k),
        None => {}
    }
    let pool = pool.build().map_err(|e| Failure::internal(format!("thread pool: {e}")))?;

    let name = cli.command.name();
    let data_input = |p: &Option<PathBuf>| p.as_deref().map(|p| read_input(p, base)).transpose();
    let (config, input, job): (Value, Option<Vec<u8>>, Job) = match cli.command {
        Command::KdvPhase => {
            let c = file.kdv_phase.clone();
            let input = data_input(&c.data.file)?;
            (canonical(name, tol_scale, &c), input, Box::new(move |b| commands::kdv_phase(&c, b)))
        }
        Command::KdvCompare => {
            let c = file.kdv_compare.clone();
            let input = data_input(&c.data.file)?;
            (canonical(name, tol_scale, &c), input, Box::new(move |b| commands::kdv_compare(&c, b, tol_scale)))
        }
        Command::RmtPhase => {
            let c = file.rmt_phase.clone();
            (canonical(name, tol_scale, &c), None, Box::new(move |_| commands::rmt_phase(&c)))
        }
        Command::OpTable => {
            let c = file.op_table.clone();
            (canonical(name, tol_scale, &c), None, Box::new(move |_| commands::op_table(&c)))
        }
        Command::TodaRun => {
            let c = file.toda_run.clone();
            let input = data_input(&c.file)?;
            (canonical(name, tol_scale, &c), input, Box::new(move |b| commands::toda_run(&c, b)))
        }
    };
    let hash = config_hash(&config, input.as_slice());
    run.hash = Some(hash.clone());
    let table = pool.install(|| job(input.as_deref()))?;
    emit(&run.out, name, &config, &hash, &table)
}

fn main() -> ExitCode {
    // Usage errors are validation failures; clap's own code 2 means partial here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { output::EXIT_VALIDATION as u8 } else { 0 });
        }
    };
    let mut run = Run { out: cli.out.clone().unwrap_or_else(|| PathBuf::from("out")), hash: None };
    let result = catch_unwind(AssertUnwindSafe(|| execute(&cli, &mut run))).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(Failure::internal(msg))
    });
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("critasym {}: {} ({})", cli.command.name(), f.message, f.kind);
            emit_error(&run.out, cli.command.name(), run.hash.as_deref(), &f);
            f.code
        }
    };
    ExitCode::from(code as u8)
}
