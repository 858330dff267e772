//! Command-line driver: configuration, snapshots, reports and the verification checks.

pub mod checks;
pub mod config;
pub mod report;
pub mod snapshot;
pub mod table;

use anyhow::{Context, Result};
use checks::Outcome;
use clap::{Args, Parser, Subcommand};
use config::{ConfigError, RunConfig};
use helegraph::elliptic::solve_phase;
use helegraph::{BulkConfig, Phase};
use snapshot::Snapshot;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const OUT_ENV: &str = "HELEGRAPH_OUT";

#[derive(Parser, Debug)]
#[command(name = "helegraph", version, about = "Hele-Shaw graph interface laboratory")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory. Overrides the config; HELEGRAPH_OUT overrides both.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every randomized check.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate the flow and write the trajectory.
    Evolve {
        /// Resume from a snapshot instead of the configured initial state.
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Probe the linearized operator.
    #[command(subcommand)]
    Probe(Probe),
    /// Run one of the verification suites.
    #[command(subcommand)]
    Verify(Verify),
    /// Summarize the reports already in the output directory.
    Report,
}

#[derive(Subcommand, Debug)]
pub enum Probe {
    Kernel,
    Symbol {
        /// Comma-separated frequencies.
        #[arg(long, value_delimiter = ',')]
        xi: Option<Vec<f64>>,
    },
    Drift,
    Sandwich,
}

#[derive(Subcommand, Debug)]
pub enum Verify {
    Greens,
    Gcp {
        #[arg(long)]
        pairs: Option<usize>,
    },
    Decay,
    Whitney,
    Parabolic,
    Shift,
    Rotation,
    Elliptic,
    Regularity,
}

fn out_dir(global: &Global, cfg: &RunConfig) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    global.out.clone().unwrap_or_else(|| cfg.out_dir.clone())
}

fn load_config(global: &Global) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(t) = global.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

/// Exit code for an error: 2 for configuration problems, 1 otherwise.
fn error_code(e: &anyhow::Error) -> (i32, String) {
    if let Some(c) = e.downcast_ref::<ConfigError>() {
        return (2, c.to_string());
    }
    for cause in e.chain() {
        if let Some(helegraph::Error::InvalidParameter { name, reason }) = cause.downcast_ref::<helegraph::Error>() {
            return (2, format!("config error in `{name}`: {reason}"));
        }
    }
    (1, format!("error: {e:#}"))
}

/// Parses `args` (including the program name), runs the command and returns the exit
/// code: 0 when every assertion passes, 1 on a failed assertion or runtime error, 2 on a
/// configuration error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(pass) => {
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let (code, msg) = error_code(&e);
            eprintln!("{msg}");
            code
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let mut cfg = load_config(&cli.global)?;
    if let Command::Verify(Verify::Gcp { pairs: Some(p) }) = &cli.command {
        cfg.gcp.pairs = *p;
    }
    if let Command::Probe(Probe::Symbol { xi: Some(xi) }) = &cli.command {
        cfg.symbol.xi = xi.clone();
    }
    if let Command::Evolve { t_end: Some(t), .. } = &cli.command {
        cfg.evolve.t_end = *t;
    }
    cfg.validate()?;
    let dir = out_dir(&cli.global, &cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .context("building the worker pool")?;
    pool.install(|| dispatch(cli, &cfg, &dir))
}

fn finish(dir: &Path, command: &str, cfg: &RunConfig, outcome: &Outcome) -> Result<bool> {
    report::emit(dir, command, cfg, outcome)?;
    println!("{}", outcome.line());
    Ok(outcome.pass)
}

fn dispatch(cli: &Cli, cfg: &RunConfig, dir: &Path) -> Result<bool> {
    match &cli.command {
        Command::Evolve { initial, .. } => evolve(cfg, dir, initial.as_deref()),
        Command::Probe(p) => {
            let (name, o) = match p {
                Probe::Kernel => ("probe kernel", checks::kernel(&cfg.kernel)?),
                Probe::Symbol { .. } => ("probe symbol", checks::symbol(&cfg.symbol)?),
                Probe::Drift => ("probe drift", checks::drift(&cfg.kernel)?),
                Probe::Sandwich => ("probe sandwich", checks::sandwich(&cfg.sandwich)?),
            };
            finish(dir, name, cfg, &o)
        }
        Command::Verify(v) => {
            let (name, o) = match v {
                Verify::Greens => ("verify greens", checks::greens(&cfg.greens)?),
                Verify::Gcp { .. } => ("verify gcp", checks::gcp(&cfg.gcp, cfg.seed)?),
                Verify::Decay => ("verify decay", checks::decay(&cfg.decay)?),
                Verify::Whitney => ("verify whitney", checks::whitney(&cfg.whitney)?),
                Verify::Parabolic => ("verify parabolic", checks::parabolic(&cfg.parabolic, cfg.seed)?),
                Verify::Shift => ("verify shift", checks::shift(&cfg.shift)?),
                Verify::Rotation => ("verify rotation", checks::rotation(&cfg.rotation)?),
                Verify::Elliptic => ("verify elliptic", checks::elliptic(&cfg.elliptic)?),
                Verify::Regularity => ("verify regularity", checks::regularity(&cfg.regularity)?),
            };
            finish(dir, name, cfg, &o)
        }
        Command::Report => summarize(dir),
    }
}

fn evolve(cfg: &RunConfig, dir: &Path, initial: Option<&Path>) -> Result<bool> {
    let e = &cfg.evolve;
    let (f0, t0) = match initial {
        Some(p) => {
            let s = Snapshot::load(p)?;
            (s.interface()?, s.t)
        }
        None => (e.initial.build(e.nx, e.period, e.strip_height)?, 0.0),
    };
    let (outcome, tr) = checks::evolution(e, f0, t0)?;
    let snaps = dir.join("snapshots");
    std::fs::create_dir_all(&snaps).with_context(|| format!("creating {}", snaps.display()))?;
    for (k, s) in tr.snapshots.iter().enumerate() {
        Snapshot::from_state(s).save(&snaps.join(format!("snapshot_{k:04}.json")))?;
    }
    let last = tr.snapshots.last().context("trajectory has a final state")?;
    Snapshot::from_state(last).save(&dir.join("final.snapshot.json"))?;
    let mut bulk = BulkConfig::new(e.ny);
    bulk.solver.tol = e.solver_tol;
    bulk.backend = e.backend;
    let u = solve_phase(&last.f, Phase::Plus, e.law.a2, &bulk)?;
    table::bulk("bulk_plus", &u, "plus").write(dir)?;
    if e.law.two_phase() {
        let u = solve_phase(&last.f, Phase::Minus, e.law.a2, &bulk)?;
        table::bulk("bulk_minus", &u, "minus").write(dir)?;
    }
    finish(dir, "evolve", cfg, &outcome)
}

fn summarize(dir: &Path) -> Result<bool> {
    let reports = report::collect(dir)?;
    anyhow::ensure!(!reports.is_empty(), "no reports in {}", dir.display());
    let mut pass = true;
    for r in &reports {
        println!("{}", r.summary);
        pass &= r.pass;
    }
    let n_pass = reports.iter().filter(|r| r.pass).count();
    println!("{} report {n_pass}/{}", if pass { "PASS" } else { "FAIL" }, reports.len());
    Ok(pass)
}
