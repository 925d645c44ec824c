use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use ccr_cli::config::{EpeAxis, RunConfig, TableKind};
use ccr_core::pricing::Method;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ccr",
    version,
    about = "Accumulator exposure tables: fair value, EPE, timing, workload, curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one table and write CSV, JSON and metadata files.
    Run(Box<RunArgs>),
    /// Print the effective configuration of a table as JSON.
    Config {
        #[arg(long, value_enum, default_value = "epe")]
        table: TableKind,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    table: Option<TableKind>,
    /// JSON configuration; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to these methods (repeatable): bsd, bsc, lt.
    #[arg(long = "method", value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    n_days: Option<usize>,
    #[arg(long)]
    buckets: Option<usize>,
    #[arg(long)]
    fixings_per_day: Option<usize>,
    /// Value unfixed dates at the inception spot in the discrete route.
    #[arg(long)]
    inception_spot: bool,
    #[arg(long, value_enum)]
    epe_axis: Option<EpeAxis>,
    /// Relative tolerance of the price-level integral.
    #[arg(long)]
    x_rel_tol: Option<f64>,
    /// Relative tolerance of the local-time integral.
    #[arg(long)]
    y_rel_tol: Option<f64>,
    /// Relative tolerance of the calendar-time integral.
    #[arg(long)]
    t_rel_tol: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                RunConfig::load(path).with_context(|| format!("reading {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(t) = self.table {
            cfg.table = t;
        }
        if let Some(s) = self.seed {
            cfg.sim.seed = s;
        }
        if !self.methods.is_empty() {
            cfg.methods = self.methods.clone();
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(n) = self.n_paths {
            cfg.sim.n_paths = n;
        }
        if let Some(n) = self.n_days {
            cfg.contract.n_fixings = n;
            cfg.sim.n_days = n;
        }
        if let Some(b) = self.buckets {
            cfg.buckets = b;
        }
        if let Some(f) = self.fixings_per_day {
            cfg.fixings_per_day = f;
        }
        if self.inception_spot {
            cfg.inception_spot = true;
        }
        if let Some(a) = self.epe_axis {
            cfg.epe_axis = a;
        }
        if let Some(t) = self.x_rel_tol {
            cfg.quad.x.rel_tol = t;
        }
        if let Some(t) = self.y_rel_tol {
            cfg.quad.y.rel_tol = t;
        }
        if let Some(t) = self.t_rel_tol {
            cfg.quad.t.rel_tol = t;
        }
        if let Some(r) = self.repetitions {
            cfg.timing.repetitions = r;
        }
        Ok(cfg)
    }
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Config { table } => {
            println!(
                "{}",
                serde_json::to_string_pretty(&RunConfig::for_table(table))?
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            let cfg = args.config()?;
            let report = ccr_cli::run(&cfg)?;
            let files = report.write_to(&cfg.out)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            print!("{}", String::from_utf8_lossy(&csv));
            eprintln!(
                "wrote {}, {}, {}",
                files.csv.display(),
                files.json.display(),
                files.metadata.display()
            );
            let failed = report.failures();
            if failed > 0 {
                eprintln!("{failed} row(s) failed");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
