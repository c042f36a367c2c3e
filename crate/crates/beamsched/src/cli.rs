//! Command-line entry point. Precedence: flags, then the config file, then
//! built-in defaults.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::config::{parse_config, ConfigError, RunManifest};
use crate::{output, runner};

#[derive(Debug, Parser)]
#[command(name = "beamsched", version, about = "Beamwidth-aware mmWave V2V scheduling simulator")]
pub struct Args {
    /// TOML run manifest; built-in defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed shared by all scenarios and policies.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scheduling periods per replication.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub periods: Option<u64>,
    /// Independent replications per scenario.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub replications: Option<u32>,
    /// Also write topology, event, link and record dumps.
    #[arg(long)]
    pub raw: bool,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// File (or defaults) with command-line overrides applied, then revalidated.
pub fn effective_manifest(args: &Args) -> Result<RunManifest, ConfigError> {
    let mut m = match &args.config {
        Some(path) => parse_config(path)?,
        None => RunManifest::default(),
    };
    if let Some(s) = args.seed {
        m.run.seed = s;
    }
    if let Some(o) = &args.out {
        m.run.out = o.clone();
    }
    if let Some(p) = args.periods {
        m.run.periods = p;
    }
    if let Some(r) = args.replications {
        m.run.replications = r;
    }
    if args.raw {
        m.run.raw = true;
    }
    m.validate()?;
    Ok(m)
}

pub fn execute(args: &Args) -> Result<Vec<runner::CellResult>, CliError> {
    let manifest = effective_manifest(args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        pool = pool.num_threads(j as usize);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let results = pool.install(|| runner::execute(&manifest)).map_err(CliError::Runtime)?;
    output::write_tree(&manifest.run.out, &manifest, &results)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", manifest.run.out.display())))?;
    Ok(results)
}

fn print_summary(results: &[runner::CellResult]) {
    println!("{:<12} {:<9} {:>9} {:>9} {:>10} {:>8}", "scenario", "policy", "contacted", "pdr_mean", "thr_mbps", "gain_%");
    for c in results {
        for r in &c.runs {
            let rep = &r.report;
            let gain = match (r.policy, c.gain_percent()) {
                (beamsched_core::Policy::Adaptive, Some(Ok(g))) => format!("{g:.2}"),
                _ => String::new(),
            };
            println!(
                "{:<12} {:<9} {:>9.3} {:>9.2} {:>10.2} {:>8}",
                c.cell.dir_name(),
                r.policy.as_str(),
                rep.contacted.map_or(f64::NAN, |b| b.median),
                rep.pdr.map_or(f64::NAN, |b| b.mean),
                rep.aggregated_throughput_mbps,
                gain
            );
        }
    }
}

pub fn main_with<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&args) {
        Ok(results) => {
            print_summary(&results);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
