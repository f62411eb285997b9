//! `fdhbf`: beam dumps and figure-style sweeps as long-format CSV.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 on runtime errors or when
//! any sweep point lost more than 1% of its realizations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdhbf_sim::beams::beam_report;
use fdhbf_sim::sweep::{run_sweep_with, PointSummary};
use fdhbf_sim::{figure_sweeps, CsvSink, FigureKind, SimConfig, SimError};

#[derive(Parser, Debug)]
#[command(
    name = "fdhbf",
    version,
    about = "Full-duplex hybrid beamforming link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print selected beam counts and write beams.csv / supports.csv.
    ShowBeams(Common),
    /// Run the sweeps behind one figure and write <out>/<kind>.csv.
    Sweep {
        /// sic-rf, sic-stream, sic-array, rate, gain-ratio, energy or angle-error.
        #[arg(value_parser = parse_kind)]
        kind: FigureKind,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Master seed override.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Realizations per sweep point.
    #[arg(long, value_name = "N")]
    realizations: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, value_name = "N", default_value_t = 0)]
    workers: usize,
}

fn parse_kind(s: &str) -> Result<FigureKind, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = FigureKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

impl Common {
    fn config(&self) -> Result<SimConfig, SimError> {
        let mut cfg = match &self.config {
            Some(p) => SimConfig::load(p)?,
            None => SimConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(n) = self.realizations {
            cfg.realizations = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<&Path, SimError> {
        std::fs::create_dir_all(&self.out).map_err(|source| SimError::Io {
            path: self.out.clone(),
            source,
        })?;
        Ok(&self.out)
    }
}

fn show_beams(common: &Common) -> Result<bool, SimError> {
    let report = beam_report(&common.config()?)?;
    print!("{}", report.summary());
    let dir = common.out_dir()?;
    report.write(dir)?;
    println!("wrote {}", dir.join("beams.csv").display());
    println!("wrote {}", dir.join("supports.csv").display());
    Ok(true)
}

fn sweep(kind: FigureKind, common: &Common) -> Result<bool, SimError> {
    let cfg = common.config()?;
    let path = common.out_dir()?.join(format!("{kind}.csv"));
    let plan = figure_sweeps(kind, &cfg);
    let total: usize = plan.iter().map(|s| s.values.len()).sum();
    let mut sink = CsvSink::create(&path)?;
    let mut points: Vec<PointSummary> = Vec::with_capacity(total);
    let mut done = 0;
    for s in &plan {
        let summaries = run_sweep_with(s, common.workers, |records| {
            done += 1;
            eprintln!("[{done}/{total}] {}", s.scenario);
            sink.write(records)
        })?;
        points.extend(summaries);
    }
    sink.finish()?;
    println!("wrote {}", path.display());

    let bad: Vec<_> = points.iter().filter(|p| p.failure_rate() > 0.01).collect();
    for p in &bad {
        eprintln!(
            "{} {}={}: {}/{} realizations failed; first: {}",
            p.scenario,
            p.param,
            p.value,
            p.failed,
            p.realizations,
            p.first_error.as_deref().unwrap_or("?")
        );
    }
    Ok(bad.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ShowBeams(common) => show_beams(common),
        Command::Sweep { kind, common } => sweep(*kind, common),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
