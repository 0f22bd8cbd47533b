use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use d2d_ra::cli::commands::{self, CliError, Table};
use d2d_ra::cli::ExperimentConfig;
use d2d_ra::sim::GainMode;

#[derive(Parser)]
#[command(
    name = "d2d-ra",
    version,
    about = "Clustered random access: analysis, simulation and optimization"
)]
struct Args {
    /// `key = value` configuration file; missing keys take reference defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (CSV or JSON); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Initial realizations per simulated point.
    #[arg(long, global = true)]
    realizations: Option<u64>,
    /// `analysis-matched` or `physical`.
    #[arg(long, global = true)]
    gain_mode: Option<GainMode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Cluster-size PMF, analytic and empirical.
    Pmf,
    /// RA and D2D success probability against the SINR threshold.
    SuccessVsThreshold,
    /// Access delay against the CH probability.
    DelayVsDelta,
    /// Optimal CH probability per scheme over the load grid.
    OptimizeSweep,
    /// Protocol efficiency at the optimum over the load grid.
    EfficiencySweep,
    /// Compare closed forms with simulation; nonzero exit on any failure.
    Validate,
    /// Print the effective configuration.
    ShowConfig,
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::parse(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(n) = args.realizations {
        cfg.realizations = n;
    }
    if let Some(m) = args.gain_mode {
        cfg.gain_mode = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sink(cfg: &ExperimentConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(args: &Args) -> Result<bool, CliError> {
    let cfg = load(args)?;
    let table: fn(&ExperimentConfig) -> Result<Table, CliError> = match args.command {
        Command::Pmf => commands::pmf,
        Command::SuccessVsThreshold => commands::success_vs_threshold,
        Command::DelayVsDelta => commands::delay_vs_delta,
        Command::OptimizeSweep => commands::optimize_sweep,
        Command::EfficiencySweep => commands::efficiency_sweep,
        Command::Validate => {
            let report = commands::validate(&cfg)?;
            let mut w = sink(&cfg)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            for c in report.failures() {
                eprintln!(
                    "FAIL {} mu={} {} delta={} theta={} dB: analytic {:.4}, simulated {:.4} ± {:.4}",
                    c.name, c.mu, c.scheme, c.delta, c.theta_db, c.analytic, c.simulated, c.ci_halfwidth
                );
            }
            return Ok(report.pass);
        }
        Command::ShowConfig => {
            sink(&cfg)?.write_all(cfg.emit().as_bytes())?;
            return Ok(true);
        }
    };
    table(&cfg)?.write_csv(sink(&cfg)?)?;
    Ok(true)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
