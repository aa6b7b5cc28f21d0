use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use windspc::{output, CliError, PipelineConfig};
use windspc_core::ingest::format_timestamp;

#[derive(Parser)]
#[command(
    name = "windspc",
    version,
    about = "Regression control charts for wind turbine SCADA data"
)]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground truth.
    Simulate,
    /// Parse and filter the input, reporting row counts.
    Ingest,
    /// Find the in-control baseline window.
    Baseline,
    /// Fit regression models on the baseline window.
    Fit,
    /// Chart model residuals and count alarms.
    Monitor,
    /// Render the monitoring summary.
    Report,
    /// Baseline, fit, monitor and report in one go.
    Run,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Simulate => {
            let d = windspc::cmd_simulate(&cfg)?;
            println!(
                "{} records written to {}",
                d.len(),
                cfg.output_dir.join(output::DATASET_FILE).display()
            );
        }
        Command::Ingest => {
            let s = windspc::cmd_ingest(&cfg)?;
            println!("{} records, {} while running", s.records, s.running_records);
        }
        Command::Baseline => {
            let w = windspc::cmd_baseline(&cfg)?;
            println!(
                "baseline {} .. {} (t*), rho_max {:.6}",
                format_timestamp(&w.start),
                format_timestamp(&w.end),
                w.rho_max
            );
        }
        Command::Fit => {
            for m in windspc::cmd_fit(&cfg)? {
                let terms: Vec<String> = m.terms.iter().map(|t| t.to_string()).collect();
                println!("{} ~ [{}] (n = {})", m.response, terms.join(", "), m.n);
            }
        }
        Command::Monitor => {
            let s = windspc::cmd_monitor(&cfg)?;
            for v in &s.variables {
                println!(
                    "{}: {}/{} out ({})",
                    v.response, v.out_count, v.total, v.percent_out
                );
            }
        }
        Command::Report => print!("{}", windspc::cmd_report(&cfg)?),
        Command::Run => print!("{}", windspc::cmd_run(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
