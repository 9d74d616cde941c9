use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use kvwave_core::cli::{self, Command, EXIT_ERROR};
use kvwave_core::config::parse_config;

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Simulate,
    Spectrum,
    Resolvent,
    Sweep,
}

/// Energy decay, spectra and resolvent experiments for coupled wave
/// equations with local Kelvin-Voigt damping.
#[derive(Parser)]
#[command(name = "kvwave", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// INI experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print verdict lines only.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let command = match args.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Resolvent => Command::Resolvent,
        Cmd::Sweep => Command::Sweep,
    };
    let result = std::fs::read_to_string(&args.config)
        .map_err(Into::into)
        .and_then(|text| parse_config(&text))
        .and_then(|cfg| {
            let out = args.out.clone().unwrap_or_else(|| cfg.output.clone());
            cli::run(command, &cfg, &out)
        });
    match result {
        Ok(report) => {
            for line in &report.lines {
                if !args.quiet || line.starts_with("verdict:") {
                    println!("{line}");
                }
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("kvwave {}: error: {e}", command.as_str());
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
