use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavelaws::harness::{emit_report, render_summary, run_scenario, sweep, Format, RunReport};
use wavelaws::scenario::{Scenario, SweepAxis};
use wavelaws::Error;

#[derive(Parser)]
#[command(name = "wavelaws", version, about = "Water-wave conservation law audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its reports.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Run a scenario once per value of a physical parameter.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Run the built-in acceptance suite.
    Check,
}

fn error_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn finish(report: &RunReport, format: Format, out: Option<&PathBuf>) -> u8 {
    print!("{}", render_summary(report));
    if let Some(dir) = out {
        if let Err(e) = emit_report(report, format, dir) {
            eprintln!("error: {e}");
            return 2;
        }
    }
    report.exit_code() as u8
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            scenario,
            out,
            format,
        } => match Scenario::load(&scenario).and_then(|s| run_scenario(&s)) {
            Ok(report) => finish(&report, format, Some(&out)),
            Err(e) => {
                eprintln!("error: {e}");
                error_code(&e)
            }
        },
        Command::Sweep {
            scenario,
            axis,
            values,
            out,
            format,
        } => match Scenario::load(&scenario).and_then(|s| sweep(&s, axis, &values)) {
            Ok(results) => {
                let mut code = 0u8;
                for r in results {
                    let c = match r {
                        Ok(report) => {
                            let dir = out.as_ref().map(|d| d.join(&report.scenario));
                            finish(&report, format, dir.as_ref())
                        }
                        Err(e) => {
                            eprintln!("error: {e}");
                            error_code(&e)
                        }
                    };
                    code = code.max(c);
                }
                code
            }
            Err(e) => {
                eprintln!("error: {e}");
                error_code(&e)
            }
        },
        Command::Check => {
            let outcome = wavelaws::acceptance::run_all();
            for line in outcome.lines() {
                println!("{line}");
            }
            if outcome.all_pass() {
                0
            } else {
                1
            }
        }
    };
    ExitCode::from(code)
}
