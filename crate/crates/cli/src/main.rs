//! `flatness`: forward/backward flatness tests for discrete-time systems
//! given as JSON files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flatness_cli::commands::{self, Mode, SimcheckOptions, TestOptions, VerifyOptions};
use flatness_cli::report::{render_human, FlatnessReport, Status};

#[derive(Parser)]
#[command(
    name = "flatness",
    version,
    about = "Flatness tests for nonlinear discrete-time systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a system file and its rank conditions.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the forward and/or backward flatness test.
    Test {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        mode: Mode,
        /// Derive, verify and point-check flat outputs.
        #[arg(long)]
        derive: bool,
        #[arg(long, default_value_t = 3)]
        max_degree: u32,
        #[arg(long)]
        json: bool,
        #[arg(long, env = "FLATNESS_SEED", default_value_t = 0)]
        seed: u64,
        /// Include wall-clock timings (makes reports run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Verify a flat-output candidate.
    Verify {
        file: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        max_back: Option<u32>,
        #[arg(long)]
        max_fwd: Option<u32>,
        #[arg(long)]
        json: bool,
        #[arg(long, env = "FLATNESS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        timings: bool,
    },
    /// Print the associated system as a system file.
    Associated { file: PathBuf },
    /// Check the trajectory correspondence with the associated system.
    Simcheck {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        horizon: usize,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, env = "FLATNESS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

/// Runs `f` on every file in parallel; reports keep the input order.
fn run_all(
    files: &[PathBuf],
    f: impl Fn(&PathBuf) -> FlatnessReport + Sync,
) -> Vec<FlatnessReport> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = files.iter().map(|p| scope.spawn(|| f(p))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

/// Exit code for several reports: an error wins, then a refutation, then
/// an inconclusive result.
fn combined_exit(reports: &[FlatnessReport]) -> i32 {
    [Status::Error, Status::Refuted, Status::Inconclusive]
        .into_iter()
        .find(|s| reports.iter().any(|r| r.status == *s))
        .unwrap_or(Status::Holds)
        .exit_code()
}

fn emit(reports: &[FlatnessReport], json: bool) -> ExitCode {
    if json {
        let text = if reports.len() == 1 {
            serde_json::to_string_pretty(&reports[0])
        } else {
            serde_json::to_string_pretty(reports)
        };
        println!("{}", text.expect("report serializes"));
    } else {
        let texts: Vec<String> = reports.iter().map(render_human).collect();
        print!("{}", texts.join("\n"));
    }
    ExitCode::from(combined_exit(reports) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { files, json } => {
            emit(&run_all(&files, |p| commands::validate(p, 0)), json)
        }
        Command::Test {
            files,
            mode,
            derive,
            max_degree,
            json,
            seed,
            timings,
        } => {
            let opts = TestOptions {
                mode,
                derive,
                max_degree,
                seed,
                timings,
            };
            emit(&run_all(&files, |p| commands::test(p, &opts)), json)
        }
        Command::Verify {
            file,
            output,
            max_back,
            max_fwd,
            json,
            seed,
            timings,
        } => {
            let opts = VerifyOptions {
                max_back,
                max_fwd,
                seed,
                timings,
            };
            emit(&[commands::verify(&file, &output, &opts)], json)
        }
        Command::Associated { file } => match commands::associated(&file) {
            Ok(text) => {
                println!("{text}");
                ExitCode::SUCCESS
            }
            Err((status, message)) => {
                eprintln!("error: {message}");
                ExitCode::from(status.exit_code() as u8)
            }
        },
        Command::Simcheck {
            files,
            horizon,
            seeds,
            seed,
            json,
        } => {
            let opts = SimcheckOptions {
                horizon,
                seeds,
                seed,
            };
            emit(&run_all(&files, |p| commands::simcheck(p, &opts)), json)
        }
    }
}
