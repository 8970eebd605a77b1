use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use realsort::cli::commands::{read_input, write_file, EXIT_MISMATCH, EXIT_OK};
use realsort::cli::{generate, run_bench, run_sort, run_verify, CliError, Distribution, GenParams};
use realsort::converter::{ConvertOptions, Fault, DEFAULT_BIT_CAP};
use realsort::metrics::{to_bench_table, to_csv_table};

#[derive(Parser)]
#[command(name = "realsort", version, about = "Sort exact rationals through integer keys")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct ConvertFlags {
    /// Largest key bit-length allowed before giving up.
    #[arg(long, default_value_t = DEFAULT_BIT_CAP)]
    bit_cap: u64,
    /// Swap the first two keys to exercise the mismatch path.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

impl ConvertFlags {
    fn options(&self) -> ConvertOptions {
        ConvertOptions {
            bit_cap: self.bit_cap,
            check_invariants: false,
            fault: self.inject_fault.then_some(Fault::SwapFirstKeys),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test input file.
    Gen {
        #[arg(long, value_parser = parse_dist)]
        dist: Distribution,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Deepest gap exponent for geometric-gaps.
        #[arg(long, default_value_t = 64)]
        max_k: u32,
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Sort a file and print its lines in ascending order.
    Sort {
        input: PathBuf,
        /// Write the metrics row as CSV.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Keep equal values in input order (always on).
        #[arg(long, default_value_t = true)]
        stable: bool,
        /// Also run the reference sort and fail on any difference.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        flags: ConvertFlags,
    },
    /// Compare against a comparison sort and run the invariant checks.
    Verify {
        input: PathBuf,
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[command(flatten)]
        flags: ConvertFlags,
    },
    /// Print one metrics row per input size.
    Bench {
        /// Comma-separated input sizes.
        #[arg(short, long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_parser = parse_dist, default_value = "uniform")]
        dist: Distribution,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        max_k: u32,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: ConvertFlags,
    },
}

fn parse_dist(s: &str) -> Result<Distribution, String> {
    s.parse()
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn lines_text(lines: &[String]) -> String {
    let mut s = lines.join("\n");
    if !s.is_empty() {
        s.push('\n');
    }
    s
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Gen {
            dist,
            n,
            seed,
            max_k,
            out,
        } => {
            let lines = generate(dist, n, seed, GenParams { max_k });
            emit(out.as_ref(), &lines_text(&lines))?;
            Ok(EXIT_OK)
        }
        Command::Sort {
            input,
            metrics,
            stable: _,
            oracle,
            flags,
        } => {
            let file = read_input(&input)?;
            let run = run_sort(&file, &flags.options(), oracle)?;
            if let Some(path) = metrics {
                write_file(&path, &to_csv_table(&[run.metrics]))?;
            }
            if run.oracle_match == Some(false) {
                eprintln!("MISMATCH: output differs from the reference sort");
                return Ok(EXIT_MISMATCH);
            }
            emit(None, &lines_text(&run.lines))?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            input,
            metrics,
            flags,
        } => {
            let file = read_input(&input)?;
            let run = run_verify(&file, &flags.options())?;
            if let Some(path) = metrics {
                write_file(&path, &to_csv_table(&[run.metrics]))?;
            }
            emit(None, &run.render())?;
            Ok(if run.passed() { EXIT_OK } else { EXIT_MISMATCH })
        }
        Command::Bench {
            n,
            dist,
            seed,
            max_k,
            out,
            flags,
        } => {
            let rows = run_bench(&n, dist, seed, GenParams { max_k }, &flags.options())?;
            emit(out.as_ref(), &to_bench_table(&rows))?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
