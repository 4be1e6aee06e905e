mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use penalflow::fem::Scheme;
use penalflow::geometry::{CaseId, DEFAULT_CIRCLE_SEGMENTS};
use penalflow::Error;

#[derive(Parser, Debug)]
#[command(name = "penalflow", version, about = "Penalized Navier-Stokes flow past obstacles")]
struct Cli {
    /// Repeat for more logging on stderr (info, debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a mesh file.
    Mesh(MeshArgs),
    /// Solve one problem and write the fields as VTK.
    Solve(SolveArgs),
    /// Penalty sweep per scheme, written as CSV with a manifest.
    Sweep(StudyArgs),
    /// Mixed-scheme (m, n) grid, written as CSV with a manifest.
    Contour(StudyArgs),
    /// Manufactured-solution convergence study.
    Mms(MmsArgs),
    /// Rate fits and bound checks for a sweep CSV.
    Rates(RatesArgs),
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[arg(long)]
    case: CaseId,
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    #[arg(long, default_value_t = DEFAULT_CIRCLE_SEGMENTS)]
    circle_segments: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    scheme: Scheme,
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 0.0)]
    n: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MmsArgs {
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value_t = 0.4)]
    base_h: f64,
    /// Use the exactly representable linear solution.
    #[arg(long)]
    linear: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `lo:hi`.
    #[arg(long, default_value = "1e6:1e10")]
    window: String,
}

/// Exit status for each error class.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Format { .. } => 4,
        e if e.is_solver_failure() => 3,
        Error::Internal(_) => 1,
        _ => 2,
    }
}

fn kind(code: u8) -> &'static str {
    match code {
        2 => "config",
        3 => "solver",
        4 => "io",
        _ => "internal",
    }
}

fn fail(code: u8, message: &str) -> ExitCode {
    let line = message.replace('\n', " ");
    eprintln!("penalflow: error[{}]: {}", kind(code), line.trim());
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            return fail(2, text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: "));
        }
    };
    let level = match cli.verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).init();
    let result = match cli.command {
        Command::Mesh(a) => commands::mesh(a.case, a.h, a.circle_segments, &a.out),
        Command::Solve(a) => commands::solve(&a.config, a.scheme, a.m, a.n, &a.out),
        Command::Sweep(a) => commands::sweep(&a.config, a.out.as_deref()),
        Command::Contour(a) => commands::contour(&a.config, a.out.as_deref()),
        Command::Mms(a) => commands::mms(a.levels, a.base_h, a.linear, &a.out),
        Command::Rates(a) => commands::rates(&a.input, &a.window),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(exit_code(&e), &e.to_string()),
    }
}
