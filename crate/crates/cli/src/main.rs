use std::path::PathBuf;
use std::process::ExitCode;

use capdyn_cli::{execute, execute_verify, Command, RunConfig, Source};
use clap::{ArgGroup, Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Analyze,
    Decompose,
    Closure,
    Metric,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Analyze => Command::Analyze,
            Cmd::Decompose => Command::Decompose,
            Cmd::Closure => Command::Closure,
            Cmd::Metric => Command::Metric,
        }
    }
}

/// Certify or refute almost periodicity of homeomorphisms and write JSON
/// reports with CSV plot data.
#[derive(Debug, Parser)]
#[command(name = "capdyn", version)]
#[command(group(ArgGroup::new("source").args(["fixture", "file"])))]
struct Args {
    /// Command to run; may be omitted with --verify-witness.
    #[arg(required_unless_present = "verify_witness")]
    command: Option<Cmd>,
    /// Built-in fixture, e.g. `circle_rotation:3/8` or `disk_twist`.
    #[arg(long, value_name = "NAME")]
    fixture: Option<String>,
    /// System definition file.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
    #[arg(long, value_name = "F")]
    epsilon: Option<f64>,
    #[arg(long, value_name = "N")]
    sample: Option<usize>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Iterate budget for closure enumeration and equicontinuity probes.
    #[arg(long, value_name = "N")]
    budget: Option<u64>,
    /// Iterates scanned on each side of zero by the window search.
    #[arg(long, value_name = "N")]
    span: Option<u64>,
    #[arg(long, value_name = "N")]
    window_max: Option<u64>,
    /// JSON report path; CSV files are written next to it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Decompose even when the system is not certified compactly almost periodic.
    #[arg(long)]
    force: bool,
    /// Replay every witness stored in a report and exit.
    #[arg(long, value_name = "PATH")]
    verify_witness: Option<PathBuf>,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(u8::try_from(c).unwrap_or(2))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    if let Some(path) = &args.verify_witness {
        return code(execute_verify(path, &mut out, &mut err));
    }
    let source = match (args.fixture, args.file) {
        (Some(name), _) => Source::Fixture(name),
        (None, Some(path)) => Source::File(path),
        (None, None) => {
            use std::io::Write;
            let _ = writeln!(err, "error: one of --fixture or --file is required");
            return ExitCode::from(2);
        }
    };
    let command = args.command.expect("clap requires a command without --verify-witness");
    let mut config = RunConfig::new(command.into(), source);
    config.epsilon = args.epsilon;
    config.sample = args.sample;
    config.seed = args.seed;
    config.budget = args.budget;
    config.span = args.span;
    config.window_max = args.window_max;
    config.out = args.out;
    config.force = args.force;
    code(execute(&config, &mut out, &mut err))
}
