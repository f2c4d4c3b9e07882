use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use brinkspec::{emit, run, CliError, Format, JobSpec};

/// Threshold-spectral job runner: solve, sweep, classify, criterion,
/// oracle, gsr-check, coupling. One job file in, one report out.
#[derive(Parser)]
#[command(name = "brinkspec", version, disable_help_subcommand = true)]
struct Args {
    /// Command to run; must match the job file's `command` field.
    command: String,
    /// Path to the json job document.
    #[arg(long)]
    job: PathBuf,
    /// Directory the report is written into (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn execute(args: &Args) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.job)
        .map_err(|e| CliError::Validation(format!("job file {}: {e}", args.job.display())))?;
    let job = JobSpec::from_json(&text)?;
    if args.command != job.command.name() {
        return Err(CliError::Validation(format!(
            "command: the command line says {:?} but the job file says {:?}",
            args.command,
            job.command.name()
        )));
    }
    let job = job.resolve()?;
    let report = run(&job)?;
    let written = emit(&report, &args.out, args.format)?;
    let names: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    Ok(format!("{} [{}]", brinkspec::run::summary(&report), names.join(", ")))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
