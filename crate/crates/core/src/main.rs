use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use crosswash::cli::{Cli, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut stdout = std::io::stdout().lock();
    match cli.run() {
        Ok(report) => match stdout.write_all(report.as_bytes()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: writing report: {e}");
                ExitCode::from(1)
            }
        },
        Err(err) => {
            if let CliError::Mismatch { report, .. } = &err {
                let _ = stdout.write_all(report.as_bytes());
            }
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
