use std::io::Write;
use std::process::ExitCode;

use churnprobe_cli::{run, Cli, CliError};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            if let CliError::CheckFailed { report, .. } = &err {
                print!("{report}");
            }
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
