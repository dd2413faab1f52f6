use std::process::ExitCode;

use clap::Parser;
use fmin_shoot::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match fmin_shoot::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
