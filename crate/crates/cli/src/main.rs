use std::process::ExitCode;

use clap::Parser;
use dropfee_cli::cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dropfee: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
