use std::process::ExitCode;

use clap::Parser;
use qcond_cli::{run_config, Cli, Status};

fn main() -> ExitCode {
    let cfg = Cli::parse().into_config();
    if let Err(msg) = cfg.validate() {
        eprintln!("error: {msg}");
        return ExitCode::from(Status::Usage as u8);
    }
    match run_config(&cfg) {
        Ok(status) => ExitCode::from(status as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(Status::Fail as u8)
        }
    }
}
