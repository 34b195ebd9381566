//! Library side of the `qcond` binary: argument parsing, run orchestration
//! and report writing.

pub mod args;
pub mod config;
pub mod report;
pub mod run;

use anyhow::Result;

pub use args::Cli;
pub use config::RunConfig;

/// Exit status for a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Fail = 1,
    Usage = 2,
}

/// Runs a validated config, writes reports and prints the summary.
pub fn run_config(cfg: &RunConfig) -> Result<Status> {
    let outcome = run::execute(cfg)?;
    if let Some(dir) = &cfg.out {
        report::write_reports(dir, cfg, &outcome)?;
    }
    if cfg.json {
        print!("{}", report::summary_json(cfg, &outcome)?);
    } else {
        print!("{}", report::text_summary(&outcome));
    }
    Ok(if outcome.pass() { Status::Pass } else { Status::Fail })
}
