//! `gridthor`: generate task datasets, run benchmarks, serve live sessions
//! and verify replays.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data or run failure,
//! 4 environment (ports, filesystem).

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::EXIT_CONFIG;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Taskgen(a) => commands::taskgen(a),
        Command::Run(a) => commands::run(a),
        Command::Serve(a) => commands::serve(a),
        Command::Replay(a) => commands::replay(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gridthor: error: {f}");
            ExitCode::from(f.exit)
        }
    }
}
