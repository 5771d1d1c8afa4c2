mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use fdembed_core::Error;

use args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Unsupported(_) | Error::Capacity(_) => 1,
        Error::Io { .. } => 2,
        Error::Parse { .. }
        | Error::Format { .. }
        | Error::Range(_)
        | Error::Consistency(_)
        | Error::Degenerate(_) => 3,
        Error::Numerical { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("fdembed: error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Embed(a) => commands::embed(a),
        Command::Eval(a) => commands::eval(a),
        Command::Layout(a) => commands::layout(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("fdembed: error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
