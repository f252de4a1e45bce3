use std::process::ExitCode;

use clap::Parser;
use maho_rd::cli::{run, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            if out.written.is_none() {
                print!("{}", out.body);
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
