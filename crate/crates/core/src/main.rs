use std::process::ExitCode;

use clap::Parser;

use arithfact::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_argument() { 2 } else { 1 })
        }
    }
}
