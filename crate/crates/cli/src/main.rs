use clap::Parser;

use puzzle_cm::cli::{run, Cli};
use puzzle_cm::CliError;

fn main() {
    let parsed = Cli::parse();
    if let Err(e) = run(parsed) {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            eprintln!("  caused by: {s}");
            source = s.source();
        }
        std::process::exit(CliError::exit_code(&e));
    }
}
