use clap::Parser;
use std::process::ExitCode;
use wpt_ee::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(code) => ExitCode::from(code.as_u8()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code().as_u8())
        }
    }
}
