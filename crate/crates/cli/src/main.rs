use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use rough_heston_cli::{execute, Cli};

fn main() -> ExitCode {
    // Help and version requests exit through clap with status 0; parse errors with 2.
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out).and_then(|()| out.flush().map_err(Into::into)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rough-heston: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
