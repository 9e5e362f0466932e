use std::process::ExitCode;

use clap::Parser;
use nbmf_cli::{run_cli, Cli, StdConsole, EXIT_CONFIG};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run_cli(&cli, &mut StdConsole) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nbmf: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
