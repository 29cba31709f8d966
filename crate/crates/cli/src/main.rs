use std::process::ExitCode;

use clap::Parser;
use kiss_control_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match kiss_control_cli::run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
