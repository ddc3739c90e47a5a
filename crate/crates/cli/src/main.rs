use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = batstab_cli::Cli::parse();
    match batstab_cli::execute(&cli) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
