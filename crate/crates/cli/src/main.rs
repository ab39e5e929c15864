use std::process::ExitCode;

use clap::Parser;
use saddle_tower_cli::{run, Cli, LOG_ENV};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).format_timestamp(None).init();
    let cli = Cli::parse();
    let config = match cli.into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match run(&config) {
        Ok(outcome) => {
            match &outcome.report.refusal {
                Some(refusal) => eprintln!("refused ({}): {}", refusal.criterion, refusal.message),
                None => println!("{}", outcome.summary),
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
