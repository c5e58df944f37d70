use std::process::ExitCode;

use clap::Parser;
use psboson_cli::{run, Cli, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::from(Cli::parse());
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let text = report.render(config.format);
    match &config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if let Some(fail) = report.first_failure() {
        eprintln!("check failed: {} = {:e} (tolerance {:e})", fail.name, fail.value, fail.tolerance);
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
