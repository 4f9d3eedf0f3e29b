use std::process::ExitCode;

use barylab_cli::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(report) => {
            for v in &report.violations {
                eprintln!("warning: bound check failed: {v}");
            }
            println!("{}", report.summary);
            for p in &report.manifest.outputs {
                println!("wrote {}", p.display());
            }
            if let Some(e) = &report.error {
                eprintln!("{}", e.diagnostic());
            }
            ExitCode::from(report.exit_code())
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code())
        }
    }
}
