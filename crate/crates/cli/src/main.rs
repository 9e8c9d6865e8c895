use std::process::ExitCode;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use odrop_cli::{Cli, CliError};

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json_line());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => e.exit(),
        Err(e) if e.kind() == ClapKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            return fail(CliError::usage("missing subcommand or argument; see odrop --help"));
        }
        Err(e) => {
            let text = e.render().to_string();
            let message = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .collect::<Vec<_>>()
                .join(" ");
            return fail(CliError::usage(message.trim_start_matches("error: ").to_string()));
        }
    };
    match odrop_cli::run(cli) {
        Ok(manifest) => {
            println!(
                "{}",
                serde_json::json!({
                    "command": manifest.command,
                    "artifacts": manifest.artifacts.len(),
                })
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
