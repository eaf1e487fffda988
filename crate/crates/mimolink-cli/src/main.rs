use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = mimolink_cli::Cli::parse();
    mimolink_cli::run(cli)
}
