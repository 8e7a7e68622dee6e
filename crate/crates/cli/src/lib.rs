//! Command implementations behind the `mglda` binary.

pub mod args;
pub mod artifacts;
pub mod commands;
pub mod error;
pub mod pipeline;

use std::io::Write;

use args::{Cli, Command, ConfigFile};
use error::CliResult;

/// Applies the config file, if any, and runs the selected subcommand.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let mut command = cli.command;
    if let Some(path) = &cli.config {
        command.overlay(ConfigFile::load(path)?);
    }
    match command {
        Command::Ingest(a) => commands::cmd_ingest(a, stdout),
        Command::Train(a) => commands::cmd_train(a, stdout),
        Command::Topics(a) => commands::cmd_topics(a, stdout),
        Command::Rank(a) => commands::cmd_rank(a, stdout),
        Command::Synth(a) => commands::cmd_synth(a, stdout),
    }
}
