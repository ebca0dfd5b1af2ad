mod args;
mod commands;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ConfigFile, Merge};
use error::{CliError, Result};

fn load_config(cli: &Cli) -> Result<ConfigFile> {
    let Some(path) = &cli.config else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<String> {
    let cfg = load_config(&cli)?;
    let inputs = cfg.inputs;
    match cli.command {
        Command::IngestCheck(a) => commands::ingest_check(&a.merge(cfg.ingest_check).merge(inputs)),
        Command::Regress(mut a) => {
            a = a.merge(cfg.regress);
            a.inputs = a.inputs.merge(inputs);
            commands::regress(&a)
        }
        Command::Events(mut a) => {
            a = a.merge(cfg.events);
            a.inputs = a.inputs.merge(inputs);
            commands::events(&a)
        }
        Command::Backtest(mut a) => {
            a = a.merge(cfg.backtest);
            a.inputs = a.inputs.merge(inputs);
            commands::backtest(&a)
        }
        Command::Synth(a) => commands::synth(&a.merge(cfg.synth)),
        Command::Report(a) => commands::report(&a.merge(cfg.report)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FLOWCAST_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            let _ = std::io::stdout().write_all(summary.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
