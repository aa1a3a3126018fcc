mod args;
mod commands;
mod dataset;
mod error;
mod settings;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::{usage, Result};
use settings::Settings;

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref().map(std::path::Path::new);
    let resolved = settings::resolve(
        config,
        cli.command.keys(),
        &[cli.global_layer(), cli.command.layer()],
        |k| std::env::var(k).ok(),
    )?;
    let s = Settings(resolved);
    let deterministic = s.or("deterministic", false)?;
    let threads: Option<usize> = if deterministic { Some(1) } else { s.get("threads")? };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(format!("cannot start {t} worker threads: {e}")))?;
    }
    log::debug!("{} with {:?}", cli.command.name(), s.0);
    match &cli.command {
        Command::Split(_) => commands::split(&s),
        Command::Synth(_) => commands::synth(&s),
        Command::Encode(_) => commands::encode(&s),
        Command::Train(_) => commands::train(&s),
        Command::Eval(_) => commands::eval(&s),
        Command::Bench(_) => commands::bench(&s),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
