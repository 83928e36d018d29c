//! `insightful` command-line driver.

mod args;
mod commands;
mod config;
mod error;
mod grid;
mod output;

use std::time::Instant;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use error::CliError;
use output::{RunManifest, SCHEMA_VERSION};

/// Later occurrences of a flag replace earlier ones, at every level.
fn allow_overrides(cmd: clap::Command) -> clap::Command {
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let mut cmd = cmd.args_override_self(true);
    for name in names {
        cmd = cmd.mut_subcommand(name, allow_overrides);
    }
    cmd
}

fn parse(args: &[String]) -> Cli {
    let result = allow_overrides(Cli::command())
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m));
    result.unwrap_or_else(|e| e.exit())
}

fn replayed(manifest: &RunManifest) -> Result<Cli, CliError> {
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "manifest schema {} does not match {SCHEMA_VERSION}",
            manifest.schema_version
        )));
    }
    let mut argv = vec!["insightful".to_string()];
    argv.extend(manifest.command.iter().cloned());
    argv.extend(config::tokens_from_params(&manifest.params)?);
    let format = serde_json::to_value(manifest.format)?;
    argv.extend(["--format".to_string(), format.as_str().unwrap_or("csv").to_string()]);
    let cli = parse(&argv);
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot replay another replay".into()));
    }
    Ok(cli)
}

fn run(args: Vec<String>) -> Result<(), CliError> {
    let args = config::inject(&Cli::command(), args)?;
    let cli = parse(&args);
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let (command, format) = match &cli.command {
        Command::Replay(r) => {
            let inner = replayed(&RunManifest::read(&r.manifest)?)?;
            (inner.command, inner.format)
        }
        _ => (cli.command, cli.format),
    };
    let start = Instant::now();
    let table = commands::execute(&command)?;
    let bytes = table.render(format)?;
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        command: command.path().iter().map(|s| s.to_string()).collect(),
        params: match command.params() {
            serde_json::Value::Object(m) => m,
            _ => serde_json::Map::new(),
        },
        seed: command.seed(),
        format,
        engine_version: insightful_core::ENGINE_VERSION.to_string(),
        duration_secs: start.elapsed().as_secs_f64(),
    };
    output::emit(&bytes, cli.out.as_deref(), &manifest)
}

fn main() {
    if let Err(e) = run(std::env::args().collect()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
