mod args;
mod commands;
mod io;

use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use args::{Cli, Command};
use io::{config_argv, load_config, CliResult, Failure};

fn dispatch(cmd: &Command) -> CliResult<()> {
    if let Command::Run(r) = cmd {
        let cfg = load_config(&r.config)?;
        let mut argv = config_argv(&cfg)?;
        argv.extend(r.overrides.iter().cloned());
        log::info!("replaying {}", argv[1..].join(" "));
        let cli = Cli::try_parse_from(&argv).map_err(|e| Failure::Input(e.to_string()))?;
        return dispatch(&cli.command);
    }
    let cfg: Value = serde_json::to_value(cmd)?;
    match cmd {
        Command::Lattice(a) => commands::lattice(a, &cfg),
        Command::Channel(a) => commands::channel(a, &cfg),
        Command::Steady(a) => commands::steady(a, &cfg),
        Command::Otoc(a) => commands::otoc(a, &cfg),
        Command::Scan(a) => commands::scan(a, &cfg),
        Command::ExportMps(a) => commands::export_mps(a, &cfg),
        Command::Recipe(a) => commands::recipe(a, &cfg),
        Command::Run(_) => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("otoc: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("otoc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
