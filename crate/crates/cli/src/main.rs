//! `badgesys`: batch pipelines over badge datasets.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command as App};

use commands::Command;
use config::{Resolved, RunConfig, KEYS};
use error::CliError;

fn app() -> App {
    let mut app = App::new("badgesys")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Value models, equilibrium analysis and mechanism sweeps for badge systems")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("key = value config file; flags override it"),
        )
        .arg(
            Arg::new("out-dir")
                .long("out-dir")
                .global(true)
                .value_name("DIR")
                .default_value("out")
                .help("output directory"),
        )
        .arg(
            Arg::new("jobs")
                .long("jobs")
                .global(true)
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .help("worker threads [default: available cores]"),
        )
        .arg(
            Arg::new("strict")
                .long("strict")
                .global(true)
                .action(ArgAction::SetTrue)
                .help("exit with code 4 if dynamics do not converge"),
        );
    for key in KEYS {
        let help = if key.default.is_empty() {
            key.help.to_string()
        } else {
            format!("{} [default: {}]", key.help, key.default)
        };
        app = app.arg(
            Arg::new(key.name)
                .long(key.name)
                .global(true)
                .value_name("VALUE")
                .help(help)
                .help_heading("Configuration"),
        );
    }
    for (_, name, about) in Command::ALL {
        app = app.subcommand(App::new(name).about(about));
    }
    app
}

fn flags(m: &ArgMatches) -> Vec<(&'static str, String)> {
    KEYS.iter()
        .filter(|k| m.value_source(k.name) == Some(ValueSource::CommandLine))
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name, v.clone())))
        .collect()
}

fn execute(name: &str, m: &ArgMatches) -> Result<(), CliError> {
    let cmd = Command::from_name(name).expect("subcommands come from the command table");
    let file = m.get_one::<String>("config").map(PathBuf::from);
    let resolved = Resolved::build(file.as_deref(), &flags(m))?;
    let cfg = RunConfig::from_resolved(&resolved)?;
    let out_dir = PathBuf::from(m.get_one::<String>("out-dir").expect("has a default"));
    let jobs = m.get_one::<usize>("jobs").copied().unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::config(vec![format!("jobs: {e}")]))?;
    let out = output::Output::create(&out_dir, &resolved)?;
    let report = pool.install(|| commands::run(cmd, &cfg, out))?;
    for f in &report.files {
        println!("{}", out_dir.join(f).display());
    }
    if m.get_flag("strict") && !report.converged {
        return Err(CliError::NotConverged(format!(
            "{name} reached max-rounds = {}",
            cfg.dynamics.max_rounds
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match app().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::config(vec![e.kind().to_string()]);
            let mut rec: serde_json::Value =
                serde_json::from_str(&err.record()).expect("record is JSON");
            rec["message"] = serde_json::Value::String(e.render().to_string().trim().to_string());
            eprintln!("{rec}");
            return ExitCode::from(2);
        }
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    match execute(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
