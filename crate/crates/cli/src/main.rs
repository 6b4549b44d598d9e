mod args;
mod commands;
mod failure;
mod report;
mod wrap;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    let mut builder = env_logger::Builder::new();
    builder.filter_level(level).format_timestamp(None).parse_default_env();
    if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        builder.write_style(env_logger::WriteStyle::Never);
    }
    builder.init();
}

fn main() -> ExitCode {
    let argv = match args::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        // prints help/version with exit 0, usage errors with exit 2
        Err(e) => e.exit(),
    };
    init_logging(&cli);
    let style = report::Style::detect();
    let result = match cli.command {
        Command::Synth(a) => commands::synth::run(&a),
        Command::Augment(a) => commands::augment::run(&a),
        Command::Track(a) => commands::track::run(&a),
        Command::Eval(a) => commands::eval::run(&a, style),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
