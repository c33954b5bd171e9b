mod args;
mod commands;
mod error;
mod output;

use std::panic;
use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn run(cli: &Cli) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    pool.build_global()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;

    let seed = cli.seed;
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a, seed),
        Command::Index(a) => commands::index(a, seed),
        Command::Sim(a) => commands::sim(a, seed),
        Command::Topk(a) => commands::topk(a, seed),
        Command::Explain(a) => commands::explain_cmd(a, seed),
        Command::EvalGt(a) => commands::eval_gt(a, seed),
        Command::EvalRec(a) => commands::eval_rec(a, seed),
        Command::Tune(a) => commands::tune(a, seed),
        Command::Significance(a) => commands::significance(a, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    let outcome = panic::catch_unwind(|| run(&cli)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(CliError::Internal(msg))
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pathsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
