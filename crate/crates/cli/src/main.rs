#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use crp_core::Error;

use args::{Cli, Command};
use output::Sink;

/// Exit status classes: 1 usage or I/O, 2 statistical failure, 3 infeasible configuration.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
    Statistical(Vec<String>),
    Infeasible(String),
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Statistical(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BadKey { .. } | Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Infeasible(e.to_string()),
        }
    }
}

fn thread_count(cli: &Cli) -> Result<usize, Failure> {
    let from_env = match std::env::var("CRP_THREADS") {
        Ok(v) => {
            Some(v.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("CRP_THREADS='{v}' is not a count")))?)
        }
        Err(_) => None,
    };
    Ok(from_env.or(cli.threads).unwrap_or(0))
}

fn execute(mut cli: Cli) -> Result<(), Failure> {
    if let Command::Replay(r) = &cli.command {
        let out_dir = cli.out_dir.clone();
        let format = cli.format;
        let threads = cli.threads;
        cli = output::read_manifest(&r.manifest)?;
        cli.out_dir = out_dir;
        cli.format = format;
        cli.threads = threads.or(cli.threads);
        match &mut cli.command {
            Command::SimulateDiscrete(a) => a.out = None,
            Command::SimulateContinuous(a) => a.out = None,
            Command::Replay(_) => return Err(Failure::Usage("a manifest cannot record a replay".into())),
            _ => {}
        }
    }
    let threads = thread_count(&cli)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    if cli.command.needs_seed() && cli.seed.is_none() && !has_config(&cli.command) {
        return Err(Failure::Usage(format!("{} requires --seed", cli.command.name())));
    }
    let mut sink = Sink::new(&cli.out_dir, cli.format)?;
    let report = commands::run(&cli.command, cli.seed, &mut sink)?;
    let manifest = output::write_manifest(&cli, rayon::current_num_threads(), report.resolved, &sink.written)?;
    for p in &sink.written {
        println!("{}", p.display());
    }
    println!("{}", manifest.display());
    if report.failed_checks.is_empty() {
        Ok(())
    } else {
        Err(Failure::Statistical(report.failed_checks))
    }
}

fn has_config(c: &Command) -> bool {
    match c {
        Command::ExpOneTable(a) | Command::ExpTwoTable(a) | Command::ExpBasic(a) | Command::ExpTransitions(a) => {
            a.config.is_some()
        }
        _ => false,
    }
}

fn main() -> ExitCode {
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
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Io(m) => eprintln!("error: {m}"),
                Failure::Infeasible(m) => eprintln!("infeasible configuration: {m}"),
                Failure::Statistical(names) => eprintln!("statistical checks failed: {}", names.join(", ")),
            }
            ExitCode::from(f.code())
        }
    }
}
