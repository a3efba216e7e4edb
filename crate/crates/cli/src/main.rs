mod commands;
mod overrides;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use crate::commands::Exit;
use crate::overrides::ConfigArgs;

#[derive(Parser, Debug)]
#[command(name = "axagent", version, about = "Accessibility-tree web agent toolkit")]
struct Cli {
    /// Log filter (also read from AXAGENT_LOG), e.g. `debug` or `axagent_core=trace`.
    #[arg(long = "log-level", global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Condense a page dump and print it followed by a stats line.
    Condense {
        /// Page dump; `-` or absent reads standard input.
        input: Option<PathBuf>,
        /// Omit the trailing stats line.
        #[arg(long)]
        no_stats: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run one episode, or a batch with `--batch`.
    Run(commands::RunArgs),
    /// Print the instruction block (output and action specifications) a prompt starts with.
    Specs {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Per-step table and totals for a trajectory log.
    Inspect {
        /// Trajectory log; `-` or absent reads standard input.
        log: Option<PathBuf>,
    },
    /// Report the first step where two trajectory logs differ.
    Diff { a: PathBuf, b: PathBuf },
}

fn init_tracing(filter: Option<&str>) {
    let filter = filter
        .map(EnvFilter::new)
        .or_else(|| EnvFilter::try_from_env("AXAGENT_LOG").ok())
        .unwrap_or_else(|| EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .without_time()
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .try_init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_tracing(cli.log_level.as_deref());
    let result = match cli.command {
        Command::Condense { input, no_stats, config } => commands::condense(input.as_deref(), no_stats, &config),
        Command::Run(args) => commands::run(&args),
        Command::Specs { config } => commands::specs(&config),
        Command::Inspect { log } => commands::inspect(log.as_deref()),
        Command::Diff { a, b } => commands::diff(&a, &b),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(exit) => {
            eprintln!("error: {:#}", exit.error());
            ExitCode::from(exit.code())
        }
    }
}

impl Exit {
    fn error(&self) -> &anyhow::Error {
        match self {
            Exit::Usage(e) | Exit::Data(e) | Exit::Llm(e) => e,
        }
    }

    fn code(&self) -> u8 {
        match self {
            Exit::Usage(_) => 1,
            Exit::Data(_) => 2,
            Exit::Llm(_) => 3,
        }
    }
}
