use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ldlab::expcli::{run, Command, ExperimentConfig, Format, RunError, EXIT_CONFIG, EXIT_IO};

#[derive(Parser)]
#[command(name = "ldlab", version, about = "Large-deviation experiments on lattice random fields")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    Pressure(Opts),
    Entropy(Opts),
    Conjugate(Opts),
    CheckDuality(Opts),
    CheckDecoupling(Opts),
    CheckSubadditive(Opts),
    CheckLocalControl(Opts),
    FeketeDemo(Opts),
    LargestTermDemo(Opts),
}

#[derive(clap::Args)]
struct Opts {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

impl Sub {
    fn split(self) -> (Command, Opts) {
        match self {
            Sub::Pressure(o) => (Command::Pressure, o),
            Sub::Entropy(o) => (Command::Entropy, o),
            Sub::Conjugate(o) => (Command::Conjugate, o),
            Sub::CheckDuality(o) => (Command::CheckDuality, o),
            Sub::CheckDecoupling(o) => (Command::CheckDecoupling, o),
            Sub::CheckSubadditive(o) => (Command::CheckSubadditive, o),
            Sub::CheckLocalControl(o) => (Command::CheckLocalControl, o),
            Sub::FeketeDemo(o) => (Command::FeketeDemo, o),
            Sub::LargestTermDemo(o) => (Command::LargestTermDemo, o),
        }
    }
}

fn main() -> ExitCode {
    let (command, opts) = Cli::parse().command.split();
    let path = opts.config;
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_IO as u8);
        }
    };
    let mut config = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(diags) => {
            eprintln!("{}", RunError::Config(diags));
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    config.set_command(command);
    if let Some(seed) = opts.seed {
        config.set_seed(seed);
    }
    if let Some(out) = opts.out {
        config.set_out(&out);
    }
    let format = match opts.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let pool = match opts.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .expect("thread pool");
    match pool.install(|| run(&config, format)) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
